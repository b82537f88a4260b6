#pragma once

// Run configuration: one JSON document with the sections below. Every
// section and key is optional; omitted keys keep their defaults. Unknown
// keys and wrongly typed values are rejected with the dotted key name.
//
// {
//   "seed": 1,
//   "synth": {"dim", "latent_dim", "families": {"train", "val", "test"},
//             "min_children", "max_children", "heritability", "gender_weight",
//             "noise_weight", "innovation_ratio", "ancestry_share",
//             "cross_gender_expression", "blend": "mean" | "random-convex"},
//   "model": {"hidden", "activation": "lrelu" | "relu" | "prelu" | "tanh",
//             "dropout", "sharing": "per-expert" | "shared-trunk" | "entirely-local",
//             "relations": ["BB", ...]},
//   "train": {"epochs", "batch_size", "learning_rate", "decayed_learning_rate",
//             "decay_after_epoch", "l2_lambda", "l2_includes_biases", "beta1",
//             "beta2", "epsilon", "attention_epochs"},
//   "eval":  {"objective": "macro" | "micro", "bins", "per_relation", "jobs"},
//   "paths": {"data", "model", "out"}
// }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "kinship/comparator.hpp"
#include "kinship/errors.hpp"
#include "kinship/evaluation.hpp"
#include "kinship/synth.hpp"
#include "kinship/training.hpp"

namespace kinship {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct EvalOptions {
  Objective objective = Objective::MacroAccuracy;
  std::size_t bins = kDefaultBins;
  bool per_relation = false;  // extension: one threshold per relation
  std::size_t jobs = 1;

  bool operator==(const EvalOptions&) const = default;
};

struct RunPaths {
  std::string data;
  std::string model;
  std::string out;

  bool operator==(const RunPaths&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  SynthConfig synth;
  ComparatorConfig model;  // embedding_dim comes from the data at run time
  TrainConfig train;
  std::size_t attention_epochs = 4;
  EvalOptions eval;
  RunPaths paths;
};

/// Parses `doc` over the defaults. Throws ConfigError naming the key.
RunConfig parse_config(const nlohmann::json& doc);

/// File (if any) with `overrides` merged on top (RFC 7386 merge patch).
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const nlohmann::json& overrides = nlohmann::json::object());

/// Fully resolved configuration, every key present.
nlohmann::json config_to_json(const RunConfig& config);

/// Throws ConfigError("missing required path 'paths.<name>'") when empty.
const std::string& require_path(const RunConfig& config, std::string_view name);

}  // namespace kinship
