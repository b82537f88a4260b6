#include "kinship/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace kinship {
namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& doc, std::string prefix) : doc_(doc), prefix_(std::move(prefix)) {
    if (!doc_.is_object()) throw ConfigError("'" + display() + "' must be an object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return doc_.contains(key);
  }

  const json& raw(const std::string& key) { return doc_.at(key); }

  std::string name(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  void get(const std::string& key, std::size_t& out) {
    if (!has(key)) return;
    const auto& v = doc_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError("key '" + name(key) + "' must be a non-negative integer");
    }
    out = v.get<std::size_t>();
  }

  void get(const std::string& key, std::uint64_t& out, int /*seed*/) {
    std::size_t v = out;
    get(key, v);
    out = v;
  }

  void get(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = doc_.at(key);
    if (!v.is_number()) throw ConfigError("key '" + name(key) + "' must be a number");
    out = v.get<double>();
  }

  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = doc_.at(key);
    if (!v.is_boolean()) throw ConfigError("key '" + name(key) + "' must be true or false");
    out = v.get<bool>();
  }

  void get(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = doc_.at(key);
    if (!v.is_string()) throw ConfigError("key '" + name(key) + "' must be a string");
    out = v.get<std::string>();
  }

  template <class Enum, class Parser>
  void get_enum(const std::string& key, Enum& out, Parser parse, const char* allowed) {
    std::string text;
    get(key, text);
    if (!has(key)) return;
    const auto parsed = parse(text);
    if (!parsed) throw ConfigError("key '" + name(key) + "' must be one of " + allowed);
    out = *parsed;
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!known_.contains(key)) throw ConfigError("unknown key '" + name(key) + "'");
    }
  }

 private:
  std::string display() const { return prefix_.empty() ? "<root>" : prefix_; }

  const json& doc_;
  std::string prefix_;
  std::set<std::string> known_;
};

std::optional<ChildBlend> parse_blend(std::string_view s) {
  if (s == "mean") return ChildBlend::Mean;
  if (s == "random-convex") return ChildBlend::RandomConvex;
  return std::nullopt;
}

std::string_view blend_name(ChildBlend b) { return b == ChildBlend::Mean ? "mean" : "random-convex"; }

std::optional<Objective> parse_objective(std::string_view s) {
  if (s == "macro") return Objective::MacroAccuracy;
  if (s == "micro") return Objective::MicroAccuracy;
  return std::nullopt;
}

void parse_synth(Section& s, SynthConfig& c) {
  s.get("dim", c.dim);
  s.get("latent_dim", c.latent_dim);
  if (s.has("families")) {
    Section f(s.raw("families"), s.name("families"));
    f.get("train", c.families[0]);
    f.get("val", c.families[1]);
    f.get("test", c.families[2]);
    f.finish();
  }
  s.get("min_children", c.min_children);
  s.get("max_children", c.max_children);
  s.get("heritability", c.heritability);
  s.get("gender_weight", c.gender_weight);
  s.get("noise_weight", c.noise_weight);
  s.get("innovation_ratio", c.innovation_ratio);
  s.get("ancestry_share", c.ancestry_share);
  s.get("cross_gender_expression", c.cross_gender_expression);
  s.get_enum("blend", c.blend, parse_blend, "mean, random-convex");
  s.finish();
}

void parse_model(Section& s, ComparatorConfig& c) {
  s.get("hidden", c.hidden);
  s.get_enum("activation", c.activation, parse_activation, "lrelu, relu, prelu, tanh");
  s.get("dropout", c.dropout);
  s.get_enum("sharing", c.sharing, parse_sharing, "per-expert, shared-trunk, entirely-local");
  if (s.has("relations")) {
    const auto& list = s.raw("relations");
    if (!list.is_array()) throw ConfigError("key '" + s.name("relations") + "' must be an array");
    c.relations.clear();
    for (const auto& item : list) {
      const auto r = item.is_string() ? parse_relation(item.get<std::string>()) : std::nullopt;
      if (!r) throw ConfigError("key '" + s.name("relations") + "' holds an unknown relation code");
      c.relations.push_back(*r);
    }
  }
  s.finish();
}

void parse_train(Section& s, TrainConfig& c, std::size_t& attention_epochs) {
  s.get("epochs", c.epochs);
  s.get("batch_size", c.batch_size);
  s.get("learning_rate", c.learning_rate);
  s.get("decayed_learning_rate", c.decayed_learning_rate);
  s.get("decay_after_epoch", c.decay_after_epoch);
  s.get("l2_lambda", c.l2_lambda);
  s.get("l2_includes_biases", c.l2_includes_biases);
  s.get("beta1", c.beta1);
  s.get("beta2", c.beta2);
  s.get("epsilon", c.epsilon);
  s.get("attention_epochs", attention_epochs);
  s.finish();
}

void parse_eval(Section& s, EvalOptions& e) {
  s.get_enum("objective", e.objective, parse_objective, "macro, micro");
  s.get("bins", e.bins);
  s.get("per_relation", e.per_relation);
  s.get("jobs", e.jobs);
  s.finish();
}

void parse_paths(Section& s, RunPaths& p) {
  s.get("data", p.data);
  s.get("model", p.model);
  s.get("out", p.out);
  s.finish();
}

}  // namespace

RunConfig parse_config(const nlohmann::json& doc) {
  RunConfig config;
  Section root(doc, "");
  root.get("seed", config.seed, 0);
  if (root.has("synth")) {
    Section s(root.raw("synth"), "synth");
    parse_synth(s, config.synth);
  }
  if (root.has("model")) {
    Section s(root.raw("model"), "model");
    parse_model(s, config.model);
  }
  if (root.has("train")) {
    Section s(root.raw("train"), "train");
    parse_train(s, config.train, config.attention_epochs);
  }
  if (root.has("eval")) {
    Section s(root.raw("eval"), "eval");
    parse_eval(s, config.eval);
  }
  if (root.has("paths")) {
    Section s(root.raw("paths"), "paths");
    parse_paths(s, config.paths);
  }
  root.finish();
  config.synth.seed = config.seed;
  config.train.seed = config.seed;

  try {
    config.synth.validate();
    config.train.validate();
    ComparatorConfig check = config.model;
    check.embedding_dim = 1;
    check.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return config;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const nlohmann::json& overrides) {
  json doc = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open config file " + file->string());
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + file->string() + " is not valid JSON: " + e.what());
    }
  }
  doc.merge_patch(overrides);
  return parse_config(doc);
}

nlohmann::json config_to_json(const RunConfig& c) {
  json relations = json::array();
  for (auto r : c.model.relations) relations.push_back(std::string(relation_code(r)));
  return {
      {"seed", c.seed},
      {"synth",
       {{"dim", c.synth.dim},
        {"latent_dim", c.synth.latent_dim},
        {"families", {{"train", c.synth.families[0]}, {"val", c.synth.families[1]}, {"test", c.synth.families[2]}}},
        {"min_children", c.synth.min_children},
        {"max_children", c.synth.max_children},
        {"heritability", c.synth.heritability},
        {"gender_weight", c.synth.gender_weight},
        {"noise_weight", c.synth.noise_weight},
        {"innovation_ratio", c.synth.innovation_ratio},
        {"ancestry_share", c.synth.ancestry_share},
        {"cross_gender_expression", c.synth.cross_gender_expression},
        {"blend", std::string(blend_name(c.synth.blend))}}},
      {"model",
       {{"hidden", c.model.hidden},
        {"activation", std::string(activation_name(c.model.activation))},
        {"dropout", c.model.dropout},
        {"sharing", std::string(sharing_name(c.model.sharing))},
        {"relations", relations}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"decayed_learning_rate", c.train.decayed_learning_rate},
        {"decay_after_epoch", c.train.decay_after_epoch},
        {"l2_lambda", c.train.l2_lambda},
        {"l2_includes_biases", c.train.l2_includes_biases},
        {"beta1", c.train.beta1},
        {"beta2", c.train.beta2},
        {"epsilon", c.train.epsilon},
        {"attention_epochs", c.attention_epochs}}},
      {"eval",
       {{"objective", c.eval.objective == Objective::MacroAccuracy ? "macro" : "micro"},
        {"bins", c.eval.bins},
        {"per_relation", c.eval.per_relation},
        {"jobs", c.eval.jobs}}},
      {"paths", {{"data", c.paths.data}, {"model", c.paths.model}, {"out", c.paths.out}}},
  };
}

const std::string& require_path(const RunConfig& config, std::string_view name) {
  const std::string* value = nullptr;
  if (name == "data") value = &config.paths.data;
  if (name == "model") value = &config.paths.model;
  if (name == "out") value = &config.paths.out;
  if (value == nullptr) throw ConfigError("unknown path key '" + std::string(name) + "'");
  if (value->empty()) throw ConfigError("missing required path 'paths." + std::string(name) + "'");
  return *value;
}

}  // namespace kinship
