#pragma once

// The default synthetic fixture: default world (seed 1), comparator trained
// with the default configuration, attention head trained on top.

#include <chrono>

#include "kinship/comparator.hpp"
#include "kinship/dataset.hpp"
#include "kinship/run_config.hpp"
#include "kinship/synth.hpp"
#include "kinship/training.hpp"

namespace fixture {

struct Trained {
  kinship::RunConfig config;
  kinship::Dataset data;
  kinship::TrainResult result;
  kinship::ComparatorParams with_head;
  double train_seconds = 0.0;
};

inline kinship::ComparatorConfig model_config(const kinship::RunConfig& rc, const kinship::Dataset& d) {
  auto m = rc.model;
  m.embedding_dim = d.store.dim();
  return m;
}

inline Trained train_default() {
  Trained t;
  t.config = kinship::parse_config(nlohmann::json::object());
  t.data = kinship::dataset_from_world(kinship::generate_world(t.config.synth));
  const auto start = std::chrono::steady_clock::now();
  t.result = kinship::train(t.config.train, model_config(t.config, t.data), t.data.store,
                            t.data.pairs_of(kinship::Split::Train), t.data.pairs_of(kinship::Split::Val));
  t.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  auto head = t.config.train;
  head.epochs = t.config.attention_epochs;
  t.with_head = kinship::train_attention(t.result.params, t.data.store, t.data.pairs_of(kinship::Split::Train), head);
  return t;
}

inline const Trained& shared() {
  static const Trained t = train_default();
  return t;
}

}  // namespace fixture
