#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kinship/comparator.hpp"
#include "kinship/embedding_store.hpp"
#include "kinship/pairs.hpp"

namespace kinship {

struct TrainConfig {
  std::size_t epochs = 4;
  std::size_t batch_size = 200;
  double learning_rate = 0.001;
  double decayed_learning_rate = 0.0005;
  std::size_t decay_after_epoch = 2;  // epochs 1..decay_after_epoch use learning_rate
  double l2_lambda = 2e-4;
  bool l2_includes_biases = true;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;

  /// Throws ValidationError.
  void validate() const;
  /// Learning rate of 1-based `epoch`.
  double lr_for_epoch(std::size_t epoch) const noexcept;

  bool operator==(const TrainConfig&) const = default;
};

struct BceResult {
  double loss = 0.0;
  double grad = 0.0;  // d loss / d logit
};

/// softplus(logit) - target * logit, gradient sigmoid(logit) - target.
BceResult bce_loss(double logit, double target) noexcept;

/// Which parameters a training phase touches.
enum class ParamScope : std::uint8_t { Experts, Attention };

/// lambda * sum p^2 over the scope (biases per flag; PReLU slopes count as
/// biases). When `grads` is given, 2 * lambda * p is added to it.
double l2_penalty(const ComparatorParams& params, double lambda, bool include_biases,
                  GradientSet* grads = nullptr, ParamScope scope = ParamScope::Experts);

/// Exact gradient of bce_loss(select_output(z2, relation), target) for one
/// sample, scaled by `scale` and added to `grads`. `trace` must come from
/// forward on the same params. Returns the unscaled loss.
double accumulate_gradients(const ForwardTrace& trace, const ComparatorParams& params,
                            KinshipRelation relation, double target, double scale,
                            GradientSet& grads);

/// Fresh GradientSet for one sample.
GradientSet backward(const ForwardTrace& trace, const ComparatorParams& params,
                     KinshipRelation relation, double target);

struct AdamState {
  GradientSet m;
  GradientSet v;
  std::uint64_t t = 0;

  static AdamState for_params(const ComparatorParams& params);
};

/// Bias-corrected ADAM update over the scope. Throws DimensionError on
/// shape mismatch.
void adam_step(ComparatorParams& params, const GradientSet& grads, AdamState& state, double lr,
               const TrainConfig& config, ParamScope scope = ParamScope::Experts);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_macro_acc = 0.0;
};

struct TrainResult {
  ComparatorParams params;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Trains the experts. `train_pairs` contributes its kin pairs (symmetric
/// relations duplicated and swapped); non-kin pairs are resampled every
/// epoch. Validation uses the non-kin pairs of `val_pairs`, or one fixed
/// epoch-0 resample when it has none. Seeds derive from config.seed:
///   init          mix_seed(seed, 0x1000)
///   non-kin base  mix_seed(seed, 0x2000), epoch e -> epoch_seed(base, e)
///   shuffle       mix_seed(seed, 0x3000 + e)
///   dropout       mix_seed(seed, 0x4000 + e)
///   validation    mix_seed(seed, 0x5000), epoch 0
TrainResult train(const TrainConfig& config, const ComparatorConfig& model,
                  const EmbeddingStore& store, const PairSet& train_pairs,
                  const PairSet& val_pairs, const EpochCallback& on_epoch = {});

/// Kin and non-kin validation pairs as train() evaluates them.
PairSet validation_set(const PairSet& val_pairs, const EmbeddingStore& store, std::uint64_t seed);

/// Softmax cross-entropy training of the attention head on the relation
/// labels of the kin pairs, experts frozen. The head starts at zero when
/// absent. Shuffle seeds are mix_seed(seed, 0x6000 + e).
ComparatorParams train_attention(const ComparatorParams& params, const EmbeddingStore& store,
                                 const PairSet& kin_pairs, const TrainConfig& config);

struct GradcheckOptions {
  std::size_t embedding_dim = 4;
  std::size_t hidden = 3;
  std::size_t n_experts = 3;
  Activation activation = Activation::LReLU;
  SharingMode sharing = SharingMode::PerExpert;
  double dropout = 0.2;
  double step = 1e-6;
  /// Fault injection: applied to the analytic gradient before comparison.
  std::function<void(GradientSet&)> corrupt;
};

struct GradcheckResult {
  double max_rel_error = 0.0;
  std::size_t entries_checked = 0;
};

/// Compares accumulate_gradients (plus the L2 term) against central
/// finite differences for every parameter, every expert and both targets.
/// Relative error is |a - n| / max(|a|, |n|, 1e-4).
GradcheckResult gradcheck(const GradcheckOptions& options, std::uint64_t seed);

}  // namespace kinship
