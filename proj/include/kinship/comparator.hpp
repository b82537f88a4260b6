#pragma once

// Cascaded local-expert comparator.
//
//   z1_1 = act(W1_1 * drop(f_c) + b1_1)
//   z1_i = act(W1_i * z1_{i-1} + b1_i)          i >= 2
//   z2_i = sigmoid(W2_i . z1_i + b2_i)
//
// The relation selects one z2 entry. An optional attention head,
// softmax(W_a f_c + b_a), weights the expert outputs when the relation is
// unknown.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kinship/linalg.hpp"
#include "kinship/relation.hpp"
#include "kinship/rng.hpp"

namespace kinship {

enum class Activation : std::uint8_t { LReLU, ReLU, PReLU, Tanh };
inline constexpr double kLeakySlope = 0.2;
inline constexpr double kPReLUInitialSlope = 0.25;

std::string_view activation_name(Activation a) noexcept;  // "lrelu", "relu", "prelu", "tanh"
std::optional<Activation> parse_activation(std::string_view name) noexcept;

/// PerExpert: every expert owns W1/b1.
/// SharedTrunk: experts 2..n share one W1/b1 (and PReLU slope).
/// EntirelyLocal: every expert reads f_c directly; no cascade.
enum class SharingMode : std::uint8_t { PerExpert, SharedTrunk, EntirelyLocal };

std::string_view sharing_name(SharingMode m) noexcept;  // "per-expert", "shared-trunk", "entirely-local"
std::optional<SharingMode> parse_sharing(std::string_view name) noexcept;

struct ComparatorConfig {
  std::size_t embedding_dim = 512;
  std::size_t hidden = 192;
  Activation activation = Activation::LReLU;
  double dropout = 0.2;
  SharingMode sharing = SharingMode::PerExpert;
  /// Cascade order; expert i serves relations[i].
  std::vector<KinshipRelation> relations{kAllRelations.begin(), kAllRelations.end()};

  std::size_t input_dim() const noexcept { return 2 * embedding_dim; }
  std::size_t n_experts() const noexcept { return relations.size(); }
  /// Number of distinct hidden layers for the sharing mode.
  std::size_t n_layers() const noexcept;
  /// Hidden layer used by expert i.
  std::size_t layer_of(std::size_t expert) const noexcept;
  /// Input length of hidden layer l.
  std::size_t layer_input_dim(std::size_t layer) const noexcept;
  /// Position of r in the cascade, if served.
  std::optional<std::size_t> expert_of(KinshipRelation r) const noexcept;

  /// Throws ValidationError.
  void validate() const;

  bool operator==(const ComparatorConfig&) const = default;
};

struct DenseLayer {
  Matrix weight;  // hidden x input
  Vector bias;
  double slope = kPReLUInitialSlope;  // read only for PReLU

  bool operator==(const DenseLayer&) const = default;
};

struct OutputUnit {
  Vector weight;  // length hidden
  double bias = 0.0;

  bool operator==(const OutputUnit&) const = default;
};

struct AttentionHead {
  Matrix weight;  // n_experts x input_dim
  Vector bias;

  bool operator==(const AttentionHead&) const = default;
};

struct ComparatorParams {
  ComparatorConfig config;
  std::vector<DenseLayer> layers;    // config.n_layers()
  std::vector<OutputUnit> outputs;   // config.n_experts()
  std::optional<AttentionHead> attention;
  std::optional<double> threshold;   // calibrated decision threshold

  bool operator==(const ComparatorParams&) const = default;
};

/// Gradients share the parameter layout.
using GradientSet = ComparatorParams;

/// Glorot-uniform weights (limit sqrt(6 / (fan_in + fan_out))), zero
/// biases, PReLU slopes at 0.25, no attention head.
ComparatorParams init_params(const ComparatorConfig& config, std::uint64_t seed);

/// Same layout as `params`, every entry zero (attention included if present).
ComparatorParams zeros_like(const ComparatorParams& params);

/// Zero-initialized head: uniform relation distribution.
AttentionHead zero_attention(const ComparatorConfig& config);

/// Throws DimensionError when shapes disagree with the config and
/// NumericalError on non-finite entries.
void check_params(const ComparatorParams& params);

double activation(double x, Activation kind, double prelu_slope = kPReLUInitialSlope) noexcept;
/// Derivative with respect to x; at x = 0 the right derivative is used.
double activation_derivative(double x, double y, Activation kind, double prelu_slope) noexcept;
double sigmoid(double x) noexcept;

struct ForwardOptions {
  /// Dropout on f_c when set; Eval mode otherwise.
  Rng* dropout_rng = nullptr;
  /// Stop after this expert (cascade modes) or evaluate only it
  /// (EntirelyLocal). All experts when unset.
  std::optional<std::size_t> last_expert;
};

struct ForwardTrace {
  Vector input;                  // f_c after dropout
  Vector dropout_scale;          // per entry 0 or 1/(1-p); empty in Eval mode
  std::vector<Vector> pre;       // per expert pre-activation
  std::vector<Vector> hidden;    // per expert z1
  Vector logits;                 // per expert, NaN where not evaluated
  Vector z2;
  std::vector<bool> evaluated;
};

/// Throws DimensionError on a wrong f_c length and NumericalError when a
/// non-finite value appears.
ForwardTrace forward(const ComparatorParams& params, std::span<const double> f_c,
                     const ForwardOptions& options = {});
/// Same as forward, reusing the buffers of `trace`.
void forward_into(const ComparatorParams& params, std::span<const double> f_c,
                  const ForwardOptions& options, ForwardTrace& trace);

/// Throws ValidationError when r has no expert.
double select_output(std::span<const double> z2, KinshipRelation r, const ComparatorConfig& config);
double select_output(std::span<const double> z2, KinshipRelation r);

enum class Decision : std::uint8_t { Kin, NonKin };

struct Verification {
  double score = 0.0;
  Decision decision = Decision::NonKin;
};

/// Kin iff score >= threshold. Throws ValidationError for a threshold
/// outside [0, 1].
Verification verify(const ComparatorParams& params, std::span<const double> f1,
                    std::span<const double> f2, KinshipRelation r, double threshold);

/// Eval-mode score of one pair for relation r.
double pair_score(const ComparatorParams& params, std::span<const double> f1,
                  std::span<const double> f2, KinshipRelation r);

/// Softmax over expert positions. Throws ValidationError without a head.
Vector attention_forward(const ComparatorParams& params, std::span<const double> f_c);
Vector softmax(std::span<const double> logits);

enum class PoolMode : std::uint8_t { SoftAttention, HardAttention, MeanPool, MaxPool };
std::string_view pool_name(PoolMode m) noexcept;

double pool_outputs(std::span<const double> z2, std::span<const double> attention, PoolMode mode);
double score_unknown(const ComparatorParams& params, std::span<const double> f_c, PoolMode mode);

}  // namespace kinship
