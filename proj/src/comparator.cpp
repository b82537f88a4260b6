#include "kinship/comparator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kinship/embedding_store.hpp"
#include "kinship/errors.hpp"

namespace kinship {
namespace {

void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite value in ") + what);
  }
}

}  // namespace

std::string_view activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::LReLU:
      return "lrelu";
    case Activation::ReLU:
      return "relu";
    case Activation::PReLU:
      return "prelu";
    case Activation::Tanh:
      return "tanh";
  }
  return "lrelu";
}

std::optional<Activation> parse_activation(std::string_view name) noexcept {
  for (auto a : {Activation::LReLU, Activation::ReLU, Activation::PReLU, Activation::Tanh}) {
    if (activation_name(a) == name) return a;
  }
  return std::nullopt;
}

std::string_view sharing_name(SharingMode m) noexcept {
  switch (m) {
    case SharingMode::PerExpert:
      return "per-expert";
    case SharingMode::SharedTrunk:
      return "shared-trunk";
    case SharingMode::EntirelyLocal:
      return "entirely-local";
  }
  return "per-expert";
}

std::optional<SharingMode> parse_sharing(std::string_view name) noexcept {
  for (auto m : {SharingMode::PerExpert, SharingMode::SharedTrunk, SharingMode::EntirelyLocal}) {
    if (sharing_name(m) == name) return m;
  }
  return std::nullopt;
}

std::string_view pool_name(PoolMode m) noexcept {
  switch (m) {
    case PoolMode::SoftAttention:
      return "soft-attention";
    case PoolMode::HardAttention:
      return "hard-attention";
    case PoolMode::MeanPool:
      return "mean";
    case PoolMode::MaxPool:
      return "max";
  }
  return "mean";
}

std::size_t ComparatorConfig::n_layers() const noexcept {
  if (sharing == SharingMode::SharedTrunk) return std::min<std::size_t>(n_experts(), 2);
  return n_experts();
}

std::size_t ComparatorConfig::layer_of(std::size_t expert) const noexcept {
  if (sharing == SharingMode::SharedTrunk) return std::min<std::size_t>(expert, 1);
  return expert;
}

std::size_t ComparatorConfig::layer_input_dim(std::size_t layer) const noexcept {
  if (layer == 0 || sharing == SharingMode::EntirelyLocal) return input_dim();
  return hidden;
}

std::optional<std::size_t> ComparatorConfig::expert_of(KinshipRelation r) const noexcept {
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (relations[i] == r) return i;
  }
  return std::nullopt;
}

void ComparatorConfig::validate() const {
  if (embedding_dim == 0) throw ValidationError("embedding_dim must be positive");
  if (hidden == 0) throw ValidationError("hidden size must be at least 1");
  if (relations.empty() || relations.size() > kRelationCount) {
    throw ValidationError("expert count must lie in 1..11");
  }
  std::array<bool, kRelationCount> seen{};
  for (auto r : relations) {
    if (seen[relation_index(r)]) {
      throw ValidationError("relation " + std::string(relation_code(r)) + " listed twice");
    }
    seen[relation_index(r)] = true;
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout must lie in [0, 1)");
}

ComparatorParams init_params(const ComparatorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ComparatorParams params;
  params.config = config;
  for (std::size_t l = 0; l < config.n_layers(); ++l) {
    const std::size_t in = config.layer_input_dim(l);
    DenseLayer layer{Matrix(config.hidden, in), Vector(config.hidden, 0.0), kPReLUInitialSlope};
    const double limit = std::sqrt(6.0 / static_cast<double>(in + config.hidden));
    for (double& w : layer.weight.data) w = rng.uniform(-limit, limit);
    params.layers.push_back(std::move(layer));
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(config.hidden + 1));
  for (std::size_t i = 0; i < config.n_experts(); ++i) {
    OutputUnit out{Vector(config.hidden), 0.0};
    for (double& w : out.weight) w = rng.uniform(-limit, limit);
    params.outputs.push_back(std::move(out));
  }
  return params;
}

AttentionHead zero_attention(const ComparatorConfig& config) {
  return {Matrix(config.n_experts(), config.input_dim()), Vector(config.n_experts(), 0.0)};
}

ComparatorParams zeros_like(const ComparatorParams& params) {
  ComparatorParams z;
  z.config = params.config;
  for (const auto& l : params.layers) {
    z.layers.push_back({Matrix(l.weight.rows, l.weight.cols), Vector(l.bias.size(), 0.0), 0.0});
  }
  for (const auto& o : params.outputs) z.outputs.push_back({Vector(o.weight.size(), 0.0), 0.0});
  if (params.attention) {
    z.attention = AttentionHead{Matrix(params.attention->weight.rows, params.attention->weight.cols),
                                Vector(params.attention->bias.size(), 0.0)};
  }
  return z;
}

void check_params(const ComparatorParams& params) {
  const auto& c = params.config;
  c.validate();
  if (params.layers.size() != c.n_layers()) throw DimensionError("wrong number of hidden layers");
  if (params.outputs.size() != c.n_experts()) throw DimensionError("wrong number of output units");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    if (layer.weight.rows != c.hidden || layer.weight.cols != c.layer_input_dim(l) ||
        layer.weight.data.size() != c.hidden * c.layer_input_dim(l) || layer.bias.size() != c.hidden) {
      throw DimensionError("hidden layer " + std::to_string(l + 1) + " has the wrong shape");
    }
    check_finite(layer.weight.data, "W1");
    check_finite(layer.bias, "b1");
    if (!std::isfinite(layer.slope)) throw NumericalError("non-finite PReLU slope");
  }
  for (const auto& o : params.outputs) {
    if (o.weight.size() != c.hidden) throw DimensionError("output unit has the wrong shape");
    check_finite(o.weight, "W2");
    if (!std::isfinite(o.bias)) throw NumericalError("non-finite b2");
  }
  if (params.attention) {
    const auto& a = *params.attention;
    if (a.weight.rows != c.n_experts() || a.weight.cols != c.input_dim() ||
        a.weight.data.size() != c.n_experts() * c.input_dim() || a.bias.size() != c.n_experts()) {
      throw DimensionError("attention head has the wrong shape");
    }
    check_finite(a.weight.data, "W_a");
    check_finite(a.bias, "b_a");
  }
}

double activation(double x, Activation kind, double prelu_slope) noexcept {
  switch (kind) {
    case Activation::LReLU:
      return x >= 0.0 ? x : kLeakySlope * x;
    case Activation::ReLU:
      return x > 0.0 ? x : 0.0;
    case Activation::PReLU:
      return x >= 0.0 ? x : prelu_slope * x;
    case Activation::Tanh:
      return std::tanh(x);
  }
  return x;
}

double activation_derivative(double x, double y, Activation kind, double prelu_slope) noexcept {
  switch (kind) {
    case Activation::LReLU:
      return x >= 0.0 ? 1.0 : kLeakySlope;
    case Activation::ReLU:
      return x >= 0.0 ? 1.0 : 0.0;
    case Activation::PReLU:
      return x >= 0.0 ? 1.0 : prelu_slope;
    case Activation::Tanh:
      return 1.0 - y * y;
  }
  return 1.0;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void forward_into(const ComparatorParams& params, std::span<const double> f_c,
                  const ForwardOptions& options, ForwardTrace& trace) {
  const auto& c = params.config;
  if (f_c.size() != c.input_dim()) {
    throw DimensionError("f_c has length " + std::to_string(f_c.size()) + ", expected " +
                         std::to_string(c.input_dim()));
  }
  const std::size_t n = c.n_experts();
  std::size_t first = 0;
  std::size_t last = n - 1;
  if (options.last_expert) {
    if (*options.last_expert >= n) throw DimensionError("expert index out of range");
    last = *options.last_expert;
    if (c.sharing == SharingMode::EntirelyLocal) first = last;
  }

  trace.input.assign(f_c.begin(), f_c.end());
  trace.dropout_scale.clear();
  if (options.dropout_rng != nullptr && c.dropout > 0.0) {
    const double keep = 1.0 - c.dropout;
    const double scale = 1.0 / keep;
    trace.dropout_scale.resize(f_c.size());
    for (std::size_t j = 0; j < f_c.size(); ++j) {
      trace.dropout_scale[j] = options.dropout_rng->uniform() < keep ? scale : 0.0;
      trace.input[j] *= trace.dropout_scale[j];
    }
  }

  trace.pre.resize(n);
  trace.hidden.resize(n);
  trace.logits.assign(n, std::numeric_limits<double>::quiet_NaN());
  trace.z2.assign(n, std::numeric_limits<double>::quiet_NaN());
  trace.evaluated.assign(n, false);
  for (std::size_t i = first; i <= last; ++i) {
    const auto& layer = params.layers[c.layer_of(i)];
    const bool from_input = i == 0 || c.sharing == SharingMode::EntirelyLocal;
    std::span<const double> in = from_input ? std::span<const double>(trace.input)
                                            : std::span<const double>(trace.hidden[i - 1]);
    auto& pre = trace.pre[i];
    auto& z1 = trace.hidden[i];
    pre.resize(c.hidden);
    z1.resize(c.hidden);
    affine(layer.weight, layer.bias, in, pre);
    for (std::size_t h = 0; h < c.hidden; ++h) z1[h] = activation(pre[h], c.activation, layer.slope);
    const auto& out = params.outputs[i];
    const double logit = dot(out.weight, z1) + out.bias;
    if (!std::isfinite(logit)) {
      throw NumericalError("non-finite logit at expert " + std::to_string(i + 1));
    }
    trace.logits[i] = logit;
    trace.z2[i] = sigmoid(logit);
    trace.evaluated[i] = true;
  }
}

ForwardTrace forward(const ComparatorParams& params, std::span<const double> f_c,
                     const ForwardOptions& options) {
  ForwardTrace trace;
  forward_into(params, f_c, options, trace);
  return trace;
}

double select_output(std::span<const double> z2, KinshipRelation r, const ComparatorConfig& config) {
  const auto i = config.expert_of(r);
  if (!i) throw ValidationError("no expert for relation " + std::string(relation_code(r)));
  if (z2.size() != config.n_experts()) throw DimensionError("z2 length differs from expert count");
  return z2[*i];
}

double select_output(std::span<const double> z2, KinshipRelation r) {
  if (z2.size() != kRelationCount) throw DimensionError("z2 must have 11 entries");
  return z2[relation_index(r)];
}

double pair_score(const ComparatorParams& params, std::span<const double> f1,
                  std::span<const double> f2, KinshipRelation r) {
  const auto i = params.config.expert_of(r);
  if (!i) throw ValidationError("no expert for relation " + std::string(relation_code(r)));
  const auto f_c = concat_features(f1, f2);
  ForwardOptions options;
  options.last_expert = *i;
  return forward(params, f_c, options).z2[*i];
}

Verification verify(const ComparatorParams& params, std::span<const double> f1,
                    std::span<const double> f2, KinshipRelation r, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("threshold must lie in [0, 1]");
  }
  Verification v;
  v.score = pair_score(params, f1, f2, r);
  v.decision = v.score >= threshold ? Decision::Kin : Decision::NonKin;
  return v;
}

Vector softmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  Vector p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    total += p[i];
  }
  for (double& x : p) x /= total;
  return p;
}

Vector attention_forward(const ComparatorParams& params, std::span<const double> f_c) {
  if (!params.attention) throw ValidationError("model has no attention head");
  if (f_c.size() != params.config.input_dim()) throw DimensionError("f_c has the wrong length");
  const auto& head = *params.attention;
  Vector logits(head.weight.rows);
  affine(head.weight, head.bias, f_c, logits);
  check_finite(logits, "attention logits");
  return softmax(logits);
}

double pool_outputs(std::span<const double> z2, std::span<const double> attention, PoolMode mode) {
  switch (mode) {
    case PoolMode::SoftAttention: {
      if (attention.size() != z2.size()) throw DimensionError("attention length differs from z2");
      double s = 0.0;
      for (std::size_t i = 0; i < z2.size(); ++i) s += attention[i] * z2[i];
      return s;
    }
    case PoolMode::HardAttention: {
      if (attention.size() != z2.size()) throw DimensionError("attention length differs from z2");
      const auto best = std::max_element(attention.begin(), attention.end()) - attention.begin();
      return z2[static_cast<std::size_t>(best)];
    }
    case PoolMode::MeanPool: {
      double s = 0.0;
      for (double z : z2) s += z;
      return s / static_cast<double>(z2.size());
    }
    case PoolMode::MaxPool:
      return *std::max_element(z2.begin(), z2.end());
  }
  return 0.0;
}

double score_unknown(const ComparatorParams& params, std::span<const double> f_c, PoolMode mode) {
  const auto trace = forward(params, f_c);
  Vector attention;
  if (mode == PoolMode::SoftAttention || mode == PoolMode::HardAttention) {
    attention = attention_forward(params, f_c);
  }
  return pool_outputs(trace.z2, attention, mode);
}

}  // namespace kinship
