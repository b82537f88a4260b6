#include "kinship/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kinship/errors.hpp"
#include "kinship/evaluation.hpp"

namespace kinship {
namespace {

constexpr std::uint64_t kInitStream = 0x1000;
constexpr std::uint64_t kNonkinStream = 0x2000;
constexpr std::uint64_t kShuffleStream = 0x3000;
constexpr std::uint64_t kDropoutStream = 0x4000;
constexpr std::uint64_t kValidationStream = 0x5000;
constexpr std::uint64_t kAttentionShuffleStream = 0x6000;

struct TensorView {
  std::span<double> values;
  bool bias;
};

template <class Params>
auto tensors(Params& p, ParamScope scope) {
  using Span = std::conditional_t<std::is_const_v<Params>, std::span<const double>, std::span<double>>;
  struct View {
    Span values;
    bool bias;
  };
  std::vector<View> out;
  if (scope == ParamScope::Experts) {
    const bool prelu = p.config.activation == Activation::PReLU;
    for (auto& layer : p.layers) {
      out.push_back({Span(layer.weight.data), false});
      out.push_back({Span(layer.bias), true});
      if (prelu) out.push_back({Span(&layer.slope, 1), true});
    }
    for (auto& o : p.outputs) {
      out.push_back({Span(o.weight), false});
      out.push_back({Span(&o.bias, 1), true});
    }
  } else if (p.attention) {
    out.push_back({Span(p.attention->weight.data), false});
    out.push_back({Span(p.attention->bias), true});
  }
  return out;
}

void zero(GradientSet& g) {
  for (auto& t : tensors(g, ParamScope::Experts)) std::fill(t.values.begin(), t.values.end(), 0.0);
  for (auto& t : tensors(g, ParamScope::Attention)) std::fill(t.values.begin(), t.values.end(), 0.0);
}

struct Sample {
  std::span<const double> f1;
  std::span<const double> f2;
  KinshipRelation relation;
  std::size_t expert;
  double target;
};

Sample make_sample(const KinPair& p, const EmbeddingStore& store, const ComparatorConfig& model) {
  const auto expert = model.expert_of(p.relation);
  if (!expert) {
    throw ValidationError("model has no expert for relation " + std::string(relation_code(p.relation)));
  }
  return {store.embedding(p.id1), store.embedding(p.id2), p.relation, *expert,
          p.label == PairLabel::Kin ? 1.0 : 0.0};
}

void fill_features(const Sample& s, Vector& f_c) {
  std::copy(s.f1.begin(), s.f1.end(), f_c.begin());
  std::copy(s.f2.begin(), s.f2.end(), f_c.begin() + static_cast<std::ptrdiff_t>(s.f1.size()));
}

long double activation_ld(long double x, Activation kind, long double slope) {
  switch (kind) {
    case Activation::LReLU: return x >= 0 ? x : 0.2L * x;
    case Activation::ReLU: return x > 0 ? x : 0.0L;
    case Activation::PReLU: return x >= 0 ? x : slope * x;
    case Activation::Tanh: return std::tanh(x);
  }
  return x;
}

// Loss of expert k with L2 over every expert-scope entry, evaluated in
// extended precision under a fixed dropout scale. Finite-difference
// reference for gradcheck.
long double reference_loss(const ComparatorParams& p, std::span<const double> f_c,
                           std::span<const double> scale, std::size_t k, double target, double lambda) {
  const auto& c = p.config;
  std::vector<long double> input(f_c.size());
  for (std::size_t i = 0; i < f_c.size(); ++i) {
    input[i] = static_cast<long double>(f_c[i]) * (scale.empty() ? 1.0L : scale[i]);
  }
  std::vector<long double> prev;
  long double logit = 0.0L;
  const std::size_t first = c.sharing == SharingMode::EntirelyLocal ? k : 0;
  for (std::size_t i = first; i <= k; ++i) {
    const auto& layer = p.layers[c.layer_of(i)];
    const auto& x = (i == 0 || c.sharing == SharingMode::EntirelyLocal) ? input : prev;
    std::vector<long double> h(c.hidden);
    for (std::size_t r = 0; r < c.hidden; ++r) {
      long double sum = layer.bias[r];
      for (std::size_t j = 0; j < x.size(); ++j) sum += static_cast<long double>(layer.weight.data[r * x.size() + j]) * x[j];
      h[r] = activation_ld(sum, c.activation, layer.slope);
    }
    if (i == k) {
      logit = p.outputs[k].bias;
      for (std::size_t r = 0; r < c.hidden; ++r) logit += static_cast<long double>(p.outputs[k].weight[r]) * h[r];
    }
    prev = std::move(h);
  }
  long double loss = std::max(logit, 0.0L) - target * logit + std::log1p(std::exp(-std::abs(logit)));
  long double squares = 0.0L;
  for (const auto& t : tensors(p, ParamScope::Experts)) {
    for (double v : t.values) squares += static_cast<long double>(v) * v;
  }
  return loss + lambda * squares;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !(decayed_learning_rate > 0.0)) {
    throw ValidationError("learning rates must be positive");
  }
  if (!(l2_lambda >= 0.0)) throw ValidationError("l2_lambda must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("ADAM betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("ADAM epsilon must be positive");
}

double TrainConfig::lr_for_epoch(std::size_t epoch) const noexcept {
  return epoch <= decay_after_epoch ? learning_rate : decayed_learning_rate;
}

BceResult bce_loss(double logit, double target) noexcept {
  const double loss = std::max(logit, 0.0) - target * logit + std::log1p(std::exp(-std::abs(logit)));
  return {loss, sigmoid(logit) - target};
}

double l2_penalty(const ComparatorParams& params, double lambda, bool include_biases,
                  GradientSet* grads, ParamScope scope) {
  const auto views = tensors(params, scope);
  std::vector<TensorView> gviews;
  if (grads != nullptr) {
    for (auto& v : tensors(*grads, scope)) gviews.push_back({v.values, v.bias});
    if (gviews.size() != views.size()) throw DimensionError("gradient layout differs from parameters");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < views.size(); ++t) {
    if (views[t].bias && !include_biases) continue;
    const auto p = views[t].values;
    total += dot(p, p);
    if (grads != nullptr) {
      auto g = gviews[t].values;
      for (std::size_t i = 0; i < p.size(); ++i) g[i] += 2.0 * lambda * p[i];
    }
  }
  return lambda * total;
}

double accumulate_gradients(const ForwardTrace& trace, const ComparatorParams& params,
                            KinshipRelation relation, double target, double scale,
                            GradientSet& grads) {
  const auto& c = params.config;
  const auto expert = c.expert_of(relation);
  if (!expert) throw ValidationError("no expert for relation " + std::string(relation_code(relation)));
  const std::size_t k = *expert;
  if (trace.evaluated.size() != c.n_experts() || !trace.evaluated[k]) {
    throw DimensionError("trace does not cover the selected expert");
  }
  const auto bce = bce_loss(trace.logits[k], target);
  const double g = bce.grad * scale;

  auto& out_grad = grads.outputs[k];
  const auto& out = params.outputs[k];
  const auto& z1k = trace.hidden[k];
  for (std::size_t h = 0; h < c.hidden; ++h) out_grad.weight[h] += g * z1k[h];
  out_grad.bias += g;

  const bool local = c.sharing == SharingMode::EntirelyLocal;
  Vector dz(c.hidden);
  Vector dpre(c.hidden);
  for (std::size_t h = 0; h < c.hidden; ++h) dz[h] = g * out.weight[h];
  for (std::size_t i = k;; --i) {
    const std::size_t l = c.layer_of(i);
    const auto& layer = params.layers[l];
    auto& layer_grad = grads.layers[l];
    const auto& pre = trace.pre[i];
    const auto& z1 = trace.hidden[i];
    for (std::size_t h = 0; h < c.hidden; ++h) {
      dpre[h] = dz[h] * activation_derivative(pre[h], z1[h], c.activation, layer.slope);
      if (c.activation == Activation::PReLU && pre[h] < 0.0) layer_grad.slope += dz[h] * pre[h];
    }
    const bool from_input = i == 0 || local;
    const auto& in = from_input ? trace.input : trace.hidden[i - 1];
    add_outer_product(layer_grad.weight, 1.0, dpre, in);
    for (std::size_t h = 0; h < c.hidden; ++h) layer_grad.bias[h] += dpre[h];
    if (from_input) break;
    std::fill(dz.begin(), dz.end(), 0.0);
    add_transposed_product(layer.weight, dpre, dz);
  }
  return bce.loss;
}

GradientSet backward(const ForwardTrace& trace, const ComparatorParams& params,
                     KinshipRelation relation, double target) {
  GradientSet grads = zeros_like(params);
  accumulate_gradients(trace, params, relation, target, 1.0, grads);
  return grads;
}

AdamState AdamState::for_params(const ComparatorParams& params) {
  return {zeros_like(params), zeros_like(params), 0};
}

void adam_step(ComparatorParams& params, const GradientSet& grads, AdamState& state, double lr,
               const TrainConfig& config, ParamScope scope) {
  auto p = tensors(params, scope);
  const auto g = tensors(grads, scope);
  auto m = tensors(state.m, scope);
  auto v = tensors(state.v, scope);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw DimensionError("ADAM state layout differs from parameters");
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    const auto n = p[t].values.size();
    if (g[t].values.size() != n || m[t].values.size() != n || v[t].values.size() != n) {
      throw DimensionError("ADAM tensor shape mismatch");
    }
  }
  ++state.t;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t t = 0; t < p.size(); ++t) {
    auto pv = p[t].values;
    const auto gv = g[t].values;
    auto mv = m[t].values;
    auto vv = v[t].values;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = b1 * mv[i] + (1.0 - b1) * gv[i];
      vv[i] = b2 * vv[i] + (1.0 - b2) * gv[i] * gv[i];
      const double mhat = mv[i] / c1;
      const double vhat = vv[i] / c2;
      pv[i] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

PairSet validation_set(const PairSet& val_pairs, const EmbeddingStore& store, std::uint64_t seed) {
  const bool has_nonkin = std::any_of(val_pairs.pairs.begin(), val_pairs.pairs.end(),
                                      [](const KinPair& p) { return p.label == PairLabel::NonKin; });
  if (has_nonkin || val_pairs.pairs.empty()) return val_pairs;
  PairSet out = val_pairs;
  const auto nonkin = resample_nonkin(val_pairs, store, mix_seed(seed, kValidationStream), 0);
  out.pairs.insert(out.pairs.end(), nonkin.pairs.begin(), nonkin.pairs.end());
  return out;
}

TrainResult train(const TrainConfig& config, const ComparatorConfig& model,
                  const EmbeddingStore& store, const PairSet& train_pairs,
                  const PairSet& val_pairs, const EpochCallback& on_epoch) {
  config.validate();
  model.validate();
  if (store.dim() != model.embedding_dim) {
    throw DimensionError("store dim " + std::to_string(store.dim()) + " differs from model dim " +
                         std::to_string(model.embedding_dim));
  }
  TrainResult result;
  result.params = init_params(model, mix_seed(config.seed, kInitStream));
  if (config.epochs == 0) return result;

  const PairSet kin = augment_symmetric(kin_only(train_pairs));
  if (kin.pairs.empty()) throw ValidationError("no kin pairs to train on");
  const PairSet val = validation_set(val_pairs, store, config.seed);
  const std::uint64_t nonkin_base = mix_seed(config.seed, kNonkinStream);

  auto& params = result.params;
  AdamState state = AdamState::for_params(params);
  GradientSet grads = zeros_like(params);
  ForwardTrace trace;
  Vector f_c(model.input_dim());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_for_epoch(epoch);
    const PairSet nonkin = resample_nonkin(kin, store, nonkin_base, epoch);
    std::vector<Sample> samples;
    samples.reserve(kin.pairs.size() + nonkin.pairs.size());
    for (const auto& p : kin.pairs) samples.push_back(make_sample(p, store, model));
    for (const auto& p : nonkin.pairs) samples.push_back(make_sample(p, store, model));

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(config.seed, kShuffleStream + epoch));
    shuffle_rng.shuffle(order);
    Rng dropout_rng(mix_seed(config.seed, kDropoutStream + epoch));

    double loss_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero(grads);
      double data_loss = 0.0;
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = samples[order[b]];
        fill_features(s, f_c);
        ForwardOptions options;
        options.dropout_rng = &dropout_rng;
        options.last_expert = s.expert;
        forward_into(params, f_c, options, trace);
        data_loss += accumulate_gradients(trace, params, s.relation, s.target, scale, grads);
      }
      const double loss = data_loss * scale +
                          l2_penalty(params, config.l2_lambda, config.l2_includes_biases, &grads);
      if (!std::isfinite(loss)) throw NumericalError("training loss became non-finite");
      adam_step(params, grads, state, lr, config);
      loss_total += loss;
      ++batches;
    }

    EpochRecord record{epoch, lr, loss_total / static_cast<double>(batches),
                       std::numeric_limits<double>::quiet_NaN()};
    if (!val.pairs.empty()) record.val_macro_acc = calibrated_macro_accuracy(params, store, val);
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

ComparatorParams train_attention(const ComparatorParams& params, const EmbeddingStore& store,
                                 const PairSet& kin_pairs, const TrainConfig& config) {
  config.validate();
  check_params(params);
  const auto& model = params.config;
  ComparatorParams out = params;
  if (!out.attention) out.attention = zero_attention(model);
  if (config.epochs == 0) return out;

  const PairSet kin = augment_symmetric(kin_only(kin_pairs));
  if (kin.pairs.empty()) throw ValidationError("no kin pairs to train the attention head on");
  std::vector<Sample> samples;
  for (const auto& p : kin.pairs) samples.push_back(make_sample(p, store, model));

  AdamState state = AdamState::for_params(out);
  GradientSet grads = zeros_like(out);
  const std::size_t n = model.n_experts();
  Vector f_c(model.input_dim());
  Vector logits(n);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_for_epoch(epoch);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(mix_seed(config.seed, kAttentionShuffleStream + epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero(grads);
      auto& head = *out.attention;
      auto& head_grad = *grads.attention;
      for (std::size_t b = start; b < end; ++b) {
        const auto& s = samples[order[b]];
        fill_features(s, f_c);
        affine(head.weight, head.bias, f_c, logits);
        auto p = softmax(logits);
        p[s.expert] -= 1.0;
        for (double& x : p) x *= scale;
        add_outer_product(head_grad.weight, 1.0, p, f_c);
        for (std::size_t i = 0; i < n; ++i) head_grad.bias[i] += p[i];
      }
      l2_penalty(out, config.l2_lambda, config.l2_includes_biases, &grads, ParamScope::Attention);
      adam_step(out, grads, state, lr, config, ParamScope::Attention);
    }
  }
  check_params(out);
  return out;
}

GradcheckResult gradcheck(const GradcheckOptions& options, std::uint64_t seed) {
  ComparatorConfig config;
  config.embedding_dim = options.embedding_dim;
  config.hidden = options.hidden;
  config.activation = options.activation;
  config.sharing = options.sharing;
  config.dropout = options.dropout;
  config.relations.assign(kAllRelations.begin(),
                          kAllRelations.begin() + static_cast<std::ptrdiff_t>(options.n_experts));
  ComparatorParams params = init_params(config, mix_seed(seed, 1));
  Rng rng(mix_seed(seed, 2));
  for (auto& layer : params.layers) {
    for (double& b : layer.bias) b = 0.5 * rng.normal();
    layer.slope = rng.uniform(0.1, 0.4);
  }
  for (auto& o : params.outputs) o.bias = 0.5 * rng.normal();
  Vector f_c(config.input_dim());
  for (double& x : f_c) x = rng.normal();

  constexpr double kLambda = 1e-2;
  GradcheckResult result;
  for (std::size_t k = 0; k < config.n_experts(); ++k) {
    const KinshipRelation relation = config.relations[k];
    for (double target : {0.0, 1.0}) {
      const std::uint64_t mask_seed = mix_seed(seed, 16 + 2 * k + static_cast<std::uint64_t>(target));
      Rng mask(mask_seed);
      ForwardOptions fo;
      fo.dropout_rng = &mask;
      fo.last_expert = k;
      const ForwardTrace trace = forward(params, f_c, fo);
      GradientSet analytic = zeros_like(params);
      accumulate_gradients(trace, params, relation, target, 1.0, analytic);
      l2_penalty(params, kLambda, true, &analytic);
      if (options.corrupt) options.corrupt(analytic);

      auto pv = tensors(params, ParamScope::Experts);
      const auto gv = tensors(std::as_const(analytic), ParamScope::Experts);
      for (std::size_t t = 0; t < pv.size(); ++t) {
        for (std::size_t i = 0; i < pv[t].values.size(); ++i) {
          double& x = pv[t].values[i];
          const double saved = x;
          x = saved + options.step;
          const long double up = reference_loss(params, f_c, trace.dropout_scale, k, target, kLambda);
          x = saved - options.step;
          const long double down = reference_loss(params, f_c, trace.dropout_scale, k, target, kLambda);
          x = saved;
          const double numeric = static_cast<double>((up - down) / (2.0L * options.step));
          const double a = gv[t].values[i];
          const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
          result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
          ++result.entries_checked;
        }
      }
    }
  }
  return result;
}

}  // namespace kinship
