#pragma once

// Reference implementations used only by tests. Written as plain loops
// with no calls into the library's numeric code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "kinship/comparator.hpp"
#include "kinship/evaluation.hpp"

namespace oracle {

template <class T>
T act(T x, kinship::Activation a, T slope) {
  switch (a) {
    case kinship::Activation::LReLU: return x >= 0 ? x : T(0.2) * x;
    case kinship::Activation::ReLU: return x > 0 ? x : T(0);
    case kinship::Activation::PReLU: return x >= 0 ? x : slope * x;
    case kinship::Activation::Tanh: return std::tanh(x);
  }
  return x;
}

template <class T>
T sigm(T x) { return T(1) / (T(1) + std::exp(-x)); }

template <class T>
struct Dense {
  std::vector<T> z2;
  std::vector<T> logits;
};

// Full cascade, eval mode, every expert, evaluated in precision T.
template <class T = double>
Dense<T> forward(const kinship::ComparatorParams& p, const std::vector<double>& fc_in) {
  const auto& c = p.config;
  const std::size_t n = c.relations.size();
  const std::vector<T> fc(fc_in.begin(), fc_in.end());
  Dense<T> out;
  std::vector<T> prev;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t layer = i;
    if (c.sharing == kinship::SharingMode::SharedTrunk) layer = i == 0 ? 0 : 1;
    const auto& L = p.layers[layer];
    const bool from_input = i == 0 || c.sharing == kinship::SharingMode::EntirelyLocal;
    const std::vector<T>& x = from_input ? fc : prev;
    std::vector<T> h(c.hidden);
    for (std::size_t r = 0; r < c.hidden; ++r) {
      T s = L.bias[r];
      for (std::size_t k = 0; k < x.size(); ++k) s += T(L.weight.data[r * x.size() + k]) * x[k];
      h[r] = act<T>(s, c.activation, T(L.slope));
    }
    T logit = p.outputs[i].bias;
    for (std::size_t r = 0; r < c.hidden; ++r) logit += T(p.outputs[i].weight[r]) * h[r];
    out.logits.push_back(logit);
    out.z2.push_back(sigm(logit));
    prev = h;
  }
  return out;
}

// -[t log s + (1 - t) log(1 - s)] with s = sigmoid(logit), written as
// max(l, 0) - t l + log(1 + exp(-|l|)) to avoid cancellation.
template <class T>
T bce(T logit, T target) {
  return std::max(logit, T(0)) - target * logit + std::log1p(std::exp(-std::abs(logit)));
}

// Fraction of (kin, non-kin) combinations ordered correctly, ties one half.
inline double auc(const std::vector<double>& kin, const std::vector<double>& nonkin, bool higher_is_kin) {
  double good = 0;
  for (double k : kin) {
    for (double n : nonkin) {
      const double a = higher_is_kin ? k : -k;
      const double b = higher_is_kin ? n : -n;
      if (a > b) good += 1;
      else if (a == b) good += 0.5;
    }
  }
  return good / (static_cast<double>(kin.size()) * static_cast<double>(nonkin.size()));
}

// Macro accuracy of a threshold, counted directly.
inline double macro_at(const std::vector<kinship::ScoredPair>& s, double thr, bool higher_is_kin) {
  std::vector<double> correct(kinship::kRelationCount, 0), total(kinship::kRelationCount, 0);
  for (const auto& p : s) {
    const auto r = static_cast<std::size_t>(p.pair.relation);
    const bool kin = higher_is_kin ? p.score >= thr : p.score <= thr;
    total[r] += 1;
    if (kin == (p.pair.label == kinship::PairLabel::Kin)) correct[r] += 1;
  }
  double sum = 0;
  int present = 0;
  for (std::size_t r = 0; r < total.size(); ++r) {
    if (total[r] == 0) continue;
    sum += correct[r] / total[r];
    ++present;
  }
  return sum / present;
}

// Best macro accuracy over `n` evenly spaced thresholds spanning the
// scores with a margin on both sides.
inline double brute_force_best(const std::vector<kinship::ScoredPair>& s, bool higher_is_kin, int n = 10000) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : s) {
    lo = std::min(lo, p.score);
    hi = std::max(hi, p.score);
  }
  const double margin = (hi - lo) * 0.01 + 1e-9;
  lo -= margin;
  hi += margin;
  double best = 0;
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * i / (n - 1);
    best = std::max(best, macro_at(s, t, higher_is_kin));
  }
  return best;
}

}  // namespace oracle
