#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace kinship {

using Vector = std::vector<double>;

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  bool operator==(const Matrix&) const = default;
};

/// Dot product with four interleaved partial sums; the summation order is
/// fixed, so results are reproducible bit for bit.
inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// out = W x + b
inline void affine(const Matrix& w, std::span<const double> bias, std::span<const double> x,
                   std::span<double> out) {
  assert(w.cols == x.size() && w.rows == out.size() && bias.size() == out.size());
  for (std::size_t r = 0; r < w.rows; ++r) out[r] = dot(w.row(r), x) + bias[r];
}

/// out += W^T g
inline void add_transposed_product(const Matrix& w, std::span<const double> g,
                                   std::span<double> out) {
  assert(w.rows == g.size() && w.cols == out.size());
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const auto row = w.row(r);
    for (std::size_t c = 0; c < w.cols; ++c) out[c] += gr * row[c];
  }
}

/// W += scale * g x^T
inline void add_outer_product(Matrix& w, double scale, std::span<const double> g,
                              std::span<const double> x) {
  assert(w.rows == g.size() && w.cols == x.size());
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double gr = scale * g[r];
    if (gr == 0.0) continue;
    auto row = w.row(r);
    for (std::size_t c = 0; c < w.cols; ++c) row[c] += gr * x[c];
  }
}

}  // namespace kinship
