#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace kinship {

/// splitmix64 finalizer applied to `base` combined with `stream`. This is
/// the documented rule for deriving every sub-seed (per epoch, per family,
/// per purpose): mix_seed(base, stream) = splitmix64(base ^ (stream * 0x9E3779B97F4A7C15)).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Seeded generator. Distribution code is written out here rather than
/// taken from <random> so sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n), unbiased. n must be positive.
  std::size_t index(std::size_t n);

  /// Standard normal (Box-Muller, one draw per call).
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kinship
