#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace cybersick {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for the `index`-th independent stream derived from a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Deterministic generator. The engine is std::mt19937_64 (whose output is
/// fixed by the standard); the distributions are implemented here because the
/// std:: ones are implementation-defined and would break byte reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). `n` must be positive.
  std::size_t below(std::size_t n);
  /// Standard normal (Box-Muller, no cached second value).
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cybersick
