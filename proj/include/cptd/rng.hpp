#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace cptd::rng {

/// One SplitMix64 step: advances `state` and returns the next output word.
std::uint64_t splitmix64(std::uint64_t& state);

/// Counter-based substream derivation: substream `index` of `master`.
/// Streams for different indices are reproducible independently, which is
/// what lets Monte-Carlo replicates run in any order or in parallel.
std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index);

/// Deterministic RNG. The engine is mt19937_64 (bit-exact by the standard);
/// the distributions are implemented here because the std::<random>
/// distributions are implementation-defined and would break byte-identical
/// reproducibility of result files.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Standard normal deviate (Box-Muller, cached spare).
  double gauss();

  /// Uniform integer in [0, n); n must be positive. Rejection sampling,
  /// so the result is exactly uniform.
  std::uint64_t below(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cptd::rng
