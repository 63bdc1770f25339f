#pragma once

// Seeded counter-based generator. The algorithm is fixed so that datasets
// are bit-reproducible across platforms and standard libraries:
//
//   state  <- state + 0x9E3779B97F4A7C15          (mod 2^64)
//   output <- mix64(state)                          (SplitMix64 finalizer)
//   uniform = (output >> 11) * 2^-53                in [0, 1)
//   normal  = Box-Muller on u1 = 1 - uniform, u2 = uniform, cosine branch
//             first, the sine branch cached for the next call

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dpcp {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Independent stream seed for sub-task `stream` of a computation seeded
/// with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed + (stream + 1) * 0x9E3779B97F4A7C15ULL);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpcp
