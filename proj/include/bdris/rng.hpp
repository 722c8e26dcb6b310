#pragma once

// Seeding and Gaussian sampling. Streams are derived by hashing, so trial t of a run
// with master seed s always sees the same numbers regardless of which thread runs it.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace bdris::rng {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of sub-stream `index` under `parent`.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Per-link stream tags within one trial.
enum class Stream : std::uint64_t { forward = 1, backward = 2, direct = 3, surface = 4, rotation = 5 };

constexpr std::uint64_t derive_seed(std::uint64_t parent, Stream s) noexcept {
  return derive_seed(parent, static_cast<std::uint64_t>(s));
}

/// Standard circular complex Gaussian CN(0, 1). Box-Muller on mt19937_64 output, so the
/// sequence is fixed by the seed alone (std::normal_distribution is not portable).
class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    // 53 random bits in (0, 1].
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::complex<double> operator()() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-std::log(u1));  // variance 1/2 per component
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bdris::rng
