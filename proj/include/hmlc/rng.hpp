#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace hmlc {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream tags separate independent uses of one user seed.
enum class Stream : std::uint64_t {
  kLsr = 1,
  kUncertainty = 2,
  kLabels = 3,
  kNoise = 4,
  kProjection = 5,
  kInit = 6,
  kShuffle = 7,
  kReaders = 8,
  kMember = 9,
  kPolicy = 10,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream) noexcept {
  return mix64(seed ^ mix64(static_cast<std::uint64_t>(stream)));
}

// Hash of (seed, stream, row, column); the per-cell draws depend on nothing else.
constexpr std::uint64_t cell_bits(std::uint64_t seed, Stream stream, std::uint64_t row,
                                  std::uint64_t col) noexcept {
  std::uint64_t h = derive_seed(seed, stream);
  h = mix64(h ^ row);
  h = mix64(h ^ (col * 0xd1b54a32d192ed03ULL));
  return h;
}

// Top 53 bits mapped to [0, 1).
constexpr double unit_interval(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double cell_uniform(std::uint64_t seed, Stream stream, std::uint64_t row,
                           std::uint64_t col) noexcept {
  return unit_interval(cell_bits(seed, stream, row, col));
}

// Sequential generator. The std distributions are implementation-defined, so
// uniform/normal/shuffle are done here to keep outputs identical across
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unit_interval(engine_()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; one variate per call.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hmlc
