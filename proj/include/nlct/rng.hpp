#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nlct {

// SplitMix64 finalizer. Used to derive independent stream seeds from
// (master seed, index) so that row i / trial i can be regenerated without
// touching any other stream.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(mix_seed(seed, stream));
}

// xoshiro256** with a SplitMix64-expanded seed. Gaussian operator rows each
// get their own stream, and seeding an mt19937_64 per row dominated the cost
// of building tall operators.
class RowEngine {
public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  explicit RowEngine(std::uint64_t seed) noexcept {
    for (int k = 0; k < 4; ++k) s_[k] = mix_seed(seed, static_cast<std::uint64_t>(k));
  }

  result_type operator()() noexcept {
    const std::uint64_t out = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

inline RowEngine make_row_engine(std::uint64_t seed, std::uint64_t row) {
  return RowEngine(mix_seed(seed, row));
}

// Standard normal draws via Box-Muller on the engine's raw output. Unlike
// std::normal_distribution the sequence is fixed across standard libraries.
class StandardNormal {
public:
  template <class Gen>
  double operator()(Gen& eng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    constexpr double inv_2_53 = 1.0 / 9007199254740992.0;
    // u1 in (0, 1], u2 in [0, 1)
    const double u1 = (static_cast<double>(eng() >> 11) + 1.0) * inv_2_53;
    const double u2 = static_cast<double>(eng() >> 11) * inv_2_53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    has_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

template <class Gen>
double uniform01(Gen& eng) {
  return static_cast<double>(eng() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace nlct
