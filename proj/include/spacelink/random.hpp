#ifndef SPACELINK_RANDOM_HPP
#define SPACELINK_RANDOM_HPP

// Portable random number generation.
//
// Engine: xoshiro256** (Blackman & Vigna), state seeded through splitmix64.
// Every distribution below is written out by hand instead of using the
// <random> distributions, whose algorithms differ between standard library
// implementations. Given the same (seed, stream) pair, every build produces
// the same sequence of draws.
//
//   uniform()      (next() >> 11) * 2^-53, in [0, 1)
//   exponential()  -log(1 - u) / rate
//   normal()       Marsaglia polar method: pairs (2u - 1, 2u' - 1) are drawn
//                  until 0 < s = x^2 + y^2 < 1, then x m is returned and y m
//                  kept for the next call, m = sqrt(-2 log(s) / s)
//   bernoulli(p)   uniform() < p

#include <array>
#include <cmath>
#include <cstdint>

namespace spacelink {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept {
    // Streams are decorrelated by hashing the stream index into the seed.
    std::uint64_t mix = stream;
    std::uint64_t sm = seed ^ splitmix64(mix);
    for (auto& word : state_) word = splitmix64(sm);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept { return next(); }

  result_type next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Multiply-shift; bias is below 2^-32 for n < 2^32.
  std::uint32_t below(std::uint32_t n) noexcept {
    return static_cast<std::uint32_t>(((next() >> 32) * static_cast<std::uint64_t>(n)) >> 32);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  double exponential(double rate) noexcept { return -std::log(1.0 - uniform()) / rate; }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double x = 0.0, y = 0.0, s = 0.0;
    do {
      x = 2.0 * uniform() - 1.0;
      y = 2.0 * uniform() - 1.0;
      s = x * x + y * y;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = y * m;
    has_spare_ = true;
    return x * m;
  }

  double normal(double mean, double sigma) noexcept { return mean + sigma * normal(); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spacelink

#endif  // SPACELINK_RANDOM_HPP
