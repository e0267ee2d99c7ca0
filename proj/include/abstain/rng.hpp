#ifndef ABSTAIN_RNG_HPP_
#define ABSTAIN_RNG_HPP_

// Portable seeded randomness. The standard <random> distributions are
// implementation-defined, so everything that must reproduce across compilers
// (splits, synthetic draws) goes through the helpers below instead.
//
//   engine:      xoshiro256** 1.0 (Blackman & Vigna), state seeded by SplitMix64
//   bounded int: Lemire's multiply-shift with rejection
//   uniform01:   top 53 bits of one draw
//   normal:      Marsaglia polar method, one cached deviate
//   permutation: Fisher-Yates, i from n-1 down to 1, j = bounded(i + 1)

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

namespace abstain {

inline constexpr std::string_view kPermutationAlgorithm =
    "fisher-yates/xoshiro256ss/v1";

constexpr std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Child seed for stream `index` of `seed`. Used to give every split, trial and
// prompt its own generator so parallel execution stays deterministic.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
  splitmix64(s);
  return splitmix64(s);
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto &word : state_) word = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
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

  // Uniform on [0, bound). bound must be positive.
  std::uint64_t bounded(std::uint64_t bound) {
    __extension__ using u128 = unsigned __int128;
    u128 product = static_cast<u128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<u128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

  // Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + sd * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return mean + sd * u * factor;
  }

  // Index drawn with probability proportional to `weights` (assumed to sum to
  // one up to round-off; the last positive entry absorbs any remainder).
  std::size_t categorical(std::span<const double> weights) {
    const double u = uniform01();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      cumulative += weights[i];
      if (u < cumulative) return i;
    }
    return last_positive;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng &rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace abstain

#endif  // ABSTAIN_RNG_HPP_
