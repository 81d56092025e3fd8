#pragma once

#include <cstdint>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace rolp {

/// SplitMix64 output function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream.
///
/// The i-th output is a pure function of (key, i), so a stream can be
/// reconstructed from its key alone and child streams derived with split()
/// never overlap with their parent in practice.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr CounterRng() noexcept = default;
  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++ + 0x243f6a8885a308d3ULL)); }

  /// Independent child stream number `index`.
  constexpr CounterRng split(std::uint64_t index) const noexcept {
    return CounterRng(mix64(key_ + 0xa0761d6478bd642fULL * (index + 1)));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform_open_closed() noexcept { return 1.0 - uniform(); }

  /// Unbiased integer in [0, bound). bound must be positive.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % bound;
    }
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  /// Number of raw draws consumed so far.
  constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// Stream owned by trial `trial` of an experiment seeded with `seed`.
constexpr CounterRng trial_stream(std::uint64_t seed, std::uint64_t trial) noexcept {
  return CounterRng(mix64(seed)).split(trial);
}

/// Sub-stream roles inside one trial.
enum class StreamRole : std::uint64_t { kPermutation = 0, kRounding = 1, kCoin = 2 };

constexpr CounterRng sub_stream(const CounterRng& trial, StreamRole role) noexcept {
  return trial.split(static_cast<std::uint64_t>(role));
}

/// Uniformly random permutation of [0, n) by Fisher-Yates.
inline std::vector<std::size_t> sample_permutation(std::size_t n, CounterRng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace rolp
