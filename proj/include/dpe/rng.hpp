#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace dpe {

// Deterministic RNG used everywhere randomness is needed. The standard
// library's distributions (std::shuffle, std::normal_distribution) are
// implementation-defined, so subsets, shuffles and Gaussian draws would
// not reproduce across standard libraries. Everything below is pinned to
// exact integer/floating-point recipes.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Seed-derivation tree. Every random stream in the artifact is keyed by
// (base_seed, stream tag, index):
//   derive_seed(base, tag, i) = mix3(base, tag, i)
// where mix3 feeds the three words through splitmix64 sequentially.
// Stream tags are fixed constants; changing them invalidates reproducibility
// of saved runs, so they are part of the file-format contract.
enum class Stream : std::uint64_t {
  subset = 0x5b5e5a1d,        // per-member bootstrap subsets
  member_root = 0x4d454d42,   // per-member seed root within an ensemble
  member_init = 0x1717c0de,   // prototype initialization per member
  member_shuffle = 0x37aa11,  // per-member SGD epoch shuffles
  synth_train = 0x60d5eed,    // synthetic generator, train split
  synth_test = 0x7e57da7a,    // synthetic generator, test split
  probe = 0x11ea21,           // linear probe shuffles
};

inline std::uint64_t derive_seed(std::uint64_t base, Stream tag,
                                 std::uint64_t index) {
  std::uint64_t s = base;
  (void)splitmix64(s);
  s ^= static_cast<std::uint64_t>(tag) * 0x9e3779b97f4a7c15ull;
  (void)splitmix64(s);
  s ^= index * 0xd1b54a32d192ed03ull;
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // Uniform in [0, bound) without modulo bias (rejection on the top range).
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound + 1) % bound;
    std::uint64_t v = next_u64();
    while (v > limit) v = next_u64();
    return v % bound;
  }

  // Uniform double in [0, 1), 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; draws two uniforms per call, no cached
  // spare, so the stream position is a pure function of the call count.
  double next_gaussian() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // In-place Fisher-Yates.
  template <typename T>
  void shuffle(std::span<T> v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

  // m distinct elements of `pool`, uniform without replacement
  // (partial Fisher-Yates over a scratch copy).
  std::vector<std::size_t> sample_without_replacement(
      std::span<const std::size_t> pool, std::size_t m) {
    std::vector<std::size_t> scratch(pool.begin(), pool.end());
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(next_below(scratch.size() - i));
      std::swap(scratch[i], scratch[j]);
    }
    scratch.resize(m);
    return scratch;
  }

 private:
  std::uint64_t state_;
};

}  // namespace dpe
