#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace zsar {

// Deterministic, platform-independent random generator.
//
// The engine is splitmix64: a single 64-bit state advanced by the golden
// ratio increment and scrambled with two xor-shift multiplies. The same
// seed yields the same draw sequence on every platform, which makes
// training trajectories and generated datasets reproducible bit for bit.
// Distribution transforms are implemented here as well so no
// library-dependent behavior leaks in.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  // Standard normal via Box-Muller. Consumes exactly two uniform draws
  // per call; the sine branch is discarded to keep the consumption rate
  // constant.
  double normal() noexcept;

  // Uniform integer in [0, n). Unbiased via rejection sampling.
  std::uint64_t uniform_int(std::uint64_t n);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Derives a component seed from a master seed and a stage name with
  // 64-bit FNV-1a over the little-endian seed bytes followed by the name
  // bytes. The constant hash keeps stage seeds stable across releases.
  static std::uint64_t derive_seed(std::uint64_t master_seed,
                                   std::string_view stage_name) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace zsar
