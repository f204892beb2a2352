#include "zsar/rng.hpp"

#include <cmath>
#include <numbers>

#include "zsar/error.hpp"

namespace zsar {

double Rng::normal() noexcept {
  // Shift into (0, 1] so the log argument is never zero.
  const double u1 =
      static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  return radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) {
    throw ConfigError("uniform_int: range must be nonempty");
  }
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t draw = next_u64();
  while (draw >= limit) draw = next_u64();
  return draw % n;
}

std::uint64_t Rng::derive_seed(std::uint64_t master_seed,
                               std::string_view stage_name) noexcept {
  std::uint64_t hash = 14695981039346656037ull;  // FNV-1a offset basis
  constexpr std::uint64_t kPrime = 1099511628211ull;
  for (int i = 0; i < 8; ++i) {
    hash ^= (master_seed >> (8 * i)) & 0xffull;
    hash *= kPrime;
  }
  for (char c : stage_name) {
    hash ^= static_cast<std::uint8_t>(c);
    hash *= kPrime;
  }
  return hash;
}

}  // namespace zsar
