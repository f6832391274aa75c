#include "halo/rng.hpp"

#include <cmath>

namespace halo {

double Rng::next_gaussian() {
  // Box-Muller, cosine branch. u1 in (0,1] so log(u1) is finite.
  const double u1 = next_unit_pos();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  return r * std::cos(kTwoPi * u2);
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::next_below: n must be positive");
  // Rejection-free modulo is fine here: n is small in all call sites and the
  // bias (< n / 2^64) is far below simulation noise.
  return next_u64() % n;
}

std::uint64_t Rng::derive(std::uint64_t base, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  return mix(mix(z) ^ 0xD1B54A32D192ED03ULL);
}

}  // namespace halo
