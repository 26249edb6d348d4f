#pragma once

#include <cstdint>

namespace kirchhoff::sampling {

/// Van der Corput radical inverse of `index` in `base`, in [0, 1).
inline double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / base;
  double f = inv;
  double out = 0.0;
  while (index > 0) {
    out += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return out;
}

/// Halton point `k` (components in [0,1)) with the sequence shifted by `seed`
/// so distinct seeds give distinct, reproducible point sets.
struct Halton {
  std::uint64_t seed = 0;

  double operator()(std::uint64_t k, int dim) const {
    static constexpr std::uint32_t kPrimes[] = {2, 3, 5, 7, 11, 13};
    return radical_inverse(k + 1 + seed, kPrimes[dim % 6]);
  }
};

}  // namespace kirchhoff::sampling
