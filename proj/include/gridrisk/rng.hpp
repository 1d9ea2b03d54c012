#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace gridrisk {

// Counter-based uniform generator: output k of a stream is a pure function of
// (key, k), so any slice of the stream can be produced on any thread and a
// fixed chunk plan yields bit-identical results at every thread count. The
// mix is splitmix64's finalizer over the state key + (k+1)*golden.
struct CounterRng {
  std::uint64_t key = 0;

  std::uint64_t operator()(std::uint64_t counter) const {
    std::uint64_t z = key + (counter + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

// Decorrelates derived stream keys from raw counter positions.
inline std::uint64_t derive_key(std::uint64_t key, std::uint64_t salt) {
  return CounterRng{key ^ 0xD1B54A32D192ED03ull}(salt);
}

inline double to_unit(std::uint64_t bits) {
  // [0, 1), 53 mantissa bits
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Standard normal pair at pair index p, Box-Muller on counters (2p, 2p+1).
// Normal index g belongs to pair g/2; callers straddling a pair boundary
// recompute one partner, which keeps every normal a function of its global
// index alone.
inline std::pair<double, double> normal_pair(const CounterRng& rng,
                                             std::uint64_t p) {
  const double u1 = to_unit(rng(2 * p));
  const double u2 = to_unit(rng(2 * p + 1));
  // 1 - u1 lies in (0, 1], so the log is finite
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  const double a = 6.283185307179586476925286766559 * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

// Fills x[0..count) with the normals at global indices [base, base+count).
inline void fill_normals(const CounterRng& rng, std::uint64_t base, int count,
                         double* x) {
  int j = 0;
  while (j < count) {
    const std::uint64_t g = base + static_cast<std::uint64_t>(j);
    const auto [z0, z1] = normal_pair(rng, g >> 1);
    if (g & 1) {
      x[j++] = z1;
    } else {
      x[j++] = z0;
      if (j < count) x[j++] = z1;
    }
  }
}

}  // namespace gridrisk
