#pragma once

// Test-side oracles, kept independent of the library implementation:
// exhaustive walk-path enumeration and a textbook evaluation of the
// renewal recurrence.

#include <cstdint>
#include <vector>

namespace oracles {

/// P(simple random walk on Z is at the origin after `steps` steps),
/// by enumerating all 2^steps sign sequences.
inline double srw_z_return_probability(int steps) {
  const std::int64_t total = std::int64_t(1) << steps;
  std::int64_t hits = 0;
  for (std::int64_t mask = 0; mask < total; ++mask) {
    int pos = 0;
    for (int s = 0; s < steps; ++s) pos += (mask >> s) & 1 ? 1 : -1;
    if (pos == 0) ++hits;
  }
  return double(hits) / double(total);
}

/// P(first return to the origin happens exactly at `steps`), enumerated.
inline double srw_z_first_return_probability(int steps) {
  const std::int64_t total = std::int64_t(1) << steps;
  std::int64_t hits = 0;
  for (std::int64_t mask = 0; mask < total; ++mask) {
    int pos = 0;
    bool returned_early = false;
    for (int s = 0; s < steps; ++s) {
      pos += (mask >> s) & 1 ? 1 : -1;
      if (pos == 0 && s + 1 < steps) {
        returned_early = true;
        break;
      }
    }
    if (!returned_early && pos == 0) ++hits;
  }
  return double(hits) / double(total);
}

/// Same return probability for the walk on Z^2 (4^steps paths).
inline double srw_z2_return_probability(int steps) {
  std::int64_t total = 1;
  for (int s = 0; s < steps; ++s) total *= 4;
  std::int64_t hits = 0;
  for (std::int64_t code = 0; code < total; ++code) {
    int x = 0, y = 0;
    std::int64_t c = code;
    for (int s = 0; s < steps; ++s) {
      switch (c % 4) {
        case 0: ++x; break;
        case 1: --x; break;
        case 2: ++y; break;
        case 3: --y; break;
      }
      c /= 4;
    }
    if (x == 0 && y == 0) ++hits;
  }
  return double(hits) / double(total);
}

/// Textbook evaluation of u_n = sum_{k=1..n} f_k u_{n-k}, u_0 = 1.
/// f holds f_1..f_N at indices 0..N-1; returns u_1..u_N likewise.
inline std::vector<double> renewal_recurrence(const std::vector<double>& f) {
  const std::size_t n_max = f.size();
  std::vector<double> u_with_zero(n_max + 1, 0.0);
  u_with_zero[0] = 1.0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= n; ++k) acc += f[k - 1] * u_with_zero[n - k];
    u_with_zero[n] = acc;
  }
  return std::vector<double>(u_with_zero.begin() + 1, u_with_zero.end());
}

}  // namespace oracles
