#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace renewalci {

/// One step of the splitmix64 generator; also used as a mixing function
/// when deriving sub-stream seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic random stream (xoshiro256++), seeded via splitmix64.
///
/// Every sampling routine in the library takes one of these by reference;
/// the library itself holds no global generator state. Sub-streams for
/// parallel work are derived with `substream`, so results do not depend
/// on scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) {
    for (auto& word : state_) word = splitmix64_next(seed);
  }

  /// Stream for one work unit, keyed by (master seed, a, b).
  /// Distinct keys give statistically independent streams.
  static RandomStream substream(std::uint64_t master_seed, std::uint64_t a,
                                std::uint64_t b) {
    std::uint64_t h = master_seed;
    h = splitmix64_next(h) ^ (a + 0x9e3779b97f4a7c15ULL);
    h = splitmix64_next(h) ^ (b + 0xbf58476d1ce4e5b9ULL);
    splitmix64_next(h);
    return RandomStream(h);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  /// Standard normal via the Marsaglia polar method.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace renewalci
