#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace masim {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
// every 128-bit block is a pure function of (seed, path, index, lane), which
// is what makes path generation reproducible under any thread count and
// allows a path to be extended without replaying its prefix.
namespace philox {

inline constexpr uint32_t kM0 = 0xD2511F53u;
inline constexpr uint32_t kM1 = 0xCD9E8D57u;
inline constexpr uint32_t kW0 = 0x9E3779B9u;
inline constexpr uint32_t kW1 = 0xBB67AE85u;

struct Block {
  uint32_t x[4];
};

inline Block block(uint64_t seed, uint64_t path, uint64_t index,
                   uint32_t lane) {
  uint32_t k0 = static_cast<uint32_t>(seed);
  uint32_t k1 = static_cast<uint32_t>(seed >> 32);
  uint32_t c0 = static_cast<uint32_t>(index);
  uint32_t c1 = static_cast<uint32_t>(index >> 32);
  uint32_t c2 = static_cast<uint32_t>(path);
  uint32_t c3 = static_cast<uint32_t>(path >> 32) ^ lane;
  for (int round = 0; round < 10; ++round) {
    uint64_t p0 = static_cast<uint64_t>(kM0) * c0;
    uint64_t p1 = static_cast<uint64_t>(kM1) * c2;
    uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    uint32_t lo0 = static_cast<uint32_t>(p0);
    uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    uint32_t lo1 = static_cast<uint32_t>(p1);
    uint32_t n0 = hi1 ^ c1 ^ k0;
    uint32_t n1 = lo1;
    uint32_t n2 = hi0 ^ c3 ^ k1;
    uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kW0;
    k1 += kW1;
  }
  return Block{{c0, c1, c2, c3}};
}

}  // namespace philox

/// Keyed counter RNG: draws are addressed, never streamed. `index` is the
/// innovation index (zigzag-encoded when negative), `lane` distinguishes
/// multiple draws needed for one innovation (rejection loops, Box-Muller).
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t path) : seed_(seed), path_(path) {}

  uint64_t seed() const { return seed_; }
  uint64_t path() const { return path_; }

  static uint64_t encode_index(int64_t j) {
    return j >= 0 ? (static_cast<uint64_t>(j) << 1)
                  : ((static_cast<uint64_t>(-(j + 1)) << 1) | 1u);
  }

  /// Two independent uniforms in (0,1) from one Philox block.
  std::pair<double, double> uniform2(int64_t index, uint32_t lane) const {
    philox::Block b = philox::block(seed_, path_, encode_index(index), lane);
    uint64_t a = (static_cast<uint64_t>(b.x[0]) << 32) | b.x[1];
    uint64_t c = (static_cast<uint64_t>(b.x[2]) << 32) | b.x[3];
    return {to_unit(a), to_unit(c)};
  }

  double uniform(int64_t index, uint32_t lane = 0) const {
    return uniform2(index, lane).first;
  }

  /// Standard normal via Box-Muller on one block.
  double normal(int64_t index, uint32_t lane = 0) const {
    auto [u1, u2] = uniform2(index, lane);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::pair<double, double> normal2(int64_t index, uint32_t lane = 0) const {
    auto [u1, u2] = uniform2(index, lane);
    double r = std::sqrt(-2.0 * std::log(u1));
    return {r * std::cos(2.0 * std::numbers::pi * u2),
            r * std::sin(2.0 * std::numbers::pi * u2)};
  }

 private:
  static double to_unit(uint64_t v) {
    // 53-bit mantissa, strictly inside (0,1).
    return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
  }

  uint64_t seed_;
  uint64_t path_;
};

}  // namespace masim
