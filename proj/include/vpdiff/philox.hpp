#pragma once

#include <array>
#include <cstdint>

namespace vpd {

// Philox4x32-10 counter-based generator: stateless, a (key, counter) pair maps
// to four 32-bit words, so parallel substreams are just counter layouts.
struct Philox4x32 {
  static constexpr uint32_t kM0 = 0xD2511F53u;
  static constexpr uint32_t kM1 = 0xCD9E8D57u;
  static constexpr uint32_t kW0 = 0x9E3779B9u;
  static constexpr uint32_t kW1 = 0xBB67AE85u;

  static std::array<uint32_t, 4> block(uint64_t key, std::array<uint32_t, 4> ctr) {
    uint32_t k0 = static_cast<uint32_t>(key);
    uint32_t k1 = static_cast<uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      uint64_t p0 = static_cast<uint64_t>(kM0) * ctr[0];
      uint64_t p1 = static_cast<uint64_t>(kM1) * ctr[2];
      uint32_t hi0 = static_cast<uint32_t>(p0 >> 32), lo0 = static_cast<uint32_t>(p0);
      uint32_t hi1 = static_cast<uint32_t>(p1 >> 32), lo1 = static_cast<uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += kW0;
      k1 += kW1;
    }
    return ctr;
  }
};

inline double uniformFromU64(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// per-sample uniforms: lane-indexed blocks of the same counter
struct CounterStream {
  uint64_t key;
  uint32_t streamId;

  // four uniforms in [0,1) per lane
  std::array<double, 2> pair(uint64_t sample, uint32_t lane) const {
    std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(sample),
                                   static_cast<uint32_t>(sample >> 32), lane, streamId};
    auto w = Philox4x32::block(key, ctr);
    uint64_t a = (static_cast<uint64_t>(w[0]) << 32) | w[1];
    uint64_t b = (static_cast<uint64_t>(w[2]) << 32) | w[3];
    return {uniformFromU64(a), uniformFromU64(b)};
  }

  uint32_t word(uint64_t sample, uint32_t lane) const {
    std::array<uint32_t, 4> ctr = {static_cast<uint32_t>(sample),
                                   static_cast<uint32_t>(sample >> 32), lane, streamId};
    return Philox4x32::block(key, ctr)[0];
  }
};

inline uint32_t fnv1a(const void* data, size_t n, uint32_t seed = 0x811c9dc5u) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  uint32_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 16777619u;
  }
  return h;
}

} // namespace vpd
