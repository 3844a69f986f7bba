#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

namespace cardylab {

// Philox4x32-10 counter-based generator.  A stream is keyed by
// (seed, replica); draws are pure functions of the counter, so replicas
// can be evaluated in any order, on any number of workers, with
// bit-identical results.
class Philox {
public:
  Philox(std::uint64_t seed, std::uint64_t replica)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        hi_{static_cast<std::uint32_t>(replica),
            static_cast<std::uint32_t>(replica >> 32)} {}

  // 128 random bits for block index `block`.
  std::array<std::uint32_t, 4> block(std::uint64_t block_index) const {
    std::array<std::uint32_t, 4> ctr{
        static_cast<std::uint32_t>(block_index),
        static_cast<std::uint32_t>(block_index >> 32), hi_[0], hi_[1]};
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
      std::array<std::uint32_t, 4> next{
          static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
          static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
          static_cast<std::uint32_t>(p0)};
      ctr = next;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return ctr;
  }

  std::uint64_t uint64(std::uint64_t i) const {
    auto b = block(i / 2);
    const int half = static_cast<int>(i % 2) * 2;
    return (static_cast<std::uint64_t>(b[half + 1]) << 32) | b[half];
  }

  // Uniform double in [0,1).
  double uniform(std::uint64_t i) const {
    return static_cast<double>(uint64(i) >> 11) * 0x1.0p-53;
  }

private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> hi_;
};

// Fair-coin bit source: bit(i) is the color of site i in one replica.
class CoinStream {
public:
  CoinStream(std::uint64_t seed, std::uint64_t replica) : gen_(seed, replica) {}

  bool bit(std::uint64_t i) const {
    const auto b = gen_.block(i / 128);
    const std::uint64_t j = i % 128;
    return (b[j / 32] >> (j % 32)) & 1u;
  }

  // Fill `n` coin flips starting at flip index 0.
  template <typename Out>
  void fill(std::uint64_t n, Out&& out) const {
    for (std::uint64_t base = 0; base < n; base += 128) {
      const auto b = gen_.block(base / 128);
      const std::uint64_t top = std::min<std::uint64_t>(128, n - base);
      for (std::uint64_t j = 0; j < top; ++j)
        out(base + j, static_cast<bool>((b[j / 32] >> (j % 32)) & 1u));
    }
  }

private:
  Philox gen_;
};

}  // namespace cardylab
