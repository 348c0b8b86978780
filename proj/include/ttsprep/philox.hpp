#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace ttsprep {

// Identity string recorded next to artifacts that depend on random draws, so
// an independent implementation can reproduce them.
inline constexpr std::string_view kRngAlgorithm = "philox4x32-10";

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

// One block of Philox4x32 with 10 rounds: the key is bumped by the Weyl
// constants between rounds, not after the last one.
inline constexpr std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                            std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round != 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

}  // namespace detail

// Counter-based generator: the key is the seed, the counter carries a 64-bit
// stream id and a 64-bit block index. Distinct streams under one seed are
// independent, which gives parallel workers their own reproducible sequences
// without coordination.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  std::uint64_t seed() const {
    return key_[0] | (static_cast<std::uint64_t>(key_[1]) << 32);
  }
  std::uint64_t stream() const { return stream_; }

  std::uint32_t next_u32() {
    if (buffered_ == 0) {
      block_ = detail::philox4x32_10({static_cast<std::uint32_t>(counter_),
                                      static_cast<std::uint32_t>(counter_ >> 32),
                                      static_cast<std::uint32_t>(stream_),
                                      static_cast<std::uint32_t>(stream_ >> 32)},
                                     key_);
      ++counter_;
      buffered_ = 4;
    }
    return block_[4 - buffered_--];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    return lo | (static_cast<std::uint64_t>(next_u32()) << 32);
  }

  // Unbiased integer in [0, n): rejection below the largest multiple of n.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) return 0;
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;
    std::uint64_t r = next_u64();
    while (r > limit) r = next_u64();
    return r % n;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int buffered_ = 0;
};

}  // namespace ttsprep
