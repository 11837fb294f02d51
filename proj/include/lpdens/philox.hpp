#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace lpdens {

//! Philox4x32-10 counter-based generator. The key is the 64-bit seed and the
//! upper half of the counter is a stream id (the replication index), so every
//! replication owns an independent, reproducible sequence regardless of which
//! thread runs it.
class Philox
{
public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox(std::uint64_t seed, std::uint64_t stream)
    : key_{ static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32) }
    , stream_(stream)
  {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()()
  {
    if (used_ == 4) {
      Block ctr{ static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                 static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32) };
      buffer_ = encrypt(ctr, key_);
      ++block_;
      used_ = 0;
    }
    return buffer_[used_++];
  }

  //! Uniform double strictly inside (0, 1), 53 random bits.
  double uniform()
  {
    std::uint64_t hi = (*this)();
    std::uint64_t lo = (*this)();
    std::uint64_t bits = (hi << 32) | lo;
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  //! Ten Philox rounds on one counter block.
  static Block encrypt(Block ctr, Key key)
  {
    constexpr std::uint64_t M0 = 0xD2511F53, M1 = 0xCD9E8D57;
    constexpr std::uint32_t W0 = 0x9E3779B9, W1 = 0xBB67AE85;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += W0;
        key[1] += W1;
      }
      std::uint64_t p0 = M0 * ctr[0];
      std::uint64_t p1 = M1 * ctr[2];
      ctr = { static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
              static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0) };
    }
    return ctr;
  }

private:
  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block buffer_{};
  int used_ = 4;
};

} // namespace lpdens
