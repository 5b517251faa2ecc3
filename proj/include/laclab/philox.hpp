#pragma once

#include <array>
#include <cstdint>

namespace laclab {

/// Philox4x64-10 block function (Salmon et al., SC'11). Stateless: the same
/// (counter, key) always yields the same four words.
struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B97F4A7C15ULL;
        key[1] += 0xBB67AE8584CAA73BULL;
      }
      const unsigned __int128 p0 = static_cast<unsigned __int128>(0xD2E7470EE14C6C93ULL) * ctr[0];
      const unsigned __int128 p1 = static_cast<unsigned __int128>(0xCA5A826395121157ULL) * ctr[2];
      const auto hi0 = static_cast<std::uint64_t>(p0 >> 64);
      const auto lo0 = static_cast<std::uint64_t>(p0);
      const auto hi1 = static_cast<std::uint64_t>(p1 >> 64);
      const auto lo1 = static_cast<std::uint64_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

/// Disjoint random streams of one replica.
enum class Stream : std::uint64_t {
  x_bits = 0,      // binary digits of the sample point x
  auxiliary = 1,   // coupling randomisation (eta_k)
  iid = 2,         // i.i.d. reference draws
  iid_second = 3,  // independent second i.i.d. batch (calibration controls)
};

/// Sequential reader over the counter-based stream (seed, replica, stream).
/// Word i of the stream is word (i mod 4) of block(i / 4); readers never share
/// state, so replicas are reproducible in any order and on any thread.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t replica, Stream stream) noexcept
      : key_{seed, 0x6c61636c61622d31ULL}, replica_(replica), stream_(static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() noexcept {
    if (used_ == 4) {
      buffer_ = Philox4x64::block({block_++, replica_, stream_, 0}, key_);
      used_ = 0;
    }
    return buffer_[used_++];
  }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0,1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  Philox4x64::Key key_;
  std::uint64_t replica_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Philox4x64::Counter buffer_{};
  int used_ = 4;
};

}  // namespace laclab
