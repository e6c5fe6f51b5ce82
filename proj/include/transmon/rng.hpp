#pragma once

// Counter-based random numbers (Philox4x32-10). A stream is addressed by a
// key (the global seed) and a counter prefix (sequence id, shot index), so
// any draw is reproducible from its coordinates alone, independent of
// evaluation order or thread count.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace transmon::rng {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

namespace detail {

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline Counter round(const Counter& c, const Key& k) {
  std::uint32_t hi0, lo0, hi1, lo1;
  mulhilo(kMul0, c[0], hi0, lo0);
  mulhilo(kMul1, c[2], hi1, lo1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

} // namespace detail

/// Philox4x32 block function with 10 rounds.
inline Counter philox4x32(Counter ctr, Key key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += detail::kWeyl0;
      key[1] += detail::kWeyl1;
    }
    ctr = detail::round(ctr, key);
  }
  return ctr;
}

/// SplitMix64 finalizer; used to fold structured ids into 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b + 0x632BE59BD9B4E019ull));
}

/// A keyed stream of uniform and normal variates.
///
/// Counter layout: word 0 is the block index within the stream, word 1 the
/// shot index, words 2-3 the sequence id.
class Stream {
public:
  Stream(std::uint64_t seed, std::uint64_t sequence_id, std::uint32_t shot_index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        base_{0u, shot_index, static_cast<std::uint32_t>(sequence_id),
              static_cast<std::uint32_t>(sequence_id >> 32)},
        sequence_id_(sequence_id), shot_index_(shot_index) {}

  std::uint32_t next_u32() {
    if (used_ == 4) refill();
    return block_[used_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint32_t below(std::uint32_t n) {
    return static_cast<std::uint32_t>(uniform() * n);
  }

  /// Standard normal via Box-Muller; both variates of a pair are used.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t sequence_id() const { return sequence_id_; }
  std::uint32_t shot_index() const { return shot_index_; }
  /// Provenance tag identifying this stream within a session.
  std::uint64_t stream_id() const { return combine(sequence_id_, shot_index_); }

private:
  void refill() {
    Counter c = base_;
    c[0] = block_index_++;
    block_ = philox4x32(c, key_);
    used_ = 0;
  }

  Key key_;
  Counter base_;
  Counter block_{};
  std::uint32_t block_index_ = 0;
  int used_ = 4;
  bool have_spare_ = false;
  double spare_ = 0.0;
  std::uint64_t sequence_id_;
  std::uint32_t shot_index_;
};

} // namespace transmon::rng
