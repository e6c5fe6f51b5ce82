#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "transmon/rng.hpp"

using namespace transmon::rng;

// Published Philox4x32-10 known-answer vectors.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Stream, SameCoordinatesSameDraws) {
  Stream a(42, 7, 3), b(42, 7, 3);
  for (int k = 0; k < 100; ++k) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Stream, DistinctCoordinatesDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t seed : {1ull, 2ull, 1ull << 40})
    for (std::uint64_t seq : {0ull, 1ull, 1ull << 33})
      for (std::uint32_t shot : {0u, 1u, 0xFFFFFFFFu}) first.insert(Stream(seed, seq, shot).next_u64());
  EXPECT_EQ(first.size(), 27u);
}

TEST(Stream, UniformMoments) {
  Stream s(1, 2, 3);
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int k = 0; k < n; ++k) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 0.002);
}

TEST(Stream, NormalMoments) {
  Stream s(9, 0, 0);
  const int n = 200000;
  double sum = 0, sq = 0, quad = 0;
  for (int k = 0; k < n; ++k) {
    const double x = s.normal();
    sum += x;
    sq += x * x;
    quad += x * x * x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 5 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.01);
  EXPECT_NEAR(quad / n, 3.0, 0.06);
}

TEST(Stream, BelowInRange) {
  Stream s(3, 3, 3);
  std::set<std::uint32_t> seen;
  for (int k = 0; k < 5000; ++k) {
    const auto v = s.below(24);
    ASSERT_LT(v, 24u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 24u);
}

TEST(Stream, Provenance) {
  Stream s(5, 11, 12);
  EXPECT_EQ(s.sequence_id(), 11u);
  EXPECT_EQ(s.shot_index(), 12u);
  EXPECT_EQ(s.stream_id(), combine(11, 12));
  EXPECT_NE(Stream(5, 12, 11).stream_id(), s.stream_id());
}
