#include "imgbias/quant_tables.hpp"

#include <gtest/gtest.h>

#include <random>

#include "support/reference_codecs.hpp"

namespace imgbias {
namespace {

TEST(ScaleTablesTest, FiftyIsIdentityScale) {
  const QuantTables t = scale_tables(50);
  for (int i = 0; i < 64; ++i) {
    EXPECT_EQ(t.luma[i], StandardTableSet::base_luma[i]);
    EXPECT_EQ((*t.chroma)[i], StandardTableSet::base_chroma[i]);
  }
}

TEST(ScaleTablesTest, HundredClampsToOne) {
  const QuantTables t = scale_tables(100);
  for (int i = 0; i < 64; ++i) {
    EXPECT_EQ(t.luma[i], 1);
    EXPECT_EQ((*t.chroma)[i], 1);
  }
}

// Golden values computed outside this code base with a direct evaluation of
// clamp((base * 8 + 50) / 100, 1, 255).
TEST(ScaleTablesTest, Quality96Golden) {
  const QuantTable luma = {1, 1, 1, 1, 2, 3, 4, 5, 1, 1, 1, 2, 2, 5, 5,  4, 1, 1, 1, 2, 3, 5, 6, 4,
                           1, 1, 2, 2, 4, 7, 6, 5, 1, 2, 3, 4, 5, 9, 8,  6, 2, 3, 4, 5, 6, 8, 9, 7,
                           4, 5, 6, 7, 8, 10, 10, 8, 6, 7, 8, 8, 9, 8, 8, 8};
  QuantTable chroma{};
  chroma.fill(8);
  const int head[32] = {1, 1, 2, 4, 8, 8, 8, 8, 1, 2, 2, 5, 8, 8, 8, 8,
                        2, 2, 4, 8, 8, 8, 8, 8, 4, 5, 8, 8, 8, 8, 8, 8};
  for (int i = 0; i < 32; ++i) chroma[i] = static_cast<std::uint8_t>(head[i]);
  const QuantTables t = scale_tables(96);
  EXPECT_EQ(t.luma, luma);
  EXPECT_EQ(*t.chroma, chroma);
  EXPECT_EQ(t.luma[0], 1);  // (16*8 + 50) / 100 = 1
}

TEST(ScaleTablesTest, RejectsOutOfRange) {
  EXPECT_THROW(scale_tables(0), DomainError);
  EXPECT_THROW(scale_tables(101), DomainError);
  EXPECT_THROW(scale_tables(-5), DomainError);
}

TEST(ScaleTablesTest, EntriesAlwaysInByteRange) {
  for (int q = 1; q <= 100; ++q) {
    const QuantTables t = scale_tables(q);
    for (int i = 0; i < 64; ++i) {
      ASSERT_GE(t.luma[i], 1);
      ASSERT_GE((*t.chroma)[i], 1);
    }
  }
}

// libjpeg's jpeg_set_quality is an independent implementation of the same rule.
TEST(ScaleTablesTest, MatchesLibjpegForEveryQuality) {
  std::mt19937_64 rng(7);
  const Raster img = refcodec::random_raster(rng, 16, 16);
  for (int q = 1; q <= 100; ++q) {
    const auto decoded = refcodec::libjpeg_decode(refcodec::libjpeg_encode(img, q));
    const QuantTables t = scale_tables(q);
    ASSERT_EQ(decoded.luma, t.luma) << "q=" << q;
    ASSERT_EQ(*decoded.chroma, *t.chroma) << "q=" << q;
  }
}

TEST(EstimateQfTest, RoundTripsEveryQuality) {
  for (int q = 1; q <= 100; ++q) {
    EXPECT_EQ(estimate_qf(scale_tables(q)), (QualityEstimate{q, true, 0})) << "q=" << q;
  }
}

TEST(EstimateQfTest, LumaOnlyRoundTrips) {
  for (int q = 1; q <= 100; ++q) {
    QuantTables t = scale_tables(q);
    t.chroma.reset();
    EXPECT_EQ(estimate_qf(t), (QualityEstimate{q, true, 0})) << "q=" << q;
  }
}

TEST(EstimateQfTest, StandardTablesAreInjective) {
  for (int a = 1; a <= 100; ++a)
    for (int b = a + 1; b <= 100; ++b) ASSERT_NE(scale_tables(a), scale_tables(b)) << a << " vs " << b;
}

TEST(EstimateQfTest, PerturbedEntryStaysNearest) {
  QuantTables t = scale_tables(85);
  t.luma[0] += 1;
  EXPECT_EQ(estimate_qf(t), (QualityEstimate{85, false, 1}));
}

TEST(EstimateQfTest, TieBreaksTowardLargerQuality) {
  // Halfway between two neighbors in L1: each entry of the midpoint table is
  // equidistant whenever the two tables differ by an even amount.
  const QuantTables a = scale_tables(60), b = scale_tables(61);
  QuantTables mid = a;
  long da = 0, db = 0;
  for (int i = 0; i < 64; ++i) {
    mid.luma[i] = static_cast<std::uint8_t>((a.luma[i] + b.luma[i]) / 2);
    (*mid.chroma)[i] = static_cast<std::uint8_t>(((*a.chroma)[i] + (*b.chroma)[i]) / 2);
  }
  for (int i = 0; i < 64; ++i) {
    da += std::abs(mid.luma[i] - a.luma[i]) + std::abs((*mid.chroma)[i] - (*a.chroma)[i]);
    db += std::abs(mid.luma[i] - b.luma[i]) + std::abs((*mid.chroma)[i] - (*b.chroma)[i]);
  }
  const QualityEstimate e = estimate_qf(mid);
  if (da == db) {
    EXPECT_EQ(e.qf, 61);
  } else {
    EXPECT_EQ(e.qf, da < db ? 60 : 61);
  }
}

TEST(EstimateQfTest, ConstantTableTieResolvesUp) {
  // All-ones luma without chroma matches q=100 exactly; nothing else reaches distance 0.
  QuantTables t;
  t.luma.fill(1);
  EXPECT_EQ(estimate_qf(t), (QualityEstimate{100, true, 0}));
}

}  // namespace
}  // namespace imgbias
