#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>

#include "imgbias/error.hpp"

namespace imgbias {

/// One 8x8 quantization matrix in natural (row-major) order.
using QuantTable = std::array<std::uint8_t, 64>;

/// Luminance and (for color streams) chrominance tables, natural order.
/// Streams store tables in zig-zag order; parsers convert on read.
struct QuantTables {
  QuantTable luma{};
  std::optional<QuantTable> chroma;

  friend bool operator==(const QuantTables&, const QuantTables&) = default;
};

// zig-zag scan position -> natural (row-major) index
inline constexpr std::array<std::uint8_t, 64> kZigZagToNatural = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

/// Reference tables of the baseline encoder (ITU-T T.81 Annex K), natural order.
struct StandardTableSet {
  static constexpr std::array<int, 64> base_luma = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  static constexpr std::array<int, 64> base_chroma = {
      17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
      24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
      99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
      99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};
};

/// Percentage scale factor for a quality factor (integer division below 50).
constexpr int quality_scale(int qf) { return qf < 50 ? 5000 / qf : 200 - 2 * qf; }

constexpr QuantTable scale_table(const std::array<int, 64>& base, int scale) {
  QuantTable out{};
  for (std::size_t i = 0; i < 64; ++i) {
    int v = (base[i] * scale + 50) / 100;
    out[i] = static_cast<std::uint8_t>(v < 1 ? 1 : (v > 255 ? 255 : v));
  }
  return out;
}

/// Tables the baseline encoder writes for quality `qf` in [1,100].
inline QuantTables scale_tables(int qf) {
  if (qf < 1 || qf > 100) throw DomainError("quality factor must be in [1,100]");
  const int scale = quality_scale(qf);
  return {scale_table(StandardTableSet::base_luma, scale),
          scale_table(StandardTableSet::base_chroma, scale)};
}

struct QualityEstimate {
  int qf = 0;
  bool exact = false;
  long distance = 0;

  friend bool operator==(const QualityEstimate&, const QualityEstimate&) = default;
};

/// Nearest standard quality under L1 distance. Chroma participates only when
/// present; ties resolve toward the larger quality.
inline QualityEstimate estimate_qf(const QuantTables& tables) {
  QualityEstimate best{0, false, -1};
  for (int q = 100; q >= 1; --q) {
    const QuantTables ref = scale_tables(q);
    long d = 0;
    for (std::size_t i = 0; i < 64; ++i) d += std::abs(int(tables.luma[i]) - int(ref.luma[i]));
    if (tables.chroma) {
      for (std::size_t i = 0; i < 64; ++i)
        d += std::abs(int((*tables.chroma)[i]) - int((*ref.chroma)[i]));
    }
    // descending scan with strict comparison keeps the larger q on ties
    if (best.distance < 0 || d < best.distance) best = {q, d == 0, d};
  }
  return best;
}

}  // namespace imgbias
