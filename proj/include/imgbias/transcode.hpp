#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "imgbias/error.hpp"
#include "imgbias/jpeg_codec.hpp"
#include "imgbias/png.hpp"
#include "imgbias/raster.hpp"

namespace imgbias {

/// Decodes a JPEG or PNG stream to RGB, sniffing the container signature.
inline Raster decode(std::span<const std::uint8_t> bytes) {
  if (jpeg::has_soi(bytes)) return decode_jpeg(bytes);
  if (png::has_signature(bytes)) return decode_png(bytes);
  throw MalformedStream("neither a JPEG nor a PNG stream");
}

/// Baseline JPEG at quality `qf`; the embedded tables are exactly scale_tables(qf).
inline std::vector<std::uint8_t> encode_qf(const Raster& img, int qf) { return encode_jpeg(img, qf); }

/// Copies the centered side x side window; offsets round down.
inline Raster center_crop(const Raster& img, int side) {
  if (side < 1) throw DomainError("crop side must be >= 1");
  if (img.width < side || img.height < side) throw DomainError("image smaller than crop side");
  const int ox = (img.width - side) / 2;
  const int oy = (img.height - side) / 2;
  Raster out(side, side, img.channels);
  const std::size_t row_bytes = static_cast<std::size_t>(side) * img.channels;
  for (int y = 0; y < side; ++y) {
    const auto src = img.samples.begin() + static_cast<std::ptrdiff_t>(img.index(ox, oy + y));
    std::copy(src, src + static_cast<std::ptrdiff_t>(row_bytes), out.samples.begin() + static_cast<std::ptrdiff_t>(out.index(0, y)));
  }
  return out;
}

/// Pixel-center-aligned bilinear resampling. Output pixel i samples source
/// coordinate (i + 0.5) * in / out - 0.5, clamped to [0, in - 1].
inline Raster resize_bilinear(const Raster& img, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw DomainError("output size must be >= 1");
  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(out);
    const double ratio = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
      double s = (i + 0.5) * ratio - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(in - 1));
      const int i0 = static_cast<int>(std::floor(s));
      t[i] = {i0, std::min(i0 + 1, in - 1), s - i0};
    }
    return t;
  };
  const auto tx = taps(img.width, out_w);
  const auto ty = taps(img.height, out_h);
  Raster out(out_w, out_h, img.channels);
  for (int y = 0; y < out_h; ++y) {
    const Tap& vy = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& vx = tx[x];
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(vx.i0, vy.i0, c) * (1 - vx.f) + img.at(vx.i1, vy.i0, c) * vx.f;
        const double bottom = img.at(vx.i0, vy.i1, c) * (1 - vx.f) + img.at(vx.i1, vy.i1, c) * vx.f;
        out.at(x, y, c) = jpeg::to_sample(top * (1 - vy.f) + bottom * vy.f);
      }
    }
  }
  return out;
}

struct PreprocessSizes {
  static constexpr int kCropSide = 450;
  static constexpr int kMaxSide = 550;
  static constexpr int kInferResize = 512;
  static constexpr int kInput = 224;
};

/// Training path: both sides must already lie in [450, 550]; crop to 450, resize to 224.
inline Raster train_preprocess(const Raster& img) {
  using S = PreprocessSizes;
  if (img.width < S::kCropSide || img.height < S::kCropSide)
    throw DomainError("training image side below 450");
  if (img.width > S::kMaxSide || img.height > S::kMaxSide)
    throw DomainError("training image side above 550");
  return resize_bilinear(center_crop(img, S::kCropSide), S::kInput, S::kInput);
}

/// Inference path for any size: resize to 512, crop to 450, resize to 224.
inline Raster infer_preprocess(const Raster& img) {
  using S = PreprocessSizes;
  const Raster scaled = resize_bilinear(img, S::kInferResize, S::kInferResize);
  return resize_bilinear(center_crop(scaled, S::kCropSide), S::kInput, S::kInput);
}

/// Strictly decreasing quality factors, each in [1, 100].
class CompressionSeries {
 public:
  CompressionSeries() = default;
  explicit CompressionSeries(std::vector<int> qualities) : q_(std::move(qualities)) {
    for (std::size_t i = 0; i < q_.size(); ++i) {
      if (q_[i] < 1 || q_[i] > 100) throw DomainError("series quality outside [1,100]");
      if (i > 0 && q_[i] >= q_[i - 1]) throw DomainError("series must be strictly decreasing");
    }
  }
  static CompressionSeries standard_robustness() { return CompressionSeries({95, 90, 80, 70, 60}); }

  const std::vector<int>& qualities() const { return q_; }
  bool empty() const { return q_.empty(); }

 private:
  std::vector<int> q_;
};

/// Re-encodes the decoded input once per level. Every level starts from the
/// same decode, so JPEG inputs get exactly one extra round of compression.
inline std::vector<std::pair<int, std::vector<std::uint8_t>>> compress_series(std::span<const std::uint8_t> bytes,
                                                                              const CompressionSeries& series) {
  std::vector<std::pair<int, std::vector<std::uint8_t>>> out;
  if (series.empty()) return out;
  const Raster img = decode(bytes);
  for (int q : series.qualities()) out.emplace_back(q, encode_qf(img, q));
  return out;
}

}  // namespace imgbias
