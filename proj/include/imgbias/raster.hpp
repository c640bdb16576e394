#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "imgbias/error.hpp"

namespace imgbias {

/// 8-bit interleaved image, row-major. Channels is 1 (gray) or 3 (RGB).
struct Raster {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> samples;

  Raster() = default;
  Raster(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        samples(static_cast<std::size_t>(w) * h * c, fill) {
    if (w < 1 || h < 1) throw DomainError("raster dimensions must be >= 1");
    if (c != 1 && c != 3) throw DomainError("raster channels must be 1 or 3");
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t& at(int x, int y, int c = 0) { return samples[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c = 0) const { return samples[index(x, y, c)]; }

  std::span<const std::uint8_t> row(int y) const {
    return {samples.data() + index(0, y), static_cast<std::size_t>(width) * channels};
  }

  bool valid() const {
    return width >= 1 && height >= 1 && (channels == 1 || channels == 3) &&
           samples.size() == static_cast<std::size_t>(width) * height * channels;
  }

  friend bool operator==(const Raster&, const Raster&) = default;
};

}  // namespace imgbias
