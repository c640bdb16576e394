#pragma once

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "imgbias/error.hpp"
#include "imgbias/image_meta.hpp"
#include "imgbias/raster.hpp"

namespace imgbias {

namespace png {

inline constexpr std::array<std::uint8_t, 8> kSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

inline bool has_signature(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kSignature.size()) return false;
  for (std::size_t i = 0; i < kSignature.size(); ++i)
    if (bytes[i] != kSignature[i]) return false;
  return true;
}

inline std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
         (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
}

inline void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

struct Chunk {
  std::string type;
  std::span<const std::uint8_t> data;
};

/// Iterates chunks after the signature. CRCs are verified when `check_crc`.
class ChunkReader {
 public:
  ChunkReader(std::span<const std::uint8_t> bytes, bool check_crc)
      : bytes_(bytes), pos_(kSignature.size()), check_crc_(check_crc) {}

  bool done() const { return pos_ >= bytes_.size(); }

  Chunk next() {
    if (bytes_.size() - pos_ < 12) throw MalformedStream("truncated PNG chunk");
    const std::uint32_t length = be32(bytes_, pos_);
    if (length > bytes_.size() - pos_ - 12) throw MalformedStream("truncated PNG chunk");
    Chunk c;
    c.type.assign(reinterpret_cast<const char*>(bytes_.data() + pos_ + 4), 4);
    c.data = bytes_.subspan(pos_ + 8, length);
    if (check_crc_) {
      const std::uint32_t stored = be32(bytes_, pos_ + 8 + length);
      const uLong crc = crc32(0L, bytes_.data() + pos_ + 4, length + 4);
      if (stored != static_cast<std::uint32_t>(crc)) throw MalformedStream("PNG chunk CRC mismatch: " + c.type);
    }
    pos_ += 12 + length;
    return c;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
  bool check_crc_;
};

struct Header {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  int interlace = 0;
};

inline Header read_header(std::span<const std::uint8_t> bytes) {
  if (!has_signature(bytes)) throw MalformedStream("bad PNG signature");
  ChunkReader chunks(bytes, false);
  if (chunks.done()) throw MalformedStream("PNG without header chunk");
  const Chunk ihdr = chunks.next();
  if (ihdr.type != "IHDR") throw MalformedStream("first PNG chunk is not IHDR");
  if (ihdr.data.size() != 13) throw MalformedStream("IHDR has wrong length");
  Header h;
  const std::uint32_t w = be32(ihdr.data, 0);
  const std::uint32_t ht = be32(ihdr.data, 4);
  if (w == 0 || ht == 0 || w > 0x7FFFFFFF || ht > 0x7FFFFFFF) throw MalformedStream("bad PNG dimensions");
  h.width = static_cast<int>(w);
  h.height = static_cast<int>(ht);
  h.bit_depth = ihdr.data[8];
  h.color_type = ihdr.data[9];
  h.interlace = ihdr.data[12];
  return h;
}

inline int channels_for(int color_type) {
  switch (color_type) {
    case 0: return 1;
    case 2: return 3;
    case 3: return 1;
    case 4: return 2;
    case 6: return 4;
  }
  throw MalformedStream("bad PNG color type");
}

inline bool valid_depth(int color_type, int depth) {
  switch (color_type) {
    case 0: return depth == 1 || depth == 2 || depth == 4 || depth == 8 || depth == 16;
    case 3: return depth == 1 || depth == 2 || depth == 4 || depth == 8;
    case 2: case 4: case 6: return depth == 8 || depth == 16;
  }
  return false;
}

inline int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

/// Reverses per-row filters in place; `raw` holds height rows of (1 + stride) bytes.
inline std::vector<std::uint8_t> unfilter(std::span<std::uint8_t> raw, int height, std::size_t stride, int bpp) {
  std::vector<std::uint8_t> out(stride * height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* in = raw.data() + y * (stride + 1) + 1;
    std::uint8_t* cur = out.data() + y * stride;
    const std::uint8_t* prev = y > 0 ? cur - stride : nullptr;
    for (std::size_t i = 0; i < stride; ++i) {
      const int a = i >= std::size_t(bpp) ? cur[i - bpp] : 0;
      const int b = prev ? prev[i] : 0;
      const int c = (prev && i >= std::size_t(bpp)) ? prev[i - bpp] : 0;
      int v = in[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, c); break;
        default: throw MalformedStream("bad PNG filter type");
      }
      cur[i] = static_cast<std::uint8_t>(v);
    }
  }
  return out;
}

/// Composites a sample with coverage `alpha` onto white, rounding half-up.
inline std::uint8_t over_white(int value, int alpha) {
  const int num = value * alpha + 255 * (255 - alpha);
  return static_cast<std::uint8_t>((2 * num + 255) / 510);
}

}  // namespace png

/// Dimensions from the IHDR chunk.
inline ContainerInfo parse_png_meta(std::span<const std::uint8_t> bytes) {
  const png::Header h = png::read_header(bytes);
  ContainerInfo info;
  info.format = ImageFormat::Png;
  info.width = h.width;
  info.height = h.height;
  return info;
}

/// Lossless decode of a non-interlaced 8-bit-or-less PNG to RGB. Alpha is
/// flattened onto white.
inline Raster decode_png(std::span<const std::uint8_t> bytes) {
  const png::Header h = png::read_header(bytes);
  if (!png::valid_depth(h.color_type, h.bit_depth)) throw MalformedStream("invalid PNG bit depth/color type");
  if (h.bit_depth == 16) throw UnsupportedStream("16-bit PNG");
  if (h.interlace != 0) throw UnsupportedStream("interlaced PNG");

  std::vector<std::uint8_t> idat;
  std::vector<std::array<std::uint8_t, 3>> palette;
  std::vector<std::uint8_t> palette_alpha;
  bool seen_end = false;
  png::ChunkReader chunks(bytes, true);
  chunks.next();  // IHDR
  while (!chunks.done()) {
    const png::Chunk c = chunks.next();
    if (c.type == "IDAT") {
      idat.insert(idat.end(), c.data.begin(), c.data.end());
    } else if (c.type == "PLTE") {
      if (c.data.size() % 3 != 0 || c.data.empty()) throw MalformedStream("bad PLTE length");
      for (std::size_t i = 0; i + 2 < c.data.size(); i += 3) palette.push_back({c.data[i], c.data[i + 1], c.data[i + 2]});
    } else if (c.type == "tRNS" && h.color_type == 3) {
      palette_alpha.assign(c.data.begin(), c.data.end());
    } else if (c.type == "IEND") {
      seen_end = true;
      break;
    }
  }
  if (!seen_end) throw MalformedStream("PNG without IEND");
  if (idat.empty()) throw MalformedStream("PNG without image data");
  if (h.color_type == 3 && palette.empty()) throw MalformedStream("palette PNG without PLTE");

  const int in_channels = png::channels_for(h.color_type);
  const std::size_t stride = (static_cast<std::size_t>(h.width) * in_channels * h.bit_depth + 7) / 8;
  const int bpp = std::max(1, in_channels * h.bit_depth / 8);
  std::vector<std::uint8_t> raw((stride + 1) * h.height);

  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw MalformedStream("zlib init failed");
  zs.next_in = idat.data();
  zs.avail_in = static_cast<uInt>(idat.size());
  zs.next_out = raw.data();
  zs.avail_out = static_cast<uInt>(raw.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = raw.size() - zs.avail_out;
  inflateEnd(&zs);
  if ((rc != Z_STREAM_END && rc != Z_BUF_ERROR) || produced != raw.size())
    throw MalformedStream("PNG image data does not inflate to the expected size");

  const std::vector<std::uint8_t> pix = png::unfilter(raw, h.height, stride, bpp);

  Raster out(h.width, h.height, 3);
  for (int y = 0; y < h.height; ++y) {
    const std::uint8_t* row = pix.data() + y * stride;
    for (int x = 0; x < h.width; ++x) {
      std::uint8_t* dst = &out.at(x, y);
      if (h.bit_depth < 8) {
        const int per_byte = 8 / h.bit_depth;
        const int shift = 8 - h.bit_depth * (x % per_byte + 1);
        const int v = (row[x / per_byte] >> shift) & ((1 << h.bit_depth) - 1);
        if (h.color_type == 3) {
          if (std::size_t(v) >= palette.size()) throw MalformedStream("palette index out of range");
          const int a = std::size_t(v) < palette_alpha.size() ? palette_alpha[v] : 255;
          for (int c = 0; c < 3; ++c) dst[c] = png::over_white(palette[v][c], a);
        } else {
          const auto g = static_cast<std::uint8_t>(v * 255 / ((1 << h.bit_depth) - 1));
          dst[0] = dst[1] = dst[2] = g;
        }
        continue;
      }
      const std::uint8_t* src = row + static_cast<std::size_t>(x) * in_channels;
      switch (h.color_type) {
        case 0: dst[0] = dst[1] = dst[2] = src[0]; break;
        case 2: dst[0] = src[0]; dst[1] = src[1]; dst[2] = src[2]; break;
        case 3: {
          if (std::size_t(src[0]) >= palette.size()) throw MalformedStream("palette index out of range");
          const int a = std::size_t(src[0]) < palette_alpha.size() ? palette_alpha[src[0]] : 255;
          for (int c = 0; c < 3; ++c) dst[c] = png::over_white(palette[src[0]][c], a);
          break;
        }
        case 4: dst[0] = dst[1] = dst[2] = png::over_white(src[0], src[1]); break;
        case 6:
          for (int c = 0; c < 3; ++c) dst[c] = png::over_white(src[c], src[3]);
          break;
      }
    }
  }
  return out;
}

/// 8-bit gray or RGB PNG, unfiltered rows, zlib level `level`.
inline std::vector<std::uint8_t> encode_png(const Raster& img, int level = 6) {
  if (!img.valid()) throw DomainError("invalid raster");
  const std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * img.height);
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const auto r = img.row(y);
    raw.insert(raw.end(), r.begin(), r.end());
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), level) != Z_OK)
    throw IoError("zlib compression failed");
  packed.resize(packed_size);

  std::vector<std::uint8_t> out(png::kSignature.begin(), png::kSignature.end());
  auto chunk = [&out](const char* type, std::span<const std::uint8_t> data) {
    png::put32(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    png::put32(out, static_cast<std::uint32_t>(crc32(0L, out.data() + type_at, static_cast<uInt>(data.size() + 4))));
  };
  std::vector<std::uint8_t> ihdr;
  png::put32(ihdr, static_cast<std::uint32_t>(img.width));
  png::put32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);
  ihdr.push_back(img.channels == 1 ? 0 : 2);
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  chunk("IHDR", ihdr);
  chunk("IDAT", packed);
  chunk("IEND", {});
  return out;
}

}  // namespace imgbias
