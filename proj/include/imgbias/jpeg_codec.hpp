#pragma once

// Baseline sequential JPEG: 8-bit, Huffman-coded, YCbCr 4:2:0 on encode;
// any 1..4 sampling factors with 1 or 3 components on decode.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "imgbias/error.hpp"
#include "imgbias/jpeg_parse.hpp"
#include "imgbias/quant_tables.hpp"
#include "imgbias/raster.hpp"

namespace imgbias {

namespace jpeg {

// Example Huffman tables of ITU-T T.81 Annex K.3.
inline const HuffmanSpec& std_dc_luma() {
  static const HuffmanSpec s{{0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0},
                             {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
  return s;
}
inline const HuffmanSpec& std_dc_chroma() {
  static const HuffmanSpec s{{0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0},
                             {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}};
  return s;
}
inline const HuffmanSpec& std_ac_luma() {
  static const HuffmanSpec s{
      {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 125},
      {0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07, 0x22,
       0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33,
       0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28, 0x29, 0x2A, 0x34,
       0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55,
       0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75, 0x76,
       0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8A, 0x92, 0x93, 0x94, 0x95, 0x96,
       0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5,
       0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4,
       0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1,
       0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA}};
  return s;
}
inline const HuffmanSpec& std_ac_chroma() {
  static const HuffmanSpec s{
      {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 119},
      {0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71, 0x13,
       0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xA1, 0xB1, 0xC1, 0x09, 0x23, 0x33, 0x52, 0xF0, 0x15, 0x62,
       0x72, 0xD1, 0x0A, 0x16, 0x24, 0x34, 0xE1, 0x25, 0xF1, 0x17, 0x18, 0x19, 0x1A, 0x26, 0x27, 0x28, 0x29,
       0x2A, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54,
       0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
       0x76, 0x77, 0x78, 0x79, 0x7A, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8A, 0x92, 0x93, 0x94,
       0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3,
       0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2,
       0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE2, 0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA,
       0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA}};
  return s;
}

/// basis[x][k] = C(k)/2 * cos((2x+1) k pi / 16), C(0) = 1/sqrt(2)
inline const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (int x = 0; x < 8; ++x)
      for (int k = 0; k < 8; ++k) {
        const double ck = k == 0 ? 1.0 / std::numbers::sqrt2 : 1.0;
        b[x][k] = 0.5 * ck * std::cos((2 * x + 1) * k * std::numbers::pi / 16.0);
      }
    return b;
  }();
  return basis;
}

/// Forward 2-D DCT of a level-shifted 8x8 block, natural order in and out.
inline std::array<double, 64> fdct(const std::array<double, 64>& in) {
  const auto& b = dct_basis();
  std::array<double, 64> tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0;
      for (int x = 0; x < 8; ++x) s += in[y * 8 + x] * b[x][u];
      tmp[y * 8 + u] = s;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0;
      for (int y = 0; y < 8; ++y) s += tmp[y * 8 + u] * b[y][v];
      out[v * 8 + u] = s;
    }
  return out;
}

inline std::array<double, 64> idct(const std::array<double, 64>& in) {
  const auto& b = dct_basis();
  std::array<double, 64> tmp{}, out{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0;
      for (int u = 0; u < 8; ++u) s += in[v * 8 + u] * b[x][u];
      tmp[v * 8 + x] = s;
    }
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      double s = 0;
      for (int v = 0; v < 8; ++v) s += tmp[v * 8 + x] * b[y][v];
      out[y * 8 + x] = s;
    }
  return out;
}

/// Round half-up and clamp to a byte.
inline std::uint8_t to_sample(double v) {
  const double r = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

struct HuffCode {
  std::uint16_t code = 0;
  std::uint8_t length = 0;
};

inline std::array<HuffCode, 256> build_codes(const HuffmanSpec& spec) {
  std::array<HuffCode, 256> table{};
  std::uint32_t code = 0;
  std::size_t k = 0;
  for (int len = 1; len <= 16; ++len) {
    for (int i = 0; i < spec.counts[len - 1]; ++i) table[spec.symbols[k++]] = {std::uint16_t(code++), std::uint8_t(len)};
    code <<= 1;
  }
  return table;
}

/// Canonical decoding tables (T.81 F.2.2.3).
struct HuffDecoder {
  std::array<std::int32_t, 17> maxcode{};
  std::array<std::int32_t, 17> valptr{};
  std::array<std::int32_t, 17> mincode{};
  std::vector<std::uint8_t> symbols;

  explicit HuffDecoder(const HuffmanSpec& spec) : symbols(spec.symbols) {
    std::int32_t code = 0;
    std::int32_t k = 0;
    for (int len = 1; len <= 16; ++len) {
      const int n = spec.counts[len - 1];
      if (n == 0) {
        maxcode[len] = -1;
      } else {
        valptr[len] = k;
        mincode[len] = code;
        code += n;
        k += n;
        maxcode[len] = code - 1;
      }
      code <<= 1;
    }
    if (static_cast<std::size_t>(k) > symbols.size()) throw MalformedStream("Huffman table symbol count mismatch");
  }
};

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out) : out_(out) {}

  void put(std::uint32_t bits, int count) {
    acc_ = (acc_ << count) | (bits & ((1u << count) - 1));
    n_ += count;
    while (n_ >= 8) {
      n_ -= 8;
      const auto byte = static_cast<std::uint8_t>(acc_ >> n_);
      out_.push_back(byte);
      if (byte == 0xFF) out_.push_back(0x00);
    }
    acc_ &= (1u << n_) - 1;
  }
  void put(HuffCode c) { put(c.code, c.length); }

  /// Pads the final partial byte with one-bits.
  void flush() {
    if (n_ > 0) put(0x7F, 8 - n_);
  }

 private:
  std::vector<std::uint8_t>& out_;
  std::uint32_t acc_ = 0;
  int n_ = 0;
};

class BitReader {
 public:
  BitReader(std::span<const std::uint8_t> data, std::size_t pos) : data_(data), pos_(pos) {}

  int bit() {
    if (n_ == 0) fill();
    --n_;
    return (acc_ >> n_) & 1;
  }
  int bits(int count) {
    int v = 0;
    for (int i = 0; i < count; ++i) v = (v << 1) | bit();
    return v;
  }
  int decode(const HuffDecoder& d) {
    std::int32_t code = bit();
    for (int len = 1; len <= 16; ++len) {
      if (d.maxcode[len] >= 0 && code <= d.maxcode[len])
        return d.symbols[d.valptr[len] + code - d.mincode[len]];
      code = (code << 1) | bit();
    }
    throw MalformedStream("invalid Huffman code");
  }

  /// Drops buffered bits and consumes the expected RSTn marker.
  void restart(int expected) {
    n_ = 0;
    acc_ = 0;
    while (pos_ + 1 < data_.size() && data_[pos_] == 0xFF && data_[pos_ + 1] == 0xFF) ++pos_;
    if (pos_ + 1 >= data_.size() || data_[pos_] != 0xFF || data_[pos_ + 1] != kRST0 + expected)
      throw MalformedStream("missing restart marker");
    pos_ += 2;
  }

 private:
  void fill() {
    if (pos_ >= data_.size()) throw MalformedStream("truncated entropy-coded data");
    std::uint8_t b = data_[pos_];
    if (b == 0xFF) {
      if (pos_ + 1 >= data_.size()) throw MalformedStream("truncated entropy-coded data");
      if (data_[pos_ + 1] != 0x00) throw MalformedStream("marker inside entropy-coded data");
      pos_ += 2;
    } else {
      ++pos_;
    }
    acc_ = b;
    n_ = 8;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_;
  std::uint32_t acc_ = 0;
  int n_ = 0;
};

/// Sign-extends a `size`-bit magnitude category value.
inline int extend(int v, int size) { return v < (1 << (size - 1)) ? v - (1 << size) + 1 : v; }

inline int category(int v) {
  int a = v < 0 ? -v : v;
  int n = 0;
  while (a) {
    ++n;
    a >>= 1;
  }
  return n;
}

inline void write_marker(std::vector<std::uint8_t>& out, std::uint8_t marker, int length) {
  out.push_back(0xFF);
  out.push_back(marker);
  out.push_back(std::uint8_t(length >> 8));
  out.push_back(std::uint8_t(length & 0xFF));
}

inline void write_dht(std::vector<std::uint8_t>& out, int cls_slot, const HuffmanSpec& s) {
  out.push_back(std::uint8_t(cls_slot));
  out.insert(out.end(), s.counts.begin(), s.counts.end());
  out.insert(out.end(), s.symbols.begin(), s.symbols.end());
}

}  // namespace jpeg

/// Baseline YCbCr 4:2:0 JPEG with the standard tables scaled to `qf` and the
/// standard Huffman tables. Output bytes are a pure function of the input.
inline std::vector<std::uint8_t> encode_jpeg(const Raster& img, int qf) {
  using namespace jpeg;
  const QuantTables qt = scale_tables(qf);
  if (!img.valid()) throw DomainError("invalid raster");

  std::vector<std::uint8_t> out{0xFF, kSOI};
  write_marker(out, kAPP0, 16);
  for (std::uint8_t b : {'J', 'F', 'I', 'F', '\0'}) out.push_back(b);
  for (std::uint8_t b : {1, 1, 0, 0, 1, 0, 1, 0, 0}) out.push_back(b);  // v1.01, 1:1 aspect, no thumbnail

  write_marker(out, kDQT, 2 + 2 * 65);
  const QuantTable* tables[2] = {&qt.luma, &*qt.chroma};
  for (int t = 0; t < 2; ++t) {
    out.push_back(std::uint8_t(t));
    for (int k = 0; k < 64; ++k) out.push_back((*tables[t])[kZigZagToNatural[k]]);
  }

  write_marker(out, kSOF0, 8 + 3 * 3);
  out.push_back(8);
  out.push_back(std::uint8_t(img.height >> 8));
  out.push_back(std::uint8_t(img.height));
  out.push_back(std::uint8_t(img.width >> 8));
  out.push_back(std::uint8_t(img.width));
  out.push_back(3);
  for (std::uint8_t b : {1, 0x22, 0, 2, 0x11, 1, 3, 0x11, 1}) out.push_back(b);

  write_marker(out, kDHT, 2 + 4 * 17 + 12 + 12 + 162 + 162);
  write_dht(out, 0x00, std_dc_luma());
  write_dht(out, 0x10, std_ac_luma());
  write_dht(out, 0x01, std_dc_chroma());
  write_dht(out, 0x11, std_ac_chroma());

  write_marker(out, kSOS, 6 + 2 * 3);
  for (std::uint8_t b : {3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0}) out.push_back(b);

  // color planes padded to whole 16x16 MCUs by edge replication
  const int pw = (img.width + 15) / 16 * 16;
  const int ph = (img.height + 15) / 16 * 16;
  std::vector<double> y_plane(std::size_t(pw) * ph), cb_full(y_plane.size()), cr_full(y_plane.size());
  for (int y = 0; y < ph; ++y) {
    const int sy = std::min(y, img.height - 1);
    for (int x = 0; x < pw; ++x) {
      const int sx = std::min(x, img.width - 1);
      double r, g, b;
      if (img.channels == 1) {
        r = g = b = img.at(sx, sy);
      } else {
        r = img.at(sx, sy, 0);
        g = img.at(sx, sy, 1);
        b = img.at(sx, sy, 2);
      }
      const std::size_t i = std::size_t(y) * pw + x;
      y_plane[i] = 0.299 * r + 0.587 * g + 0.114 * b - 128.0;
      cb_full[i] = -0.168736 * r - 0.331264 * g + 0.5 * b;
      cr_full[i] = 0.5 * r - 0.418688 * g - 0.081312 * b;
    }
  }
  const int cw = pw / 2, ch = ph / 2;
  std::vector<double> cb(std::size_t(cw) * ch), cr(cb.size());
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) {
      const std::size_t a = std::size_t(2 * y) * pw + 2 * x, b = a + pw;
      cb[std::size_t(y) * cw + x] = (cb_full[a] + cb_full[a + 1] + cb_full[b] + cb_full[b + 1]) / 4.0;
      cr[std::size_t(y) * cw + x] = (cr_full[a] + cr_full[a + 1] + cr_full[b] + cr_full[b + 1]) / 4.0;
    }

  static const auto dc_luma = build_codes(std_dc_luma());
  static const auto ac_luma = build_codes(std_ac_luma());
  static const auto dc_chroma = build_codes(std_dc_chroma());
  static const auto ac_chroma = build_codes(std_ac_chroma());

  BitWriter bw(out);
  auto encode_block = [&bw](const std::vector<double>& plane, int stride, int bx, int by, const QuantTable& q,
                            int& pred, const std::array<HuffCode, 256>& dc, const std::array<HuffCode, 256>& ac) {
    std::array<double, 64> block{};
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) block[y * 8 + x] = plane[std::size_t(by + y) * stride + bx + x];
    const auto coef = fdct(block);
    std::array<int, 64> zz{};
    for (int k = 0; k < 64; ++k) {
      const int n = kZigZagToNatural[k];
      zz[k] = static_cast<int>(std::round(coef[n] / q[n]));
    }
    const int diff = zz[0] - pred;
    pred = zz[0];
    const int dcat = category(diff);
    bw.put(dc[dcat]);
    if (dcat) bw.put(diff < 0 ? diff + (1 << dcat) - 1 : diff, dcat);
    int run = 0;
    for (int k = 1; k < 64; ++k) {
      if (zz[k] == 0) {
        ++run;
        continue;
      }
      while (run > 15) {
        bw.put(ac[0xF0]);
        run -= 16;
      }
      const int cat = category(zz[k]);
      bw.put(ac[(run << 4) | cat]);
      bw.put(zz[k] < 0 ? zz[k] + (1 << cat) - 1 : zz[k], cat);
      run = 0;
    }
    if (run > 0) bw.put(ac[0x00]);
  };

  int pred_y = 0, pred_cb = 0, pred_cr = 0;
  for (int my = 0; my < ph / 16; ++my)
    for (int mx = 0; mx < pw / 16; ++mx) {
      for (int v = 0; v < 2; ++v)
        for (int h = 0; h < 2; ++h)
          encode_block(y_plane, pw, mx * 16 + h * 8, my * 16 + v * 8, qt.luma, pred_y, dc_luma, ac_luma);
      encode_block(cb, cw, mx * 8, my * 8, *qt.chroma, pred_cb, dc_chroma, ac_chroma);
      encode_block(cr, cw, mx * 8, my * 8, *qt.chroma, pred_cr, dc_chroma, ac_chroma);
    }
  bw.flush();
  out.push_back(0xFF);
  out.push_back(kEOI);
  return out;
}

/// Decodes a baseline (or extended-Huffman 8-bit) JPEG with one or three
/// components to RGB. Chroma is upsampled by sample replication.
inline Raster decode_jpeg(std::span<const std::uint8_t> bytes) {
  using namespace jpeg;
  const Headers h = read_headers(bytes);
  const Frame& f = *h.frame;
  if (f.progressive) throw UnsupportedStream("progressive JPEG decoding is not supported");
  const int nc = static_cast<int>(f.components.size());
  if (nc != 1 && nc != 3) throw UnsupportedStream("only 1- or 3-component JPEGs are supported");
  if (static_cast<int>(h.scan.components.size()) != nc)
    throw UnsupportedStream("multi-scan sequential JPEG is not supported");

  int hmax = 1, vmax = 1;
  for (const auto& c : f.components) {
    hmax = std::max(hmax, c.h);
    vmax = std::max(vmax, c.v);
    if (!h.quant[c.tq]) throw MalformedStream("component references undefined quantization table");
  }
  if (nc == 1) hmax = vmax = 1;  // single-component scans are never interleaved

  struct Plane {
    int bw = 0, bh = 0;  // blocks per line / column actually coded
    int stride = 0;
    std::vector<std::uint8_t> px;
    std::optional<HuffDecoder> dc, ac;
    int pred = 0;
  };
  std::vector<Plane> planes(nc);
  const int mcux = (f.width + 8 * hmax - 1) / (8 * hmax);
  const int mcuy = (f.height + 8 * vmax - 1) / (8 * vmax);
  for (const auto& sc : h.scan.components) {
    const Component& c = f.components[sc.frame_index];
    Plane& p = planes[sc.frame_index];
    if (!h.dc[sc.dc_table] || !h.ac[sc.ac_table]) throw MalformedStream("scan references undefined Huffman table");
    p.dc.emplace(*h.dc[sc.dc_table]);
    p.ac.emplace(*h.ac[sc.ac_table]);
    if (nc == 1) {
      p.bw = (f.width + 7) / 8;
      p.bh = (f.height + 7) / 8;
    } else {
      p.bw = mcux * c.h;
      p.bh = mcuy * c.v;
    }
    p.stride = p.bw * 8;
    p.px.assign(std::size_t(p.stride) * p.bh * 8, 0);
  }

  BitReader br(bytes, h.entropy_offset);
  auto decode_block = [&br](Plane& p, const QuantTable& q, int bx, int by) {
    std::array<double, 64> coef{};
    const int t = br.decode(*p.dc);
    if (t > 11) throw MalformedStream("bad DC category");
    const int diff = t ? extend(br.bits(t), t) : 0;
    p.pred += diff;
    coef[0] = double(p.pred) * q[0];
    for (int k = 1; k < 64;) {
      const int rs = br.decode(*p.ac);
      const int run = rs >> 4, size = rs & 15;
      if (size == 0) {
        if (run == 15) {
          k += 16;
          continue;
        }
        break;  // EOB
      }
      k += run;
      if (k > 63) throw MalformedStream("AC coefficient index out of range");
      const int n = kZigZagToNatural[k];
      coef[n] = double(extend(br.bits(size), size)) * q[n];
      ++k;
    }
    const auto spatial = idct(coef);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x)
        p.px[std::size_t(by * 8 + y) * p.stride + bx * 8 + x] = to_sample(spatial[y * 8 + x] + 128.0);
  };

  const int total_mcus = nc == 1 ? planes[0].bw * planes[0].bh : mcux * mcuy;
  int restarts = 0;
  for (int m = 0; m < total_mcus; ++m) {
    if (h.restart_interval > 0 && m > 0 && m % h.restart_interval == 0) {
      br.restart(restarts++ & 7);
      for (auto& p : planes) p.pred = 0;
    }
    if (nc == 1) {
      decode_block(planes[0], *h.quant[f.components[0].tq], m % planes[0].bw, m / planes[0].bw);
      continue;
    }
    const int mx = m % mcux, my = m / mcux;
    for (const auto& sc : h.scan.components) {
      const Component& c = f.components[sc.frame_index];
      for (int v = 0; v < c.v; ++v)
        for (int hh = 0; hh < c.h; ++hh)
          decode_block(planes[sc.frame_index], *h.quant[c.tq], mx * c.h + hh, my * c.v + v);
    }
  }

  Raster out(f.width, f.height, 3);
  for (int y = 0; y < f.height; ++y)
    for (int x = 0; x < f.width; ++x) {
      auto sample = [&](int ci) {
        const Plane& p = planes[ci];
        if (nc == 1) return double(p.px[std::size_t(y) * p.stride + x]);
        const Component& c = f.components[ci];
        return double(p.px[std::size_t(y * c.v / vmax) * p.stride + x * c.h / hmax]);
      };
      if (nc == 1) {
        const auto g = static_cast<std::uint8_t>(sample(0));
        out.at(x, y, 0) = out.at(x, y, 1) = out.at(x, y, 2) = g;
        continue;
      }
      const double Y = sample(0), Cb = sample(1) - 128.0, Cr = sample(2) - 128.0;
      out.at(x, y, 0) = to_sample(Y + 1.402 * Cr);
      out.at(x, y, 1) = to_sample(Y - 0.344136 * Cb - 0.714136 * Cr);
      out.at(x, y, 2) = to_sample(Y + 1.772 * Cb);
    }
  return out;
}

}  // namespace imgbias
