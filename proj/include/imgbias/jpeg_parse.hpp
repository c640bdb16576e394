#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imgbias/error.hpp"
#include "imgbias/image_meta.hpp"
#include "imgbias/quant_tables.hpp"

namespace imgbias {

namespace jpeg {

// marker codes (second byte after 0xFF)
inline constexpr std::uint8_t kSOI = 0xD8;
inline constexpr std::uint8_t kEOI = 0xD9;
inline constexpr std::uint8_t kSOS = 0xDA;
inline constexpr std::uint8_t kDQT = 0xDB;
inline constexpr std::uint8_t kDRI = 0xDD;
inline constexpr std::uint8_t kDHT = 0xC4;
inline constexpr std::uint8_t kDAC = 0xCC;
inline constexpr std::uint8_t kSOF0 = 0xC0;
inline constexpr std::uint8_t kSOF1 = 0xC1;
inline constexpr std::uint8_t kSOF2 = 0xC2;
inline constexpr std::uint8_t kAPP0 = 0xE0;
inline constexpr std::uint8_t kRST0 = 0xD0;

struct Component {
  int id = 0;
  int h = 1;  // horizontal sampling factor
  int v = 1;  // vertical sampling factor
  int tq = 0; // quantization table slot
};

struct Frame {
  bool progressive = false;
  int precision = 8;
  int width = 0;
  int height = 0;
  std::vector<Component> components;
};

struct HuffmanSpec {
  std::array<std::uint8_t, 16> counts{};  // codes of each length 1..16
  std::vector<std::uint8_t> symbols;
};

struct ScanComponent {
  int frame_index = 0;  // index into Frame::components
  int dc_table = 0;
  int ac_table = 0;
};

struct Scan {
  std::vector<ScanComponent> components;
  int ss = 0, se = 63, ah = 0, al = 0;
};

/// Everything in the stream up to and including the first scan header.
struct Headers {
  std::optional<Frame> frame;
  std::array<std::optional<QuantTable>, 4> quant;  // natural order
  std::array<std::optional<HuffmanSpec>, 4> dc;
  std::array<std::optional<HuffmanSpec>, 4> ac;
  int restart_interval = 0;
  Scan scan;
  std::size_t entropy_offset = 0;  // first byte after the SOS segment
};

/// Bounds-checked big-endian cursor; running off the end is a MalformedStream.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data, std::size_t pos = 0)
      : data_(data), pos_(pos) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  int u16() {
    need(2);
    int v = (data_[pos_] << 8) | data_[pos_ + 1];
    pos_ += 2;
    return v;
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw MalformedStream("truncated JPEG stream");
  }
  std::span<const std::uint8_t> data_;
  std::size_t pos_;
};

inline bool has_soi(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == kSOI;
}

namespace detail {

inline void read_dqt(Reader& r, std::size_t end, Headers& h) {
  while (r.pos() < end) {
    const int pq_tq = r.u8();
    const int precision = pq_tq >> 4;
    const int slot = pq_tq & 0x0F;
    if (slot > 3) throw MalformedStream("quantization table id out of range");
    if (precision > 1) throw MalformedStream("bad quantization table precision");
    QuantTable table{};
    for (int k = 0; k < 64; ++k) {
      const int v = precision == 0 ? r.u8() : r.u16();
      if (v == 0) throw MalformedStream("zero quantization table entry");
      if (v > 255) throw UnsupportedStream("quantization table entry above 255");
      table[kZigZagToNatural[k]] = static_cast<std::uint8_t>(v);
    }
    h.quant[slot] = table;  // redefinition: last wins
  }
}

inline void read_dht(Reader& r, std::size_t end, Headers& h) {
  while (r.pos() < end) {
    const int tc_th = r.u8();
    const int cls = tc_th >> 4;
    const int slot = tc_th & 0x0F;
    if (cls > 1 || slot > 3) throw MalformedStream("bad Huffman table id");
    HuffmanSpec spec;
    int total = 0;
    for (auto& c : spec.counts) {
      c = r.u8();
      total += c;
    }
    if (total > 256) throw MalformedStream("too many Huffman symbols");
    spec.symbols.resize(total);
    for (auto& s : spec.symbols) s = r.u8();
    (cls == 0 ? h.dc : h.ac)[slot] = std::move(spec);
  }
}

inline Frame read_sof(Reader& r, std::uint8_t marker) {
  Frame f;
  f.progressive = marker == kSOF2;
  f.precision = r.u8();
  f.height = r.u16();
  f.width = r.u16();
  const int n = r.u8();
  if (f.precision != 8) throw UnsupportedStream("only 8-bit sample precision is supported");
  if (f.width == 0) throw MalformedStream("frame width is zero");
  if (f.height == 0) throw UnsupportedStream("frame height deferred to DNL marker");
  if (n < 1 || n > 4) throw MalformedStream("bad component count");
  for (int i = 0; i < n; ++i) {
    Component c;
    c.id = r.u8();
    const int hv = r.u8();
    c.h = hv >> 4;
    c.v = hv & 0x0F;
    c.tq = r.u8();
    if (c.h < 1 || c.h > 4 || c.v < 1 || c.v > 4) throw MalformedStream("bad sampling factor");
    if (c.tq > 3) throw MalformedStream("bad quantization table selector");
    f.components.push_back(c);
  }
  return f;
}

inline Scan read_sos(Reader& r, const Frame& frame) {
  Scan s;
  const int n = r.u8();
  if (n < 1 || n > 4) throw MalformedStream("bad scan component count");
  for (int i = 0; i < n; ++i) {
    const int id = r.u8();
    const int tables = r.u8();
    ScanComponent sc;
    sc.frame_index = -1;
    for (std::size_t k = 0; k < frame.components.size(); ++k)
      if (frame.components[k].id == id) sc.frame_index = static_cast<int>(k);
    if (sc.frame_index < 0) throw MalformedStream("scan references unknown component");
    sc.dc_table = tables >> 4;
    sc.ac_table = tables & 0x0F;
    if (sc.dc_table > 3 || sc.ac_table > 3) throw MalformedStream("bad Huffman selector");
    s.components.push_back(sc);
  }
  s.ss = r.u8();
  s.se = r.u8();
  const int a = r.u8();
  s.ah = a >> 4;
  s.al = a & 0x0F;
  return s;
}

}  // namespace detail

/// Walks marker segments from SOI to the first SOS. Later definitions of the
/// same table slot replace earlier ones.
inline Headers read_headers(std::span<const std::uint8_t> bytes) {
  if (!has_soi(bytes)) throw MalformedStream("missing JPEG start-of-image marker");
  Reader r(bytes, 2);
  Headers h;
  for (;;) {
    std::uint8_t marker = r.u8();
    if (marker != 0xFF) throw MalformedStream("expected marker");
    do marker = r.u8();
    while (marker == 0xFF);  // fill bytes

    if (marker == kEOI) throw MalformedStream("end of image before first scan");
    if (marker == kSOI || marker == 0x01 || (marker >= kRST0 && marker <= kRST0 + 7)) continue;

    const std::size_t seg_start = r.pos();
    const int length = r.u16();
    if (length < 2) throw MalformedStream("segment length below 2");
    if (r.remaining() < static_cast<std::size_t>(length - 2))
      throw MalformedStream("truncated JPEG segment");
    const std::size_t seg_end = seg_start + length;

    switch (marker) {
      case kSOF0:
      case kSOF1:
      case kSOF2:
        if (h.frame) throw MalformedStream("multiple frame headers");
        h.frame = detail::read_sof(r, marker);
        break;
      case 0xC3:
      case 0xC5: case 0xC6: case 0xC7:
        throw UnsupportedStream("lossless or hierarchical JPEG");
      case 0xC9: case 0xCA: case 0xCB:
      case 0xCD: case 0xCE: case 0xCF:
      case kDAC:
        throw UnsupportedStream("arithmetic-coded JPEG");
      case kDQT:
        detail::read_dqt(r, seg_end, h);
        break;
      case kDHT:
        detail::read_dht(r, seg_end, h);
        break;
      case kDRI:
        h.restart_interval = r.u16();
        break;
      case kSOS:
        if (!h.frame) throw MalformedStream("scan before frame header");
        h.scan = detail::read_sos(r, *h.frame);
        if (r.pos() != seg_end) throw MalformedStream("scan header length mismatch");
        h.entropy_offset = seg_end;
        return h;
      default:
        break;  // APPn, COM, and anything else we do not interpret
    }
    if (r.pos() > seg_end) throw MalformedStream("segment overruns its declared length");
    r = Reader(bytes, seg_end);
  }
}

}  // namespace jpeg

/// Dimensions and quantization tables of a JPEG stream, without entropy decoding.
/// Luma is the table of the first frame component, chroma that of the second.
/// Progressive streams are accepted here and flagged in the result.
inline ContainerInfo parse_jpeg_meta(std::span<const std::uint8_t> bytes) {
  const jpeg::Headers h = jpeg::read_headers(bytes);
  const jpeg::Frame& f = *h.frame;
  ContainerInfo info;
  info.format = ImageFormat::Jpeg;
  info.width = f.width;
  info.height = f.height;
  info.progressive = f.progressive;

  const auto& luma = h.quant[f.components[0].tq];
  if (luma) {
    QuantTables t;
    t.luma = *luma;
    // a second component sharing the luma slot means one table for everything
    if (f.components.size() >= 2 && f.components[1].tq != f.components[0].tq) {
      const auto& chroma = h.quant[f.components[1].tq];
      if (chroma) t.chroma = *chroma;
    }
    info.tables = t;
  }
  return info;
}

}  // namespace imgbias
