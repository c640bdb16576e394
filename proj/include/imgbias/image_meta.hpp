#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "imgbias/error.hpp"
#include "imgbias/quant_tables.hpp"

namespace imgbias {

enum class ImageFormat { Jpeg, Png, Other };

inline std::string_view to_string(ImageFormat f) {
  switch (f) {
    case ImageFormat::Jpeg: return "JPEG";
    case ImageFormat::Png: return "PNG";
    case ImageFormat::Other: break;
  }
  return "OTHER";
}

inline ImageFormat parse_format(std::string_view s) {
  if (s == "JPEG") return ImageFormat::Jpeg;
  if (s == "PNG") return ImageFormat::Png;
  if (s == "OTHER") return ImageFormat::Other;
  throw ParseError("unknown image format '" + std::string(s) + "'");
}

/// NATURAL, or GENERATED tagged with the producing generator's name.
struct Origin {
  enum class Kind { Natural, Generated };
  Kind kind = Kind::Natural;
  std::string generator;

  static Origin natural() { return {}; }
  static Origin generated(std::string name) { return {Kind::Generated, std::move(name)}; }

  bool is_natural() const { return kind == Kind::Natural; }
  bool is_generated() const { return kind == Kind::Generated; }

  /// "natural" or "generated:<name>"
  std::string str() const { return is_natural() ? "natural" : "generated:" + generator; }

  static Origin parse(std::string_view s) {
    if (s == "natural") return natural();
    constexpr std::string_view prefix = "generated";
    if (s.substr(0, prefix.size()) == prefix) {
      auto rest = s.substr(prefix.size());
      if (rest.empty()) return generated("");
      if (rest.front() == ':') return generated(std::string(rest.substr(1)));
    }
    throw ParseError("unknown origin '" + std::string(s) + "'");
  }

  friend bool operator==(const Origin&, const Origin&) = default;
  friend auto operator<=>(const Origin&, const Origin&) = default;
};

/// What a container parser can tell without decoding pixels.
struct ContainerInfo {
  ImageFormat format = ImageFormat::Other;
  int width = 0;
  int height = 0;
  std::optional<QuantTables> tables;
  bool progressive = false;
};

/// Per-file record produced by a corpus scan.
struct ImageMeta {
  std::string path;
  ImageFormat format = ImageFormat::Other;
  int width = 0;
  int height = 0;
  std::optional<int> qf;
  bool qf_exact = false;
  std::optional<long> qf_distance;
  std::string class_label;
  Origin origin;
  std::string subset;

  friend bool operator==(const ImageMeta&, const ImageMeta&) = default;
};

/// Throws ParseError when the record breaks an ImageMeta invariant.
inline void validate(const ImageMeta& m) {
  if (m.width < 1 || m.height < 1) throw ParseError(m.path + ": dimensions must be >= 1");
  if (m.qf) {
    if (m.format != ImageFormat::Jpeg) throw ParseError(m.path + ": qf on non-JPEG record");
    if (*m.qf < 1 || *m.qf > 100) throw ParseError(m.path + ": qf outside [1,100]");
  }
  if (m.qf_exact && !m.qf) throw ParseError(m.path + ": qf_exact without qf");
  if (m.qf_distance.has_value() != m.qf.has_value())
    throw ParseError(m.path + ": qf_distance must accompany qf");
}

inline nlohmann::ordered_json to_json(const ImageMeta& m) {
  nlohmann::ordered_json j;
  j["path"] = m.path;
  j["format"] = to_string(m.format);
  j["width"] = m.width;
  j["height"] = m.height;
  if (m.qf) {
    j["qf"] = *m.qf;
    j["qf_exact"] = m.qf_exact;
    j["qf_distance"] = *m.qf_distance;
  } else {
    j["qf_exact"] = false;
  }
  j["class_label"] = m.class_label;
  j["origin"] = m.origin.str();
  j["subset"] = m.subset;
  return j;
}

inline ImageMeta image_meta_from_json(const nlohmann::json& j) {
  try {
    ImageMeta m;
    m.path = j.at("path").get<std::string>();
    m.format = parse_format(j.at("format").get<std::string>());
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    if (j.contains("qf")) m.qf = j.at("qf").get<int>();
    m.qf_exact = j.value("qf_exact", false);
    if (j.contains("qf_distance")) m.qf_distance = j.at("qf_distance").get<long>();
    m.class_label = j.at("class_label").get<std::string>();
    m.origin = Origin::parse(j.at("origin").get<std::string>());
    m.subset = j.at("subset").get<std::string>();
    validate(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad ImageMeta record: ") + e.what());
  }
}

}  // namespace imgbias
