#pragma once

// Seeded GenImage-style corpus with planted compression and size bias:
// naturals are JPEGs with qf in [75,96] and mixed sizes in [300,700]; generated
// images are 512x512 PNGs. Half the naturals are QF96 and, independently, half
// are 512x512, so an exactly matched subset exists for debiasing.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "imgbias/image_meta.hpp"
#include "imgbias/raster.hpp"
#include "imgbias/scan.hpp"
#include "imgbias/transcode.hpp"

namespace synth {

struct Spec {
  int n_natural = 2000;
  int n_generated = 2000;
  int n_classes = 4;
  std::string generator = "SD14";
};

struct Item {
  std::string rel_path;  // <natural|generated>/<class>/<name>
  int width, height;
  int qf;  // 0 for generated PNG
  std::string class_label;
  bool generated;
};

inline std::vector<Item> plan(const Spec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> side(300, 700), low_qf(75, 95), coin(0, 1), cls(0, spec.n_classes - 1);
  std::vector<Item> items;
  for (int i = 0; i < spec.n_natural; ++i) {
    Item it;
    it.generated = false;
    it.qf = coin(rng) ? 96 : low_qf(rng);
    if (coin(rng)) {
      it.width = it.height = 512;
    } else {
      it.width = side(rng);
      it.height = side(rng);
    }
    it.class_label = "n" + std::to_string(1000 + cls(rng));
    it.rel_path = "natural/" + it.class_label + "/nat_" + std::to_string(i) + ".JPEG";
    items.push_back(it);
  }
  for (int i = 0; i < spec.n_generated; ++i) {
    Item it;
    it.generated = true;
    it.qf = 0;
    it.width = it.height = 512;
    it.class_label = "n" + std::to_string(1000 + cls(rng));
    it.rel_path = "generated/" + it.class_label + "/gen_" + std::to_string(i) + ".png";
    items.push_back(it);
  }
  return items;
}

/// Metadata the scanner would produce for the planned files.
inline std::vector<imgbias::ImageMeta> metas(const std::vector<Item>& items, const std::string& generator = "SD14") {
  std::vector<imgbias::ImageMeta> out;
  for (const auto& it : items) {
    imgbias::ImageMeta m;
    m.path = it.rel_path;
    m.width = it.width;
    m.height = it.height;
    m.class_label = it.class_label;
    m.subset = "synthetic";
    if (it.generated) {
      m.format = imgbias::ImageFormat::Png;
      m.origin = imgbias::Origin::generated(generator);
    } else {
      m.format = imgbias::ImageFormat::Jpeg;
      m.qf = it.qf;
      m.qf_exact = true;
      m.qf_distance = 0;
      m.origin = imgbias::Origin::natural();
    }
    out.push_back(std::move(m));
  }
  return out;
}

/// Smooth gradient raster; cheap to encode, content irrelevant to the metadata.
inline imgbias::Raster smooth_raster(int w, int h, int tint) {
  imgbias::Raster r(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      r.at(x, y, 0) = static_cast<std::uint8_t>((x * 255 / w + tint) & 0xFF);
      r.at(x, y, 1) = static_cast<std::uint8_t>(y * 255 / h);
      r.at(x, y, 2) = static_cast<std::uint8_t>(tint);
    }
  return r;
}

/// Writes every planned file under root.
inline void write(const std::vector<Item>& items, const std::filesystem::path& root) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    const auto p = root / it.rel_path;
    std::filesystem::create_directories(p.parent_path());
    const imgbias::Raster img = smooth_raster(it.width, it.height, static_cast<int>(i % 200));
    imgbias::write_file(p, it.generated ? imgbias::encode_png(img, 1) : imgbias::encode_qf(img, it.qf));
  }
}

}  // namespace synth
