#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "imgbias/error.hpp"
#include "imgbias/image_meta.hpp"
#include "imgbias/parallel.hpp"
#include "imgbias/rng.hpp"
#include "imgbias/scan.hpp"
#include "imgbias/transcode.hpp"

namespace imgbias {

struct ConstraintConfig {
  int target_qf = 96;
  int size_low = 450;
  int size_high = 550;
  std::optional<int> generator_native_side;
  std::uint64_t seed = 0;
  bool per_class_balance = true;
  std::vector<std::string> generators;  // empty: every generator

  bool admits_generator(const std::string& name) const {
    return generators.empty() || std::find(generators.begin(), generators.end(), name) != generators.end();
  }
  friend bool operator==(const ConstraintConfig&, const ConstraintConfig&) = default;
};

struct TranscodeAction {
  enum class Kind { Copy, EncodeQf };
  Kind kind = Kind::Copy;
  int qf = 0;  // EncodeQf only

  static TranscodeAction copy() { return {}; }
  static TranscodeAction encode(int q) { return {Kind::EncodeQf, q}; }
  friend bool operator==(const TranscodeAction&, const TranscodeAction&) = default;
};

struct ManifestEntry {
  std::string source_path;
  std::string output_path;  // relative to the materialization root
  std::string class_label;
  Origin origin;
  TranscodeAction action;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// class -> origin string -> count
using SplitCounts = std::map<std::string, std::map<std::string, long>>;

struct SplitManifest {
  std::string split;  // "jpeg96" or "size"
  ConstraintConfig config;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;  // sorted by (class_label, origin, source_path)
  SplitCounts counts;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

namespace detail {

inline void validate(const ConstraintConfig& c) {
  if (c.target_qf < 1 || c.target_qf > 100) throw DomainError("target_qf outside [1,100]");
  if (c.size_low < 1 || c.size_low > c.size_high) throw DomainError("size window must satisfy 1 <= low <= high");
}

inline bool is_target_jpeg(const ImageMeta& m, const ConstraintConfig& c) {
  return m.format == ImageFormat::Jpeg && m.qf_exact && m.qf == c.target_qf;
}

/// Keeps the first record per path after sorting by (path, subset).
inline std::vector<const ImageMeta*> dedupe_by_path(std::vector<const ImageMeta*> v) {
  std::sort(v.begin(), v.end(), [](const ImageMeta* a, const ImageMeta* b) {
    return std::tie(a->path, a->subset) < std::tie(b->path, b->subset);
  });
  v.erase(std::unique(v.begin(), v.end(), [](const ImageMeta* a, const ImageMeta* b) { return a->path == b->path; }),
          v.end());
  return v;
}

/// File-system safe single path component.
inline std::string path_component(const std::string& s) {
  std::string out;
  for (char ch : s) {
    const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '.' ||
                    ch == '_' || ch == '-';
    out += ok ? ch : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

/// <natural|generated>/<class>/<seq6>_<stem><ext>; re-encoded entries get ".jpg".
inline std::string output_name(std::size_t seq, const ManifestEntry& e) {
  const std::filesystem::path src(e.source_path);
  const bool encoded = e.action.kind == TranscodeAction::Kind::EncodeQf;
  const std::string ext = encoded ? ".jpg" : src.extension().string();
  char num[24];
  std::snprintf(num, sizeof num, "%06zu", seq);
  return std::string(e.origin.is_natural() ? "natural/" : "generated/") + path_component(e.class_label) + "/" + num +
         "_" + path_component(src.stem().string()) + (ext.empty() ? "" : path_component(ext));
}

/// Balanced seeded selection shared by both split builders. Pools are sorted
/// by path first, so the result depends only on the candidate set and seed.
inline SplitManifest assemble(std::string split, const ConstraintConfig& cfg, std::vector<const ImageMeta*> naturals,
                              std::vector<const ImageMeta*> generated) {
  naturals = dedupe_by_path(std::move(naturals));
  generated = dedupe_by_path(std::move(generated));
  if (naturals.empty()) throw InsufficientData("no natural images satisfy the constraint");
  if (generated.empty()) throw InsufficientData("no generated images satisfy the constraint");

  std::map<std::string, std::pair<std::vector<const ImageMeta*>, std::vector<const ImageMeta*>>> pools;
  for (auto* m : naturals) pools[cfg.per_class_balance ? m->class_label : ""].first.push_back(m);
  for (auto* m : generated) pools[cfg.per_class_balance ? m->class_label : ""].second.push_back(m);

  Sampler rng(cfg.seed);
  SplitManifest out;
  out.split = std::move(split);
  out.config = cfg;
  out.seed = cfg.seed;
  for (auto& [cls, pool] : pools) {
    const std::size_t k = std::min(pool.first.size(), pool.second.size());
    if (k == 0) continue;
    for (auto* m : rng.sample(pool.first, k))
      out.entries.push_back({m->path, "", m->class_label, m->origin, TranscodeAction::copy()});
    for (auto* m : rng.sample(pool.second, k))
      out.entries.push_back({m->path, "", m->class_label, m->origin, TranscodeAction::encode(cfg.target_qf)});
  }
  if (out.entries.empty()) throw InsufficientData("no class has both natural and generated candidates");

  std::sort(out.entries.begin(), out.entries.end(), [](const ManifestEntry& a, const ManifestEntry& b) {
    return std::tie(a.class_label, a.origin, a.source_path) < std::tie(b.class_label, b.origin, b.source_path);
  });
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    ManifestEntry& e = out.entries[i];
    e.output_path = output_name(i, e);
    ++out.counts[e.class_label][e.origin.str()];
  }
  return out;
}

}  // namespace detail

/// Naturals that are exact target-qf JPEGs, matched by an equal number of
/// sampled generated images marked for re-encoding at the target qf. With
/// per-class balance each class keeps min(natural, generated) per side.
inline SplitManifest build_jpeg96_split(const std::vector<ImageMeta>& metas, const ConstraintConfig& cfg) {
  detail::validate(cfg);
  std::vector<const ImageMeta*> nat, gen;
  for (const auto& m : metas) {
    if (m.origin.is_natural()) {
      if (detail::is_target_jpeg(m, cfg)) nat.push_back(&m);
    } else if (cfg.admits_generator(m.origin.generator)) {
      gen.push_back(&m);
    }
  }
  return detail::assemble("jpeg96", cfg, std::move(nat), std::move(gen));
}

/// As build_jpeg96_split, with naturals further restricted to both sides in
/// [size_low, size_high] and pooled across subsets. Every admitted generated
/// image, and the declared native side, must lie inside the window.
inline SplitManifest build_size_split(const std::vector<ImageMeta>& metas, const ConstraintConfig& cfg) {
  detail::validate(cfg);
  auto inside = [&](int side) { return side >= cfg.size_low && side <= cfg.size_high; };
  if (cfg.generator_native_side && !inside(*cfg.generator_native_side))
    throw ConstraintViolation("generator native side " + std::to_string(*cfg.generator_native_side) +
                              " outside [" + std::to_string(cfg.size_low) + "," + std::to_string(cfg.size_high) + "]");
  std::vector<const ImageMeta*> nat, gen;
  for (const auto& m : metas) {
    if (m.origin.is_natural()) {
      if (detail::is_target_jpeg(m, cfg) && inside(m.width) && inside(m.height)) nat.push_back(&m);
    } else if (cfg.admits_generator(m.origin.generator)) {
      if (!inside(m.width) || !inside(m.height))
        throw ConstraintViolation(m.origin.generator + " image " + m.path + " is " + std::to_string(m.width) + "x" +
                                  std::to_string(m.height) + ", outside [" + std::to_string(cfg.size_low) + "," +
                                  std::to_string(cfg.size_high) + "]");
      gen.push_back(&m);
    }
  }
  return detail::assemble("size", cfg, std::move(nat), std::move(gen));
}

// ---- serialization ---------------------------------------------------------

inline nlohmann::ordered_json to_json(const ConstraintConfig& c) {
  nlohmann::ordered_json j;
  j["target_qf"] = c.target_qf;
  j["size_low"] = c.size_low;
  j["size_high"] = c.size_high;
  if (c.generator_native_side) j["generator_native_side"] = *c.generator_native_side;
  j["seed"] = c.seed;
  j["per_class_balance"] = c.per_class_balance;
  j["generators"] = c.generators;
  return j;
}

inline ConstraintConfig constraint_config_from_json(const nlohmann::json& j) {
  ConstraintConfig c;
  c.target_qf = j.at("target_qf").get<int>();
  c.size_low = j.at("size_low").get<int>();
  c.size_high = j.at("size_high").get<int>();
  if (j.contains("generator_native_side")) c.generator_native_side = j.at("generator_native_side").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.per_class_balance = j.at("per_class_balance").get<bool>();
  c.generators = j.at("generators").get<std::vector<std::string>>();
  return c;
}

inline constexpr const char* kManifestTag = "imgbias.split_manifest";

/// Header line (split, seed, config, counts, entry count), then one line per entry.
inline void write_manifest(std::ostream& out, const SplitManifest& m) {
  nlohmann::ordered_json h;
  h["manifest"] = kManifestTag;
  h["version"] = 1;
  h["split"] = m.split;
  h["seed"] = m.seed;
  h["config"] = to_json(m.config);
  h["counts"] = m.counts;
  h["entries"] = m.entries.size();
  out << h.dump() << '\n';
  for (const auto& e : m.entries) {
    nlohmann::ordered_json j;
    j["source_path"] = e.source_path;
    j["output_path"] = e.output_path;
    j["class_label"] = e.class_label;
    j["origin"] = e.origin.str();
    if (e.action.kind == TranscodeAction::Kind::Copy) {
      j["action"] = "COPY";
    } else {
      j["action"] = "ENCODE_QF";
      j["qf"] = e.action.qf;
    }
    out << j.dump() << '\n';
  }
}

/// Parses and re-validates a manifest: ordering, counts, balance, and the
/// per-origin action rule are all checked. Violations are ParseErrors.
inline SplitManifest read_manifest(std::istream& in) {
  SplitManifest m;
  std::string line;
  long n = 0;
  auto fail = [&](const std::string& what) { throw ParseError("manifest line " + std::to_string(n) + ": " + what); };
  try {
    if (!std::getline(in, line)) throw ParseError("empty manifest");
    n = 1;
    const auto h = nlohmann::json::parse(line);
    if (h.value("manifest", "") != kManifestTag) fail("not a split manifest header");
    if (h.at("version").get<int>() != 1) fail("unsupported manifest version");
    m.split = h.at("split").get<std::string>();
    m.seed = h.at("seed").get<std::uint64_t>();
    m.config = constraint_config_from_json(h.at("config"));
    const auto declared = h.at("counts").get<SplitCounts>();
    const auto expected = h.at("entries").get<std::size_t>();
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = nlohmann::json::parse(line);
      ManifestEntry e;
      e.source_path = j.at("source_path").get<std::string>();
      e.output_path = j.at("output_path").get<std::string>();
      e.class_label = j.at("class_label").get<std::string>();
      e.origin = Origin::parse(j.at("origin").get<std::string>());
      const auto action = j.at("action").get<std::string>();
      if (action == "COPY")
        e.action = TranscodeAction::copy();
      else if (action == "ENCODE_QF")
        e.action = TranscodeAction::encode(j.at("qf").get<int>());
      else
        fail("unknown action " + action);
      if (e.origin.is_natural() != (e.action.kind == TranscodeAction::Kind::Copy))
        fail("natural entries copy, generated entries re-encode");
      if (e.action.kind == TranscodeAction::Kind::EncodeQf && e.action.qf != m.config.target_qf)
        fail("re-encode quality differs from target_qf");
      if (!m.entries.empty()) {
        const auto& p = m.entries.back();
        if (std::tie(e.class_label, e.origin, e.source_path) <= std::tie(p.class_label, p.origin, p.source_path))
          fail("entries not strictly sorted by (class_label, origin, source_path)");
      }
      ++m.counts[e.class_label][e.origin.str()];
      m.entries.push_back(std::move(e));
    }
    if (m.entries.size() != expected) fail("entry count differs from header");
    if (m.counts != declared) fail("counts differ from header");
    if (m.config.per_class_balance) {
      for (const auto& [cls, by_origin] : m.counts) {
        long nat = 0, gen = 0;
        for (const auto& [o, c] : by_origin) (o == "natural" ? nat : gen) += c;
        if (nat != gen) fail("class " + cls + " is unbalanced");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  } catch (const DomainError& e) {
    fail(e.what());
  }
  return m;
}

// ---- materialization -------------------------------------------------------

struct MaterializeReport {
  std::vector<std::string> written;  // output paths, manifest order
  std::vector<FileError> failures;   // keyed by source path, manifest order
};

/// Writes every entry under out_dir: COPY entries byte-for-byte, ENCODE_QF
/// entries decoded and re-encoded. Failures are collected per entry.
inline MaterializeReport materialize(const SplitManifest& m, const std::filesystem::path& out_dir, unsigned jobs = 0) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.generic_string() + ": " + ec.message());
  std::set<fs::path> dirs;
  for (const auto& e : m.entries) dirs.insert((out_dir / e.output_path).parent_path());
  for (const auto& d : dirs) {
    fs::create_directories(d, ec);
    if (ec) throw IoError("cannot create " + d.generic_string() + ": " + ec.message());
  }

  std::vector<std::optional<FileError>> errors(m.entries.size());
  parallel_for(m.entries.size(), jobs, [&](std::size_t i) {
    const ManifestEntry& e = m.entries[i];
    try {
      const auto bytes = read_file(e.source_path);
      if (e.action.kind == TranscodeAction::Kind::Copy)
        write_file(out_dir / e.output_path, bytes);
      else
        write_file(out_dir / e.output_path, encode_qf(decode(bytes), e.action.qf));
    } catch (const Error& ex) {
      errors[i] = FileError{e.source_path, ex.kind(), ex.what()};
    } catch (const std::exception& ex) {
      errors[i] = FileError{e.source_path, "Error", ex.what()};
    }
  });

  MaterializeReport r;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    if (errors[i])
      r.failures.push_back(std::move(*errors[i]));
    else
      r.written.push_back(m.entries[i].output_path);
  }
  return r;
}

/// Labels files under a materialization root from the manifest that wrote them.
inline Labeling manifest_labeling(const SplitManifest& m) {
  auto index = std::make_shared<std::unordered_map<std::string, Label>>();
  for (const auto& e : m.entries) (*index)[e.output_path] = Label{e.class_label, e.origin, m.split};
  return [index](const std::string& rel) -> std::optional<Label> {
    const auto it = index->find(rel);
    if (it == index->end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace imgbias
