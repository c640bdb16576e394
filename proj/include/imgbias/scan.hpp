#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <iterator>
#include <memory>
#include <optional>
#include <ostream>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "imgbias/error.hpp"
#include "imgbias/image_meta.hpp"
#include "imgbias/jpeg_parse.hpp"
#include "imgbias/parallel.hpp"
#include "imgbias/png.hpp"
#include "imgbias/quant_tables.hpp"

namespace imgbias {

struct Label {
  std::string class_label;
  Origin origin;
  std::string subset;
};

/// Maps a path relative to the corpus root to its labels; nullopt rejects the file.
using Labeling = std::function<std::optional<Label>(const std::string& rel_path)>;

/// One origin and subset per corpus root. The class comes from the first
/// capture group of `class_pattern` searched in the relative path (with '/'
/// separators), or from the first path component when no pattern is set.
class LabelRule {
 public:
  LabelRule(Origin origin, std::string subset, const std::string& class_pattern = "")
      : origin_(std::move(origin)), subset_(std::move(subset)) {
    if (class_pattern.empty()) return;
    try {
      re_ = std::make_shared<const std::regex>(class_pattern);
    } catch (const std::regex_error& e) {
      throw ParseError("bad class pattern '" + class_pattern + "': " + e.what());
    }
    if (re_->mark_count() < 1) throw ParseError("class pattern needs a capture group: " + class_pattern);
  }

  std::optional<Label> operator()(const std::string& rel) const {
    Label l{"", origin_, subset_};
    if (!re_) {
      const auto slash = rel.find('/');
      if (slash == std::string::npos || slash == 0) return std::nullopt;
      l.class_label = rel.substr(0, slash);
      return l;
    }
    std::smatch m;
    if (!std::regex_search(rel, m, *re_) || m[1].length() == 0) return std::nullopt;
    l.class_label = m[1].str();
    return l;
  }

 private:
  Origin origin_;
  std::string subset_;
  std::shared_ptr<const std::regex> re_;
};

/// Metadata for one in-memory file. Throws MalformedStream/UnsupportedStream.
inline ImageMeta meta_from_bytes(std::span<const std::uint8_t> bytes, std::string path, const Label& label) {
  ContainerInfo info;
  if (jpeg::has_soi(bytes))
    info = parse_jpeg_meta(bytes);
  else if (png::has_signature(bytes))
    info = parse_png_meta(bytes);
  else
    throw UnsupportedStream("not a JPEG or PNG container");

  ImageMeta m;
  m.path = std::move(path);
  m.format = info.format;
  m.width = info.width;
  m.height = info.height;
  if (info.tables) {
    const QualityEstimate e = estimate_qf(*info.tables);
    m.qf = e.qf;
    m.qf_exact = e.exact;
    m.qf_distance = e.distance;
  }
  m.class_label = label.class_label;
  m.origin = label.origin;
  m.subset = label.subset;
  return m;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.generic_string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + p.generic_string());
  return bytes;
}

inline void write_file(const std::filesystem::path& p, std::span<const std::uint8_t> bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + p.generic_string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + p.generic_string());
}

struct FileError {
  std::string path;
  std::string kind;
  std::string message;

  friend bool operator==(const FileError&, const FileError&) = default;
};

struct ScanResult {
  std::vector<ImageMeta> metas;   // sorted by path
  std::vector<FileError> errors;  // sorted by path
};

/// Regular files under `root`, as root-joined generic paths in lexicographic order.
inline std::vector<std::string> list_files(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("not a readable directory: " + root.generic_string());
  std::vector<std::string> files;
  fs::recursive_directory_iterator it(root, ec), end;
  if (ec) throw IoError("cannot read " + root.generic_string() + ": " + ec.message());
  for (; it != end; it.increment(ec)) {
    if (ec) throw IoError("cannot read " + root.generic_string() + ": " + ec.message());
    if (it->is_regular_file(ec)) files.push_back(it->path().generic_string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Parses every regular file under `root`. Per-file failures are collected,
/// never thrown; only an unreadable root is fatal (IoError).
inline ScanResult scan_corpus(const std::filesystem::path& root, const Labeling& labeling, unsigned jobs = 0) {
  const std::vector<std::string> files = list_files(root);
  const std::string prefix = root.generic_string();

  std::vector<std::optional<ImageMeta>> metas(files.size());
  std::vector<std::optional<FileError>> errors(files.size());
  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const std::string& path = files[i];
    std::string rel = std::filesystem::path(path).lexically_relative(root).generic_string();
    try {
      const auto label = labeling(rel);
      if (!label) throw ParseError("labeling rule does not match " + rel);
      metas[i] = meta_from_bytes(read_file(path), path, *label);
    } catch (const Error& e) {
      errors[i] = FileError{path, e.kind(), e.what()};
    } catch (const std::exception& e) {
      errors[i] = FileError{path, "Error", e.what()};
    }
  });

  ScanResult r;
  for (auto& m : metas)
    if (m) r.metas.push_back(std::move(*m));
  for (auto& e : errors)
    if (e) r.errors.push_back(std::move(*e));
  return r;
}

/// One ImageMeta JSON object per line, in the given order.
inline void write_metas_jsonl(std::ostream& out, const std::vector<ImageMeta>& metas) {
  for (const auto& m : metas) out << to_json(m).dump() << '\n';
}

/// Reads JSON-lines written by write_metas_jsonl; blank lines are skipped.
/// Any bad line is a ParseError naming its line number.
inline std::vector<ImageMeta> read_metas_jsonl(std::istream& in) {
  std::vector<ImageMeta> metas;
  std::string line;
  for (long n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      metas.push_back(image_meta_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(n) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return metas;
}

inline std::vector<ImageMeta> read_metas_jsonl(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.generic_string());
  return read_metas_jsonl(in);
}

}  // namespace imgbias
