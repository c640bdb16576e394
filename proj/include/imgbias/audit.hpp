#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "imgbias/error.hpp"
#include "imgbias/image_meta.hpp"

namespace imgbias {

struct Histogram {
  std::vector<double> bin_edges;  // bins are [edge[i], edge[i+1])
  std::vector<long> counts;
  long total = 0;

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

/// Bin index 101 in a QF histogram holds files without quantization tables.
inline constexpr int kNoTableBin = 101;

/// Integer qf bins 1..100 plus the no-table bin, over metas of the given origin kind.
inline Histogram qf_histogram(const std::vector<ImageMeta>& metas, Origin::Kind filter) {
  Histogram h;
  for (int e = 1; e <= kNoTableBin + 1; ++e) h.bin_edges.push_back(e);
  h.counts.assign(kNoTableBin, 0);
  for (const auto& m : metas) {
    if (m.origin.kind != filter) continue;
    const int bin = m.qf ? *m.qf : kNoTableBin;
    ++h.counts[bin - 1];
    ++h.total;
  }
  return h;
}

/// Counts over (width-bin, height-bin). Regular bins are bin_width wide; the
/// last index on each axis absorbs every side >= max_edge.
struct SizeGrid {
  int bin_width = 50;
  int max_edge = 1050;
  int bins = 0;               // per axis, including the overflow bin
  std::vector<long> counts;   // counts[i * bins + j], i = width bin, j = height bin
  long total = 0;

  long at(int i, int j) const { return counts[static_cast<std::size_t>(i) * bins + j]; }
  int bin_of(int side) const { return side >= max_edge ? bins - 1 : side / bin_width; }
  /// Lower pixel bound of bin i.
  int lower(int i) const { return i * bin_width; }

  friend bool operator==(const SizeGrid&, const SizeGrid&) = default;
};

inline SizeGrid empty_size_grid(int bin_width = 50, int max_edge = 1050) {
  if (bin_width < 1) throw DomainError("bin_width must be >= 1");
  if (max_edge < 1) throw DomainError("max_edge must be >= 1");
  SizeGrid g;
  g.bin_width = bin_width;
  g.max_edge = max_edge;
  g.bins = (max_edge + bin_width - 1) / bin_width + 1;
  g.counts.assign(static_cast<std::size_t>(g.bins) * g.bins, 0);
  return g;
}

inline SizeGrid size_grid(const std::vector<ImageMeta>& metas, Origin::Kind filter, int bin_width = 50,
                          int max_edge = 1050) {
  SizeGrid g = empty_size_grid(bin_width, max_edge);
  for (const auto& m : metas) {
    if (m.origin.kind != filter) continue;
    ++g.counts[static_cast<std::size_t>(g.bin_of(m.width)) * g.bins + g.bin_of(m.height)];
    ++g.total;
  }
  return g;
}

namespace detail {

/// ½·Σ|a_i/A − b_i/B| evaluated as Σ|a_i·B − b_i·A| / (2AB) in exact integer
/// arithmetic, so equal normalized counts give exactly 0 and disjoint supports exactly 1.
inline double total_variation(const std::vector<long>& a, const std::vector<long>& b) {
  __int128 ta = 0, tb = 0;
  for (long x : a) ta += x;
  for (long x : b) tb += x;
  if (ta == 0 || tb == 0) throw EmptyDistribution("divergence of an empty distribution");
  __int128 num = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const __int128 d = static_cast<__int128>(a[i]) * tb - static_cast<__int128>(b[i]) * ta;
    num += d < 0 ? -d : d;
  }
  if (num == 2 * ta * tb) return 1.0;
  return static_cast<double>(static_cast<long double>(num) / (2.0L * static_cast<long double>(ta) * static_cast<long double>(tb)));
}

}  // namespace detail

/// Total variation distance between two histograms with identical binning.
inline double divergence(const Histogram& h1, const Histogram& h2) {
  if (h1.bin_edges != h2.bin_edges || h1.counts.size() != h2.counts.size())
    throw ShapeMismatch("histograms have different bins");
  return detail::total_variation(h1.counts, h2.counts);
}

inline double divergence(const SizeGrid& g1, const SizeGrid& g2) {
  if (g1.bin_width != g2.bin_width || g1.max_edge != g2.max_edge || g1.bins != g2.bins)
    throw ShapeMismatch("size grids have different bins");
  return detail::total_variation(g1.counts, g2.counts);
}

/// Per-origin counts of each container format, indexed by ImageFormat.
using FormatCounts = std::array<long, 3>;

struct BiasReport {
  Histogram qf_hist_natural, qf_hist_generated;
  SizeGrid size_grid_natural, size_grid_generated;
  double qf_divergence = 0;
  double size_divergence = 0;
  FormatCounts formats_natural{}, formats_generated{};
};

inline BiasReport audit_corpus(const std::vector<ImageMeta>& metas, int bin_width = 50, int max_edge = 1050) {
  using K = Origin::Kind;
  BiasReport r;
  r.qf_hist_natural = qf_histogram(metas, K::Natural);
  r.qf_hist_generated = qf_histogram(metas, K::Generated);
  if (r.qf_hist_natural.total == 0) throw EmptyDistribution("no natural images in corpus");
  if (r.qf_hist_generated.total == 0) throw EmptyDistribution("no generated images in corpus");
  r.size_grid_natural = size_grid(metas, K::Natural, bin_width, max_edge);
  r.size_grid_generated = size_grid(metas, K::Generated, bin_width, max_edge);
  r.qf_divergence = divergence(r.qf_hist_natural, r.qf_hist_generated);
  r.size_divergence = divergence(r.size_grid_natural, r.size_grid_generated);
  for (const auto& m : metas)
    ++(m.origin.is_natural() ? r.formats_natural : r.formats_generated)[static_cast<int>(m.format)];
  return r;
}

inline nlohmann::ordered_json to_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["bin_edges"] = h.bin_edges;
  j["counts"] = h.counts;
  j["total"] = h.total;
  return j;
}

inline nlohmann::ordered_json to_json(const SizeGrid& g) {
  nlohmann::ordered_json j;
  j["bin_width"] = g.bin_width;
  j["max_edge"] = g.max_edge;
  j["bins"] = g.bins;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int i = 0; i < g.bins; ++i) {
    std::vector<long> row(g.counts.begin() + static_cast<std::ptrdiff_t>(i) * g.bins,
                          g.counts.begin() + static_cast<std::ptrdiff_t>(i + 1) * g.bins);
    rows.push_back(row);
  }
  j["counts"] = rows;  // counts[width_bin][height_bin]
  j["total"] = g.total;
  return j;
}

inline nlohmann::ordered_json to_json(const BiasReport& r) {
  auto formats = [](const FormatCounts& c) {
    nlohmann::ordered_json j;
    for (auto f : {ImageFormat::Jpeg, ImageFormat::Png, ImageFormat::Other})
      j[std::string(to_string(f))] = c[static_cast<int>(f)];
    return j;
  };
  nlohmann::ordered_json j;
  j["qf_divergence"] = r.qf_divergence;
  j["size_divergence"] = r.size_divergence;
  j["format_table"] = {{"natural", formats(r.formats_natural)}, {"generated", formats(r.formats_generated)}};
  j["qf_hist_natural"] = to_json(r.qf_hist_natural);
  j["qf_hist_generated"] = to_json(r.qf_hist_generated);
  j["size_grid_natural"] = to_json(r.size_grid_natural);
  j["size_grid_generated"] = to_json(r.size_grid_generated);
  return j;
}

/// qf,natural,generated with one row per bin; the no-table bin is labeled "none".
inline void write_qf_csv(std::ostream& out, const BiasReport& r) {
  out << "qf,natural,generated\n";
  for (int b = 1; b <= kNoTableBin; ++b) {
    if (b == kNoTableBin)
      out << "none";
    else
      out << b;
    out << ',' << r.qf_hist_natural.counts[b - 1] << ',' << r.qf_hist_generated.counts[b - 1] << '\n';
  }
}

/// width_lo,height_lo,natural,generated over every cell; the overflow bin's
/// lower bound is max_edge.
inline void write_size_csv(std::ostream& out, const BiasReport& r) {
  const SizeGrid& n = r.size_grid_natural;
  const SizeGrid& g = r.size_grid_generated;
  auto lo = [&](int i) { return i == n.bins - 1 ? n.max_edge : n.lower(i); };
  out << "width_lo,height_lo,natural,generated\n";
  for (int i = 0; i < n.bins; ++i)
    for (int j = 0; j < n.bins; ++j) out << lo(i) << ',' << lo(j) << ',' << n.at(i, j) << ',' << g.at(i, j) << '\n';
}

}  // namespace imgbias
