#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "imgbias/audit.hpp"
#include "imgbias/error.hpp"
#include "imgbias/image_meta.hpp"
#include "imgbias/metrics.hpp"

namespace imgbias {

struct PredictionRecord {
  std::string path;
  bool generated = false;  // true label
  double score = 0;        // P(GENERATED)
  std::string train_subset;
  std::string eval_subset;
  std::string condition;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

// ---- CSV -------------------------------------------------------------------

/// Splits one CSV line; double quotes may wrap fields and "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field");
  return fields;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + '"';
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct RowError {
  long line = 0;
  std::string message;
};

struct PredictionLoad {
  std::vector<PredictionRecord> records;
  std::vector<RowError> errors;
};

inline constexpr std::array<const char*, 6> kPredictionColumns = {"path",         "true_label",  "score",
                                                                 "train_subset", "eval_subset", "condition"};

/// Header row required (column order free, extra columns ignored); a bad
/// header is a fatal ParseError, bad rows are collected with line numbers.
inline PredictionLoad load_predictions(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("prediction file has no header");
  std::vector<std::string> header = split_csv_line(line);
  std::array<std::size_t, 6> col{};
  for (std::size_t k = 0; k < kPredictionColumns.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), kPredictionColumns[k]);
    if (it == header.end()) throw ParseError(std::string("prediction header lacks column '") + kPredictionColumns[k] + "'");
    col[k] = static_cast<std::size_t>(it - header.begin());
  }

  PredictionLoad out;
  for (long n = 2; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto f = split_csv_line(line);
      if (f.size() != header.size())
        throw ParseError("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
      PredictionRecord r;
      r.path = f[col[0]];
      std::string label = f[col[1]];
      std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return std::toupper(c); });
      if (label == "GENERATED" || label == "1")
        r.generated = true;
      else if (label == "NATURAL" || label == "0")
        r.generated = false;
      else
        throw ParseError("unknown true_label '" + f[col[1]] + "'");
      const auto score = parse_double(f[col[2]]);
      if (!score) throw ParseError("score '" + f[col[2]] + "' is not a number");
      if (*score < 0 || *score > 1) throw ParseError("score " + f[col[2]] + " outside [0,1]");
      r.score = *score;
      r.train_subset = f[col[3]];
      r.eval_subset = f[col[4]];
      r.condition = f[col[5]];
      if (r.path.empty() || r.train_subset.empty() || r.eval_subset.empty() || r.condition.empty())
        throw ParseError("empty required field");
      out.records.push_back(std::move(r));
    } catch (const ParseError& e) {
      out.errors.push_back({n, e.what()});
    }
  }
  return out;
}

inline void write_predictions(std::ostream& out, const std::vector<PredictionRecord>& records) {
  out << "path,true_label,score,train_subset,eval_subset,condition\n";
  char buf[64];
  for (const auto& r : records) {
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, r.score);
    out << csv_field(r.path) << ',' << (r.generated ? "GENERATED" : "NATURAL") << ',' << std::string(buf, end) << ','
        << csv_field(r.train_subset) << ',' << csv_field(r.eval_subset) << ',' << csv_field(r.condition) << '\n';
  }
}

// ---- ordering ----------------------------------------------------------------

/// Output side per generator, used to order matrix rows and columns: larger
/// outputs first, then by name; unknown generators last, by name. Lookups
/// ignore case and punctuation ("SD V1.4" == "sdv14").
class GeneratorOrder {
 public:
  GeneratorOrder() = default;

  static std::string key(std::string_view name) {
    std::string k;
    for (unsigned char c : name)
      if (std::isalnum(c)) k += static_cast<char>(std::tolower(c));
    return k;
  }

  static GeneratorOrder genimage() {
    GeneratorOrder o;
    for (const char* n : {"Midjourney", "MJ"}) o.set(n, 1024);
    for (const char* n : {"SD14", "SD4", "SDV14", "StableDiffusionV14", "SD15", "SD5", "SDV15", "StableDiffusionV15",
                          "Wukong"})
      o.set(n, 512);
    for (const char* n : {"ADM", "GLIDE", "VQDM"}) o.set(n, 256);
    o.set("BigGAN", 128);
    return o;
  }

  void set(std::string_view name, int side) { sizes_[key(name)] = side; }
  std::optional<int> size(std::string_view name) const {
    const auto it = sizes_.find(key(name));
    if (it == sizes_.end()) return std::nullopt;
    return it->second;
  }

  bool before(const std::string& a, const std::string& b) const {
    const auto sa = size(a), sb = size(b);
    if (sa.has_value() != sb.has_value()) return sa.has_value();
    if (sa && *sa != *sb) return *sa > *sb;
    return a < b;
  }
  std::vector<std::string> sorted(std::set<std::string> names) const {
    std::vector<std::string> v(names.begin(), names.end());
    std::stable_sort(v.begin(), v.end(), [&](const std::string& a, const std::string& b) { return before(a, b); });
    return v;
  }

 private:
  std::map<std::string, int> sizes_;
};

/// "raw"/"png" first, then "jpegNN" by descending NN, then anything else by name.
inline bool condition_before(const std::string& a, const std::string& b) {
  auto rank = [](const std::string& c) -> std::pair<int, int> {
    std::string k = GeneratorOrder::key(c);
    if (k == "raw" || k == "png" || k == "none") return {0, 0};
    if (k.rfind("jpeg", 0) == 0 && k.size() > 4 && std::all_of(k.begin() + 4, k.end(), ::isdigit))
      return {1, -std::stoi(k.substr(4))};
    return {2, 0};
  };
  const auto ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb;
  return a < b;
}

// ---- matrices ----------------------------------------------------------------

enum class Metric { Acc, Prec, Rec, Diff };

inline std::string to_string(Metric m) {
  switch (m) {
    case Metric::Acc: return "ACC";
    case Metric::Prec: return "PREC";
    case Metric::Rec: return "REC";
    case Metric::Diff: break;
  }
  return "DIFF";
}

inline Metric parse_metric(std::string_view s) {
  if (s == "ACC") return Metric::Acc;
  if (s == "PREC") return Metric::Prec;
  if (s == "REC") return Metric::Rec;
  if (s == "DIFF") return Metric::Diff;
  throw ParseError("unknown metric '" + std::string(s) + "'");
}

struct EvalMatrix {
  Metric metric = Metric::Acc;
  std::string condition;
  std::vector<std::string> row_names;  // training subsets
  std::vector<std::string> col_names;  // evaluation subsets
  std::vector<std::vector<std::optional<double>>> values;  // percentages; nullopt = undefined

  friend bool operator==(const EvalMatrix&, const EvalMatrix&) = default;
};

/// Positive class GENERATED; score >= threshold predicts GENERATED.
inline Confusion confusion(const std::vector<PredictionRecord>& records, double threshold = 0.5) {
  if (records.empty()) throw EmptyEval("no records to evaluate");
  Confusion c;
  for (const auto& r : records) c.add(r.generated, r.score >= threshold);
  return c;
}

/// Percentage value of `metric` for one confusion, as 100 * num / den.
inline std::optional<double> metric_percent(const Confusion& c, Metric metric) {
  long num = 0, den = 0;
  switch (metric) {
    case Metric::Acc: num = c.tp + c.tn, den = c.total(); break;
    case Metric::Prec: num = c.tp, den = c.tp + c.fp; break;
    case Metric::Rec: num = c.tp, den = c.tp + c.fn; break;
    case Metric::Diff: throw DomainError("DIFF is not a confusion metric");
  }
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

/// One cell per (train_subset, eval_subset) over records of a single condition.
inline EvalMatrix accuracy_matrix(const std::vector<PredictionRecord>& records, Metric metric,
                                  const GeneratorOrder& order = GeneratorOrder::genimage(), double threshold = 0.5) {
  if (records.empty()) throw EmptyEval("no records to evaluate");
  if (metric == Metric::Diff) throw DomainError("DIFF matrices come from diff_matrix");
  std::set<std::string> rows, cols;
  std::map<std::pair<std::string, std::string>, Confusion> cells;
  for (const auto& r : records) {
    if (r.condition != records.front().condition)
      throw DomainError("records mix conditions '" + records.front().condition + "' and '" + r.condition + "'");
    rows.insert(r.train_subset);
    cols.insert(r.eval_subset);
    cells[{r.train_subset, r.eval_subset}].add(r.generated, r.score >= threshold);
  }
  EvalMatrix m;
  m.metric = metric;
  m.condition = records.front().condition;
  m.row_names = order.sorted(rows);
  m.col_names = order.sorted(cols);
  std::string missing;
  for (const auto& row : m.row_names) {
    auto& out = m.values.emplace_back();
    for (const auto& col : m.col_names) {
      const auto it = cells.find({row, col});
      if (it == cells.end()) {
        missing += (missing.empty() ? "" : ", ") + row + " x " + col;
        out.emplace_back();
      } else {
        out.push_back(metric_percent(it->second, metric));
      }
    }
  }
  if (!missing.empty()) throw MissingCell("condition '" + m.condition + "' lacks cells: " + missing);
  return m;
}

inline EvalMatrix diff_matrix(const EvalMatrix& a, const EvalMatrix& b) {
  if (a.row_names != b.row_names || a.col_names != b.col_names)
    throw ShapeMismatch("matrices differ in rows or columns");
  EvalMatrix d = a;
  d.metric = Metric::Diff;
  if (a.condition != b.condition) d.condition = a.condition + "-" + b.condition;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    for (std::size_t j = 0; j < a.values[i].size(); ++j) {
      const auto& x = a.values[i][j];
      const auto& y = b.values[i][j];
      d.values[i][j] = x && y ? std::optional<double>(*x - *y) : std::nullopt;
    }
  return d;
}

/// Mean of the defined cells in each row; nullopt for a row with none.
inline std::vector<std::pair<std::string, std::optional<double>>> row_average(const EvalMatrix& m) {
  if (m.values.empty()) throw EmptyEval("matrix has no rows");
  std::vector<std::pair<std::string, std::optional<double>>> out;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    double sum = 0;
    int n = 0;
    for (const auto& v : m.values[i])
      if (v) sum += *v, ++n;
    out.emplace_back(m.row_names[i], n ? std::optional<double>(sum / n) : std::nullopt);
  }
  return out;
}

/// Unweighted mean of the defined row means.
inline std::optional<double> grand_average(const std::vector<std::optional<double>>& rows) {
  double sum = 0;
  int n = 0;
  for (const auto& v : rows)
    if (v) sum += *v, ++n;
  if (!n) return std::nullopt;
  return sum / n;
}

inline std::optional<double> grand_average(const std::vector<std::pair<std::string, std::optional<double>>>& rows) {
  std::vector<std::optional<double>> v;
  for (const auto& r : rows) v.push_back(r.second);
  return grand_average(v);
}

inline std::optional<double> grand_average(const EvalMatrix& m) { return grand_average(row_average(m)); }

/// Half-up (away from zero) at 2 decimals. The 1e-9 nudge absorbs binary
/// representation error, so 71.675 stored as 71.67499999… still rounds up.
inline double round2(double x) {
  const double a = std::floor(std::abs(x) * 100.0 + 0.5 + 1e-9) / 100.0;
  return x < 0 ? -a : a;
}

struct CurvePoint {
  std::string condition;
  std::optional<double> value;
};

/// Grand-average accuracy per condition, in condition order.
inline std::vector<CurvePoint> robustness_curve(const std::vector<PredictionRecord>& records,
                                                const GeneratorOrder& order = GeneratorOrder::genimage(),
                                                double threshold = 0.5) {
  if (records.empty()) throw EmptyEval("no records to evaluate");
  std::map<std::string, std::vector<PredictionRecord>> by_condition;
  for (const auto& r : records) by_condition[r.condition].push_back(r);
  std::vector<std::string> conditions;
  for (const auto& [c, _] : by_condition) conditions.push_back(c);
  std::stable_sort(conditions.begin(), conditions.end(), condition_before);
  std::vector<CurvePoint> out;
  for (const auto& c : conditions)
    out.push_back({c, grand_average(accuracy_matrix(by_condition[c], Metric::Acc, order, threshold))});
  return out;
}

// ---- size-interval grid ------------------------------------------------------------

struct SizeAccuracyGrid {
  int bin_width = 50;
  int max_edge = 1050;
  int bins = 0;
  std::vector<long> counts;                 // [i * bins + j], i = width bin
  std::vector<std::optional<double>> acc;   // percentage; nullopt = NO_DATA
  std::optional<std::pair<int, int>> marker;

  std::optional<double> at(int i, int j) const { return acc[static_cast<std::size_t>(i) * bins + j]; }
  long count(int i, int j) const { return counts[static_cast<std::size_t>(i) * bins + j]; }
  bool no_data(int i, int j) const { return count(i, j) == 0; }

  friend bool operator==(const SizeAccuracyGrid&, const SizeAccuracyGrid&) = default;
};

using MetaIndex = std::unordered_map<std::string, ImageMeta>;

inline MetaIndex index_by_path(const std::vector<ImageMeta>& metas) {
  MetaIndex idx;
  for (const auto& m : metas) idx.emplace(m.path, m);
  return idx;
}

/// Accuracy over NATURAL records per (width-bin, height-bin), binned like
/// size_grid. `marker_side` flags the generated images' cell.
inline SizeAccuracyGrid size_interval_accuracy(const std::vector<PredictionRecord>& records, const MetaIndex& metas,
                                               std::optional<int> marker_side = std::nullopt, int bin_width = 50,
                                               int max_edge = 1050, double threshold = 0.5) {
  const SizeGrid shape = empty_size_grid(bin_width, max_edge);
  SizeAccuracyGrid g;
  g.bin_width = bin_width;
  g.max_edge = max_edge;
  g.bins = shape.bins;
  g.counts.assign(shape.counts.size(), 0);
  g.acc.assign(shape.counts.size(), std::nullopt);
  std::vector<long> correct(shape.counts.size(), 0);
  for (const auto& r : records) {
    const auto it = metas.find(r.path);
    if (it == metas.end()) throw JoinError("no metadata for prediction path " + r.path);
    if (r.generated) continue;
    const std::size_t k = static_cast<std::size_t>(shape.bin_of(it->second.width)) * g.bins +
                          shape.bin_of(it->second.height);
    ++g.counts[k];
    correct[k] += r.score < threshold;
  }
  for (std::size_t k = 0; k < g.counts.size(); ++k)
    if (g.counts[k]) g.acc[k] = 100.0 * static_cast<double>(correct[k]) / static_cast<double>(g.counts[k]);
  if (marker_side) g.marker = {shape.bin_of(*marker_side), shape.bin_of(*marker_side)};
  return g;
}

}  // namespace imgbias
