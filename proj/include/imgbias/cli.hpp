#pragma once

// Subcommand driver behind the imgbias executable. Every stage reads files and
// writes files into its --out directory plus a run.json provenance record.
// Exit codes: 0 success, 2 completed with per-file/per-row errors, 1 fatal.
// Diagnostics go to the error stream as one JSON object per line.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "imgbias/audit.hpp"
#include "imgbias/config.hpp"
#include "imgbias/debias.hpp"
#include "imgbias/error.hpp"
#include "imgbias/eval.hpp"
#include "imgbias/probe.hpp"
#include "imgbias/provenance.hpp"
#include "imgbias/report.hpp"
#include "imgbias/scan.hpp"
#include "imgbias/transcode.hpp"

namespace imgbias::cli {

namespace fs = std::filesystem;

inline constexpr int kOk = 0;
inline constexpr int kFatal = 1;
inline constexpr int kPartial = 2;

class Diagnostics {
 public:
  explicit Diagnostics(std::ostream& err) : err_(err) {}

  void emit(const char* level, const std::string& kind, const std::string& message, const std::string& path = "",
            std::optional<long> line = std::nullopt) {
    nlohmann::ordered_json j;
    j["level"] = level;
    j["kind"] = kind;
    if (!path.empty()) j["path"] = path;
    if (line) j["line"] = *line;
    j["message"] = message;
    err_ << j.dump() << '\n';
    if (std::string(level) == "error") ++errors_;
  }
  long errors() const { return errors_; }

 private:
  std::ostream& err_;
  long errors_ = 0;
};

struct Globals {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
};

/// Resolved settings shared by every stage.
class Stage {
 public:
  Stage(const std::string& command, const Globals& g, std::ostream& out, Diagnostics& diag)
      : out_(out), diag_(diag) {
    if (!g.config_path.empty()) {
      config_ = load_config(g.config_path);
      record_.config_sha256 = sha256_hex(read_file(g.config_path));
    } else {
      record_.config_sha256 = sha256_hex(std::string());
    }
    for (const auto& c : config_.corpora)
      if (!fs::is_directory(c.root))
        throw IoError("[corpus:" + c.name + "] root is not a directory: " + c.root.generic_string());
    const auto seed = g.seed ? g.seed : config_.seed;
    if (!seed) throw ParseError("a seed is required (--seed or [run] seed)");
    seed_ = *seed;
    jobs_ = g.jobs ? *g.jobs : config_.jobs;
    if (!g.out.empty())
      out_dir_ = g.out;
    else if (config_.out)
      out_dir_ = *config_.out;
    else
      throw ParseError("an output directory is required (--out or [run] out)");
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw IoError("cannot create " + out_dir_.generic_string() + ": " + ec.message());
    record_.command = command;
    record_.seed = seed_;
  }

  const RunConfig& config() const { return config_; }
  RunConfig& config() { return config_; }
  std::uint64_t seed() const { return seed_; }
  unsigned jobs() const { return jobs_; }
  const fs::path& dir() const { return out_dir_; }
  std::ostream& out() { return out_; }
  Diagnostics& diag() { return diag_; }

  void input(const fs::path& p) {
    if (!fs::exists(p)) throw IoError("input does not exist: " + p.generic_string());
    record_.add_input(p);
  }
  /// Writes one output file and registers its digest.
  void emit(const std::string& name, const std::string& text) {
    const fs::path p = out_dir_ / name;
    fs::create_directories(p.parent_path());
    write_file(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    record_.add_output(out_dir_, p);
  }
  void output_tree(const fs::path& p) { record_.add_output(out_dir_, p); }

  int finish(int code) {
    record_.write(out_dir_);
    return code;
  }

 private:
  std::ostream& out_;
  Diagnostics& diag_;
  RunConfig config_;
  std::uint64_t seed_ = 0;
  unsigned jobs_ = 0;
  fs::path out_dir_;
  RunRecord record_;
};

template <class F>
std::string render(F&& f) {
  std::ostringstream s;
  f(s);
  return s.str();
}

inline std::vector<ImageMeta> load_metas(Stage& st, const std::string& path) {
  st.input(path);
  return read_metas_jsonl(fs::path(path));
}

// ---- stages ------------------------------------------------------------------

struct ScanArgs {
  std::string root, origin = "natural", subset, class_pattern;
};

inline int cmd_scan(Stage& st, const ScanArgs& a) {
  std::vector<CorpusSpec> corpora = st.config().corpora;
  if (!a.root.empty()) {
    CorpusSpec c;
    c.name = "cli";
    c.root = a.root;
    c.origin = Origin::parse(a.origin);
    c.subset = a.subset.empty() ? fs::path(a.root).filename().string() : a.subset;
    c.class_pattern = a.class_pattern;
    corpora = {c};
  }
  if (corpora.empty()) throw ParseError("scan needs --root or [corpus:NAME] sections");

  std::vector<ImageMeta> metas;
  std::vector<FileError> errors;
  for (const auto& c : corpora) {
    if (!fs::is_directory(c.root)) throw IoError("corpus root is not a directory: " + c.root.generic_string());
    st.input(c.root);
    ScanResult r = scan_corpus(c.root, LabelRule(c.origin, c.subset, c.class_pattern), st.jobs());
    metas.insert(metas.end(), r.metas.begin(), r.metas.end());
    errors.insert(errors.end(), r.errors.begin(), r.errors.end());
  }
  std::sort(metas.begin(), metas.end(),
            [](const ImageMeta& x, const ImageMeta& y) { return std::tie(x.path, x.subset) < std::tie(y.path, y.subset); });
  std::sort(errors.begin(), errors.end(), [](const FileError& x, const FileError& y) { return x.path < y.path; });

  st.emit("metadata.jsonl", render([&](std::ostream& o) { write_metas_jsonl(o, metas); }));
  st.emit("scan_errors.jsonl", render([&](std::ostream& o) {
            for (const auto& e : errors)
              o << nlohmann::ordered_json{{"path", e.path}, {"kind", e.kind}, {"message", e.message}}.dump() << '\n';
          }));
  for (const auto& e : errors) st.diag().emit("error", e.kind, e.message, e.path);
  st.out() << fmt::format("scanned {} images, {} per-file errors\n", metas.size(), errors.size());
  return st.finish(errors.empty() ? kOk : kPartial);
}

inline int cmd_audit(Stage& st, const std::string& meta) {
  const auto metas = load_metas(st, meta);
  const RunConfig& c = st.config();
  const BiasReport r = audit_corpus(metas, c.bin_width, c.max_edge);
  st.emit("bias_report.json", to_json(r).dump(2) + "\n");
  st.emit("qf_histogram.csv", render([&](std::ostream& o) { write_qf_csv(o, r); }));
  st.emit("size_histogram.csv", render([&](std::ostream& o) { write_size_csv(o, r); }));
  st.out() << fmt::format("qf_divergence {:.6f} size_divergence {:.6f}\n", r.qf_divergence, r.size_divergence);
  return st.finish(kOk);
}

inline int cmd_debias(Stage& st, const std::string& meta, std::string split) {
  const auto metas = load_metas(st, meta);
  if (split.empty()) split = st.config().split;
  ConstraintConfig cfg = st.config().constraints;
  cfg.seed = st.seed();
  SplitManifest m;
  if (split == "jpeg96")
    m = build_jpeg96_split(metas, cfg);
  else if (split == "size")
    m = build_size_split(metas, cfg);
  else
    throw ParseError("unknown split '" + split + "' (jpeg96 or size)");
  st.emit("manifest.jsonl", render([&](std::ostream& o) { write_manifest(o, m); }));
  long nat = 0;
  for (const auto& e : m.entries) nat += e.origin.is_natural();
  st.out() << fmt::format("{} split: {} natural + {} generated entries over {} classes\n", m.split, nat,
                          static_cast<long>(m.entries.size()) - nat, m.counts.size());
  return st.finish(kOk);
}

inline int cmd_materialize(Stage& st, const std::string& manifest_path) {
  st.input(manifest_path);
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open " + manifest_path);
  const SplitManifest m = read_manifest(in);
  const fs::path files = st.dir() / "files";
  const MaterializeReport rep = materialize(m, files, st.jobs());
  for (const auto& f : rep.failures) st.diag().emit("error", f.kind, f.message, f.path);

  // re-scan what was written; paths are recorded relative to the output dir
  ScanResult scan = scan_corpus(files, manifest_labeling(m), st.jobs());
  for (auto& meta : scan.metas) meta.path = fs::path(meta.path).lexically_relative(st.dir()).generic_string();
  for (const auto& e : scan.errors) st.diag().emit("error", e.kind, e.message, e.path);

  nlohmann::ordered_json j;
  j["entries"] = m.entries.size();
  j["written"] = rep.written.size();
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& f : rep.failures) failures.push_back({{"source_path", f.path}, {"kind", f.kind}, {"message", f.message}});
  j["failures"] = failures;
  st.emit("materialize_report.json", j.dump(2) + "\n");
  st.emit("metadata.jsonl", render([&](std::ostream& o) { write_metas_jsonl(o, scan.metas); }));
  st.output_tree(files);
  st.out() << fmt::format("materialized {} of {} entries\n", rep.written.size(), m.entries.size());
  return st.finish(rep.failures.empty() && scan.errors.empty() ? kOk : kPartial);
}

inline int cmd_probe(Stage& st, const std::string& meta) {
  const auto metas = load_metas(st, meta);
  const double frac = st.config().probe_test_fraction;
  const ProbeRun r = run_probe(metas, st.seed(), frac);
  st.emit("probe_model.json", to_json(r.model).dump(2) + "\n");
  nlohmann::ordered_json j;
  j["seed"] = st.seed();
  j["test_fraction"] = frac;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["train"] = to_json(r.train);
  j["test"] = to_json(r.test);
  st.emit("probe_metrics.json", j.dump(2) + "\n");
  st.out() << fmt::format("probe held-out accuracy {:.4f} (n_test {})\n", r.test.accuracy, r.n_test);
  return st.finish(kOk);
}

inline int cmd_eval(Stage& st, const std::string& predictions, const std::string& meta,
                    std::optional<double> threshold_flag) {
  const RunConfig& c = st.config();
  const double threshold = threshold_flag ? *threshold_flag : c.threshold;
  st.input(predictions);
  std::ifstream in(predictions);
  if (!in) throw IoError("cannot open " + predictions);
  const PredictionLoad load = load_predictions(in);
  for (const auto& e : load.errors) st.diag().emit("error", "ParseError", e.message, predictions, e.line);
  if (load.records.empty()) throw EmptyEval("no valid prediction records in " + predictions);

  std::map<std::string, std::vector<PredictionRecord>> by_condition;
  for (const auto& r : load.records) by_condition[r.condition].push_back(r);
  std::vector<std::string> conditions;
  for (const auto& [k, _] : by_condition) conditions.push_back(k);
  std::stable_sort(conditions.begin(), conditions.end(), condition_before);

  for (const auto& cond : conditions) {
    const std::string tag = detail::path_component(cond);
    for (Metric metric : {Metric::Acc, Metric::Prec, Metric::Rec}) {
      const EvalMatrix m = accuracy_matrix(by_condition[cond], metric, c.generators, threshold);
      const std::string base = "matrix_" + to_string(metric) + "_" + tag;
      st.emit(base + ".csv", render([&](std::ostream& o) { write_matrix_csv(o, m); }));
      st.emit(base + ".svg", matrix_svg(m));
      st.emit("averages_" + to_string(metric) + "_" + tag + ".csv",
              render([&](std::ostream& o) { write_averages_csv(o, m); }));
      if (metric == Metric::Acc) {
        const auto total = grand_average(m);
        st.out() << fmt::format("{} ACC total {}\n", cond, total ? fmt2(*total) : "n/a");
      }
    }
  }
  const auto curve = robustness_curve(load.records, c.generators, threshold);
  st.emit("robustness.csv", render([&](std::ostream& o) { write_curve_csv(o, curve); }));
  st.emit("robustness.svg", curve_svg(curve, "Grand-average accuracy per condition"));

  if (!meta.empty()) {
    const auto metas = load_metas(st, meta);
    const MetaIndex index = index_by_path(metas);
    const std::string cond = c.size_condition ? *c.size_condition : conditions.front();
    if (!by_condition.count(cond)) throw ParseError("size_condition '" + cond + "' has no records");
    std::map<std::string, std::vector<PredictionRecord>> by_train;
    for (const auto& r : by_condition[cond]) by_train[r.train_subset].push_back(r);
    for (const auto& [train, recs] : by_train) {
      const auto g = size_interval_accuracy(recs, index, c.generators.size(train), c.bin_width, c.max_edge, threshold);
      const std::string base = "size_grid_" + detail::path_component(train);
      st.emit(base + ".csv", render([&](std::ostream& o) { write_size_grid_csv(o, g); }));
      st.emit(base + ".svg", size_grid_svg(g, "Accuracy on natural images, detector trained on " + train));
    }
  }
  return st.finish(load.errors.empty() ? kOk : kPartial);
}

/// Splits "matrix_<METRIC>_<condition>.csv" into its parts.
inline std::pair<Metric, std::string> matrix_name(const fs::path& p) {
  static const std::regex re(R"(^matrix_(ACC|PREC|REC|DIFF)_(.+)\.csv$)");
  std::smatch m;
  const std::string name = p.filename().string();
  if (std::regex_match(name, m, re)) return {parse_metric(m[1].str()), m[2].str()};
  return {Metric::Acc, p.stem().string()};
}

inline EvalMatrix load_matrix(Stage& st, const fs::path& p) {
  st.input(p);
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.generic_string());
  const auto [metric, cond] = matrix_name(p);
  return read_matrix_csv(in, metric, cond);
}

inline std::string opt2(const std::optional<double>& v, bool plus = false) { return v ? fmt2(*v, plus) : ""; }

/// A - B. Two matrix CSVs give a per-row summary; two eval directories give
/// one summary line per matrix present in both.
inline int cmd_report(Stage& st, const std::string& a_path, const std::string& b_path) {
  auto write_diff = [&](const EvalMatrix& a, const EvalMatrix& b) {
    EvalMatrix d = diff_matrix(a, b);
    d.condition = a.condition;
    const std::string base = "matrix_DIFF_" + to_string(a.metric) + "_" + detail::path_component(a.condition);
    st.emit(base + ".csv", render([&](std::ostream& o) { write_matrix_csv(o, d); }));
    st.emit(base + ".svg", matrix_svg(d));
    return d;
  };

  if (fs::is_directory(a_path) && fs::is_directory(b_path)) {
    std::string summary = "metric,condition,a,b,diff\n";
    int paired = 0;
    std::vector<std::pair<std::tuple<int, int, std::string>, std::string>> rows;
    for (const auto& f : list_files(a_path)) {
      const fs::path pa(f);
      if (pa.parent_path() != fs::path(a_path) && pa.parent_path().lexically_normal() != fs::path(a_path).lexically_normal())
        continue;
      if (pa.extension() != ".csv" || pa.filename().string().rfind("matrix_", 0) != 0) continue;
      const fs::path pb = fs::path(b_path) / pa.filename();
      if (!fs::exists(pb)) {
        st.diag().emit("warning", "MissingCell", "no counterpart in " + b_path, pa.generic_string());
        continue;
      }
      const EvalMatrix a = load_matrix(st, pa), b = load_matrix(st, pb);
      if (a.metric == Metric::Diff) continue;
      const EvalMatrix d = write_diff(a, b);
      const auto ga = grand_average(a), gb = grand_average(b), gd = grand_average(d);
      rows.push_back({{static_cast<int>(a.metric), 0, a.condition},
                      fmt::format("{},{},{},{},{}\n", to_string(a.metric), csv_field(a.condition), opt2(ga), opt2(gb),
                                  opt2(gd, true))});
      ++paired;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
      if (std::get<0>(x.first) != std::get<0>(y.first)) return std::get<0>(x.first) < std::get<0>(y.first);
      return condition_before(std::get<2>(x.first), std::get<2>(y.first));
    });
    for (const auto& r : rows) summary += r.second;
    if (!paired) throw MissingCell("no matrix CSVs present in both directories");
    st.emit("summary.csv", summary);
    st.out() << summary;
    return st.finish(kOk);
  }

  const EvalMatrix a = load_matrix(st, a_path), b = load_matrix(st, b_path);
  const EvalMatrix d = write_diff(a, b);
  const auto ra = row_average(a), rb = row_average(b), rd = row_average(d);
  std::string summary = "train_subset,a,b,diff\n";
  for (std::size_t i = 0; i < ra.size(); ++i)
    summary += fmt::format("{},{},{},{}\n", csv_field(ra[i].first), opt2(ra[i].second), opt2(rb[i].second),
                           opt2(rd[i].second, true));
  summary += fmt::format("total,{},{},{}\n", opt2(grand_average(ra)), opt2(grand_average(rb)),
                         opt2(grand_average(rd), true));
  st.emit("summary.csv", summary);
  st.out() << summary;
  return st.finish(kOk);
}

/// Writes <out>/jpegNN/<relative path>.jpg for every image and series level.
inline int cmd_compress(Stage& st, const std::string& input, const std::string& qualities) {
  CompressionSeries series = st.config().series;
  if (!qualities.empty()) {
    std::vector<int> q;
    for (const auto& item : detail::split_list(qualities)) q.push_back(detail::parse_value<int>("cli", "qualities", item));
    series = CompressionSeries(q);
  }
  st.input(input);
  std::vector<std::pair<fs::path, std::string>> files;  // source, relative stem
  if (fs::is_directory(input)) {
    for (const auto& f : list_files(input)) {
      fs::path rel = fs::path(f).lexically_relative(input);
      files.emplace_back(f, rel.replace_extension().generic_string());
    }
  } else {
    files.emplace_back(input, fs::path(input).stem().string());
  }
  std::vector<std::optional<FileError>> errors(files.size());
  parallel_for(files.size(), st.jobs(), [&](std::size_t i) {
    try {
      for (auto& [q, bytes] : compress_series(read_file(files[i].first), series)) {
        const fs::path p = st.dir() / fmt::format("jpeg{}", q) / (files[i].second + ".jpg");
        fs::create_directories(p.parent_path());
        write_file(p, bytes);
      }
    } catch (const Error& e) {
      errors[i] = FileError{files[i].first.generic_string(), e.kind(), e.what()};
    }
  });
  long failed = 0;
  for (const auto& e : errors)
    if (e) st.diag().emit("error", e->kind, e->message, e->path), ++failed;
  for (int q : series.qualities())
    if (fs::exists(st.dir() / fmt::format("jpeg{}", q))) st.output_tree(st.dir() / fmt::format("jpeg{}", q));
  st.out() << fmt::format("compressed {} files at {} levels\n", files.size() - failed, series.qualities().size());
  return st.finish(failed ? kPartial : kOk);
}

// ---- entry point ---------------------------------------------------------------

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Diagnostics diag(err);
  CLI::App app{"Audit, debias, and evaluate AI-generated image detection corpora"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "INI configuration file");
  app.add_option("--out", g.out, "output directory for this stage");
  app.add_option("--seed", g.seed, "seed for every sampled step (required here or in [run])");
  app.add_option("--jobs", g.jobs, "worker threads; 0 = one per processor");

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "parse every file under the corpus roots into metadata.jsonl");
  scan->add_option("--root", scan_args.root, "single corpus root (instead of [corpus:*] sections)");
  scan->add_option("--origin", scan_args.origin, "natural or generated:<name>");
  scan->add_option("--subset", scan_args.subset, "subset name");
  scan->add_option("--class-pattern", scan_args.class_pattern, "regex whose first group is the class label");

  std::string meta, split, manifest, predictions, a_path, b_path, input, qualities;
  std::optional<double> threshold;
  auto* audit = app.add_subcommand("audit", "compression and size bias report");
  audit->add_option("--meta", meta, "metadata.jsonl")->required();
  auto* debias = app.add_subcommand("debias", "build a constrained split manifest");
  debias->add_option("--meta", meta, "metadata.jsonl")->required();
  debias->add_option("--split", split, "jpeg96 or size (default from config)");
  auto* mat = app.add_subcommand("materialize", "write the files a manifest lists");
  mat->add_option("--manifest", manifest, "manifest.jsonl")->required();
  auto* probe = app.add_subcommand("probe", "train and evaluate the metadata-only probe");
  probe->add_option("--meta", meta, "metadata.jsonl")->required();
  auto* eval = app.add_subcommand("eval", "matrices, robustness curve, and size grids from predictions");
  eval->add_option("--predictions", predictions, "prediction CSV")->required();
  eval->add_option("--meta", meta, "metadata.jsonl for size-interval grids");
  eval->add_option("--threshold", threshold, "score threshold for GENERATED");
  auto* report = app.add_subcommand("report", "differences and averages between two evaluations");
  report->add_option("--a", a_path, "matrix CSV or eval directory")->required();
  report->add_option("--b", b_path, "matrix CSV or eval directory")->required();
  auto* compress = app.add_subcommand("compress", "re-encode images at each quality of the compression series");
  compress->add_option("--input", input, "image file or directory")->required();
  compress->add_option("--qualities", qualities, "comma-separated, strictly decreasing");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    diag.emit("fatal", "UsageError", e.what());
    return kFatal;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    Stage st(sub->get_name(), g, out, diag);
    if (sub == scan) return cmd_scan(st, scan_args);
    if (sub == audit) return cmd_audit(st, meta);
    if (sub == debias) return cmd_debias(st, meta, split);
    if (sub == mat) return cmd_materialize(st, manifest);
    if (sub == probe) return cmd_probe(st, meta);
    if (sub == eval) return cmd_eval(st, predictions, meta, threshold);
    if (sub == report) return cmd_report(st, a_path, b_path);
    if (sub == compress) return cmd_compress(st, input, qualities);
  } catch (const Error& e) {
    diag.emit("fatal", e.kind(), e.what());
    return kFatal;
  } catch (const std::exception& e) {
    diag.emit("fatal", "Error", e.what());
    return kFatal;
  }
  return kFatal;
}

}  // namespace imgbias::cli
