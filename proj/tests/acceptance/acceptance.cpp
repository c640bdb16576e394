// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "imgbias/imgbias.hpp"
#include "support/reference_codecs.hpp"
#include "support/synthetic_corpus.hpp"
#include "support/temp_dir.hpp"

#ifndef IMGBIAS_CLI_PATH
#error "IMGBIAS_CLI_PATH must name the built imgbias executable"
#endif

using namespace imgbias;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// ---- 1, 2: quality-factor estimation --------------------------------------------

Outcome qf_round_trip() {
  Timer t;
  int bad = 0;
  for (int q = 1; q <= 100; ++q)
    if (!(estimate_qf(scale_tables(q)) == QualityEstimate{q, true, 0})) ++bad;
  const double s = t.seconds();
  return {bad == 0 && s < 1.0, fmt::format("{} mismatches over q=1..100, {:.3f} s", bad, s)};
}

Outcome encoder_closure() {
  Timer t;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> side(8, 160);
  int bad = 0, n = 0;
  for (int i = 0; i < 50; ++i) {
    const Raster img = refcodec::random_raster(rng, side(rng), side(rng), 30);
    for (int q : {60, 70, 80, 90, 95, 96, 100}) {
      const ContainerInfo info = parse_jpeg_meta(encode_qf(img, q));
      ++n;
      if (!info.tables || !(estimate_qf(*info.tables) == QualityEstimate{q, true, 0})) ++bad;
    }
  }
  const double s = t.seconds();
  return {bad == 0 && s < 30.0, fmt::format("{} of {} streams mismatched, {:.2f} s", bad, n, s)};
}

// ---- 3, 4: aggregate arithmetic through the harness -------------------------------

/// Appends `n` records to one (train, eval, condition) cell, `correct` of them
/// classified correctly, labels alternating.
void add_cell(std::vector<PredictionRecord>& out, const std::string& train, const std::string& eval,
              const std::string& cond, int correct, int n) {
  for (int i = 0; i < n; ++i) {
    const bool gen = i % 2 == 0;
    const bool right = i < correct;
    out.push_back({fmt::format("{}/{}/{}", eval, cond, i), gen, gen == right ? 0.9 : 0.1, train, eval, cond});
  }
}

/// A full matrix whose row r averages exactly to row_pct[r] (two-decimal percentages).
std::vector<PredictionRecord> matrix_records(const std::vector<std::string>& rows, const std::vector<std::string>& cols,
                                             const std::vector<double>& row_pct, const std::string& cond) {
  constexpr int kN = 10000;  // 0.01 % resolution per cell
  const int offsets[] = {37, -12, -25};
  std::vector<PredictionRecord> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int base = static_cast<int>(std::lround(row_pct[r] * 100));
    for (std::size_t c = 0; c < cols.size(); ++c) add_cell(out, rows[r], cols[c], cond, base + offsets[c % 3], kN);
  }
  return out;
}

std::string total_of(const std::vector<PredictionRecord>& recs) {
  return fmt2(round2(grand_average(accuracy_matrix(recs, Metric::Acc)).value()));
}

Outcome robustness_differences() {
  const std::vector<std::string> gens{"ADM", "BigGAN", "GLIDE"};
  struct Row {
    std::string cond;
    double classic, ours;
    std::string diff;
  };
  const Row rows[] = {{"jpeg95", 53.91, 67.17, "+13.26"}, {"jpeg80", 50.62, 59.37, "+8.75"}, {"jpeg60", 50.58, 55.07, "+4.49"}};
  std::string detail;
  bool ok = true;
  for (const auto& r : rows) {
    const auto classic = matrix_records(gens, gens, {r.classic, r.classic, r.classic}, r.cond);
    const auto ours = matrix_records(gens, gens, {r.ours, r.ours, r.ours}, r.cond);
    const EvalMatrix a = accuracy_matrix(ours, Metric::Acc), b = accuracy_matrix(classic, Metric::Acc);
    const std::string diff = fmt2(round2(grand_average(diff_matrix(a, b)).value()), true);
    ok = ok && diff == r.diff && total_of(classic) == fmt2(r.classic) && total_of(ours) == fmt2(r.ours);
    detail += fmt::format("{}{} {}", detail.empty() ? "" : ", ", r.cond, diff);
  }
  return {ok, detail};
}

Outcome cross_generator_totals() {
  const std::vector<std::string> rows{"SD15", "SD14", "Wukong"};
  struct Detector {
    std::string name;
    std::vector<double> classic, ours;
    std::string total_classic, total_ours, total_diff;
  };
  const Detector dets[] = {{"ResNet50", {72.16, 71.27, 71.61}, {83.90, 83.39, 80.93}, "71.68", "82.74", "+11.06"},
                           {"Swin-T", {74.14, 74.93, 73.20}, {85.90, 86.80, 84.80}, "74.09", "85.83", "+11.74"}};
  bool ok = true;
  std::string detail;
  for (const auto& d : dets) {
    const EvalMatrix a = accuracy_matrix(matrix_records(rows, rows, d.classic, "raw"), Metric::Acc);
    const EvalMatrix b = accuracy_matrix(matrix_records(rows, rows, d.ours, "raw"), Metric::Acc);
    // row means must reproduce the per-subset inputs before totals mean anything
    for (const auto& [name, mean] : row_average(a)) {
      const auto idx = std::find(rows.begin(), rows.end(), name) - rows.begin();
      ok = ok && fmt2(round2(*mean)) == fmt2(d.classic[idx]);
    }
    const std::string tc = fmt2(round2(grand_average(a).value()));
    const std::string to = fmt2(round2(grand_average(b).value()));
    const std::string td = fmt2(round2(grand_average(diff_matrix(b, a)).value()), true);
    ok = ok && tc == d.total_classic && to == d.total_ours && td == d.total_diff;
    detail += fmt::format("{}{} {} / {} / {}", detail.empty() ? "" : ", ", d.name, tc, to, td);
  }
  return {ok, detail};
}

// ---- 5, 6: probe gap and debias invariants ----------------------------------------

std::vector<ImageMeta> scan_synthetic(const fs::path& root, const std::string& generator) {
  std::vector<ImageMeta> metas;
  for (const auto& [dir, origin] : {std::pair{"natural", Origin::natural()}, {"generated", Origin::generated(generator)}}) {
    ScanResult r = scan_corpus(root / dir, LabelRule(origin, "synthetic"));
    if (!r.errors.empty()) throw IoError("scan error: " + r.errors.front().message);
    metas.insert(metas.end(), r.metas.begin(), r.metas.end());
  }
  return metas;
}

std::vector<ImageMeta> materialize_and_scan(const SplitManifest& m, const fs::path& out) {
  const MaterializeReport rep = materialize(m, out);
  if (!rep.failures.empty()) throw IoError("materialize failure: " + rep.failures.front().message);
  ScanResult r = scan_corpus(out, manifest_labeling(m));
  if (!r.errors.empty()) throw IoError("rescan error: " + r.errors.front().message);
  return r.metas;
}

struct CorpusFixture {
  testutil::TempDir dir;
  std::vector<ImageMeta> metas;
  double write_s = 0, scan_s = 0;

  CorpusFixture(const synth::Spec& spec, std::uint64_t seed) {
    Timer t;
    synth::write(synth::plan(spec, seed), dir.path() / "corpus");
    write_s = t.seconds();
    Timer s;
    metas = scan_synthetic(dir.path() / "corpus", spec.generator);
    scan_s = s.seconds();
  }
};

Outcome bias_gap(CorpusFixture& corpus, double setup_s) {
  Timer t;
  const ProbeRun biased = run_probe(corpus.metas, 17);

  ConstraintConfig cfg;
  cfg.seed = 17;
  cfg.size_low = cfg.size_high = 512;  // matched size marginal, not just a window
  cfg.generator_native_side = 512;
  const SplitManifest m = build_size_split(corpus.metas, cfg);
  const auto debiased_metas = materialize_and_scan(m, corpus.dir.path() / "gap");
  const ProbeRun debiased = run_probe(debiased_metas, 17);
  const double total = setup_s + t.seconds();
  const bool ok = biased.test.accuracy >= 0.99 && debiased.test.accuracy <= 0.55 && total < 120.0;
  return {ok, fmt::format("n={} biased {:.4f}, debiased {:.4f} (n={}), {:.1f} s end-to-end", corpus.metas.size(),
                          biased.test.accuracy, debiased.test.accuracy, debiased_metas.size(), total)};
}

/// Returns an empty string when every invariant holds, else the first violation.
std::string check_split(const SplitManifest& m, const std::vector<ImageMeta>& written, bool size_split) {
  if (written.size() != m.entries.size()) return "materialized count differs from manifest";
  const BiasReport r = audit_corpus(written);
  if (r.qf_divergence != 0.0) return fmt::format("qf_divergence {}", r.qf_divergence);
  std::map<std::string, std::pair<long, long>> per_class;
  for (const auto& w : written) {
    if (w.format != ImageFormat::Jpeg || w.qf != 96 || !w.qf_exact || w.qf_distance != 0)
      return w.path + " is not an exact QF96 JPEG";
    auto& c = per_class[w.class_label];
    (w.origin.is_natural() ? c.first : c.second)++;
    if (size_split && w.origin.is_natural() && (w.width < 450 || w.width > 550 || w.height < 450 || w.height > 550))
      return fmt::format("{} is {}x{}", w.path, w.width, w.height);
  }
  for (const auto& [cls, c] : per_class)
    if (c.first != c.second) return fmt::format("class {} has {} natural vs {} generated", cls, c.first, c.second);
  return "";
}

Outcome debias_invariants(CorpusFixture& main_corpus) {
  struct Case {
    CorpusFixture* corpus;
    std::unique_ptr<CorpusFixture> owned;
    std::uint64_t seed;
  };
  std::vector<Case> cases;
  cases.push_back({&main_corpus, nullptr, 3});
  std::uint64_t seed = 100;
  for (auto [nn, ng, classes] : {std::tuple{150, 90, 3}, {80, 200, 5}, {120, 120, 1}}) {
    synth::Spec spec;
    spec.n_natural = nn;
    spec.n_generated = ng;
    spec.n_classes = classes;
    auto owned = std::make_unique<CorpusFixture>(spec, seed);
    cases.push_back({owned.get(), std::move(owned), seed++});
  }
  long checked = 0;
  for (auto& c : cases) {
    for (bool size_split : {false, true}) {
      ConstraintConfig cfg;
      cfg.seed = c.seed;
      cfg.generator_native_side = 512;
      const SplitManifest m = size_split ? build_size_split(c.corpus->metas, cfg) : build_jpeg96_split(c.corpus->metas, cfg);
      const auto written =
          materialize_and_scan(m, c.corpus->dir.path() / fmt::format("inv_{}_{}", c.seed, size_split ? "size" : "jpeg96"));
      const std::string why = check_split(m, written, size_split);
      if (!why.empty()) return {false, fmt::format("{} split, corpus seed {}: {}", m.split, c.seed, why)};
      checked += static_cast<long>(written.size());
    }
  }
  return {true, fmt::format("{} corpora x 2 splits, {} materialized files checked", cases.size(), checked)};
}

// ---- 7: matrix oracle ----------------------------------------------------------------

Outcome matrix_oracle() {
  std::mt19937_64 rng(7);
  const std::vector<std::string> gens{"ADM", "BigGAN", "Midjourney", "SD14", "VQDM"};
  long cells = 0, bad = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> dim(1, 5), total(1, 500);
    const int R = dim(rng), C = dim(rng);
    std::vector<PredictionRecord> recs;
    auto random_record = [&](int r, int c) {
      return PredictionRecord{"p", rng() % 2 == 0, static_cast<double>(rng() % 1001) / 1000.0, gens[r], gens[c], "raw"};
    };
    for (int r = 0; r < R; ++r)
      for (int c = 0; c < C; ++c) recs.push_back(random_record(r, c));
    for (int k = static_cast<int>(recs.size()); k < total(rng); ++k)
      recs.push_back(random_record(static_cast<int>(rng() % R), static_cast<int>(rng() % C)));

    for (Metric metric : {Metric::Acc, Metric::Prec, Metric::Rec}) {
      const EvalMatrix m = accuracy_matrix(recs, metric);
      for (std::size_t i = 0; i < m.row_names.size(); ++i)
        for (std::size_t j = 0; j < m.col_names.size(); ++j) {
          long tp = 0, fp = 0, tn = 0, fn = 0;
          for (const auto& r : recs) {
            if (r.train_subset != m.row_names[i] || r.eval_subset != m.col_names[j]) continue;
            const bool said_generated = r.score >= 0.5;
            tp += r.generated && said_generated;
            fp += !r.generated && said_generated;
            tn += !r.generated && !said_generated;
            fn += r.generated && !said_generated;
          }
          std::optional<double> want;
          if (metric == Metric::Acc) want = 100.0 * double(tp + tn) / double(tp + fp + tn + fn);
          if (metric == Metric::Prec && tp + fp > 0) want = 100.0 * double(tp) / double(tp + fp);
          if (metric == Metric::Rec && tp + fn > 0) want = 100.0 * double(tp) / double(tp + fn);
          ++cells;
          bad += m.values[i][j] != want;
        }
    }
  }
  return {bad == 0, fmt::format("{} of {} cells differ from the recount", bad, cells)};
}

// ---- 8: preprocessing ----------------------------------------------------------------

Outcome preprocessing() {
  std::mt19937_64 rng(8);
  int mismatched = 0;
  for (int i = 0; i < 5; ++i) {
    const Raster img = refcodec::random_raster(rng, 512, 512, 40);
    if (!(train_preprocess(img) == infer_preprocess(img))) ++mismatched;
  }
  Raster coords(512, 512, 3);
  for (int y = 0; y < 512; ++y)
    for (int x = 0; x < 512; ++x) {
      coords.at(x, y, 0) = static_cast<std::uint8_t>(x & 0xFF);
      coords.at(x, y, 1) = static_cast<std::uint8_t>(y & 0xFF);
    }
  const Raster crop = center_crop(coords, 450);
  const bool crop_ok = crop.at(0, 0, 0) == 31 && crop.at(0, 0, 1) == 31;

  Raster row(2, 1, 1);
  row.samples = {0, 255};
  Raster square(2, 2, 1);
  square.samples = {0, 100, 200, 255};
  const bool golden_ok = resize_bilinear(row, 4, 1).samples == std::vector<std::uint8_t>{0, 64, 191, 255} &&
                         resize_bilinear(square, 3, 3).samples ==
                             std::vector<std::uint8_t>{0, 50, 100, 100, 139, 178, 200, 228, 255};
  return {mismatched == 0 && crop_ok && golden_ok,
          fmt::format("{} of 5 rasters differ, crop offset ({},{}), bilinear goldens {}", mismatched, crop.at(0, 0, 0),
                      crop.at(0, 0, 1), golden_ok ? "match" : "differ")};
}

// ---- 9: CLI determinism -----------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = fmt::format("\"{}\" {} >/dev/null 2>&1", IMGBIAS_CLI_PATH, args);
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

Outcome determinism() {
  testutil::TempDir dir;
  synth::Spec spec;
  spec.n_natural = 160;
  spec.n_generated = 160;
  spec.n_classes = 3;
  synth::write(synth::plan(spec, 9), dir.path() / "corpus");
  const auto config = dir.put("run.ini", std::string(R"([run]
seed = 99

[corpus:imagenet]
root = corpus/natural
origin = natural

[corpus:sd14]
root = corpus/generated
origin = generated:SD14
)"));
  // predictions keyed to the scanned naturals so the size grid joins
  std::string pred = "path,true_label,score,train_subset,eval_subset,condition\n";
  std::mt19937_64 rng(9);
  const auto metas = scan_synthetic(dir.path() / "corpus", "SD14");
  for (const char* cond : {"raw", "jpeg95", "jpeg80"})
    for (const char* train : {"SD14", "ADM"})
      for (const auto& m : metas)
        pred += fmt::format("{},{},{:.3f},{},{},{}\n", m.path, m.origin.is_natural() ? "NATURAL" : "GENERATED",
                            static_cast<double>(rng() % 1000) / 1000.0, train, "SD14",
                            cond);
  const auto pred_path = dir.put("pred.csv", pred);

  for (const char* run : {"r1", "r2"}) {
    const fs::path out = dir.path() / run;
    const std::string g = "--config " + quoted(config) + " --jobs 0 --out ";
    const int codes[] = {
        cli(g + quoted(out / "scan") + " scan"),
        cli(g + quoted(out / "audit") + " audit --meta " + quoted(out / "scan/metadata.jsonl")),
        cli(g + quoted(out / "debias") + " debias --meta " + quoted(out / "scan/metadata.jsonl")),
        cli(g + quoted(out / "mat") + " materialize --manifest " + quoted(out / "debias/manifest.jsonl")),
        cli(g + quoted(out / "probe") + " probe --meta " + quoted(out / "scan/metadata.jsonl")),
        cli(g + quoted(out / "probe2") + " probe --meta " + quoted(out / "mat/metadata.jsonl")),
        cli(g + quoted(out / "eval") + " eval --predictions " + quoted(pred_path) + " --meta " +
            quoted(out / "scan/metadata.jsonl")),
        cli(g + quoted(out / "eval_b") + " eval --threshold 0.7 --predictions " + quoted(pred_path)),
        cli(g + quoted(out / "report") + " report --a " + quoted(out / "eval") + " --b " + quoted(out / "eval_b")),
    };
    for (std::size_t i = 0; i < std::size(codes); ++i)
      if (codes[i] != 0) return {false, fmt::format("run {} stage {} exited {}", run, i, codes[i])};
  }
  long compared = 0;
  std::map<std::string, long> kinds;
  for (const auto& f : list_files(dir.path() / "r1")) {
    const fs::path rel = fs::path(f).lexically_relative(dir.path() / "r1");
    if (rel.filename() == "run.json") continue;  // carries a timestamp
    const fs::path other = dir.path() / "r2" / rel;
    if (!fs::exists(other) || slurp(f) != slurp(other))
      return {false, rel.generic_string() + " differs between runs"};
    ++compared;
    ++kinds[rel.extension().string()];
  }
  if (list_files(dir.path() / "r1").size() != list_files(dir.path() / "r2").size())
    return {false, "runs produced different file sets"};
  const bool covered = kinds[".jsonl"] > 0 && kinds[".json"] > 0 && kinds[".csv"] > 0 && kinds[".svg"] > 0;
  return {covered, fmt::format("{} files identical ({} csv, {} svg, {} json, {} jsonl)", compared, kinds[".csv"],
                               kinds[".svg"], kinds[".json"], kinds[".jsonl"])};
}

// ---- 10: precision/recall under compression ---------------------------------------------

Outcome compression_behavior() {
  // generated scores fall with compression severity; naturals always score low
  const std::vector<std::pair<std::string, double>> conds{
      {"raw", 0.0}, {"jpeg95", 0.08}, {"jpeg90", 0.16}, {"jpeg80", 0.24}, {"jpeg70", 0.32}, {"jpeg60", 0.38}};
  const std::vector<std::string> gens{"ADM", "BigGAN", "Midjourney", "SD14"};
  Sampler rng(10);
  std::vector<PredictionRecord> recs;
  for (const auto& [cond, drop] : conds)
    for (const auto& t : gens)
      for (const auto& e : gens)
        for (int i = 0; i < 60; ++i) {
          const bool gen = i % 2 == 0;
          const double score = gen ? 0.55 + 0.4 * rng.unit() - drop : 0.45 * rng.unit();
          recs.push_back({fmt::format("{}_{}", e, i), gen, score, t, e, cond});
        }
  std::map<std::string, std::vector<PredictionRecord>> by_cond;
  for (const auto& r : recs) by_cond[r.condition].push_back(r);

  bool precision_ok = true, monotone = true;
  long populated = 0;
  std::vector<double> recall;
  for (const auto& [cond, _] : conds) {
    const EvalMatrix p = accuracy_matrix(by_cond[cond], Metric::Prec);
    for (const auto& row : p.values)
      for (const auto& v : row)
        if (v) {
          ++populated;
          precision_ok = precision_ok && *v == 100.0;
        }
    recall.push_back(grand_average(accuracy_matrix(by_cond[cond], Metric::Rec)).value());
    if (recall.size() > 1 && !(recall.back() < recall[recall.size() - 2])) monotone = false;
  }
  std::string curve;
  for (std::size_t i = 0; i < conds.size(); ++i) curve += fmt::format("{}{} {}", i ? ", " : "", conds[i].first, fmt2(recall[i]));
  return {precision_ok && monotone && populated > 0,
          fmt::format("precision 100% on {} populated cells: {}; recall {}", populated, precision_ok ? "yes" : "no",
                      curve)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << fmt::format("{} {:>2} {}: {}", o.pass ? "PASS" : "FAIL", id, name, o.detail) << std::endl;
  };

  report(1, "qf round-trip", qf_round_trip);
  report(2, "encoder/estimator closure", encoder_closure);
  report(3, "compression-robustness differences", robustness_differences);
  report(4, "cross-generator totals", cross_generator_totals);

  std::unique_ptr<CorpusFixture> corpus;
  double setup = 0;
  try {
    Timer t;
    synth::Spec spec;  // 2000 natural + 2000 generated
    corpus = std::make_unique<CorpusFixture>(spec, 5);
    setup = t.seconds();
  } catch (const std::exception& e) {
    std::cerr << "synthetic corpus: " << e.what() << '\n';
  }
  report(5, "bias-exploitability gap", [&]() -> Outcome {
    if (!corpus) return {false, "synthetic corpus could not be built"};
    return bias_gap(*corpus, setup);
  });
  report(6, "debias invariants", [&]() -> Outcome {
    if (!corpus) return {false, "synthetic corpus could not be built"};
    return debias_invariants(*corpus);
  });
  report(7, "matrix oracle equivalence", matrix_oracle);
  report(8, "preprocessing equivalence", preprocessing);
  report(9, "pipeline determinism", determinism);
  report(10, "precision/recall under compression", compression_behavior);

  std::cout << fmt::format("{} of 10 criteria passed", 10 - failures) << std::endl;
  return failures ? 1 : 0;
}
