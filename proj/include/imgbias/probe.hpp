#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "imgbias/error.hpp"
#include "imgbias/image_meta.hpp"
#include "imgbias/metrics.hpp"
#include "imgbias/rng.hpp"

namespace imgbias {

inline constexpr int kNumFeatures = 6;
inline constexpr double kQfSentinel = 101;
inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {"qf_or_sentinel", "width",    "height",
                                                                       "min_side",       "max_side", "aspect"};

/// qf (or 101 without tables), width, height, min side, max side, width/height.
using ProbeFeatures = std::array<double, kNumFeatures>;

inline ProbeFeatures extract_features(const ImageMeta& m) {
  if (m.width < 1 || m.height < 1) throw DomainError("probe features need dimensions");
  const double w = m.width, h = m.height;
  return {m.qf ? static_cast<double>(*m.qf) : kQfSentinel, w, h, std::min(w, h), std::max(w, h), w / h};
}

/// Depth-1 tree: votes GENERATED (+1) when polarity * (x[feature] > threshold ? 1 : -1) > 0.
struct Stump {
  int feature = 0;
  double threshold = 0;
  int polarity = 1;
  double weight = 0;

  int vote(const ProbeFeatures& x) const { return polarity * (x[feature] > threshold ? 1 : -1); }
  friend bool operator==(const Stump&, const Stump&) = default;
};

struct ProbeModel {
  static constexpr int kRounds = 32;
  std::vector<Stump> stumps;
  std::uint64_t seed = 0;

  double margin(const ProbeFeatures& x) const {
    double f = 0;
    for (const auto& s : stumps) f += s.weight * s.vote(x);
    return f;
  }
  /// Logistic link of the boosted margin, read as P(GENERATED).
  double score(const ProbeFeatures& x) const { return 1.0 / (1.0 + std::exp(-2.0 * margin(x))); }
  bool predicts_generated(const ProbeFeatures& x) const { return margin(x) >= 0; }

  friend bool operator==(const ProbeModel&, const ProbeModel&) = default;
};

struct ProbeSet {
  std::vector<ProbeFeatures> x;
  std::vector<bool> generated;  // label per row
};

inline ProbeSet probe_dataset(const std::vector<ImageMeta>& metas) {
  ProbeSet s;
  for (const auto& m : metas) {
    s.x.push_back(extract_features(m));
    s.generated.push_back(m.origin.is_generated());
  }
  return s;
}

/// Discrete AdaBoost over stumps, always kRounds rounds. Each round scans
/// every feature, every midpoint between consecutive distinct values, and
/// both polarities, plus a constant stump (threshold -1, below every
/// feature value). Ties keep the first candidate in that scan order.
inline ProbeModel train_probe(const ProbeSet& data, std::uint64_t seed) {
  const std::size_t n = data.x.size();
  if (data.generated.size() != n) throw DomainError("feature and label counts differ");
  const auto n_gen = static_cast<std::size_t>(std::count(data.generated.begin(), data.generated.end(), true));
  if (n_gen == 0 || n_gen == n) throw DegenerateData("probe training needs both natural and generated samples");

  std::array<std::vector<std::size_t>, kNumFeatures> order;
  for (int f = 0; f < kNumFeatures; ++f) {
    order[f].resize(n);
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return data.x[a][f] < data.x[b][f]; });
  }

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  ProbeModel model;
  model.seed = seed;
  for (int round = 0; round < ProbeModel::kRounds; ++round) {
    double w_nat = 0, w_all = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w_all += w[i];
      if (!data.generated[i]) w_nat += w[i];
    }

    Stump best{0, -1.0, 1, 0};
    double best_err = w_nat;  // constant +1: every natural is an error
    if (w_all - w_nat < best_err) {
      best.polarity = -1;
      best_err = w_all - w_nat;
    }
    for (int f = 0; f < kNumFeatures; ++f) {
      const auto& idx = order[f];
      double err = w_nat;  // polarity +1 error with threshold below all values
      for (std::size_t k = 0; k < n;) {
        const double v = data.x[idx[k]][f];
        while (k < n && data.x[idx[k]][f] == v) {  // move the whole group below the threshold
          err += data.generated[idx[k]] ? w[idx[k]] : -w[idx[k]];
          ++k;
        }
        if (k == n) break;
        const double thr = 0.5 * (v + data.x[idx[k]][f]);
        if (err < best_err) {
          best = {f, thr, 1, 0};
          best_err = err;
        }
        if (w_all - err < best_err) {
          best = {f, thr, -1, 0};
          best_err = w_all - err;
        }
      }
    }

    const double e = std::clamp(best_err / w_all, 1e-10, 1.0 - 1e-10);
    best.weight = 0.5 * std::log((1.0 - e) / e);
    model.stumps.push_back(best);

    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int y = data.generated[i] ? 1 : -1;
      w[i] *= std::exp(-best.weight * y * best.vote(data.x[i]));
      sum += w[i];
    }
    for (double& wi : w) wi /= sum;
  }
  return model;
}

struct ProbeMetrics {
  Confusion confusion;
  double accuracy = 0;
  std::optional<double> precision, recall;
};

inline ProbeMetrics eval_probe(const ProbeModel& model, const ProbeSet& data) {
  if (data.x.empty()) throw EmptyEval("probe evaluation set is empty");
  ProbeMetrics r;
  for (std::size_t i = 0; i < data.x.size(); ++i) r.confusion.add(data.generated[i], model.predicts_generated(data.x[i]));
  r.accuracy = *imgbias::accuracy(r.confusion);
  r.precision = imgbias::precision(r.confusion);
  r.recall = imgbias::recall(r.confusion);
  return r;
}

/// Seeded stratified split: per label, rows are shuffled and the first
/// round-half-up(test_fraction * count) go to the test side.
inline std::vector<bool> stratified_test_mask(const std::vector<bool>& labels, double test_fraction,
                                              std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) throw DomainError("test fraction must be in (0,1)");
  Sampler rng(seed);
  std::vector<bool> test(labels.size(), false);
  for (bool label : {false, true}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) rows.push_back(i);
    rng.shuffle(rows);
    const auto k = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(rows.size()) + 0.5));
    for (std::size_t j = 0; j < k; ++j) test[rows[j]] = true;
  }
  return test;
}

inline ProbeSet subset(const ProbeSet& s, const std::vector<bool>& mask, bool keep) {
  ProbeSet out;
  for (std::size_t i = 0; i < s.x.size(); ++i)
    if (mask[i] == keep) {
      out.x.push_back(s.x[i]);
      out.generated.push_back(s.generated[i]);
    }
  return out;
}

struct ProbeRun {
  ProbeModel model;
  ProbeMetrics train, test;
  std::size_t n_train = 0, n_test = 0;
};

/// Stratified split, train on one side, evaluate on both.
inline ProbeRun run_probe(const std::vector<ImageMeta>& metas, std::uint64_t seed, double test_fraction = 0.3) {
  const ProbeSet all = probe_dataset(metas);
  const auto mask = stratified_test_mask(all.generated, test_fraction, seed);
  const ProbeSet train = subset(all, mask, false), test = subset(all, mask, true);
  ProbeRun r;
  r.model = train_probe(train, seed);
  r.train = eval_probe(r.model, train);
  r.test = eval_probe(r.model, test);
  r.n_train = train.x.size();
  r.n_test = test.x.size();
  return r;
}

inline nlohmann::ordered_json to_json(const ProbeModel& m) {
  nlohmann::ordered_json j;
  j["model"] = "imgbias.probe_stumps";
  j["version"] = 1;
  j["seed"] = m.seed;
  j["features"] = kFeatureNames;
  nlohmann::ordered_json stumps = nlohmann::ordered_json::array();
  for (const auto& s : m.stumps)
    stumps.push_back({{"feature", s.feature}, {"threshold", s.threshold}, {"polarity", s.polarity}, {"weight", s.weight}});
  j["stumps"] = stumps;
  return j;
}

inline ProbeModel probe_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("model") != "imgbias.probe_stumps" || j.at("version") != 1) throw ParseError("not a probe model");
    ProbeModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("stumps")) {
      Stump st{s.at("feature").get<int>(), s.at("threshold").get<double>(), s.at("polarity").get<int>(),
               s.at("weight").get<double>()};
      if (st.feature < 0 || st.feature >= kNumFeatures || (st.polarity != 1 && st.polarity != -1))
        throw ParseError("bad stump");
      m.stumps.push_back(st);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad probe model: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const ProbeMetrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["precision"] = m.precision ? nlohmann::ordered_json(*m.precision) : nlohmann::ordered_json(nullptr);
  j["recall"] = m.recall ? nlohmann::ordered_json(*m.recall) : nlohmann::ordered_json(nullptr);
  j["tp"] = m.confusion.tp;
  j["fp"] = m.confusion.fp;
  j["tn"] = m.confusion.tn;
  j["fn"] = m.confusion.fn;
  return j;
}

}  // namespace imgbias
