#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "imgbias/debias.hpp"
#include "imgbias/error.hpp"
#include "imgbias/eval.hpp"
#include "imgbias/scan.hpp"
#include "imgbias/transcode.hpp"

namespace imgbias {

struct CorpusSpec {
  std::string name;
  std::filesystem::path root;
  Origin origin;
  std::string subset;
  std::string class_pattern;
};

/// Everything a run needs besides its command-line inputs. Relative corpus
/// roots resolve against the config file's directory.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;  // 0: one per hardware thread
  std::optional<std::filesystem::path> out;
  std::vector<CorpusSpec> corpora;
  ConstraintConfig constraints;
  std::string split = "jpeg96";
  CompressionSeries series = CompressionSeries::standard_robustness();
  double probe_test_fraction = 0.3;
  GeneratorOrder generators = GeneratorOrder::genimage();
  double threshold = 0.5;
  int bin_width = 50;
  int max_edge = 1050;
  std::optional<std::string> size_condition;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  return out;
}

template <class T>
T parse_value(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      throw std::invalid_argument(v);
    } else if constexpr (std::is_same_v<T, double>) {
      std::size_t pos = 0;
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return d;
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
      std::size_t pos = 0;
      const auto u = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return u;
    } else {
      std::size_t pos = 0;
      const long l = std::stol(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return static_cast<T>(l);
    }
  } catch (const std::logic_error&) {
    throw ParseError("config [" + section + "] " + key + ": bad value '" + v + "'");
  }
}

}  // namespace detail

/// Parses an INI document. Known sections: [run], [corpus:NAME], [constraints],
/// [series], [probe], [generators], [eval]. Unknown sections or keys are errors.
inline RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ParseError("config: key '" + section + "' outside a section");
    auto unknown = [&](const std::string& key) { throw ParseError("config [" + section + "]: unknown key '" + key + "'"); };
    if (section == "run") {
      for (const auto& [k, v] : body) {
        if (k == "seed") c.seed = detail::parse_value<std::uint64_t>(section, k, v.data());
        else if (k == "jobs") c.jobs = detail::parse_value<unsigned>(section, k, v.data());
        else if (k == "out") c.out = base_dir / detail::trim(v.data());
        else unknown(k);
      }
    } else if (section.rfind("corpus:", 0) == 0) {
      CorpusSpec cs;
      cs.name = section.substr(7);
      bool has_root = false, has_origin = false;
      for (const auto& [k, v] : body) {
        const std::string val = detail::trim(v.data());
        if (k == "root") {
          cs.root = base_dir / val;
          has_root = true;
        } else if (k == "origin") {
          cs.origin = Origin::parse(val);
          has_origin = true;
        } else if (k == "subset") {
          cs.subset = val;
        } else if (k == "class_pattern") {
          cs.class_pattern = val;
        } else {
          unknown(k);
        }
      }
      if (!has_root || !has_origin) throw ParseError("config [" + section + "]: root and origin are required");
      if (cs.subset.empty()) cs.subset = cs.name;
      LabelRule(cs.origin, cs.subset, cs.class_pattern);  // validates the pattern
      c.corpora.push_back(std::move(cs));
    } else if (section == "constraints") {
      for (const auto& [k, v] : body) {
        auto& cc = c.constraints;
        if (k == "split") {
          c.split = detail::trim(v.data());
          if (c.split != "jpeg96" && c.split != "size") throw ParseError("config [constraints] split: jpeg96 or size");
        } else if (k == "target_qf") cc.target_qf = detail::parse_value<int>(section, k, v.data());
        else if (k == "size_low") cc.size_low = detail::parse_value<int>(section, k, v.data());
        else if (k == "size_high") cc.size_high = detail::parse_value<int>(section, k, v.data());
        else if (k == "generator_native_side") cc.generator_native_side = detail::parse_value<int>(section, k, v.data());
        else if (k == "per_class_balance") cc.per_class_balance = detail::parse_value<bool>(section, k, v.data());
        else if (k == "generators") cc.generators = detail::split_list(v.data());
        else unknown(k);
      }
    } else if (section == "series") {
      for (const auto& [k, v] : body) {
        if (k != "qualities") unknown(k);
        std::vector<int> q;
        for (const auto& item : detail::split_list(v.data())) q.push_back(detail::parse_value<int>(section, k, item));
        try {
          c.series = CompressionSeries(q);
        } catch (const DomainError& e) {
          throw ParseError(std::string("config [series]: ") + e.what());
        }
      }
    } else if (section == "probe") {
      for (const auto& [k, v] : body) {
        if (k == "test_fraction") c.probe_test_fraction = detail::parse_value<double>(section, k, v.data());
        else unknown(k);
      }
      if (!(c.probe_test_fraction > 0 && c.probe_test_fraction < 1))
        throw ParseError("config [probe] test_fraction must be in (0,1)");
    } else if (section == "generators") {
      for (const auto& [k, v] : body) c.generators.set(k, detail::parse_value<int>(section, k, v.data()));
    } else if (section == "eval") {
      for (const auto& [k, v] : body) {
        if (k == "threshold") c.threshold = detail::parse_value<double>(section, k, v.data());
        else if (k == "bin_width") c.bin_width = detail::parse_value<int>(section, k, v.data());
        else if (k == "max_edge") c.max_edge = detail::parse_value<int>(section, k, v.data());
        else if (k == "size_condition") c.size_condition = detail::trim(v.data());
        else unknown(k);
      }
    } else {
      throw ParseError("config: unknown section [" + section + "]");
    }
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config " + file.generic_string());
  return parse_config(in, file.parent_path());
}

}  // namespace imgbias
