#pragma once

#include <optional>

namespace imgbias {

/// Binary counts with GENERATED as the positive class.
struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;

  long total() const { return tp + fp + tn + fn; }
  void add(bool truth_generated, bool predicted_generated) {
    if (truth_generated)
      ++(predicted_generated ? tp : fn);
    else
      ++(predicted_generated ? fp : tn);
  }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp, fp += o.fp, tn += o.tn, fn += o.fn;
    return *this;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Fractions in [0,1]; nullopt when the denominator is zero.
inline std::optional<double> accuracy(const Confusion& c) {
  if (c.total() == 0) return std::nullopt;
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}
inline std::optional<double> precision(const Confusion& c) {
  if (c.tp + c.fp == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}
inline std::optional<double> recall(const Confusion& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

}  // namespace imgbias
