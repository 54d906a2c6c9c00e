#pragma once

#include <cstdint>
#include <vector>

#include "coilsense/dataio.hpp"
#include "coilsense/errors.hpp"

namespace coilsense {

/// Raw counts with broken as the positive class.
struct ConfusionMatrix {
  int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  int64_t total() const { return tp + fp + tn + fn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
};

inline ConfusionMatrix confusion(const std::vector<Label>& predictions,
                                 const std::vector<Label>& truth) {
  if (predictions.size() != truth.size()) {
    throw ShapeError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool pos = truth[i] == Label::broken;
    const bool pred_pos = predictions[i] == Label::broken;
    if (pos && pred_pos) ++cm.tp;
    if (pos && !pred_pos) ++cm.fn;
    if (!pos && pred_pos) ++cm.fp;
    if (!pos && !pred_pos) ++cm.tn;
  }
  return cm;
}

/// Percentages plus row-normalized confusion rates. A fraction with a zero
/// denominator is reported as 0 with its `*_defined` flag cleared rather
/// than dropped, so aggregation stays reproducible.
struct MetricsReport {
  double accuracy = 0, precision = 0, recall = 0, f_score = 0;   // percent
  double tn_rate = 0, fp_rate = 0, fn_rate = 0, tp_rate = 0;     // percent
  double prevalence = 0;                                         // fraction of positives
  bool accuracy_defined = false;
  bool precision_defined = false;
  bool recall_defined = false;
  bool f_defined = false;
  bool neg_rates_defined = false;
  bool pos_rates_defined = false;
  ConfusionMatrix cm;

  bool empty() const { return cm.total() == 0; }
};

inline MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.cm = cm;
  const int64_t total = cm.total();
  if (total == 0) return r;  // all fields stay 0 and flagged undefined
  r.accuracy = 100.0 * static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
  r.accuracy_defined = true;
  r.prevalence = static_cast<double>(cm.tp + cm.fn) / static_cast<double>(total);
  if (cm.tp + cm.fp > 0) {
    r.precision = 100.0 * static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fp);
    r.precision_defined = true;
  }
  if (cm.tp + cm.fn > 0) {
    r.recall = 100.0 * static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    r.recall_defined = true;
  }
  if (r.precision + r.recall > 0.0) {
    r.f_score = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    r.f_defined = true;
  }
  if (cm.tn + cm.fp > 0) {
    r.tn_rate = 100.0 * static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
    r.fp_rate = 100.0 * static_cast<double>(cm.fp) / static_cast<double>(cm.tn + cm.fp);
    r.neg_rates_defined = true;
  }
  if (cm.tp + cm.fn > 0) {
    r.tp_rate = 100.0 * static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    r.fn_rate = 100.0 * static_cast<double>(cm.fn) / static_cast<double>(cm.tp + cm.fn);
    r.pos_rates_defined = true;
  }
  return r;
}

/// Arithmetic fold averages of the reported values (undefined values enter
/// as their reported zeros; the undefined counts ride along).
struct MeanMetrics {
  double accuracy = 0, precision = 0, recall = 0, f_score = 0;
  double tn_rate = 0, fp_rate = 0, fn_rate = 0, tp_rate = 0;
  int64_t folds = 0;
  int64_t undefined_precision = 0, undefined_recall = 0, undefined_f = 0;
};

inline MeanMetrics mean_metrics(const std::vector<MetricsReport>& reports) {
  MeanMetrics m;
  m.folds = static_cast<int64_t>(reports.size());
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.accuracy += r.accuracy;
    m.precision += r.precision;
    m.recall += r.recall;
    m.f_score += r.f_score;
    m.tn_rate += r.tn_rate;
    m.fp_rate += r.fp_rate;
    m.fn_rate += r.fn_rate;
    m.tp_rate += r.tp_rate;
    m.undefined_precision += !r.precision_defined;
    m.undefined_recall += !r.recall_defined;
    m.undefined_f += !r.f_defined;
  }
  const double n = static_cast<double>(reports.size());
  m.accuracy /= n;
  m.precision /= n;
  m.recall /= n;
  m.f_score /= n;
  m.tn_rate /= n;
  m.fp_rate /= n;
  m.fn_rate /= n;
  m.tp_rate /= n;
  return m;
}

}  // namespace coilsense
