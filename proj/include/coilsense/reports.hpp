#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coilsense/harness.hpp"
#include "coilsense/manifest.hpp"
#include "coilsense/metrics.hpp"
#include "coilsense/models.hpp"
#include "coilsense/textio.hpp"

namespace coilsense {

inline std::string join_strings(const std::vector<std::string>& v, char delim = ',') {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(delim);
    out += v[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config <-> manifest
// ---------------------------------------------------------------------------

inline void train_config_to_manifest(const TrainConfig& cfg, Manifest& m,
                                     const std::string& prefix = "config.train.") {
  m.set_i64(prefix + "epochs", cfg.epochs);
  m.set_i64(prefix + "batch_size", cfg.batch_size);
  m.set_double(prefix + "learning_rate", cfg.learning_rate);
  m.set_double(prefix + "beta1", cfg.beta1);
  m.set_double(prefix + "beta2", cfg.beta2);
  m.set_double(prefix + "epsilon", cfg.epsilon);
  m.set_i64(prefix + "patience", cfg.patience);
}

inline TrainConfig train_config_from_manifest(const Manifest& m,
                                              const std::string& prefix = "config.train.") {
  TrainConfig cfg;
  cfg.epochs = m.get_i64(prefix + "epochs");
  cfg.batch_size = m.get_i64(prefix + "batch_size");
  cfg.learning_rate = m.get_double(prefix + "learning_rate");
  cfg.beta1 = m.get_double(prefix + "beta1");
  cfg.beta2 = m.get_double(prefix + "beta2");
  cfg.epsilon = m.get_double(prefix + "epsilon");
  cfg.patience = m.get_i64(prefix + "patience");
  return cfg;
}

inline void cv_config_to_manifest(const CvConfig& cfg, Manifest& m) {
  m.set_i64("config.k", cfg.k);
  m.set_double("config.train_fraction", cfg.train_fraction);
  if (cfg.augment_target) m.set_double("config.augment_target", *cfg.augment_target);
  m.set_i64("config.window_length", cfg.window_length);
  m.set_i64("config.window_stride", cfg.window_stride);
  m.set_u64("config.seed", cfg.seed);
  m.set_i64("config.jobs", cfg.jobs);
  train_config_to_manifest(cfg.train, m);
}

inline CvConfig cv_config_from_manifest(const Manifest& m) {
  CvConfig cfg;
  cfg.k = m.get_i64("config.k");
  cfg.train_fraction = m.get_double("config.train_fraction");
  if (m.contains("config.augment_target")) {
    cfg.augment_target = m.get_double("config.augment_target");
  }
  cfg.window_length = m.get_i64("config.window_length");
  cfg.window_stride = m.get_i64("config.window_stride");
  cfg.seed = m.get_u64("config.seed");
  cfg.jobs = m.get_i64("config.jobs");
  cfg.train = train_config_from_manifest(m);
  return cfg;
}

// ---------------------------------------------------------------------------
// Results -> manifest
// ---------------------------------------------------------------------------

inline void metrics_to_manifest(const MetricsReport& r, Manifest& m, const std::string& prefix) {
  m.set_double(prefix + "accuracy", r.accuracy);
  m.set_double(prefix + "precision", r.precision);
  m.set_double(prefix + "recall", r.recall);
  m.set_double(prefix + "f_score", r.f_score);
  m.set_double(prefix + "tn_rate", r.tn_rate);
  m.set_double(prefix + "fp_rate", r.fp_rate);
  m.set_double(prefix + "fn_rate", r.fn_rate);
  m.set_double(prefix + "tp_rate", r.tp_rate);
  m.set_double(prefix + "prevalence", r.prevalence);
  m.set_i64(prefix + "tp", r.cm.tp);
  m.set_i64(prefix + "fp", r.cm.fp);
  m.set_i64(prefix + "tn", r.cm.tn);
  m.set_i64(prefix + "fn", r.cm.fn);
  m.set_bool(prefix + "precision_defined", r.precision_defined);
  m.set_bool(prefix + "recall_defined", r.recall_defined);
  m.set_bool(prefix + "f_defined", r.f_defined);
}

inline void cv_result_to_manifest(const CvResult& res, Manifest& m,
                                  const std::string& prefix = "") {
  for (const auto& f : res.folds) {
    const std::string fp = prefix + "fold." + std::to_string(f.fold) + ".";
    m.set(fp + "test_coils", join_strings(f.test_coils));
    m.set(fp + "train_coils", join_strings(f.train_coils));
    m.set(fp + "val_coils", join_strings(f.val_coils));
    m.set(fp + "normalizer_fit_coils", join_strings(f.normalizer_fit_coils));
    m.set_i64(fp + "train_windows", f.train_windows);
    m.set_i64(fp + "train_broken_windows", f.train_broken_windows);
    m.set_i64(fp + "augmented_added", f.augmented_added);
    m.set_i64(fp + "val_windows", f.val_windows);
    m.set_i64(fp + "test_windows", f.test_windows);
    m.set_i64(fp + "eval_synthetic_windows", f.eval_synthetic_windows);
    m.set_i64(fp + "best_epoch", f.training.best_epoch);
    m.set_double(fp + "best_val_loss", f.training.best_val_loss);
    m.set_i64(fp + "epochs_run", static_cast<int64_t>(f.training.history.size()));
    metrics_to_manifest(f.report, m, fp + "metrics.");
  }
  m.set_double(prefix + "mean.accuracy", res.mean.accuracy);
  m.set_double(prefix + "mean.precision", res.mean.precision);
  m.set_double(prefix + "mean.recall", res.mean.recall);
  m.set_double(prefix + "mean.f_score", res.mean.f_score);
  m.set_double(prefix + "mean.tn_rate", res.mean.tn_rate);
  m.set_double(prefix + "mean.fp_rate", res.mean.fp_rate);
  m.set_double(prefix + "mean.fn_rate", res.mean.fn_rate);
  m.set_double(prefix + "mean.tp_rate", res.mean.tp_rate);
  metrics_to_manifest(res.pooled, m, prefix + "pooled.");
}

// ---------------------------------------------------------------------------
// CSV / JSON
// ---------------------------------------------------------------------------

inline std::string metrics_csv(const CvResult& res, const std::string& model_name) {
  std::string out =
      "model,fold,accuracy,precision,recall,f_score,tn_rate,fp_rate,fn_rate,tp_rate,"
      "tp,fp,tn,fn,prevalence\n";
  auto row = [&](const std::string& fold, const MetricsReport& r) {
    out += model_name + "," + fold + "," + format_double(r.accuracy) + "," +
           format_double(r.precision) + "," + format_double(r.recall) + "," +
           format_double(r.f_score) + "," + format_double(r.tn_rate) + "," +
           format_double(r.fp_rate) + "," + format_double(r.fn_rate) + "," +
           format_double(r.tp_rate) + "," + format_i64(r.cm.tp) + "," + format_i64(r.cm.fp) +
           "," + format_i64(r.cm.tn) + "," + format_i64(r.cm.fn) + "," +
           format_double(r.prevalence) + "\n";
  };
  for (const auto& f : res.folds) row(std::to_string(f.fold), f.report);
  const auto& m = res.mean;
  out += model_name + ",mean," + format_double(m.accuracy) + "," + format_double(m.precision) +
         "," + format_double(m.recall) + "," + format_double(m.f_score) + "," +
         format_double(m.tn_rate) + "," + format_double(m.fp_rate) + "," +
         format_double(m.fn_rate) + "," + format_double(m.tp_rate) + ",,,,,\n";
  row("pooled", res.pooled);
  return out;
}

inline nlohmann::json metrics_json_one(const MetricsReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f_score"] = r.f_score;
  j["tn_rate"] = r.tn_rate;
  j["fp_rate"] = r.fp_rate;
  j["fn_rate"] = r.fn_rate;
  j["tp_rate"] = r.tp_rate;
  j["prevalence"] = r.prevalence;
  j["tp"] = r.cm.tp;
  j["fp"] = r.cm.fp;
  j["tn"] = r.cm.tn;
  j["fn"] = r.cm.fn;
  j["precision_defined"] = r.precision_defined;
  j["recall_defined"] = r.recall_defined;
  j["f_defined"] = r.f_defined;
  return j;
}

inline nlohmann::json metrics_json(const CvResult& res, const std::string& model_name) {
  nlohmann::json j;
  j["model"] = model_name;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : res.folds) {
    auto jf = metrics_json_one(f.report);
    jf["fold"] = f.fold;
    jf["train_windows"] = f.train_windows;
    jf["train_broken_windows"] = f.train_broken_windows;
    jf["augmented_added"] = f.augmented_added;
    jf["test_windows"] = f.test_windows;
    jf["eval_synthetic_windows"] = f.eval_synthetic_windows;
    jf["best_epoch"] = f.training.best_epoch;
    jf["best_val_loss"] = f.training.best_val_loss;
    j["folds"].push_back(jf);
  }
  j["mean"] = {{"accuracy", res.mean.accuracy},
               {"precision", res.mean.precision},
               {"recall", res.mean.recall},
               {"f_score", res.mean.f_score},
               {"tn_rate", res.mean.tn_rate},
               {"fp_rate", res.mean.fp_rate},
               {"fn_rate", res.mean.fn_rate},
               {"tp_rate", res.mean.tp_rate},
               {"folds", res.mean.folds},
               {"undefined_precision", res.mean.undefined_precision},
               {"undefined_recall", res.mean.undefined_recall},
               {"undefined_f", res.mean.undefined_f}};
  j["pooled"] = metrics_json_one(res.pooled);
  return j;
}

inline std::string history_csv(const CvResult& res) {
  std::string out = "fold,epoch,train_loss,val_loss\n";
  for (const auto& f : res.folds) {
    for (const auto& e : f.training.history) {
      out += std::to_string(f.fold) + "," + std::to_string(e.epoch) + "," +
             format_double(e.train_loss) + "," + format_double(e.val_loss) + "\n";
    }
  }
  return out;
}

inline std::string history_csv(const TrainResult& res) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (const auto& e : res.history) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.val_loss) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text tables
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}
inline std::string pad_left(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}
inline std::string pad_right(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}
}  // namespace detail

/// Fold-averaged measures and row-normalized confusion rates, one row per
/// model.
inline std::string cv_table(const std::vector<std::pair<std::string, CvResult>>& rows) {
  std::string out = detail::pad_right("%", 10);
  for (const char* h : {"Accuracy", "Precision", "Recall", "F-Score"}) {
    out += detail::pad_left(h, 11);
  }
  out += "  |";
  for (const char* h : {"TN", "FP", "FN", "TP"}) out += detail::pad_left(h, 8);
  out += '\n';
  for (const auto& [name, res] : rows) {
    const auto& m = res.mean;
    out += detail::pad_right(name, 10);
    for (double v : {m.accuracy, m.precision, m.recall, m.f_score}) {
      out += detail::pad_left(detail::fixed2(v), 11);
    }
    out += "  |";
    for (double v : {m.tn_rate, m.fp_rate, m.fn_rate, m.tp_rate}) {
      out += detail::pad_left(detail::fixed2(v), 8);
    }
    out += '\n';
  }
  return out;
}

/// One row per augmentation arm, labeled by the mean broken-instance count
/// in the training folds.
inline std::string sweep_table(const SweepResult& sweep) {
  std::string out = detail::pad_right("Broken instances", 20);
  for (const char* h : {"Accuracy", "Precision", "Recall", "F-Score"}) {
    out += detail::pad_left(h, 11);
  }
  out += "  |";
  for (const char* h : {"TN", "FP", "FN", "TP"}) out += detail::pad_left(h, 8);
  out += '\n';
  for (const auto& arm : sweep.arms) {
    const int64_t folds = static_cast<int64_t>(arm.result.folds.size());
    const double avg_broken =
        folds ? static_cast<double>(arm.train_broken_windows) / static_cast<double>(folds) : 0;
    const double pct = arm.train_windows
                           ? 100.0 * static_cast<double>(arm.train_broken_windows) /
                                 static_cast<double>(arm.train_windows)
                           : 0;
    std::string label = std::to_string(static_cast<int64_t>(avg_broken + 0.5)) + " (" +
                        detail::fixed2(pct) + "%)";
    out += detail::pad_right(label, 20);
    const auto& m = arm.result.mean;
    for (double v : {m.accuracy, m.precision, m.recall, m.f_score}) {
      out += detail::pad_left(detail::fixed2(v), 11);
    }
    out += "  |";
    for (double v : {m.tn_rate, m.fp_rate, m.fn_rate, m.tp_rate}) {
      out += detail::pad_left(detail::fixed2(v), 8);
    }
    out += '\n';
  }
  return out;
}

}  // namespace coilsense
