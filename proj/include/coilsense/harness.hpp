#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coilsense/adam.hpp"
#include "coilsense/augment.hpp"
#include "coilsense/dataio.hpp"
#include "coilsense/errors.hpp"
#include "coilsense/metrics.hpp"
#include "coilsense/models.hpp"
#include "coilsense/rng.hpp"
#include "coilsense/tensor.hpp"

namespace coilsense {

struct TrainConfig {
  int64_t epochs = 100;
  int64_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t patience = 20;
  uint64_t seed = 0;

  void validate() const {
    if (epochs < 0 || batch_size < 1 || patience < 1) {
      throw ConfigError("train: epochs/batch/patience out of range");
    }
    if (!(learning_rate > 0)) throw ConfigError("train: learning rate must be positive");
  }
};

struct EpochStats {
  int64_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int64_t best_epoch = -1;
  double best_val_loss = std::numeric_limits<double>::infinity();
};

namespace detail {

/// Windows flattened once into contiguous Real storage; batches are gathered
/// by index without repeated conversion.
template <std::floating_point Real>
class WindowDataset {
 public:
  explicit WindowDataset(const std::vector<Window>& windows) {
    if (windows.empty()) return;
    length_ = windows.front().length;
    count_ = static_cast<int64_t>(windows.size());
    values_.resize(static_cast<size_t>(count_) * kNumFeatures * static_cast<size_t>(length_));
    labels_.reserve(windows.size());
    for (int64_t i = 0; i < count_; ++i) {
      const Window& w = windows[static_cast<size_t>(i)];
      if (w.length != length_) throw ShapeError("dataset: mixed window lengths");
      for (size_t j = 0; j < w.values.size(); ++j) {
        values_[static_cast<size_t>(i) * w.values.size() + j] = static_cast<Real>(w.values[j]);
      }
      labels_.push_back(w.label);
    }
  }

  int64_t size() const { return count_; }
  int64_t length() const { return length_; }
  Label label(int64_t i) const { return labels_[static_cast<size_t>(i)]; }

  /// Gathers rows idx[begin, end) into an input batch and one-hot targets.
  std::pair<Tensor<Real>, Tensor<Real>> gather(const std::vector<int64_t>& idx, size_t begin,
                                               size_t end) const {
    const int64_t n = static_cast<int64_t>(end - begin);
    const size_t row = static_cast<size_t>(kNumFeatures) * static_cast<size_t>(length_);
    std::vector<Real> x(static_cast<size_t>(n) * row);
    std::vector<Real> y(static_cast<size_t>(n) * 2, Real(0));
    for (size_t i = begin; i < end; ++i) {
      const int64_t src = idx[i];
      std::copy_n(values_.data() + static_cast<size_t>(src) * row, row,
                  x.data() + (i - begin) * row);
      const int cls = labels_[static_cast<size_t>(src)] == Label::broken ? 1 : 0;
      y[(i - begin) * 2 + static_cast<size_t>(cls)] = Real(1);
    }
    return {Tensor<Real>::from_data({n, kNumFeatures, length_}, std::move(x)),
            Tensor<Real>::from_data({n, 2}, std::move(y))};
  }

 private:
  int64_t count_ = 0;
  int64_t length_ = 0;
  std::vector<Real> values_;
  std::vector<Label> labels_;
};

template <std::floating_point Real>
Tensor<Real> batch_loss(Model<Real>& model, const Tensor<Real>& x, const Tensor<Real>& y) {
  auto z = model.logits(x);
  return model.head() == HeadKind::softmax ? softmax_cross_entropy(z, y)
                                           : sigmoid_binary_cross_entropy(z, y);
}

template <std::floating_point Real>
double dataset_loss(Model<Real>& model, const WindowDataset<Real>& data, int64_t batch_size) {
  std::vector<int64_t> idx(static_cast<size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), int64_t{0});
  double acc = 0;
  for (size_t at = 0; at < idx.size(); at += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(idx.size(), at + static_cast<size_t>(batch_size));
    auto [x, y] = data.gather(idx, at, end);
    acc += static_cast<double>(batch_loss(model, x, y).item()) *
           static_cast<double>(end - at);
  }
  return acc / static_cast<double>(data.size());
}

inline void require_coil_disjoint(const std::vector<Window>& a, const std::vector<Window>& b,
                                  const char* what) {
  std::unordered_set<std::string> ids;
  for (const auto& w : a) {
    if (!w.synthetic) ids.insert(w.coil_id);
  }
  for (const auto& w : b) {
    if (!w.synthetic && ids.count(w.coil_id)) {
      throw LeakageError(std::string(what) + ": coil '" + w.coil_id +
                         "' appears on both sides");
    }
  }
}

template <std::floating_point Real>
std::vector<std::vector<Real>> snapshot_state(Model<Real>& model) {
  std::vector<std::vector<Real>> snap;
  for (auto& nt : model.state()) {
    snap.emplace_back(nt.tensor.values().begin(), nt.tensor.values().end());
  }
  return snap;
}

template <std::floating_point Real>
void restore_state(Model<Real>& model, const std::vector<std::vector<Real>>& snap) {
  auto state = model.state();
  for (size_t i = 0; i < state.size(); ++i) {
    auto dst = state[i].tensor.values_mut();
    std::copy(snap[i].begin(), snap[i].end(), dst.begin());
  }
}

}  // namespace detail

/// Mini-batch Adam with per-epoch train/validation losses. Keeps the
/// parameter snapshot with the lowest validation loss and restores it into
/// the model before returning; stops early after `patience` epochs without
/// improvement. Train and validation windows must come from disjoint coils.
template <std::floating_point Real>
TrainResult train(Model<Real>& model, const std::vector<Window>& train_windows,
                  const std::vector<Window>& val_windows, const TrainConfig& cfg) {
  cfg.validate();
  detail::require_coil_disjoint(train_windows, val_windows, "train/validation");
  TrainResult result;
  if (cfg.epochs == 0) return result;
  if (train_windows.empty()) throw ConfigError("train: empty training set");
  if (val_windows.empty()) throw ConfigError("train: empty validation set");

  detail::WindowDataset<Real> train_data(train_windows);
  detail::WindowDataset<Real> val_data(val_windows);

  AdamConfig adam_cfg;
  adam_cfg.alpha = cfg.learning_rate;
  adam_cfg.beta1 = cfg.beta1;
  adam_cfg.beta2 = cfg.beta2;
  adam_cfg.epsilon = cfg.epsilon;
  auto params = model.trainable_parameters();
  for (auto& p : params) p.zero_grad();
  Adam<Real> opt(params, adam_cfg);

  std::vector<std::vector<Real>> best_state;
  int64_t since_best = 0;
  std::vector<int64_t> idx(train_windows.size());
  std::iota(idx.begin(), idx.end(), int64_t{0});

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    model.set_mode(Mode::train);
    Rng shuffle_rng(derive_seed(cfg.seed, SeedStream::train_shuffle,
                                static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(idx);
    double train_loss = 0;
    for (size_t at = 0; at < idx.size(); at += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(idx.size(), at + static_cast<size_t>(cfg.batch_size));
      try {
        auto [x, y] = train_data.gather(idx, at, end);
        auto loss = detail::batch_loss(model, x, y);
        train_loss += static_cast<double>(loss.item()) * static_cast<double>(end - at);
        loss.backward();
        opt.step();
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                           ", batch at " + std::to_string(at) + ")");
      }
    }
    train_loss /= static_cast<double>(idx.size());

    model.set_mode(Mode::eval);
    const double val_loss = detail::dataset_loss(model, val_data, cfg.batch_size);
    result.history.push_back({epoch, train_loss, val_loss});

    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best_state = detail::snapshot_state(model);
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }

  if (!best_state.empty()) detail::restore_state(model, best_state);
  model.set_mode(Mode::eval);
  return result;
}

struct Predictions {
  std::vector<Label> labels;
  std::vector<std::array<double, 2>> scores;
};

/// Eval-mode class scores and argmax labels; a tie goes to normal.
template <std::floating_point Real>
Predictions predict(Model<Real>& model, const std::vector<Window>& windows,
                    int64_t batch_size = 256) {
  Predictions out;
  if (windows.empty()) return out;
  model.set_mode(Mode::eval);
  detail::WindowDataset<Real> data(windows);
  std::vector<int64_t> idx(windows.size());
  std::iota(idx.begin(), idx.end(), int64_t{0});
  for (size_t at = 0; at < idx.size(); at += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(idx.size(), at + static_cast<size_t>(batch_size));
    auto [x, y] = data.gather(idx, at, end);
    auto scores = model.forward(x);
    auto sv = scores.values();
    for (size_t r = 0; r < end - at; ++r) {
      const double s0 = static_cast<double>(sv[2 * r]);
      const double s1 = static_cast<double>(sv[2 * r + 1]);
      out.scores.push_back({s0, s1});
      out.labels.push_back(s1 > s0 ? Label::broken : Label::normal);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct CvConfig {
  int64_t k = 10;
  double train_fraction = 0.7;
  std::optional<double> augment_target;  // training broken-window fraction
  int64_t window_length = 40;
  int64_t window_stride = 40;
  uint64_t seed = 0;
  TrainConfig train;
  int64_t jobs = 1;

  void validate() const {
    if (k < 2) throw ConfigError("cv: k must be at least 2");
    if (!(train_fraction > 0 && train_fraction < 1)) {
      throw ConfigError("cv: train fraction must lie in (0,1)");
    }
    if (window_length < 1 || window_stride < 1) throw ConfigError("cv: bad windowing");
    if (jobs < 1) throw ConfigError("cv: jobs must be positive");
    train.validate();
  }
};

struct FoldOutcome {
  int64_t fold = 0;
  MetricsReport report;
  std::vector<std::string> test_coils, train_coils, val_coils;
  std::vector<std::string> normalizer_fit_coils;  // recorded at fit time
  int64_t train_windows = 0;
  int64_t train_broken_windows = 0;  // before augmentation
  int64_t augmented_added = 0;
  int64_t val_windows = 0;
  int64_t test_windows = 0;
  int64_t eval_synthetic_windows = 0;  // audited invariant: always 0
  TrainResult training;
};

struct CvResult {
  std::vector<FoldOutcome> folds;
  MeanMetrics mean;
  MetricsReport pooled;
};

template <std::floating_point Real>
FoldOutcome run_fold(const std::vector<CoilSequence>& data, const ModelSpec& spec,
                     const CvConfig& cfg, const FoldAssignment& assignment, int64_t fold_index) {
  FoldOutcome out;
  out.fold = fold_index;
  out.test_coils = assignment.test_coil_ids;
  CoilIdSet test_ids(assignment.test_coil_ids.begin(), assignment.test_coil_ids.end());

  std::vector<CoilSequence> test_seqs, rest;
  for (const auto& seq : data) {
    (test_ids.count(seq.coil_id) ? test_seqs : rest).push_back(seq);
  }

  auto split = stratified_split(
      rest, cfg.train_fraction,
      derive_seed(cfg.seed, SeedStream::cv_split, static_cast<uint64_t>(fold_index)));
  for (const auto& s : split.train) out.train_coils.push_back(s.coil_id);
  for (const auto& s : split.validation) out.val_coils.push_back(s.coil_id);

  const Normalizer norm = fit_normalizer(split.train, &test_ids);
  out.normalizer_fit_coils = out.train_coils;
  norm.apply(split.train);
  norm.apply(split.validation);
  norm.apply(test_seqs);

  auto train_w = window_sequences(split.train, cfg.window_length, cfg.window_stride);
  auto val_w = window_sequences(split.validation, cfg.window_length, cfg.window_stride);
  auto test_w = window_sequences(test_seqs, cfg.window_length, cfg.window_stride);
  for (const auto& w : train_w.windows) out.train_broken_windows += w.label == Label::broken;

  if (cfg.augment_target) {
    Rng aug_rng(derive_seed(cfg.seed, SeedStream::cv_augment, static_cast<uint64_t>(fold_index)));
    out.augmented_added = augment_dataset(train_w.windows, *cfg.augment_target, aug_rng);
  }
  out.train_windows = static_cast<int64_t>(train_w.windows.size());
  out.val_windows = static_cast<int64_t>(val_w.windows.size());
  out.test_windows = static_cast<int64_t>(test_w.windows.size());

  auto model = build_model<Real>(
      spec, derive_seed(cfg.seed, SeedStream::cv_init, static_cast<uint64_t>(fold_index)));
  TrainConfig tcfg = cfg.train;
  tcfg.seed = derive_seed(cfg.seed, SeedStream::cv_train, static_cast<uint64_t>(fold_index));
  out.training = train(model, train_w.windows, val_w.windows, tcfg);

  for (const auto& w : test_w.windows) out.eval_synthetic_windows += w.synthetic;
  auto preds = predict(model, test_w.windows);
  std::vector<Label> truth;
  truth.reserve(test_w.windows.size());
  for (const auto& w : test_w.windows) truth.push_back(w.label);
  out.report = metrics(confusion(preds.labels, truth));
  return out;
}

/// Leave-several-coils-out cross-validation: per fold, the held-out coils
/// are evaluated by a model trained on a 70/30 stratified split of the
/// remaining coils, with the normalizer fitted on that fold's training
/// coils only. Folds run on `jobs` threads; outputs are ordered by fold, so
/// results do not depend on scheduling.
template <std::floating_point Real>
CvResult cross_validate(const std::vector<CoilSequence>& data, const ModelSpec& spec,
                        const CvConfig& cfg) {
  cfg.validate();
  spec.validate();
  const auto folds = leave_coils_out_folds(data, cfg.k, cfg.seed);

  CvResult result;
  result.folds.resize(folds.size());
  std::vector<std::exception_ptr> errors(folds.size());
  std::atomic<size_t> next{0};
  const int64_t workers = std::min<int64_t>(cfg.jobs, static_cast<int64_t>(folds.size()));
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= folds.size()) return;
      try {
        result.folds[i] =
            run_fold<Real>(data, spec, cfg, folds[i], static_cast<int64_t>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int64_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<MetricsReport> reports;
  ConfusionMatrix total;
  for (const auto& f : result.folds) {
    reports.push_back(f.report);
    total += f.report.cm;
  }
  result.mean = mean_metrics(reports);
  result.pooled = metrics(total);
  return result;
}

// ---------------------------------------------------------------------------
// Augmentation-degree sweep
// ---------------------------------------------------------------------------

struct SweepArm {
  std::string name;                     // "none" or the target fraction
  std::optional<double> target;
  CvResult result;
  int64_t train_broken_windows = 0;     // summed over folds, after augmentation
  int64_t train_windows = 0;
};

struct SweepResult {
  std::vector<SweepArm> arms;
};

/// One cross_validate per target over identical folds, splits, and seeds;
/// arms differ only in training-fold augmentation. A disengaged target is
/// the no-op arm and matches plain cross-validation exactly.
template <std::floating_point Real>
SweepResult augmentation_sweep(const std::vector<CoilSequence>& data, const ModelSpec& spec,
                               const std::vector<std::optional<double>>& targets,
                               const CvConfig& cfg) {
  if (targets.empty()) throw ConfigError("sweep: no targets");
  SweepResult out;
  for (const auto& target : targets) {
    SweepArm arm;
    arm.target = target;
    arm.name = target ? format_double(*target) : "none";
    CvConfig arm_cfg = cfg;
    arm_cfg.augment_target = target;
    arm.result = cross_validate<Real>(data, spec, arm_cfg);
    for (const auto& f : arm.result.folds) {
      arm.train_broken_windows += f.train_broken_windows + f.augmented_added;
      arm.train_windows += f.train_windows;
    }
    out.arms.push_back(std::move(arm));
  }
  return out;
}

}  // namespace coilsense
