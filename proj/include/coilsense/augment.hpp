#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coilsense/dataio.hpp"
#include "coilsense/errors.hpp"
#include "coilsense/manifest.hpp"
#include "coilsense/rng.hpp"
#include "coilsense/textio.hpp"

namespace coilsense {

// ---------------------------------------------------------------------------
// Sigmoid fade synthesis
// ---------------------------------------------------------------------------

/// Translation (mu, along the timestep axis) and scaling (sigma) of one fade
/// curve. Sampling ranges: sigma uniform in [0.2, 1], mu uniform in
/// [-13.3, 13.3].
struct FadeParams {
  double mu = 0.0;
  double sigma = 1.0;
};

inline constexpr double kFadeSigmaMin = 0.2;
inline constexpr double kFadeSigmaMax = 1.0;
inline constexpr double kFadeMuMin = -13.3;
inline constexpr double kFadeMuMax = 13.3;

inline FadeParams sample_fade_params(Rng& rng) {
  FadeParams p;
  p.mu = rng.uniform(kFadeMuMin, kFadeMuMax);
  p.sigma = rng.uniform(kFadeSigmaMin, kFadeSigmaMax);
  return p;
}

/// p(j) = 1 / (1 + exp(-(j - mu) / sigma)), evaluated branch-stably.
inline double sigmoid_fade(double j, const FadeParams& p) {
  const double t = (j - p.mu) / p.sigma;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

/// Blends a normal and a broken window through one shared fade curve:
/// x[f][j] = (1 - p(j)) * normal[f][j] + p(j) * broken[f][j] for all four
/// features. The result is labeled broken and flagged synthetic.
inline Window synthesize_broken(const Window& normal, const Window& broken,
                                const FadeParams& params) {
  if (normal.length != broken.length) {
    throw ShapeError("synthesize_broken: window lengths differ (" +
                     std::to_string(normal.length) + " vs " + std::to_string(broken.length) +
                     ")");
  }
  Window out;
  out.coil_id = "aug:" + normal.coil_id + "+" + broken.coil_id;
  out.label = Label::broken;
  out.synthetic = true;
  out.length = normal.length;
  out.values.resize(normal.values.size());
  for (int64_t j = 0; j < out.length; ++j) {
    const double p = sigmoid_fade(static_cast<double>(j), params);
    for (int f = 0; f < kNumFeatures; ++f) {
      out.at(f, j) = (1.0 - p) * normal.at(f, j) + p * broken.at(f, j);
    }
  }
  return out;
}

/// Smallest number of appended windows that lifts the broken fraction of
/// `total` windows (holding `broken` broken ones) to at least `target`.
inline int64_t windows_needed_for_fraction(int64_t total, int64_t broken, double target) {
  if (!(target > 0.0 && target < 1.0)) {
    throw ConfigError("augment: target fraction must lie in (0,1)");
  }
  const double exact = (target * static_cast<double>(total) - static_cast<double>(broken)) /
                       (1.0 - target);
  int64_t a = static_cast<int64_t>(std::ceil(exact - 1e-9));
  if (a < 0) a = 0;
  auto reaches = [&](int64_t add) {
    return static_cast<double>(broken + add) >=
           target * static_cast<double>(total + add);
  };
  while (!reaches(a)) ++a;
  while (a > 0 && reaches(a - 1)) --a;
  return a;
}

/// Appends synthesized broken windows (fresh source pair and fade curve per
/// window, sources drawn from the original set) until the broken fraction
/// reaches the target. Never modifies or removes an existing window; a
/// target at or below the current fraction is a no-op.
inline int64_t augment_dataset(std::vector<Window>& windows, double target_broken_fraction,
                               Rng& rng) {
  const int64_t total = static_cast<int64_t>(windows.size());
  if (total == 0) throw ConfigError("augment: empty window set");
  std::vector<size_t> normals, brokens;
  for (size_t i = 0; i < windows.size(); ++i) {
    (windows[i].label == Label::broken ? brokens : normals).push_back(i);
  }
  const int64_t need = windows_needed_for_fraction(
      total, static_cast<int64_t>(brokens.size()), target_broken_fraction);
  if (need == 0) return 0;
  if (brokens.empty()) {
    throw ConfigError("augment: target unreachable, no broken source windows");
  }
  if (normals.empty()) {
    throw ConfigError("augment: no normal source windows");
  }
  windows.reserve(windows.size() + static_cast<size_t>(need));
  for (int64_t i = 0; i < need; ++i) {
    const Window& n = windows[normals[static_cast<size_t>(rng.below(normals.size()))]];
    const Window& b = windows[brokens[static_cast<size_t>(rng.below(brokens.size()))]];
    windows.push_back(synthesize_broken(n, b, sample_fade_params(rng)));
  }
  return need;
}

// ---------------------------------------------------------------------------
// Synthetic corpus generator
// ---------------------------------------------------------------------------

/// Stand-in for the proprietary fleet telemetry: per-coil feature baselines
/// plus autocorrelated noise; broken coils additionally ramp a random
/// nonempty feature subset along a sigmoid toward a shifted level from a
/// sampled onset instant.
struct CorpusConfig {
  int64_t coils = 1000;
  int64_t days = 1;
  int64_t records_per_day = 40;
  double broken_fraction = 0.022;
  double degradation_shift = 5.0;  // in units of noise_sd, per affected feature
  double noise_sd = 1.0;
  double ar_coeff = 0.5;        // AR(1) coefficient of the record noise
  double coil_sd = 0.5;         // per-coil baseline spread, in noise_sd units
  double onset_min_frac = 0.2;  // onset position bounds, fraction of the series
  double onset_max_frac = 0.7;
  double fade_width_min = 0.5;  // degradation sigmoid width, in instants
  double fade_width_max = 2.5;
  double feature_affect_prob = 0.7;  // per-feature chance of degrading (nonempty overall)
  uint64_t seed = 0;

  std::array<double, 4> feature_mean{12.0, 35.0, 1.8, 25.0};
  std::array<double, 4> feature_scale{2.0, 6.0, 0.4, 5.0};

  void validate() const {
    if (coils < 2 || days < 1 || records_per_day < 1 || records_per_day > 86400) {
      throw ConfigError("corpus: counts out of range");
    }
    if (!(broken_fraction > 0.0 && broken_fraction < 1.0)) {
      throw ConfigError("corpus: broken fraction must lie in (0,1)");
    }
    if (!(noise_sd > 0.0) || !(std::abs(ar_coeff) < 1.0) || coil_sd < 0.0) {
      throw ConfigError("corpus: bad noise configuration");
    }
    if (!(onset_min_frac >= 0.0 && onset_min_frac < onset_max_frac && onset_max_frac <= 1.0)) {
      throw ConfigError("corpus: onset bounds must satisfy 0 <= min < max <= 1");
    }
    if (!(fade_width_min > 0.0 && fade_width_min <= fade_width_max)) {
      throw ConfigError("corpus: bad fade width bounds");
    }
    if (!(feature_affect_prob > 0.0 && feature_affect_prob <= 1.0)) {
      throw ConfigError("corpus: feature_affect_prob must lie in (0,1]");
    }
    if (degradation_shift <= 0.0) throw ConfigError("corpus: degradation shift must be positive");
  }
};

struct CoilMeta {
  std::string coil_id;
  uint64_t seed = 0;
  Label label = Label::normal;
  int64_t onset = -1;         // instant index; broken coils only
  double fade_width = 0.0;    // instants; broken coils only
  unsigned affected_mask = 0; // bit f set: feature f degrades
};

struct Corpus {
  std::vector<CoilSequence> sequences;
  std::vector<CoilMeta> meta;
  int64_t broken_coils = 0;
};

inline constexpr int64_t kCorpusEpochBase = 1556668800;  // 2019-05-01T00:00:00Z

inline Corpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  const int64_t n_broken = std::llround(cfg.broken_fraction * static_cast<double>(cfg.coils));
  if (n_broken < 1 || n_broken >= cfg.coils) {
    throw ConfigError("corpus: broken fraction yields " + std::to_string(n_broken) +
                      " broken coils of " + std::to_string(cfg.coils));
  }

  std::vector<int64_t> order(static_cast<size_t>(cfg.coils));
  for (int64_t i = 0; i < cfg.coils; ++i) order[static_cast<size_t>(i)] = i;
  Rng assign(derive_seed(cfg.seed, SeedStream::corpus_assign));
  assign.shuffle(order);
  std::vector<bool> is_broken(static_cast<size_t>(cfg.coils), false);
  for (int64_t i = 0; i < n_broken; ++i) is_broken[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;

  int id_width = 1;
  for (int64_t v = cfg.coils; v >= 10; v /= 10) ++id_width;

  const int64_t total_instants = cfg.days * cfg.records_per_day;
  const int64_t record_spacing = 86400 / cfg.records_per_day;

  Corpus corpus;
  corpus.broken_coils = n_broken;
  corpus.sequences.reserve(static_cast<size_t>(cfg.coils));
  corpus.meta.reserve(static_cast<size_t>(cfg.coils));

  for (int64_t i = 0; i < cfg.coils; ++i) {
    CoilMeta meta;
    std::string num = std::to_string(i + 1);
    meta.coil_id = "coil-" + std::string(static_cast<size_t>(id_width) - num.size(), '0') + num;
    meta.seed = derive_seed(cfg.seed, SeedStream::corpus_coil, static_cast<uint64_t>(i));
    meta.label = is_broken[static_cast<size_t>(i)] ? Label::broken : Label::normal;
    Rng rng(meta.seed);

    std::array<double, 4> baseline;
    for (int f = 0; f < kNumFeatures; ++f) {
      baseline[static_cast<size_t>(f)] =
          cfg.feature_mean[static_cast<size_t>(f)] +
          cfg.coil_sd * cfg.feature_scale[static_cast<size_t>(f)] * rng.normal();
    }
    if (meta.label == Label::broken) {
      for (int tries = 0; tries < 100 && meta.affected_mask == 0; ++tries) {
        for (int f = 0; f < kNumFeatures; ++f) {
          if (rng.bernoulli(cfg.feature_affect_prob)) meta.affected_mask |= 1u << f;
        }
      }
      if (meta.affected_mask == 0) meta.affected_mask = 1;
      meta.onset = static_cast<int64_t>(
          rng.uniform(cfg.onset_min_frac, cfg.onset_max_frac) *
          static_cast<double>(total_instants));
      meta.fade_width = rng.uniform(cfg.fade_width_min, cfg.fade_width_max);
    }

    CoilSequence seq;
    seq.coil_id = meta.coil_id;
    seq.label = meta.label;
    seq.records.reserve(static_cast<size_t>(total_instants));
    std::array<double, 4> ar{};
    const double innov = cfg.noise_sd * std::sqrt(1.0 - cfg.ar_coeff * cfg.ar_coeff);
    const FadeParams fade{static_cast<double>(meta.onset), meta.fade_width};
    for (int64_t t = 0; t < total_instants; ++t) {
      FeatureRecord r;
      r.timestamp = kCorpusEpochBase + (t / cfg.records_per_day) * 86400 +
                    (t % cfg.records_per_day) * record_spacing;
      const double p = meta.label == Label::broken
                           ? sigmoid_fade(static_cast<double>(t), fade)
                           : 0.0;
      for (int f = 0; f < kNumFeatures; ++f) {
        const size_t fi = static_cast<size_t>(f);
        ar[fi] = t == 0 ? cfg.noise_sd * rng.normal() : cfg.ar_coeff * ar[fi] + innov * rng.normal();
        double v = baseline[fi] + cfg.feature_scale[fi] * ar[fi];
        if (meta.affected_mask & (1u << f)) {
          v += cfg.feature_scale[fi] * cfg.degradation_shift * cfg.noise_sd * p;
        }
        r.set_feature(f, v);
      }
      seq.records.push_back(r);
    }
    corpus.sequences.push_back(std::move(seq));
    corpus.meta.push_back(std::move(meta));
  }
  return corpus;
}

inline std::string affected_feature_names(unsigned mask) {
  std::string out;
  for (int f = 0; f < kNumFeatures; ++f) {
    if (mask & (1u << f)) {
      if (!out.empty()) out += '+';
      out += kFeatureNames[static_cast<size_t>(f)];
    }
  }
  return out;
}

inline void corpus_config_to_manifest(const CorpusConfig& cfg, Manifest& m,
                                      const std::string& prefix = "config.") {
  m.set_i64(prefix + "coils", cfg.coils);
  m.set_i64(prefix + "days", cfg.days);
  m.set_i64(prefix + "records_per_day", cfg.records_per_day);
  m.set_double(prefix + "broken_fraction", cfg.broken_fraction);
  m.set_double(prefix + "degradation_shift", cfg.degradation_shift);
  m.set_double(prefix + "noise_sd", cfg.noise_sd);
  m.set_double(prefix + "ar_coeff", cfg.ar_coeff);
  m.set_double(prefix + "coil_sd", cfg.coil_sd);
  m.set_double(prefix + "onset_min_frac", cfg.onset_min_frac);
  m.set_double(prefix + "onset_max_frac", cfg.onset_max_frac);
  m.set_double(prefix + "fade_width_min", cfg.fade_width_min);
  m.set_double(prefix + "fade_width_max", cfg.fade_width_max);
  m.set_double(prefix + "feature_affect_prob", cfg.feature_affect_prob);
  m.set_u64(prefix + "seed", cfg.seed);
  for (int f = 0; f < kNumFeatures; ++f) {
    const size_t fi = static_cast<size_t>(f);
    m.set_double(prefix + "feature_mean." + kFeatureNames[fi], cfg.feature_mean[fi]);
    m.set_double(prefix + "feature_scale." + kFeatureNames[fi], cfg.feature_scale[fi]);
  }
}

inline CorpusConfig corpus_config_from_manifest(const Manifest& m,
                                                const std::string& prefix = "config.") {
  CorpusConfig cfg;
  cfg.coils = m.get_i64(prefix + "coils");
  cfg.days = m.get_i64(prefix + "days");
  cfg.records_per_day = m.get_i64(prefix + "records_per_day");
  cfg.broken_fraction = m.get_double(prefix + "broken_fraction");
  cfg.degradation_shift = m.get_double(prefix + "degradation_shift");
  cfg.noise_sd = m.get_double(prefix + "noise_sd");
  cfg.ar_coeff = m.get_double(prefix + "ar_coeff");
  cfg.coil_sd = m.get_double(prefix + "coil_sd");
  cfg.onset_min_frac = m.get_double(prefix + "onset_min_frac");
  cfg.onset_max_frac = m.get_double(prefix + "onset_max_frac");
  cfg.fade_width_min = m.get_double(prefix + "fade_width_min");
  cfg.fade_width_max = m.get_double(prefix + "fade_width_max");
  cfg.feature_affect_prob = m.get_double(prefix + "feature_affect_prob");
  cfg.seed = m.get_u64(prefix + "seed");
  for (int f = 0; f < kNumFeatures; ++f) {
    const size_t fi = static_cast<size_t>(f);
    cfg.feature_mean[fi] = m.get_double(prefix + "feature_mean." + kFeatureNames[fi]);
    cfg.feature_scale[fi] = m.get_double(prefix + "feature_scale." + kFeatureNames[fi]);
  }
  return cfg;
}

struct CorpusFiles {
  std::filesystem::path csv;
  std::filesystem::path jsonl;
  std::filesystem::path manifest;
  int64_t coils = 0;
  int64_t broken_coils = 0;
};

/// Generates and writes data.csv + data.jsonl + manifest.txt into out_dir.
inline CorpusFiles write_corpus(const CorpusConfig& cfg, const std::filesystem::path& out_dir) {
  Corpus corpus = generate_corpus(cfg);
  std::filesystem::create_directories(out_dir);
  CorpusFiles files;
  files.csv = out_dir / "data.csv";
  files.jsonl = out_dir / "data.jsonl";
  files.manifest = out_dir / "manifest.txt";
  files.coils = cfg.coils;
  files.broken_coils = corpus.broken_coils;
  save_sequences(files.csv, corpus.sequences, DataFormat::csv);
  save_sequences(files.jsonl, corpus.sequences, DataFormat::jsonl);

  Manifest m;
  m.set("command", "generate");
  corpus_config_to_manifest(cfg, m);
  m.set_i64("counts.coils", cfg.coils);
  m.set_i64("counts.broken_coils", corpus.broken_coils);
  m.set_i64("counts.normal_coils", cfg.coils - corpus.broken_coils);
  m.set_i64("counts.records_per_coil", cfg.days * cfg.records_per_day);
  for (const CoilMeta& meta : corpus.meta) {
    const std::string key = "coil." + meta.coil_id;
    m.set(key + ".label", to_string(meta.label));
    m.set_u64(key + ".seed", meta.seed);
    if (meta.label == Label::broken) {
      m.set_i64(key + ".onset", meta.onset);
      m.set_double(key + ".fade_width", meta.fade_width);
      m.set(key + ".affected", affected_feature_names(meta.affected_mask));
    }
  }
  m.write_file(files.manifest);
  return files;
}

}  // namespace coilsense
