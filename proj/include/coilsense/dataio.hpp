#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "coilsense/errors.hpp"
#include "coilsense/rng.hpp"
#include "coilsense/textio.hpp"

namespace coilsense {

inline constexpr int kNumFeatures = 4;
inline constexpr std::array<const char*, 4> kFeatureNames{"cnl", "csp", "ssr", "csi"};

enum class Label { normal = 0, broken = 1 };

inline std::string to_string(Label l) { return l == Label::normal ? "normal" : "broken"; }

inline Label label_from_string(std::string_view s, const std::string& where) {
  if (s == "normal") return Label::normal;
  if (s == "broken") return Label::broken;
  throw ParseError(where + ": unknown label '" + std::string(s) +
                   "' (expected 'normal' or 'broken')");
}

/// One telemetry instant: event time plus the four image-derived features
/// (noise level, element SNR, body/local signal ratio, isocenter SNR).
struct FeatureRecord {
  int64_t timestamp = 0;  // epoch seconds
  double cnl = 0, csp = 0, ssr = 0, csi = 0;

  double feature(int i) const {
    switch (i) {
      case 0: return cnl;
      case 1: return csp;
      case 2: return ssr;
      case 3: return csi;
    }
    throw Error("feature index out of range");
  }
  void set_feature(int i, double v) {
    switch (i) {
      case 0: cnl = v; return;
      case 1: csp = v; return;
      case 2: ssr = v; return;
      case 3: csi = v; return;
    }
    throw Error("feature index out of range");
  }
};

/// One coil's time-ordered history with its outcome label.
struct CoilSequence {
  std::string coil_id;
  std::vector<FeatureRecord> records;
  Label label = Label::normal;
};

/// Fixed-length [features x timesteps] slice, the classifier's input unit.
struct Window {
  std::string coil_id;
  int64_t length = 0;
  std::vector<double> values;  // row-major [kNumFeatures][length]
  Label label = Label::normal;
  bool synthetic = false;

  double at(int f, int64_t t) const { return values[static_cast<size_t>(f * length + t)]; }
  double& at(int f, int64_t t) { return values[static_cast<size_t>(f * length + t)]; }
};

// ---------------------------------------------------------------------------
// Timestamps
// ---------------------------------------------------------------------------

namespace detail {
inline int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}
}  // namespace detail

/// Integer epoch seconds, or ISO-8601 "YYYY-MM-DD[T ]HH:MM:SS" with an
/// optional trailing 'Z'.
inline int64_t parse_timestamp(std::string_view s, const std::string& where) {
  if (s.empty()) throw ParseError(where + ": empty timestamp");
  const bool numeric = s.find_first_not_of("-0123456789") == std::string_view::npos &&
                       s.find('-', 1) == std::string_view::npos;
  if (numeric) return parse_i64(s, where + ": timestamp");
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 19 || (s[10] != 'T' && s[10] != ' ') || s[4] != '-' || s[7] != '-' ||
      s[13] != ':' || s[16] != ':') {
    throw ParseError(where + ": timestamp '" + std::string(s) +
                     "' is neither epoch seconds nor ISO-8601");
  }
  auto num = [&](size_t off, size_t len) {
    return parse_i64(s.substr(off, len), where + ": timestamp");
  };
  const int64_t year = num(0, 4), month = num(5, 2), day = num(8, 2);
  const int64_t hh = num(11, 2), mm = num(14, 2), ss = num(17, 2);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60) {
    throw ParseError(where + ": timestamp field out of range");
  }
  return detail::days_from_civil(year, static_cast<unsigned>(month),
                                 static_cast<unsigned>(day)) *
             86400 +
         hh * 3600 + mm * 60 + ss;
}

// ---------------------------------------------------------------------------
// Loading / saving
// ---------------------------------------------------------------------------

enum class DataFormat { csv, jsonl };

inline DataFormat data_format_from_path(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".csv") return DataFormat::csv;
  if (ext == ".jsonl") return DataFormat::jsonl;
  throw ConfigError("cannot infer data format from '" + p.string() +
                    "' (expected .csv or .jsonl)");
}

inline constexpr const char* kCsvHeader = "coil_id,timestamp,cnl,csp,ssr,csi,label";

namespace detail {

struct RawRow {
  std::string coil_id;
  FeatureRecord record;
  Label label;
};

inline void check_row_finite(const RawRow& row, const std::string& where) {
  for (int f = 0; f < kNumFeatures; ++f) {
    if (!std::isfinite(row.record.feature(f))) {
      throw ParseError(where + ": non-finite value for " + kFeatureNames[static_cast<size_t>(f)]);
    }
  }
}

inline RawRow parse_csv_row(std::string_view line, const std::string& where) {
  auto fields = split(line, ',');
  if (fields.size() != 7) {
    throw ParseError(where + ": expected 7 fields, got " + std::to_string(fields.size()));
  }
  RawRow row;
  row.coil_id = std::string(trim(fields[0]));
  if (row.coil_id.empty()) throw ParseError(where + ": empty coil_id");
  row.record.timestamp = parse_timestamp(trim(fields[1]), where);
  row.record.cnl = parse_double(trim(fields[2]), where + ": cnl");
  row.record.csp = parse_double(trim(fields[3]), where + ": csp");
  row.record.ssr = parse_double(trim(fields[4]), where + ": ssr");
  row.record.csi = parse_double(trim(fields[5]), where + ": csi");
  row.label = label_from_string(trim(fields[6]), where);
  check_row_finite(row, where);
  return row;
}

inline RawRow parse_jsonl_row(const std::string& line, const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || j.size() != 7) {
    throw ParseError(where + ": expected an object with exactly the 7 schema fields");
  }
  for (auto& [key, _] : j.items()) {
    static const std::unordered_set<std::string> allowed{"coil_id", "timestamp", "cnl",
                                                         "csp",     "ssr",       "csi", "label"};
    if (!allowed.count(key)) throw ParseError(where + ": unknown field '" + key + "'");
  }
  RawRow row;
  try {
    row.coil_id = j.at("coil_id").get<std::string>();
    if (j.at("timestamp").is_string()) {
      row.record.timestamp = parse_timestamp(j.at("timestamp").get<std::string>(), where);
    } else {
      row.record.timestamp = j.at("timestamp").get<int64_t>();
    }
    row.record.cnl = j.at("cnl").get<double>();
    row.record.csp = j.at("csp").get<double>();
    row.record.ssr = j.at("ssr").get<double>();
    row.record.csi = j.at("csi").get<double>();
    row.label = label_from_string(j.at("label").get<std::string>(), where);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (row.coil_id.empty()) throw ParseError(where + ": empty coil_id");
  check_row_finite(row, where);
  return row;
}

}  // namespace detail

/// Reads a dataset file into per-coil sequences: grouped by coil_id, records
/// time-sorted, one label per coil. The output is sorted by coil_id, so a
/// load is deterministic regardless of row order in the file.
inline std::vector<CoilSequence> load_sequences(const std::filesystem::path& path,
                                                DataFormat format,
                                                std::vector<std::string>* warnings = nullptr) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");

  std::map<std::string, CoilSequence> by_coil;
  std::string line;
  int64_t line_no = 0;
  int64_t rows = 0;
  bool saw_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    if (format == DataFormat::csv && !saw_header) {
      if (trim(line) != kCsvHeader) {
        throw ParseError(where + ": missing or wrong header (expected '" +
                         std::string(kCsvHeader) + "')");
      }
      saw_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    const detail::RawRow row = format == DataFormat::csv ? detail::parse_csv_row(line, where)
                                                         : detail::parse_jsonl_row(line, where);
    auto [it, inserted] = by_coil.try_emplace(row.coil_id);
    if (inserted) {
      it->second.coil_id = row.coil_id;
      it->second.label = row.label;
    } else if (it->second.label != row.label) {
      throw ParseError(where + ": coil '" + row.coil_id + "' has conflicting labels");
    }
    it->second.records.push_back(row.record);
    ++rows;
  }
  if (rows == 0 && warnings) {
    warnings->push_back("'" + path.string() + "' contains no data rows");
  }
  std::vector<CoilSequence> out;
  out.reserve(by_coil.size());
  for (auto& [id, seq] : by_coil) {
    std::stable_sort(seq.records.begin(), seq.records.end(),
                     [](const FeatureRecord& a, const FeatureRecord& b) {
                       return a.timestamp < b.timestamp;
                     });
    out.push_back(std::move(seq));
  }
  return out;
}

inline void save_sequences(const std::filesystem::path& path,
                           const std::vector<CoilSequence>& sequences, DataFormat format) {
  std::vector<const CoilSequence*> order;
  order.reserve(sequences.size());
  for (const auto& s : sequences) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const CoilSequence* a, const CoilSequence* b) { return a->coil_id < b->coil_id; });

  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  if (format == DataFormat::csv) os << kCsvHeader << '\n';
  for (const CoilSequence* seq : order) {
    for (const FeatureRecord& r : seq->records) {
      if (format == DataFormat::csv) {
        os << seq->coil_id << ',' << r.timestamp << ',' << format_double(r.cnl) << ','
           << format_double(r.csp) << ',' << format_double(r.ssr) << ','
           << format_double(r.csi) << ',' << to_string(seq->label) << '\n';
      } else {
        nlohmann::json j;
        j["coil_id"] = seq->coil_id;
        j["timestamp"] = r.timestamp;
        j["cnl"] = r.cnl;
        j["csp"] = r.csp;
        j["ssr"] = r.ssr;
        j["csi"] = r.csi;
        j["label"] = to_string(seq->label);
        os << j.dump() << '\n';
      }
    }
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

using CoilIdSet = std::unordered_set<std::string>;

/// Per-feature z-score transform, fitted on training coils only.
/// Population convention: the divisor is N.
struct Normalizer {
  std::array<double, 4> mean{};
  std::array<double, 4> stddev{};

  void apply(FeatureRecord& r) const {
    for (int f = 0; f < kNumFeatures; ++f) {
      r.set_feature(f, (r.feature(f) - mean[static_cast<size_t>(f)]) /
                           stddev[static_cast<size_t>(f)]);
    }
  }
  void apply(CoilSequence& seq) const {
    for (auto& r : seq.records) apply(r);
  }
  void apply(std::vector<CoilSequence>& seqs) const {
    for (auto& s : seqs) apply(s);
  }
};

/// `holdout`, when given, is the active test fold: fitting on any of its
/// coils is a hard error rather than silent leakage.
inline Normalizer fit_normalizer(const std::vector<CoilSequence>& train,
                                 const CoilIdSet* holdout = nullptr) {
  int64_t n = 0;
  std::array<double, 4> sum{}, sumsq{};
  for (const auto& seq : train) {
    if (holdout && holdout->count(seq.coil_id)) {
      throw LeakageError("normalizer: coil '" + seq.coil_id +
                         "' belongs to the active test fold");
    }
    for (const auto& r : seq.records) {
      for (int f = 0; f < kNumFeatures; ++f) {
        sum[static_cast<size_t>(f)] += r.feature(f);
        sumsq[static_cast<size_t>(f)] += r.feature(f) * r.feature(f);
      }
      ++n;
    }
  }
  if (n == 0) throw ConfigError("normalizer: no training records");
  Normalizer norm;
  for (int f = 0; f < kNumFeatures; ++f) {
    const size_t i = static_cast<size_t>(f);
    norm.mean[i] = sum[i] / static_cast<double>(n);
    const double var = sumsq[i] / static_cast<double>(n) - norm.mean[i] * norm.mean[i];
    norm.stddev[i] = std::sqrt(std::max(var, 0.0));
    if (!(norm.stddev[i] > 0.0)) {
      throw NumericError(std::string("normalizer: feature '") + kFeatureNames[i] +
                         "' has zero variance");
    }
  }
  return norm;
}

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

struct WindowingResult {
  std::vector<Window> windows;
  int64_t total_records = 0;
  int64_t dropped_records = 0;
  int64_t sequences_without_windows = 0;
};

/// Fixed windows per coil; a trailing remainder shorter than `length` is
/// dropped and counted. Default stride equals length: non-overlapping days.
inline WindowingResult window_sequences(const std::vector<CoilSequence>& sequences,
                                        int64_t length = 40, int64_t stride = 40) {
  if (length < 1 || stride < 1) throw ConfigError("windowing: length and stride must be positive");
  WindowingResult res;
  for (const auto& seq : sequences) {
    const int64_t n = static_cast<int64_t>(seq.records.size());
    res.total_records += n;
    int64_t made = 0;
    for (int64_t start = 0; start + length <= n; start += stride) {
      Window w;
      w.coil_id = seq.coil_id;
      w.label = seq.label;
      w.length = length;
      w.values.resize(static_cast<size_t>(kNumFeatures) * static_cast<size_t>(length));
      for (int64_t t = 0; t < length; ++t) {
        const FeatureRecord& r = seq.records[static_cast<size_t>(start + t)];
        for (int f = 0; f < kNumFeatures; ++f) w.at(f, t) = r.feature(f);
      }
      res.windows.push_back(std::move(w));
      ++made;
    }
    const int64_t covered =
        made == 0 ? 0 : (stride >= length ? made * length : (made - 1) * stride + length);
    res.dropped_records += n - covered;
    if (made == 0) ++res.sequences_without_windows;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Splits and folds
// ---------------------------------------------------------------------------

struct SplitResult {
  std::vector<CoilSequence> train;
  std::vector<CoilSequence> validation;
};

/// Coil-granular stratified split. Per class, round-half-toward-train:
/// n_train = floor(fraction * n + 0.5).
inline SplitResult stratified_split(const std::vector<CoilSequence>& coils,
                                    double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("stratified_split: train fraction must lie in (0,1)");
  }
  std::vector<size_t> normal_idx, broken_idx;
  for (size_t i = 0; i < coils.size(); ++i) {
    (coils[i].label == Label::normal ? normal_idx : broken_idx).push_back(i);
  }
  if (normal_idx.empty() || broken_idx.empty()) {
    throw ConfigError("stratified_split: a class is absent from the input");
  }
  SplitResult out;
  auto deal = [&](std::vector<size_t>& idx, SeedStream stream) {
    // sorted-by-id base order makes the shuffle independent of input order
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return coils[a].coil_id < coils[b].coil_id; });
    Rng rng(derive_seed(seed, stream));
    rng.shuffle(idx);
    const size_t n_train = static_cast<size_t>(
        std::floor(train_fraction * static_cast<double>(idx.size()) + 0.5));
    for (size_t i = 0; i < idx.size(); ++i) {
      (i < n_train ? out.train : out.validation).push_back(coils[idx[i]]);
    }
  };
  deal(normal_idx, SeedStream::split_normal);
  deal(broken_idx, SeedStream::split_broken);
  auto by_id = [](const CoilSequence& a, const CoilSequence& b) { return a.coil_id < b.coil_id; };
  std::sort(out.train.begin(), out.train.end(), by_id);
  std::sort(out.validation.begin(), out.validation.end(), by_id);
  return out;
}

struct FoldAssignment {
  std::vector<std::string> test_coil_ids;  // sorted
};

/// Partitions the coil set into k test folds, resampling until every fold's
/// test set contains both classes (bounded retries). Whole coils move
/// together, so no coil can straddle the train/test boundary.
inline std::vector<FoldAssignment> leave_coils_out_folds(const std::vector<CoilSequence>& coils,
                                                         int64_t k, uint64_t seed,
                                                         int max_attempts = 1000) {
  if (k < 2) throw ConfigError("folds: k must be at least 2");
  if (k > static_cast<int64_t>(coils.size())) throw ConfigError("folds: k exceeds coil count");
  int64_t broken = 0;
  for (const auto& c : coils) broken += c.label == Label::broken;
  const int64_t normal = static_cast<int64_t>(coils.size()) - broken;
  if (broken < k || normal < k) {
    throw ConfigError("folds: need at least k coils of each class (have " +
                      std::to_string(normal) + " normal, " + std::to_string(broken) +
                      " broken, k=" + std::to_string(k) + ")");
  }

  std::vector<size_t> base(coils.size());
  for (size_t i = 0; i < base.size(); ++i) base[i] = i;
  std::sort(base.begin(), base.end(),
            [&](size_t a, size_t b) { return coils[a].coil_id < coils[b].coil_id; });

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    auto idx = base;
    Rng rng(derive_seed(seed, SeedStream::folds, static_cast<uint64_t>(attempt)));
    rng.shuffle(idx);
    std::vector<FoldAssignment> folds(static_cast<size_t>(k));
    const int64_t n = static_cast<int64_t>(idx.size());
    const int64_t chunk = n / k, extra = n % k;
    int64_t pos = 0;
    bool ok = true;
    for (int64_t f = 0; f < k; ++f) {
      const int64_t take = chunk + (f < extra ? 1 : 0);
      bool has_normal = false, has_broken = false;
      auto& fold = folds[static_cast<size_t>(f)];
      for (int64_t i = 0; i < take; ++i) {
        const CoilSequence& c = coils[idx[static_cast<size_t>(pos++)]];
        fold.test_coil_ids.push_back(c.coil_id);
        (c.label == Label::broken ? has_broken : has_normal) = true;
      }
      if (!has_normal || !has_broken) {
        ok = false;
        break;
      }
    }
    if (ok) {
      for (auto& f : folds) std::sort(f.test_coil_ids.begin(), f.test_coil_ids.end());
      return folds;
    }
  }
  throw ConfigError("folds: could not assign both classes to every test fold after " +
                    std::to_string(max_attempts) + " attempts");
}

}  // namespace coilsense
