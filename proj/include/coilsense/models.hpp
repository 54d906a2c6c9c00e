#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coilsense/checksum.hpp"
#include "coilsense/errors.hpp"
#include "coilsense/layers.hpp"
#include "coilsense/rng.hpp"
#include "coilsense/tensor.hpp"
#include "coilsense/textio.hpp"

namespace coilsense {

enum class ModelKind { fcn, resnet, tcnn, lstm };
enum class HeadKind { softmax, sigmoid };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::fcn: return "fcn";
    case ModelKind::resnet: return "resnet";
    case ModelKind::tcnn: return "tcnn";
    case ModelKind::lstm: return "lstm";
  }
  throw ConfigError("unknown model kind");
}

inline ModelKind model_kind_from_string(std::string_view s) {
  if (s == "fcn") return ModelKind::fcn;
  if (s == "resnet") return ModelKind::resnet;
  if (s == "tcnn") return ModelKind::tcnn;
  if (s == "lstm") return ModelKind::lstm;
  throw ConfigError("unknown model kind '" + std::string(s) + "' (expected fcn|resnet|tcnn|lstm)");
}

/// Declarative architecture description. Defaults reproduce the four fixed
/// structures; any override travels with the spec through manifests and
/// checkpoints.
struct ModelSpec {
  ModelKind kind = ModelKind::fcn;
  int64_t input_channels = 4;
  int64_t sequence_length = 40;
  int64_t num_classes = 2;

  std::vector<int64_t> fcn_filters{128, 256, 128};
  std::vector<int64_t> fcn_kernels{8, 5, 3};

  int64_t resnet_blocks = 3;
  int64_t resnet_filters = 64;
  std::vector<int64_t> resnet_kernels{8, 5, 3};

  std::vector<int64_t> tcnn_filters{6, 12};
  int64_t tcnn_kernel = 7;
  int64_t tcnn_pool = 3;
  int64_t tcnn_pool_stride = 3;

  int64_t lstm_conv_filters = 64;
  int64_t lstm_conv_kernel = 3;
  int64_t lstm_pool = 3;
  int64_t lstm_pool_stride = 1;
  int64_t lstm_units = 32;
  double lstm_dropout = 0.2;

  static ModelSpec defaults(ModelKind k) {
    ModelSpec s;
    s.kind = k;
    return s;
  }

  void validate() const {
    if (input_channels < 1 || sequence_length < 1 || num_classes < 2) {
      throw ConfigError("model spec: channels/length/classes out of range");
    }
    if (fcn_filters.size() != fcn_kernels.size() || fcn_filters.empty()) {
      throw ConfigError("model spec: fcn filter/kernel lists must align");
    }
    if (resnet_kernels.empty() || resnet_blocks < 1 || resnet_filters < 1) {
      throw ConfigError("model spec: bad resnet configuration");
    }
    if (tcnn_filters.size() != 2 || tcnn_kernel < 1 || tcnn_pool < 1 || tcnn_pool_stride < 1) {
      throw ConfigError("model spec: bad tcnn configuration");
    }
    if (lstm_conv_filters < 1 || lstm_conv_kernel < 1 || lstm_pool < 1 ||
        lstm_pool_stride < 1 || lstm_units < 1) {
      throw ConfigError("model spec: bad lstm configuration");
    }
    if (!(lstm_dropout >= 0.0 && lstm_dropout < 1.0)) {
      throw ConfigError("model spec: lstm_dropout must lie in [0,1)");
    }
  }

  /// Canonical text: fixed key order, one `key = value` per line.
  std::string to_text() const {
    std::string out;
    auto kv = [&out](const std::string& k, const std::string& v) {
      out += k;
      out += " = ";
      out += v;
      out += '\n';
    };
    kv("kind", coilsense::to_string(kind));
    kv("input_channels", format_i64(input_channels));
    kv("sequence_length", format_i64(sequence_length));
    kv("num_classes", format_i64(num_classes));
    kv("fcn_filters", join_i64(fcn_filters));
    kv("fcn_kernels", join_i64(fcn_kernels));
    kv("resnet_blocks", format_i64(resnet_blocks));
    kv("resnet_filters", format_i64(resnet_filters));
    kv("resnet_kernels", join_i64(resnet_kernels));
    kv("tcnn_filters", join_i64(tcnn_filters));
    kv("tcnn_kernel", format_i64(tcnn_kernel));
    kv("tcnn_pool", format_i64(tcnn_pool));
    kv("tcnn_pool_stride", format_i64(tcnn_pool_stride));
    kv("lstm_conv_filters", format_i64(lstm_conv_filters));
    kv("lstm_conv_kernel", format_i64(lstm_conv_kernel));
    kv("lstm_pool", format_i64(lstm_pool));
    kv("lstm_pool_stride", format_i64(lstm_pool_stride));
    kv("lstm_units", format_i64(lstm_units));
    kv("lstm_dropout", format_double(lstm_dropout));
    return out;
  }

  static ModelSpec from_text(const std::string& text) {
    ModelSpec s;
    bool have_kind = false;
    for (auto line : split(text, '\n')) {
      line = trim(line);
      if (line.empty() || line.front() == '#') continue;
      const size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError("model spec: malformed line '" + std::string(line) + "'");
      }
      const std::string key{trim(line.substr(0, eq))};
      const std::string_view val = trim(line.substr(eq + 1));
      if (key == "kind") {
        s.kind = model_kind_from_string(val);
        have_kind = true;
      } else if (key == "input_channels") {
        s.input_channels = parse_i64(val, key);
      } else if (key == "sequence_length") {
        s.sequence_length = parse_i64(val, key);
      } else if (key == "num_classes") {
        s.num_classes = parse_i64(val, key);
      } else if (key == "fcn_filters") {
        s.fcn_filters = parse_i64_list(val, key);
      } else if (key == "fcn_kernels") {
        s.fcn_kernels = parse_i64_list(val, key);
      } else if (key == "resnet_blocks") {
        s.resnet_blocks = parse_i64(val, key);
      } else if (key == "resnet_filters") {
        s.resnet_filters = parse_i64(val, key);
      } else if (key == "resnet_kernels") {
        s.resnet_kernels = parse_i64_list(val, key);
      } else if (key == "tcnn_filters") {
        s.tcnn_filters = parse_i64_list(val, key);
      } else if (key == "tcnn_kernel") {
        s.tcnn_kernel = parse_i64(val, key);
      } else if (key == "tcnn_pool") {
        s.tcnn_pool = parse_i64(val, key);
      } else if (key == "tcnn_pool_stride") {
        s.tcnn_pool_stride = parse_i64(val, key);
      } else if (key == "lstm_conv_filters") {
        s.lstm_conv_filters = parse_i64(val, key);
      } else if (key == "lstm_conv_kernel") {
        s.lstm_conv_kernel = parse_i64(val, key);
      } else if (key == "lstm_pool") {
        s.lstm_pool = parse_i64(val, key);
      } else if (key == "lstm_pool_stride") {
        s.lstm_pool_stride = parse_i64(val, key);
      } else if (key == "lstm_units") {
        s.lstm_units = parse_i64(val, key);
      } else if (key == "lstm_dropout") {
        s.lstm_dropout = parse_double(val, key);
      } else {
        throw ParseError("model spec: unknown key '" + key + "'");
      }
    }
    if (!have_kind) throw ParseError("model spec: missing 'kind'");
    s.validate();
    return s;
  }

  HeadKind head() const {
    return kind == ModelKind::lstm ? HeadKind::sigmoid : HeadKind::softmax;
  }
};

/// Temporal lengths after each length-changing stage, input included.
/// Standalone arithmetic so tests can audit the layer graphs against it.
inline std::vector<int64_t> sequence_length_trace(const ModelSpec& spec) {
  std::vector<int64_t> trace{spec.sequence_length};
  switch (spec.kind) {
    case ModelKind::fcn:
      for (int64_t k : spec.fcn_kernels) {
        trace.push_back(conv_out_len(trace.back(), k, Padding::same_zero, 1));
      }
      break;
    case ModelKind::resnet:
      for (int64_t b = 0; b < spec.resnet_blocks; ++b) {
        int64_t len = trace.back();
        for (int64_t k : spec.resnet_kernels) {
          len = conv_out_len(len, k, Padding::same_zero, 1);
        }
        trace.push_back(len);
      }
      break;
    case ModelKind::tcnn:
      trace.push_back(conv_out_len(trace.back(), spec.tcnn_kernel, Padding::none, 1));
      trace.push_back(conv_out_len(trace.back(), spec.tcnn_kernel, Padding::none, 1));
      trace.push_back(pool_out_len(trace.back(), spec.tcnn_pool, spec.tcnn_pool_stride));
      break;
    case ModelKind::lstm:
      for (int stage = 0; stage < 2; ++stage) {
        trace.push_back(pool_out_len(trace.back(), spec.lstm_pool, spec.lstm_pool_stride));
        trace.push_back(conv_out_len(trace.back(), spec.lstm_conv_kernel, Padding::none, 1));
      }
      break;
  }
  return trace;
}

/// An instantiated architecture: an ordered, named layer stack producing
/// 2-class logits, plus the score head. Parameter names are stable across
/// save/load; all randomness (init, dropout masks) flows from the build seed.
template <std::floating_point Real>
class Model {
 public:
  Model(ModelSpec spec, uint64_t seed)
      : spec_(std::move(spec)),
        seed_(seed),
        head_(spec_.head()),
        dropout_rng_(derive_seed(seed, SeedStream::model_dropout)) {}

  const ModelSpec& spec() const { return spec_; }
  uint64_t seed() const { return seed_; }
  HeadKind head() const { return head_; }
  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  void add_layer(std::string name, std::unique_ptr<Layer<Real>> layer) {
    layers_.emplace_back(std::move(name), std::move(layer));
  }

  /// Pre-head class scores, shape [batch, num_classes].
  Tensor<Real> logits(const Tensor<Real>& batch) {
    if (batch.ndim() != 3 || batch.dim(1) != spec_.input_channels ||
        batch.dim(2) != spec_.sequence_length) {
      throw ShapeError("model: expected input [n," + std::to_string(spec_.input_channels) +
                       "," + std::to_string(spec_.sequence_length) + "], got " +
                       shape_str(batch.shape()));
    }
    Tensor<Real> x = batch;
    for (auto& [name, layer] : layers_) {
      x = layer->forward(x, mode_, dropout_rng_);
    }
    return x;
  }

  /// Class scores: softmax rows for the convolutional heads, elementwise
  /// sigmoid for the recurrent head.
  Tensor<Real> forward(const Tensor<Real>& batch) {
    auto z = logits(batch);
    return head_ == HeadKind::softmax ? softmax(z, -1) : sigmoid(z);
  }

  std::vector<NamedTensor<Real>> state() {
    std::vector<NamedTensor<Real>> out;
    for (auto& [name, layer] : layers_) layer->collect_state(name, out);
    return out;
  }

  std::vector<Tensor<Real>> trainable_parameters() {
    std::vector<Tensor<Real>> out;
    for (auto& nt : state()) {
      if (nt.trainable) out.push_back(nt.tensor);
    }
    return out;
  }

  int64_t parameter_count() {
    int64_t n = 0;
    for (auto& nt : state()) {
      if (nt.trainable) n += static_cast<int64_t>(nt.tensor.size());
    }
    return n;
  }

  size_t layer_count() const { return layers_.size(); }

 private:
  ModelSpec spec_;
  uint64_t seed_;
  HeadKind head_;
  Mode mode_ = Mode::train;
  Rng dropout_rng_;
  std::vector<std::pair<std::string, std::unique_ptr<Layer<Real>>>> layers_;
};

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

template <std::floating_point Real>
Model<Real> build_fcn(const ModelSpec& spec, uint64_t seed) {
  if (spec.kind != ModelKind::fcn) throw ConfigError("build_fcn: spec kind is not fcn");
  spec.validate();
  Model<Real> model(spec, seed);
  Rng init(derive_seed(seed, SeedStream::model_init));
  int64_t in = spec.input_channels;
  for (size_t i = 0; i < spec.fcn_filters.size(); ++i) {
    const std::string block = "block" + std::to_string(i + 1);
    model.add_layer(block + ".conv",
                    std::make_unique<Conv1dLayer<Real>>(in, spec.fcn_filters[i],
                                                        spec.fcn_kernels[i],
                                                        Padding::same_zero, init));
    model.add_layer(block + ".bn", std::make_unique<BatchNorm1dLayer<Real>>(spec.fcn_filters[i]));
    model.add_layer(block + ".relu", std::make_unique<ReluLayer<Real>>());
    in = spec.fcn_filters[i];
  }
  model.add_layer("gap", std::make_unique<GlobalAvgPoolLayer<Real>>());
  model.add_layer("dense", std::make_unique<DenseLayer<Real>>(in, spec.num_classes, init));
  return model;
}

template <std::floating_point Real>
Model<Real> build_resnet(const ModelSpec& spec, uint64_t seed) {
  if (spec.kind != ModelKind::resnet) throw ConfigError("build_resnet: spec kind is not resnet");
  spec.validate();
  Model<Real> model(spec, seed);
  Rng init(derive_seed(seed, SeedStream::model_init));
  int64_t in = spec.input_channels;
  for (int64_t b = 0; b < spec.resnet_blocks; ++b) {
    model.add_layer("block" + std::to_string(b + 1),
                    std::make_unique<ResidualBlock<Real>>(in, spec.resnet_filters,
                                                          spec.resnet_kernels, init));
    in = spec.resnet_filters;
  }
  model.add_layer("gap", std::make_unique<GlobalAvgPoolLayer<Real>>());
  model.add_layer("dense", std::make_unique<DenseLayer<Real>>(in, spec.num_classes, init));
  return model;
}

template <std::floating_point Real>
Model<Real> build_tcnn(const ModelSpec& spec, uint64_t seed) {
  if (spec.kind != ModelKind::tcnn) throw ConfigError("build_tcnn: spec kind is not tcnn");
  spec.validate();
  Model<Real> model(spec, seed);
  Rng init(derive_seed(seed, SeedStream::model_init));
  model.add_layer("conv1",
                  std::make_unique<Conv1dLayer<Real>>(spec.input_channels, spec.tcnn_filters[0],
                                                      spec.tcnn_kernel, Padding::none, init));
  model.add_layer("act1", std::make_unique<SigmoidLayer<Real>>());
  model.add_layer("conv2",
                  std::make_unique<Conv1dLayer<Real>>(spec.tcnn_filters[0], spec.tcnn_filters[1],
                                                      spec.tcnn_kernel, Padding::none, init));
  model.add_layer("act2", std::make_unique<SigmoidLayer<Real>>());
  model.add_layer("pool",
                  std::make_unique<LocalAvgPoolLayer<Real>>(spec.tcnn_pool, spec.tcnn_pool_stride));
  model.add_layer("flatten", std::make_unique<FlattenLayer<Real>>());
  const int64_t flat = spec.tcnn_filters[1] * sequence_length_trace(spec).back();
  model.add_layer("dense", std::make_unique<DenseLayer<Real>>(flat, spec.num_classes, init));
  return model;
}

template <std::floating_point Real>
Model<Real> build_lstm(const ModelSpec& spec, uint64_t seed) {
  if (spec.kind != ModelKind::lstm) throw ConfigError("build_lstm: spec kind is not lstm");
  spec.validate();
  Model<Real> model(spec, seed);
  Rng init(derive_seed(seed, SeedStream::model_init));
  int64_t in = spec.input_channels;
  for (int stage = 1; stage <= 2; ++stage) {
    const std::string s = "stage" + std::to_string(stage);
    model.add_layer(s + ".pool", std::make_unique<LocalAvgPoolLayer<Real>>(
                                     spec.lstm_pool, spec.lstm_pool_stride));
    model.add_layer(s + ".dropout", std::make_unique<DropoutLayer<Real>>(spec.lstm_dropout));
    model.add_layer(s + ".conv",
                    std::make_unique<Conv1dLayer<Real>>(in, spec.lstm_conv_filters,
                                                        spec.lstm_conv_kernel, Padding::none,
                                                        init));
    in = spec.lstm_conv_filters;
  }
  model.add_layer("to_time_major", std::make_unique<ToTimeMajorLayer<Real>>());
  model.add_layer("lstm1", std::make_unique<LstmLayer<Real>>(in, spec.lstm_units, true, init));
  model.add_layer("lstm2",
                  std::make_unique<LstmLayer<Real>>(spec.lstm_units, spec.lstm_units, false, init));
  model.add_layer("dense",
                  std::make_unique<DenseLayer<Real>>(spec.lstm_units, spec.num_classes, init));
  return model;
}

template <std::floating_point Real>
Model<Real> build_model(const ModelSpec& spec, uint64_t seed) {
  switch (spec.kind) {
    case ModelKind::fcn: return build_fcn<Real>(spec, seed);
    case ModelKind::resnet: return build_resnet<Real>(spec, seed);
    case ModelKind::tcnn: return build_tcnn<Real>(spec, seed);
    case ModelKind::lstm: return build_lstm<Real>(spec, seed);
  }
  throw ConfigError("build_model: unknown kind");
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// Single-file container, little-endian:
//   magic "CSCKPT", u16 version, u8 scalar_size (4|8), u8 zero,
//   u64 build_seed, u32 spec_len, spec text,
//   u64 entry_count, entries (u32 name_len, name, u32 ndim, i64 dims[],
//   u8 trainable, raw scalars), u32 crc32 of everything before it.

namespace detail {

inline void put_bytes(std::string& buf, const void* p, size_t n) {
  buf.append(static_cast<const char*>(p), n);
}
template <class T>
void put_pod(std::string& buf, T v) {
  put_bytes(buf, &v, sizeof(v));
}

class ByteReader {
 public:
  ByteReader(const std::string& buf, size_t limit) : buf_(buf), limit_(limit) {}
  template <class T>
  T get() {
    T v{};
    raw(&v, sizeof(v));
    return v;
  }
  std::string get_string(size_t n) {
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  void raw(void* dst, size_t n) {
    if (pos_ + n > limit_) throw CheckpointError("checkpoint: truncated file");
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  size_t pos() const { return pos_; }

 private:
  const std::string& buf_;
  size_t limit_;
  size_t pos_ = 0;
};

}  // namespace detail

inline constexpr char kCheckpointMagic[6] = {'C', 'S', 'C', 'K', 'P', 'T'};
inline constexpr uint16_t kCheckpointVersion = 1;

template <std::floating_point Real>
void save_checkpoint(Model<Real>& model, const std::filesystem::path& path) {
  std::string buf;
  detail::put_bytes(buf, kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::put_pod<uint16_t>(buf, kCheckpointVersion);
  detail::put_pod<uint8_t>(buf, static_cast<uint8_t>(sizeof(Real)));
  detail::put_pod<uint8_t>(buf, 0);
  detail::put_pod<uint64_t>(buf, model.seed());
  const std::string spec_text = model.spec().to_text();
  detail::put_pod<uint32_t>(buf, static_cast<uint32_t>(spec_text.size()));
  buf += spec_text;
  auto state = model.state();
  detail::put_pod<uint64_t>(buf, static_cast<uint64_t>(state.size()));
  for (auto& nt : state) {
    detail::put_pod<uint32_t>(buf, static_cast<uint32_t>(nt.name.size()));
    buf += nt.name;
    const Shape& sh = nt.tensor.shape();
    detail::put_pod<uint32_t>(buf, static_cast<uint32_t>(sh.size()));
    for (int64_t d : sh) detail::put_pod<int64_t>(buf, d);
    detail::put_pod<uint8_t>(buf, nt.trainable ? 1 : 0);
    auto v = nt.tensor.values();
    detail::put_bytes(buf, v.data(), v.size() * sizeof(Real));
  }
  detail::put_pod<uint32_t>(buf, crc32_of(buf));

  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("checkpoint: cannot open '" + tmp.string() + "' for writing");
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("checkpoint: write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

/// Bytes-per-scalar stored in a checkpoint (4 or 8); checks magic/version
/// but not the checksum.
inline int checkpoint_scalar_size(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open '" + path.string() + "'");
  char magic[6];
  uint16_t version;
  uint8_t scalar;
  is.read(magic, 6);
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  is.read(reinterpret_cast<char*>(&scalar), sizeof(scalar));
  if (!is || std::memcmp(magic, kCheckpointMagic, 6) != 0) {
    throw CheckpointError("checkpoint: bad magic in '" + path.string() + "'");
  }
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  if (scalar != 4 && scalar != 8) throw CheckpointError("checkpoint: bad scalar size");
  return scalar;
}

template <std::floating_point Real>
Model<Real> load_checkpoint(const std::filesystem::path& path,
                            std::optional<ModelSpec> expected = std::nullopt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open '" + path.string() + "'");
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kCheckpointMagic) + 4 + 8 + 4 + 8 + 4) {
    throw CheckpointError("checkpoint: file too short");
  }
  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  if (crc32_of(buf.data(), buf.size() - 4) != stored_crc) {
    throw CheckpointError("checkpoint: checksum mismatch (corrupt file)");
  }

  detail::ByteReader rd(buf, buf.size() - 4);
  char magic[6];
  rd.raw(magic, 6);
  if (std::memcmp(magic, kCheckpointMagic, 6) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const auto version = rd.get<uint16_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto scalar = rd.get<uint8_t>();
  if (scalar != sizeof(Real)) {
    throw CheckpointError("checkpoint: stores " + std::to_string(int(scalar) * 8) +
                          "-bit scalars, loader expects " + std::to_string(sizeof(Real) * 8) +
                          "-bit");
  }
  rd.get<uint8_t>();
  const auto seed = rd.get<uint64_t>();
  const auto spec_len = rd.get<uint32_t>();
  const std::string spec_text = rd.get_string(spec_len);
  const ModelSpec spec = ModelSpec::from_text(spec_text);
  if (expected && expected->to_text() != spec_text) {
    throw CheckpointError("checkpoint: stored spec (kind " + coilsense::to_string(spec.kind) +
                          ") does not match the requested spec (kind " +
                          coilsense::to_string(expected->kind) + ")");
  }

  Model<Real> model = build_model<Real>(spec, seed);
  auto state = model.state();
  const auto entries = rd.get<uint64_t>();
  if (entries != state.size()) {
    throw CheckpointError("checkpoint: expected " + std::to_string(state.size()) +
                          " tensors, file has " + std::to_string(entries));
  }
  for (auto& nt : state) {
    const auto name_len = rd.get<uint32_t>();
    const std::string name = rd.get_string(name_len);
    if (name != nt.name) {
      throw CheckpointError("checkpoint: tensor '" + name + "' where '" + nt.name +
                            "' was expected");
    }
    const auto ndim = rd.get<uint32_t>();
    Shape sh(ndim);
    for (auto& d : sh) d = rd.get<int64_t>();
    if (sh != nt.tensor.shape()) {
      throw CheckpointError("checkpoint: tensor '" + name + "' has shape " + shape_str(sh) +
                            ", model expects " + shape_str(nt.tensor.shape()));
    }
    rd.get<uint8_t>();
    auto dst = nt.tensor.values_mut();
    rd.raw(dst.data(), dst.size() * sizeof(Real));
  }
  model.set_mode(Mode::eval);
  return model;
}

}  // namespace coilsense
