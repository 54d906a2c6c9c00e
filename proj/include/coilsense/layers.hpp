#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "coilsense/errors.hpp"
#include "coilsense/rng.hpp"
#include "coilsense/tensor.hpp"

namespace coilsense {

enum class Mode { train, eval };

enum class Padding { same_zero, none };

/// Output length bookkeeping, kept standalone so tests can cross-check the
/// layers against plain arithmetic.
inline int64_t conv_out_len(int64_t length, int64_t kernel, Padding padding, int64_t stride) {
  if (padding == Padding::same_zero) {
    return (length + stride - 1) / stride;
  }
  if (length < kernel) {
    throw ShapeError("conv1d: input length " + std::to_string(length) +
                     " shorter than kernel " + std::to_string(kernel) + " without padding");
  }
  return (length - kernel) / stride + 1;
}

inline int64_t pool_out_len(int64_t length, int64_t pool, int64_t stride) {
  if (length < pool) {
    throw ShapeError("local_avg_pool: window " + std::to_string(pool) +
                     " longer than sequence " + std::to_string(length));
  }
  return (length - pool) / stride + 1;
}

// ---------------------------------------------------------------------------
// Free tape ops used by the layers
// ---------------------------------------------------------------------------

/// Cross-correlation (no kernel flip) over [batch, channels, length].
/// same_zero padding splits kernel-1 zeros as left=(k-1)/2, right=the rest.
template <std::floating_point Real>
Tensor<Real> conv1d(const Tensor<Real>& x, const Tensor<Real>& w, const Tensor<Real>& bias,
                    Padding padding, int64_t stride = 1) {
  if (x.ndim() != 3) throw ShapeError("conv1d: input must be [batch, channels, length]");
  if (w.ndim() != 3) throw ShapeError("conv1d: weight must be [out, in, kernel]");
  const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const int64_t O = w.dim(0), K = w.dim(2);
  if (w.dim(1) != C) {
    throw ShapeError("conv1d: input has " + std::to_string(C) + " channels, weight expects " +
                     std::to_string(w.dim(1)));
  }
  if (bias.ndim() != 1 || bias.dim(0) != O) throw ShapeError("conv1d: bias must be [out]");
  if (stride < 1) throw ShapeError("conv1d: stride must be positive");
  const int64_t Lout = conv_out_len(L, K, padding, stride);
  const int64_t pad_left = padding == Padding::same_zero ? (K - 1) / 2 : 0;

  // im2col: rows are (batch, output step), columns are (channel, tap)
  const int64_t cols = C * K;
  std::vector<Real> im2col(static_cast<size_t>(B * Lout * cols), Real(0));
  auto xv = x.values();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t t = 0; t < Lout; ++t) {
      Real* row = im2col.data() + (b * Lout + t) * cols;
      const int64_t start = t * stride - pad_left;
      for (int64_t c = 0; c < C; ++c) {
        const Real* src = xv.data() + (b * C + c) * L;
        for (int64_t k = 0; k < K; ++k) {
          const int64_t pos = start + k;
          if (pos >= 0 && pos < L) row[c * K + k] = src[pos];
        }
      }
    }
  }

  std::vector<Real> out(static_cast<size_t>(B * O * Lout));
  {
    detail::CMapM<Real> X(im2col.data(), B * Lout, cols);
    detail::CMapM<Real> W(w.values().data(), O, cols);
    detail::RowMat<Real> Y = X * W.transpose();  // [B*Lout, O]
    auto bv = bias.values();
    for (int64_t b = 0; b < B; ++b) {
      for (int64_t t = 0; t < Lout; ++t) {
        const Real* yrow = Y.data() + (b * Lout + t) * O;
        for (int64_t o = 0; o < O; ++o) {
          out[static_cast<size_t>((b * O + o) * Lout + t)] = yrow[o] + bv[static_cast<size_t>(o)];
        }
      }
    }
  }

  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op(
      "conv1d", Shape{B, O, Lout}, std::move(out), {x, w, bias},
      [B, C, L, O, K, Lout, cols, stride, pad_left, im2col = std::move(im2col)](Ctx& ctx) {
        auto g = ctx.grad();
        // regather dY into the (batch*step, out) layout used by the GEMMs
        std::vector<Real> gmat(static_cast<size_t>(B * Lout * O));
        for (int64_t b = 0; b < B; ++b) {
          for (int64_t o = 0; o < O; ++o) {
            const Real* src = g.data() + (b * O + o) * Lout;
            for (int64_t t = 0; t < Lout; ++t) {
              gmat[static_cast<size_t>((b * Lout + t) * O + o)] = src[t];
            }
          }
        }
        detail::CMapM<Real> G(gmat.data(), B * Lout, O);
        if (ctx.needs(1)) {
          detail::CMapM<Real> X(im2col.data(), B * Lout, cols);
          detail::MapM<Real> GW(ctx.parent_grad(1).data(), O, cols);
          GW.noalias() += G.transpose() * X;
        }
        if (ctx.needs(0)) {
          detail::CMapM<Real> W(ctx.parent_value(1).data(), O, cols);
          detail::RowMat<Real> GX = G * W;  // [B*Lout, cols]
          auto gx = ctx.parent_grad(0);
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t t = 0; t < Lout; ++t) {
              const Real* row = GX.data() + (b * Lout + t) * cols;
              const int64_t start = t * stride - pad_left;
              for (int64_t c = 0; c < C; ++c) {
                Real* dst = gx.data() + (b * C + c) * L;
                for (int64_t k = 0; k < K; ++k) {
                  const int64_t pos = start + k;
                  if (pos >= 0 && pos < L) dst[pos] += row[c * K + k];
                }
              }
            }
          }
        }
        if (ctx.needs(2)) {
          auto gb = ctx.parent_grad(2);
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t o = 0; o < O; ++o) {
              const Real* src = g.data() + (b * O + o) * Lout;
              Real acc = 0;
              for (int64_t t = 0; t < Lout; ++t) acc += src[t];
              gb[static_cast<size_t>(o)] += acc;
            }
          }
        }
      });
}

/// Mean over non-padded windows along the temporal axis.
template <std::floating_point Real>
Tensor<Real> local_avg_pool(const Tensor<Real>& x, int64_t pool, int64_t stride) {
  if (x.ndim() != 3) throw ShapeError("local_avg_pool: input must be [batch, channels, length]");
  if (pool < 1 || stride < 1) throw ShapeError("local_avg_pool: pool and stride must be positive");
  const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const int64_t Lout = pool_out_len(L, pool, stride);
  std::vector<Real> out(static_cast<size_t>(B * C * Lout));
  auto xv = x.values();
  const Real inv = Real(1) / static_cast<Real>(pool);
  for (int64_t bc = 0; bc < B * C; ++bc) {
    const Real* src = xv.data() + bc * L;
    Real* dst = out.data() + bc * Lout;
    for (int64_t t = 0; t < Lout; ++t) {
      Real acc = 0;
      for (int64_t k = 0; k < pool; ++k) acc += src[t * stride + k];
      dst[t] = acc * inv;
    }
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("local_avg_pool", Shape{B, C, Lout}, std::move(out), {x},
                               [B, C, L, Lout, pool, stride, inv](Ctx& ctx) {
                                 if (!ctx.needs(0)) return;
                                 auto g = ctx.grad();
                                 auto gx = ctx.parent_grad(0);
                                 for (int64_t bc = 0; bc < B * C; ++bc) {
                                   const Real* gsrc = g.data() + bc * Lout;
                                   Real* gdst = gx.data() + bc * L;
                                   for (int64_t t = 0; t < Lout; ++t) {
                                     const Real gv = gsrc[t] * inv;
                                     for (int64_t k = 0; k < pool; ++k) {
                                       gdst[t * stride + k] += gv;
                                     }
                                   }
                                 }
                               });
}

/// Mean over the whole temporal axis: [batch, channels, length] -> [batch, channels].
template <std::floating_point Real>
Tensor<Real> global_avg_pool(const Tensor<Real>& x) {
  if (x.ndim() != 3) throw ShapeError("global_avg_pool: input must be [batch, channels, length]");
  if (x.dim(2) < 1) throw ShapeError("global_avg_pool: empty temporal axis");
  return mean(x, 2);
}

/// y[b,c,l] = scale[c] * x[b,c,l] + shift[c]; the per-channel affine used by
/// inference-mode batch normalization.
template <std::floating_point Real>
Tensor<Real> channel_affine(const Tensor<Real>& x, const Tensor<Real>& scale,
                            const Tensor<Real>& shift) {
  if (x.ndim() != 3) throw ShapeError("channel_affine: input must be [batch, channels, length]");
  const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (scale.ndim() != 1 || scale.dim(0) != C || shift.ndim() != 1 || shift.dim(0) != C) {
    throw ShapeError("channel_affine: scale/shift must be [channels]");
  }
  std::vector<Real> out(x.size());
  auto xv = x.values();
  auto sv = scale.values();
  auto tv = shift.values();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t c = 0; c < C; ++c) {
      const Real s = sv[static_cast<size_t>(c)], t = tv[static_cast<size_t>(c)];
      const Real* src = xv.data() + (b * C + c) * L;
      Real* dst = out.data() + (b * C + c) * L;
      for (int64_t l = 0; l < L; ++l) dst[l] = s * src[l] + t;
    }
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op(
      "channel_affine", x.shape(), std::move(out), {x, scale, shift}, [B, C, L](Ctx& ctx) {
        auto g = ctx.grad();
        if (ctx.needs(0)) {
          auto sv = ctx.parent_value(1);
          auto gx = ctx.parent_grad(0);
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t c = 0; c < C; ++c) {
              const Real s = sv[static_cast<size_t>(c)];
              const Real* gsrc = g.data() + (b * C + c) * L;
              Real* gdst = gx.data() + (b * C + c) * L;
              for (int64_t l = 0; l < L; ++l) gdst[l] += s * gsrc[l];
            }
          }
        }
        if (ctx.needs(1)) {
          auto xv = ctx.parent_value(0);
          auto gs = ctx.parent_grad(1);
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t c = 0; c < C; ++c) {
              const Real* gsrc = g.data() + (b * C + c) * L;
              const Real* src = xv.data() + (b * C + c) * L;
              Real acc = 0;
              for (int64_t l = 0; l < L; ++l) acc += gsrc[l] * src[l];
              gs[static_cast<size_t>(c)] += acc;
            }
          }
        }
        if (ctx.needs(2)) {
          auto gt = ctx.parent_grad(2);
          for (int64_t b = 0; b < B; ++b) {
            for (int64_t c = 0; c < C; ++c) {
              const Real* gsrc = g.data() + (b * C + c) * L;
              Real acc = 0;
              for (int64_t l = 0; l < L; ++l) acc += gsrc[l];
              gt[static_cast<size_t>(c)] += acc;
            }
          }
        }
      });
}

/// Training-mode batch normalization over [batch, channels, length] with
/// population statistics across batch x time per channel. Returns the
/// normalized-and-affined output; batch statistics are reported through the
/// out-parameters for the running-average update.
template <std::floating_point Real>
Tensor<Real> batchnorm_train(const Tensor<Real>& x, const Tensor<Real>& gamma,
                             const Tensor<Real>& beta, Real eps,
                             std::vector<Real>* batch_mean, std::vector<Real>* batch_var) {
  if (x.ndim() != 3) throw ShapeError("batchnorm: input must be [batch, channels, length]");
  const int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  if (gamma.dim(0) != C || beta.dim(0) != C) {
    throw ShapeError("batchnorm: gamma/beta must be [channels]");
  }
  const int64_t n = B * L;
  if (n < 1) throw ShapeError("batchnorm: empty batch");
  auto xv = x.values();
  std::vector<Real> mu(static_cast<size_t>(C), Real(0));
  std::vector<Real> var(static_cast<size_t>(C), Real(0));
  for (int64_t c = 0; c < C; ++c) {
    Real acc = 0;
    for (int64_t b = 0; b < B; ++b) {
      const Real* src = xv.data() + (b * C + c) * L;
      for (int64_t l = 0; l < L; ++l) acc += src[l];
    }
    mu[static_cast<size_t>(c)] = acc / static_cast<Real>(n);
    Real vacc = 0;
    for (int64_t b = 0; b < B; ++b) {
      const Real* src = xv.data() + (b * C + c) * L;
      for (int64_t l = 0; l < L; ++l) {
        const Real d = src[l] - mu[static_cast<size_t>(c)];
        vacc += d * d;
      }
    }
    var[static_cast<size_t>(c)] = vacc / static_cast<Real>(n);
  }
  if (batch_mean) *batch_mean = mu;
  if (batch_var) *batch_var = var;

  std::vector<Real> inv_std(static_cast<size_t>(C));
  for (int64_t c = 0; c < C; ++c) {
    inv_std[static_cast<size_t>(c)] =
        Real(1) / std::sqrt(var[static_cast<size_t>(c)] + eps);
  }
  std::vector<Real> xhat(x.size());
  std::vector<Real> out(x.size());
  auto gv = gamma.values();
  auto bv = beta.values();
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t c = 0; c < C; ++c) {
      const Real m = mu[static_cast<size_t>(c)];
      const Real s = inv_std[static_cast<size_t>(c)];
      const Real ga = gv[static_cast<size_t>(c)];
      const Real be = bv[static_cast<size_t>(c)];
      const Real* src = xv.data() + (b * C + c) * L;
      Real* xh = xhat.data() + (b * C + c) * L;
      Real* dst = out.data() + (b * C + c) * L;
      for (int64_t l = 0; l < L; ++l) {
        xh[l] = (src[l] - m) * s;
        dst[l] = ga * xh[l] + be;
      }
    }
  }

  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op(
      "batchnorm", x.shape(), std::move(out), {x, gamma, beta},
      [B, C, L, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Ctx& ctx) {
        auto g = ctx.grad();
        auto gv = ctx.parent_value(1);
        const Real invn = Real(1) / static_cast<Real>(n);
        for (int64_t c = 0; c < C; ++c) {
          Real sum_g = 0, sum_gx = 0;
          for (int64_t b = 0; b < B; ++b) {
            const Real* gsrc = g.data() + (b * C + c) * L;
            const Real* xh = xhat.data() + (b * C + c) * L;
            for (int64_t l = 0; l < L; ++l) {
              sum_g += gsrc[l];
              sum_gx += gsrc[l] * xh[l];
            }
          }
          if (ctx.needs(1)) ctx.parent_grad(1)[static_cast<size_t>(c)] += sum_gx;
          if (ctx.needs(2)) ctx.parent_grad(2)[static_cast<size_t>(c)] += sum_g;
          if (ctx.needs(0)) {
            auto gx = ctx.parent_grad(0);
            const Real ga = gv[static_cast<size_t>(c)];
            const Real s = inv_std[static_cast<size_t>(c)];
            for (int64_t b = 0; b < B; ++b) {
              const Real* gsrc = g.data() + (b * C + c) * L;
              const Real* xh = xhat.data() + (b * C + c) * L;
              Real* gdst = gx.data() + (b * C + c) * L;
              for (int64_t l = 0; l < L; ++l) {
                const Real dxhat = gsrc[l] * ga;
                gdst[l] += s * (dxhat - invn * sum_g * ga - xh[l] * invn * sum_gx * ga);
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Layer objects
// ---------------------------------------------------------------------------

template <std::floating_point Real>
struct NamedTensor {
  std::string name;
  Tensor<Real> tensor;
  bool trainable = true;
};

template <std::floating_point Real>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<Real> forward(const Tensor<Real>& x, Mode mode, Rng& rng) = 0;
  virtual void collect_state(const std::string& prefix, std::vector<NamedTensor<Real>>& out) {
    (void)prefix;
    (void)out;
  }
};

namespace detail {
template <std::floating_point Real>
Tensor<Real> uniform_init(Shape shape, Real bound, Rng& rng, bool requires_grad = true) {
  std::vector<Real> v(static_cast<size_t>(numel(shape)));
  for (auto& x : v) x = static_cast<Real>(rng.uniform(-double(bound), double(bound)));
  return Tensor<Real>::from_data(std::move(shape), std::move(v), requires_grad);
}
}  // namespace detail

template <std::floating_point Real>
class Conv1dLayer final : public Layer<Real> {
 public:
  Conv1dLayer(int64_t in_channels, int64_t out_channels, int64_t kernel, Padding padding,
              Rng& rng, int64_t stride = 1)
      : in_channels_(in_channels), padding_(padding), stride_(stride) {
    const Real bound = Real(1) / std::sqrt(static_cast<Real>(in_channels * kernel));
    weight_ = detail::uniform_init<Real>({out_channels, in_channels, kernel}, bound, rng);
    bias_ = detail::uniform_init<Real>({out_channels}, bound, rng);
  }

  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override {
    return conv1d(x, weight_, bias_, padding_, stride_);
  }

  void collect_state(const std::string& prefix, std::vector<NamedTensor<Real>>& out) override {
    out.push_back({prefix + ".weight", weight_, true});
    out.push_back({prefix + ".bias", bias_, true});
  }

  int64_t out_len(int64_t in_len) const {
    return conv_out_len(in_len, weight_.dim(2), padding_, stride_);
  }

  Tensor<Real>& weight() { return weight_; }
  Tensor<Real>& bias() { return bias_; }

 private:
  int64_t in_channels_;
  Padding padding_;
  int64_t stride_;
  Tensor<Real> weight_;  // [out, in, kernel]
  Tensor<Real> bias_;    // [out]
};

template <std::floating_point Real>
class BatchNorm1dLayer final : public Layer<Real> {
 public:
  explicit BatchNorm1dLayer(int64_t channels, Real eps = Real(1e-5), Real momentum = Real(0.1))
      : eps_(eps), momentum_(momentum) {
    gamma_ = Tensor<Real>::full({channels}, Real(1), true);
    beta_ = Tensor<Real>::zeros({channels}, true);
    running_mean_ = Tensor<Real>::zeros({channels});
    running_var_ = Tensor<Real>::full({channels}, Real(1));
  }

  Tensor<Real> forward(const Tensor<Real>& x, Mode mode, Rng&) override {
    if (mode == Mode::train) {
      std::vector<Real> mu, var;
      auto y = batchnorm_train(x, gamma_, beta_, eps_, &mu, &var);
      auto rm = running_mean_.values_mut();
      auto rv = running_var_.values_mut();
      for (size_t c = 0; c < rm.size(); ++c) {
        rm[c] = (Real(1) - momentum_) * rm[c] + momentum_ * mu[c];
        rv[c] = (Real(1) - momentum_) * rv[c] + momentum_ * var[c];
      }
      return y;
    }
    // eval: normalize with running statistics, then the learned affine
    const int64_t C = gamma_.dim(0);
    std::vector<Real> s(static_cast<size_t>(C)), t(static_cast<size_t>(C));
    auto rm = running_mean_.values();
    auto rv = running_var_.values();
    for (int64_t c = 0; c < C; ++c) {
      const size_t i = static_cast<size_t>(c);
      s[i] = Real(1) / std::sqrt(rv[i] + eps_);
      t[i] = -rm[i] * s[i];
    }
    auto xhat = channel_affine(x, Tensor<Real>::from_data({C}, std::move(s)),
                               Tensor<Real>::from_data({C}, std::move(t)));
    return channel_affine(xhat, gamma_, beta_);
  }

  void collect_state(const std::string& prefix, std::vector<NamedTensor<Real>>& out) override {
    out.push_back({prefix + ".gamma", gamma_, true});
    out.push_back({prefix + ".beta", beta_, true});
    out.push_back({prefix + ".running_mean", running_mean_, false});
    out.push_back({prefix + ".running_var", running_var_, false});
  }

  Tensor<Real>& gamma() { return gamma_; }
  Tensor<Real>& beta() { return beta_; }
  Tensor<Real>& running_mean() { return running_mean_; }
  Tensor<Real>& running_var() { return running_var_; }

 private:
  Real eps_;
  Real momentum_;
  Tensor<Real> gamma_, beta_;
  Tensor<Real> running_mean_, running_var_;
};

template <std::floating_point Real>
class ReluLayer final : public Layer<Real> {
 public:
  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override { return relu(x); }
};

template <std::floating_point Real>
class SigmoidLayer final : public Layer<Real> {
 public:
  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override { return sigmoid(x); }
};

template <std::floating_point Real>
class GlobalAvgPoolLayer final : public Layer<Real> {
 public:
  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override {
    return global_avg_pool(x);
  }
};

template <std::floating_point Real>
class LocalAvgPoolLayer final : public Layer<Real> {
 public:
  LocalAvgPoolLayer(int64_t pool, int64_t stride) : pool_(pool), stride_(stride) {}
  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override {
    return local_avg_pool(x, pool_, stride_);
  }
  int64_t out_len(int64_t in_len) const { return pool_out_len(in_len, pool_, stride_); }

 private:
  int64_t pool_, stride_;
};

template <std::floating_point Real>
class FlattenLayer final : public Layer<Real> {
 public:
  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override {
    if (x.ndim() < 2) throw ShapeError("flatten: need at least rank 2");
    int64_t rest = 1;
    for (size_t i = 1; i < x.ndim(); ++i) rest *= x.dim(i);
    return reshape(x, {x.dim(0), rest});
  }
};

/// Inverted dropout: train mode zeroes with probability `rate` and rescales
/// survivors by 1/(1-rate); eval mode returns the input tensor unchanged.
template <std::floating_point Real>
class DropoutLayer final : public Layer<Real> {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must lie in [0,1)");
  }

  Tensor<Real> forward(const Tensor<Real>& x, Mode mode, Rng& rng) override {
    if (mode == Mode::eval || rate_ == 0.0) return x;
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate_));
    std::vector<Real> mask(x.size());
    for (auto& m : mask) m = rng.uniform() < rate_ ? Real(0) : keep_scale;
    return mul(x, Tensor<Real>::from_data(x.shape(), std::move(mask)));
  }

  double rate() const { return rate_; }

 private:
  double rate_;
};

template <std::floating_point Real>
class DenseLayer final : public Layer<Real> {
 public:
  DenseLayer(int64_t in, int64_t out, Rng& rng) {
    const Real bound = Real(1) / std::sqrt(static_cast<Real>(in));
    weight_ = detail::uniform_init<Real>({in, out}, bound, rng);
    bias_ = detail::uniform_init<Real>({out}, bound, rng);
  }

  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override {
    if (x.ndim() != 2 || x.dim(1) != weight_.dim(0)) {
      throw ShapeError("dense: input " + shape_str(x.shape()) + " incompatible with weight " +
                       shape_str(weight_.shape()));
    }
    return add_rows(matmul(x, weight_), bias_);
  }

  void collect_state(const std::string& prefix, std::vector<NamedTensor<Real>>& out) override {
    out.push_back({prefix + ".weight", weight_, true});
    out.push_back({prefix + ".bias", bias_, true});
  }

  Tensor<Real>& weight() { return weight_; }
  Tensor<Real>& bias() { return bias_; }

 private:
  Tensor<Real> weight_;  // [in, out]
  Tensor<Real> bias_;    // [out]
};

/// Standard LSTM over [batch, time, features]. Gate pre-activations are
/// packed as [input | forget | cell | output] columns; input/forget/output
/// squash with sigmoid, the candidate and the cell output with tanh.
/// Initial hidden and cell states are zero; the forget-gate bias starts at 1.
template <std::floating_point Real>
class LstmLayer final : public Layer<Real> {
 public:
  LstmLayer(int64_t input_size, int64_t units, bool return_sequences, Rng& rng)
      : input_size_(input_size), units_(units), return_sequences_(return_sequences) {
    const Real bound = Real(1) / std::sqrt(static_cast<Real>(units));
    wx_ = detail::uniform_init<Real>({input_size, 4 * units}, bound, rng);
    wh_ = detail::uniform_init<Real>({units, 4 * units}, bound, rng);
    bias_ = detail::uniform_init<Real>({4 * units}, bound, rng);
    auto b = bias_.values_mut();
    for (int64_t u = 0; u < units; ++u) b[static_cast<size_t>(units + u)] = Real(1);
  }

  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override {
    if (x.ndim() != 3 || x.dim(2) != input_size_) {
      throw ShapeError("lstm: input " + shape_str(x.shape()) + " does not provide " +
                       std::to_string(input_size_) + " features");
    }
    const int64_t B = x.dim(0), T = x.dim(1);
    if (T < 1) throw ShapeError("lstm: zero-length sequence");
    auto h = Tensor<Real>::zeros({B, units_});
    auto c = Tensor<Real>::zeros({B, units_});
    std::vector<Tensor<Real>> hs;
    if (return_sequences_) hs.reserve(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
      auto xt = select_time(x, t);
      auto pre = add_rows(add(matmul(xt, wx_), matmul(h, wh_)), bias_);
      auto gi = sigmoid(slice_cols(pre, 0, units_));
      auto gf = sigmoid(slice_cols(pre, units_, units_));
      auto gc = coilsense::tanh(slice_cols(pre, 2 * units_, units_));
      auto go = sigmoid(slice_cols(pre, 3 * units_, units_));
      c = add(mul(gf, c), mul(gi, gc));
      h = mul(go, coilsense::tanh(c));
      if (return_sequences_) hs.push_back(h);
    }
    return return_sequences_ ? stack_time(hs) : h;
  }

  void collect_state(const std::string& prefix, std::vector<NamedTensor<Real>>& out) override {
    out.push_back({prefix + ".wx", wx_, true});
    out.push_back({prefix + ".wh", wh_, true});
    out.push_back({prefix + ".bias", bias_, true});
  }

  Tensor<Real>& input_weight() { return wx_; }
  Tensor<Real>& recurrent_weight() { return wh_; }
  Tensor<Real>& bias() { return bias_; }
  int64_t units() const { return units_; }

 private:
  int64_t input_size_, units_;
  bool return_sequences_;
  Tensor<Real> wx_;    // [features, 4*units]
  Tensor<Real> wh_;    // [units, 4*units]
  Tensor<Real> bias_;  // [4*units]
};

/// conv/bn/relu x3 with a linear shortcut; the add happens before the final
/// relu. The shortcut is the identity when channel counts match, otherwise a
/// 1x1 conv + batchnorm projection.
template <std::floating_point Real>
class ResidualBlock final : public Layer<Real> {
 public:
  ResidualBlock(int64_t in_channels, int64_t filters, const std::vector<int64_t>& kernels,
                Rng& rng)
      : conv1_(in_channels, filters, kernels.at(0), Padding::same_zero, rng),
        bn1_(filters),
        conv2_(filters, filters, kernels.at(1), Padding::same_zero, rng),
        bn2_(filters),
        conv3_(filters, filters, kernels.at(2), Padding::same_zero, rng),
        bn3_(filters) {
    if (in_channels != filters) {
      proj_conv_ = std::make_unique<Conv1dLayer<Real>>(in_channels, filters, 1,
                                                       Padding::same_zero, rng);
      proj_bn_ = std::make_unique<BatchNorm1dLayer<Real>>(filters);
    }
  }

  Tensor<Real> forward(const Tensor<Real>& x, Mode mode, Rng& rng) override {
    auto y = relu(bn1_.forward(conv1_.forward(x, mode, rng), mode, rng));
    y = relu(bn2_.forward(conv2_.forward(y, mode, rng), mode, rng));
    y = bn3_.forward(conv3_.forward(y, mode, rng), mode, rng);
    auto shortcut = x;
    if (proj_conv_) {
      shortcut = proj_bn_->forward(proj_conv_->forward(x, mode, rng), mode, rng);
    }
    return relu(add(y, shortcut));
  }

  void collect_state(const std::string& prefix, std::vector<NamedTensor<Real>>& out) override {
    conv1_.collect_state(prefix + ".conv1", out);
    bn1_.collect_state(prefix + ".bn1", out);
    conv2_.collect_state(prefix + ".conv2", out);
    bn2_.collect_state(prefix + ".bn2", out);
    conv3_.collect_state(prefix + ".conv3", out);
    bn3_.collect_state(prefix + ".bn3", out);
    if (proj_conv_) {
      proj_conv_->collect_state(prefix + ".proj_conv", out);
      proj_bn_->collect_state(prefix + ".proj_bn", out);
    }
  }

  Conv1dLayer<Real>& conv1() { return conv1_; }

 private:
  Conv1dLayer<Real> conv1_;
  BatchNorm1dLayer<Real> bn1_;
  Conv1dLayer<Real> conv2_;
  BatchNorm1dLayer<Real> bn2_;
  Conv1dLayer<Real> conv3_;
  BatchNorm1dLayer<Real> bn3_;
  std::unique_ptr<Conv1dLayer<Real>> proj_conv_;
  std::unique_ptr<BatchNorm1dLayer<Real>> proj_bn_;
};

/// [batch, channels, length] -> [batch, length, channels] for the recurrent
/// stages.
template <std::floating_point Real>
class ToTimeMajorLayer final : public Layer<Real> {
 public:
  Tensor<Real> forward(const Tensor<Real>& x, Mode, Rng&) override { return swap_axes12(x); }
};

}  // namespace coilsense
