#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <vector>

#include "coilsense/errors.hpp"
#include "coilsense/tensor.hpp"

namespace coilsense {

struct AdamConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam with bias-corrected first and second moment estimates.
/// Owns one (m, v) pair per registered parameter; step() consumes the
/// parameters' gradients and zeroes them.
template <std::floating_point Real>
class Adam {
 public:
  Adam(std::vector<Tensor<Real>> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    if (!(cfg_.beta1 > 0 && cfg_.beta1 < 1) || !(cfg_.beta2 > 0 && cfg_.beta2 < 1)) {
      throw ConfigError("adam: betas must lie in (0,1)");
    }
    if (!(cfg_.alpha > 0) || !(cfg_.epsilon > 0)) {
      throw ConfigError("adam: alpha and epsilon must be positive");
    }
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
      m_.emplace_back(p.size(), Real(0));
      v_.emplace_back(p.size(), Real(0));
    }
  }

  void step() {
    ++t_;
    const Real b1 = static_cast<Real>(cfg_.beta1);
    const Real b2 = static_cast<Real>(cfg_.beta2);
    const Real corr1 = Real(1) - static_cast<Real>(std::pow(cfg_.beta1, t_));
    const Real corr2 = Real(1) - static_cast<Real>(std::pow(cfg_.beta2, t_));
    const Real alpha = static_cast<Real>(cfg_.alpha);
    const Real eps = static_cast<Real>(cfg_.epsilon);
    for (size_t k = 0; k < params_.size(); ++k) {
      auto& p = params_[k];
      if (!p.has_grad()) {
        throw Error("adam: parameter " + std::to_string(k) + " has no gradient");
      }
      auto g = p.grad();
      auto w = p.values_mut();
      auto& m = m_[k];
      auto& v = v_[k];
      if (g.size() != m.size()) {
        throw ShapeError("adam: parameter " + std::to_string(k) + " changed shape");
      }
      for (size_t i = 0; i < w.size(); ++i) {
        m[i] = b1 * m[i] + (Real(1) - b1) * g[i];
        v[i] = b2 * v[i] + (Real(1) - b2) * g[i] * g[i];
        const Real mhat = m[i] / corr1;
        const Real vhat = v[i] / corr2;
        w[i] -= alpha * mhat / (std::sqrt(vhat) + eps);
      }
      check_finite<Real>("adam", std::span<const Real>(w));
      p.zero_grad();
    }
  }

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Real>& first_moment(size_t k) const { return m_.at(k); }
  const std::vector<Real>& second_moment(size_t k) const { return v_.at(k); }

 private:
  std::vector<Tensor<Real>> params_;
  AdamConfig cfg_;
  std::vector<std::vector<Real>> m_;
  std::vector<std::vector<Real>> v_;
  int64_t t_ = 0;
};

}  // namespace coilsense
