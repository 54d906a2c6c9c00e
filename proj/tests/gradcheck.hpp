#pragma once

// Central finite-difference gradient oracle. Deliberately independent of the
// tape: it only re-runs the forward builder and reads scalar values, so it
// can falsify any backward implementation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "coilsense/rng.hpp"
#include "coilsense/tensor.hpp"

namespace gradcheck {

using coilsense::Rng;
using coilsense::Shape;
using coilsense::Tensor;

using LossFn = std::function<Tensor<double>()>;

struct Report {
  double max_rel_err = 0.0;
  size_t coords_checked = 0;
};

/// Compares the tape gradient of `leaf` against central differences of the
/// scalar produced by `loss_fn`, which must rebuild the forward pass from
/// the leaves' current values on every call (and must be deterministic).
/// `coords` selects which flat indices to probe; empty means all of them.
/// Error metric: max_i |analytic_i - fd_i| / max(1, ||analytic||_inf, ||fd||_inf).
inline Report check_gradient(const LossFn& loss_fn, Tensor<double>& leaf,
                             std::vector<size_t> coords = {}, double h = 1e-5) {
  leaf.zero_grad();
  auto loss = loss_fn();
  loss.backward();
  std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
  leaf.zero_grad();

  auto w = leaf.values_mut();
  if (coords.empty()) {
    coords.resize(w.size());
    std::iota(coords.begin(), coords.end(), size_t{0});
  }

  double max_abs_analytic = 0.0, max_abs_fd = 0.0, max_abs_diff = 0.0;
  for (size_t i : coords) {
    const double keep = w[i];
    w[i] = keep + h;
    const double lp = loss_fn().item();
    w[i] = keep - h;
    const double lm = loss_fn().item();
    w[i] = keep;
    const double fd = (lp - lm) / (2.0 * h);
    max_abs_analytic = std::max(max_abs_analytic, std::abs(analytic[i]));
    max_abs_fd = std::max(max_abs_fd, std::abs(fd));
    max_abs_diff = std::max(max_abs_diff, std::abs(analytic[i] - fd));
  }
  const double denom = std::max({1.0, max_abs_analytic, max_abs_fd});
  return {max_abs_diff / denom, coords.size()};
}

/// Uniformly sampled coordinate subset used on large parameter tensors.
inline std::vector<size_t> sample_coords(size_t total, size_t count, Rng& rng) {
  if (count >= total) {
    std::vector<size_t> all(total);
    std::iota(all.begin(), all.end(), size_t{0});
    return all;
  }
  std::vector<size_t> picked;
  picked.reserve(count);
  while (picked.size() < count) {
    size_t c = static_cast<size_t>(rng.below(total));
    if (std::find(picked.begin(), picked.end(), c) == picked.end()) picked.push_back(c);
  }
  return picked;
}

/// Random leaf with values bounded away from zero when `avoid_zero` is set
/// (keeps finite differences away from relu/abs kinks).
inline Tensor<double> random_leaf(const Shape& shape, Rng& rng, bool requires_grad = true,
                                  bool avoid_zero = false) {
  std::vector<double> v(static_cast<size_t>(coilsense::numel(shape)));
  for (auto& x : v) {
    x = rng.uniform(-1.0, 1.0);
    if (avoid_zero) {
      x = (x >= 0.0 ? 0.15 : -0.15) + x;
    }
  }
  return Tensor<double>::from_data(shape, std::move(v), requires_grad);
}

}  // namespace gradcheck
