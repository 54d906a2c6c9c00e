#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "coilsense/errors.hpp"

namespace coilsense {

using Shape = std::vector<int64_t>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

/// Throws NumericError naming `op` if any element is NaN/Inf. The chunked
/// sum is a prescreen; a tripped chunk is rescanned elementwise so that
/// finite-but-large sums cannot produce a false alarm.
template <std::floating_point Real>
inline void check_finite(const char* op, std::span<const Real> v) {
  constexpr size_t kChunk = 4096;
  for (size_t base = 0; base < v.size(); base += kChunk) {
    const size_t end = std::min(v.size(), base + kChunk);
    Real acc = 0;
    for (size_t i = base; i < end; ++i) acc += v[i];
    if (!std::isfinite(static_cast<double>(acc))) {
      for (size_t i = base; i < end; ++i) {
        if (!std::isfinite(static_cast<double>(v[i]))) {
          throw NumericError(std::string(op) + ": non-finite value at flat index " +
                             std::to_string(i));
        }
      }
    }
  }
}

/// Dense N-d tensor with reverse-mode autodiff.
///
/// A Tensor is a cheap handle onto a shared node. Ops build a tape as a
/// side effect when any input has requires_grad; backward() on a scalar
/// loss walks the tape once and then consumes it, so each forward pass
/// owns exactly one backward pass.
template <std::floating_point Real>
class Tensor {
  struct Node {
    Shape shape;
    std::vector<Real> value;
    std::vector<Real> grad;  // allocated on demand
    bool requires_grad = false;
    bool consumed = false;  // a backward pass already ran through this node
    const char* op = "leaf";
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;

    void ensure_grad() {
      if (grad.size() != value.size()) grad.assign(value.size(), Real(0));
    }
    bool is_leaf() const { return !backprop && parents.empty(); }
  };

 public:
  Tensor() = default;

  static Tensor from_data(Shape shape, std::vector<Real> data, bool requires_grad = false) {
    if (numel(shape) != static_cast<int64_t>(data.size())) {
      throw ShapeError("tensor: shape " + shape_str(shape) + " does not match " +
                       std::to_string(data.size()) + " values");
    }
    check_finite<Real>("tensor", std::span<const Real>(data));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    std::vector<Real> v(static_cast<size_t>(numel(shape)), Real(0));
    return from_data(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor full(Shape shape, Real fill, bool requires_grad = false) {
    std::vector<Real> v(static_cast<size_t>(numel(shape)), fill);
    return from_data(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor scalar(Real v, bool requires_grad = false) {
    return from_data(Shape{1}, std::vector<Real>{v}, requires_grad);
  }

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return node().shape; }
  size_t ndim() const { return node().shape.size(); }
  int64_t dim(size_t i) const { return node().shape.at(i); }
  size_t size() const { return node().value.size(); }
  bool requires_grad() const { return node().requires_grad; }
  bool is_leaf() const { return node().is_leaf(); }

  std::span<const Real> values() const { return node().value; }

  /// Mutable access to a leaf's storage (optimizer updates, loading
  /// checkpoints). Rejected on op results: mutating an interior node
  /// would desynchronize the tape.
  std::span<Real> values_mut() {
    Node& n = node();
    if (!n.is_leaf()) throw Error("values_mut: tensor is an op result, not a leaf");
    return n.value;
  }

  bool has_grad() const { return defined() && node().grad.size() == node().value.size(); }

  std::span<const Real> grad() const {
    if (!has_grad()) throw Error("grad: no gradient present (run backward first)");
    return node().grad;
  }

  void zero_grad() {
    Node& n = node();
    n.ensure_grad();
    std::fill(n.grad.begin(), n.grad.end(), Real(0));
  }

  void clear_grad() { node().grad.clear(); }

  void set_requires_grad(bool rg) {
    Node& n = node();
    if (!n.is_leaf()) throw Error("set_requires_grad: only valid on leaves");
    n.requires_grad = rg;
  }

  Real item() const {
    if (size() != 1) throw ShapeError("item: tensor has shape " + shape_str(shape()));
    return node().value[0];
  }

  /// True when two handles share one node (used by identity-op tests).
  bool is_same(const Tensor& other) const { return n_ == other.n_; }

  /// Leaf copy of the values; drops tape and gradient.
  Tensor detached_copy() const {
    return from_data(node().shape, node().value, false);
  }

  /// Reverse-mode sweep from a scalar loss. Populates grad on every
  /// requires_grad leaf reachable from this node, then consumes the tape:
  /// interior nodes drop their parents and backward closures, so a second
  /// backward through them raises an error instead of silently stopping.
  void backward() {
    Node& root = node();
    if (root.value.size() != 1) {
      throw ShapeError("backward: loss must be scalar, got " + shape_str(root.shape));
    }
    if (!root.requires_grad) {
      throw Error("backward: loss does not depend on any requires_grad tensor");
    }
    if (root.consumed) {
      throw Error("backward: tape already consumed; rebuild the forward pass");
    }

    std::vector<Node*> order;  // post-order: parents precede consumers
    std::unordered_set<Node*> seen;
    struct Frame {
      Node* node;
      size_t next;
    };
    std::vector<Frame> stack{{&root, 0}};
    seen.insert(&root);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.node->consumed) {
        throw Error(std::string("backward: op '") + f.node->op +
                    "' belongs to an already-consumed tape; rebuild the forward pass");
      }
      if (f.next < f.node->parents.size()) {
        Node* p = f.node->parents[f.next++].get();
        if (p->requires_grad && !seen.count(p)) {
          seen.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }

    root.ensure_grad();
    root.grad[0] = Real(1);

    // Reverse post-order visits every consumer before its producers, so a
    // node's incoming grad is complete when its backprop runs. Each node's
    // grad is finite-checked exactly once, leaves included.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      n->ensure_grad();
      check_finite<Real>(n->op, std::span<const Real>(n->grad));
      if (n->backprop) n->backprop(*n);
    }

    for (Node* n : order) {
      if (!n->is_leaf()) {
        n->parents.clear();
        n->backprop = nullptr;
        n->grad.clear();
        n->consumed = true;
      }
    }
  }

  /// Access used by op implementations to accumulate parent gradients.
  class BackwardCtx {
   public:
    std::span<const Real> grad() const { return n_.grad; }
    std::span<const Real> value() const { return n_.value; }
    const Shape& shape() const { return n_.shape; }
    size_t num_parents() const { return n_.parents.size(); }
    bool needs(size_t i) const { return n_.parents[i]->requires_grad; }
    std::span<Real> parent_grad(size_t i) {
      Node& p = *n_.parents[i];
      p.ensure_grad();
      return p.grad;
    }
    std::span<const Real> parent_value(size_t i) const { return n_.parents[i]->value; }
    const Shape& parent_shape(size_t i) const { return n_.parents[i]->shape; }

   private:
    friend class Tensor;
    explicit BackwardCtx(Node& n) : n_(n) {}
    Node& n_;
  };

  using BackwardFn = std::function<void(BackwardCtx&)>;

  /// Assembles an op result node. Output values are finite-checked here,
  /// which is what gives every op its NaN/Inf guard. When no input tracks
  /// gradients the node is emitted graph-free.
  static Tensor make_op(const char* op, Shape shape, std::vector<Real> value,
                        std::vector<Tensor> parents, BackwardFn fn) {
    if (numel(shape) != static_cast<int64_t>(value.size())) {
      throw ShapeError(std::string(op) + ": internal shape/value mismatch");
    }
    check_finite<Real>(op, std::span<const Real>(value));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    n->op = op;
    bool rg = false;
    for (const auto& p : parents) rg = rg || p.node().requires_grad;
    n->requires_grad = rg;
    if (rg) {
      n->parents.reserve(parents.size());
      for (auto& p : parents) n->parents.push_back(p.n_);
      n->backprop = [f = std::move(fn)](Node& self) {
        BackwardCtx ctx(self);
        f(ctx);
      };
    }
    return Tensor(std::move(n));
  }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}
  Node& node() const {
    if (!n_) throw Error("tensor: empty handle");
    return *n_;
  }
  std::shared_ptr<Node> n_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// ---------------------------------------------------------------------------
// Elementwise and scalar ops
// ---------------------------------------------------------------------------

namespace detail {

template <std::floating_point Real>
inline void require_same_shape(const char* op, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <std::floating_point Real>
inline void axpy(std::span<const Real> x, std::span<Real> y, Real a = Real(1)) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace detail

template <std::floating_point Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require_same_shape("add", a, b);
  std::vector<Real> out(a.size());
  auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("add", a.shape(), std::move(out), {a, b}, [](Ctx& c) {
    if (c.needs(0)) detail::axpy<Real>(c.grad(), c.parent_grad(0));
    if (c.needs(1)) detail::axpy<Real>(c.grad(), c.parent_grad(1));
  });
}

template <std::floating_point Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require_same_shape("sub", a, b);
  std::vector<Real> out(a.size());
  auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("sub", a.shape(), std::move(out), {a, b}, [](Ctx& c) {
    if (c.needs(0)) detail::axpy<Real>(c.grad(), c.parent_grad(0));
    if (c.needs(1)) detail::axpy<Real>(c.grad(), c.parent_grad(1), Real(-1));
  });
}

template <std::floating_point Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  detail::require_same_shape("mul", a, b);
  std::vector<Real> out(a.size());
  auto av = a.values(), bv = b.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("mul", a.shape(), std::move(out), {a, b}, [](Ctx& c) {
    auto g = c.grad();
    if (c.needs(0)) {
      auto pb = c.parent_value(1);
      auto ga = c.parent_grad(0);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb[i];
    }
    if (c.needs(1)) {
      auto pa = c.parent_value(0);
      auto gb = c.parent_grad(1);
      for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa[i];
    }
  });
}

template <std::floating_point Real>
Tensor<Real> add_scalar(const Tensor<Real>& a, Real s) {
  std::vector<Real> out(a.size());
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] + s;
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("add_scalar", a.shape(), std::move(out), {a}, [](Ctx& c) {
    if (c.needs(0)) detail::axpy<Real>(c.grad(), c.parent_grad(0));
  });
}

template <std::floating_point Real>
Tensor<Real> mul_scalar(const Tensor<Real>& a, Real s) {
  std::vector<Real> out(a.size());
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("mul_scalar", a.shape(), std::move(out), {a}, [s](Ctx& c) {
    if (c.needs(0)) detail::axpy<Real>(c.grad(), c.parent_grad(0), s);
  });
}

template <std::floating_point Real>
Tensor<Real> neg(const Tensor<Real>& a) {
  return mul_scalar(a, Real(-1));
}

// ---------------------------------------------------------------------------
// Matrix multiply (Eigen-backed kernel; the tape around it is ours)
// ---------------------------------------------------------------------------

namespace detail {
template <std::floating_point Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <std::floating_point Real>
using MapM = Eigen::Map<RowMat<Real>>;
template <std::floating_point Real>
using CMapM = Eigen::Map<const RowMat<Real>>;
}  // namespace detail

template <std::floating_point Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<Real> out(static_cast<size_t>(m * n));
  {
    detail::CMapM<Real> A(a.values().data(), m, k);
    detail::CMapM<Real> B(b.values().data(), k, n);
    detail::MapM<Real> C(out.data(), m, n);
    C.noalias() = A * B;
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("matmul", Shape{m, n}, std::move(out), {a, b},
                               [m, k, n](Ctx& c) {
                                 detail::CMapM<Real> G(c.grad().data(), m, n);
                                 if (c.needs(0)) {
                                   detail::CMapM<Real> B(c.parent_value(1).data(), k, n);
                                   detail::MapM<Real> GA(c.parent_grad(0).data(), m, k);
                                   GA.noalias() += G * B.transpose();
                                 }
                                 if (c.needs(1)) {
                                   detail::CMapM<Real> A(c.parent_value(0).data(), m, k);
                                   detail::MapM<Real> GB(c.parent_grad(1).data(), k, n);
                                   GB.noalias() += A.transpose() * G;
                                 }
                               });
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <std::floating_point Real>
Tensor<Real> relu(const Tensor<Real>& a) {
  std::vector<Real> out(a.size());
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = av[i] > Real(0) ? av[i] : Real(0);
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("relu", a.shape(), std::move(out), {a}, [](Ctx& c) {
    if (!c.needs(0)) return;
    auto g = c.grad();
    auto x = c.parent_value(0);
    auto gx = c.parent_grad(0);
    for (size_t i = 0; i < g.size(); ++i) {
      if (x[i] > Real(0)) gx[i] += g[i];
    }
  });
}

/// Branch-stable logistic: never exponentiates a positive argument.
template <std::floating_point Real>
inline Real sigmoid_value(Real x) {
  if (x >= Real(0)) {
    return Real(1) / (Real(1) + std::exp(-x));
  }
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <std::floating_point Real>
Tensor<Real> sigmoid(const Tensor<Real>& a) {
  std::vector<Real> out(a.size());
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_value(av[i]);
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("sigmoid", a.shape(), std::move(out), {a}, [](Ctx& c) {
    if (!c.needs(0)) return;
    auto g = c.grad();
    auto y = c.value();
    auto gx = c.parent_grad(0);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (Real(1) - y[i]);
  });
}

template <std::floating_point Real>
Tensor<Real> tanh(const Tensor<Real>& a) {
  std::vector<Real> out(a.size());
  auto av = a.values();
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("tanh", a.shape(), std::move(out), {a}, [](Ctx& c) {
    if (!c.needs(0)) return;
    auto g = c.grad();
    auto y = c.value();
    auto gx = c.parent_grad(0);
    for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (Real(1) - y[i] * y[i]);
  });
}

// ---------------------------------------------------------------------------
// Softmax and reductions
// ---------------------------------------------------------------------------

namespace detail {
struct AxisSplit {
  int64_t outer, mid, inner;
};

inline AxisSplit split_axis(const Shape& s, int axis, const char* op) {
  int nd = static_cast<int>(s.size());
  if (axis < 0) axis += nd;
  if (axis < 0 || axis >= nd) throw ShapeError(std::string(op) + ": axis out of range");
  AxisSplit r{1, s[static_cast<size_t>(axis)], 1};
  for (int i = 0; i < axis; ++i) r.outer *= s[static_cast<size_t>(i)];
  for (int i = axis + 1; i < nd; ++i) r.inner *= s[static_cast<size_t>(i)];
  return r;
}

inline Shape drop_axis(const Shape& s, int axis) {
  int nd = static_cast<int>(s.size());
  if (axis < 0) axis += nd;
  Shape out;
  for (int i = 0; i < nd; ++i) {
    if (i != axis) out.push_back(s[static_cast<size_t>(i)]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}
}  // namespace detail

/// Max-subtracted softmax along `axis` (default: last).
template <std::floating_point Real>
Tensor<Real> softmax(const Tensor<Real>& a, int axis = -1) {
  const auto sp = detail::split_axis(a.shape(), axis, "softmax");
  if (sp.mid == 0) throw ShapeError("softmax: empty axis");
  std::vector<Real> out(a.size());
  auto av = a.values();
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t in = 0; in < sp.inner; ++in) {
      const int64_t base = o * sp.mid * sp.inner + in;
      Real mx = av[static_cast<size_t>(base)];
      for (int64_t m = 1; m < sp.mid; ++m) {
        mx = std::max(mx, av[static_cast<size_t>(base + m * sp.inner)]);
      }
      Real denom = 0;
      for (int64_t m = 0; m < sp.mid; ++m) {
        const size_t idx = static_cast<size_t>(base + m * sp.inner);
        out[idx] = std::exp(av[idx] - mx);
        denom += out[idx];
      }
      for (int64_t m = 0; m < sp.mid; ++m) {
        out[static_cast<size_t>(base + m * sp.inner)] /= denom;
      }
    }
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("softmax", a.shape(), std::move(out), {a}, [sp](Ctx& c) {
    if (!c.needs(0)) return;
    auto g = c.grad();
    auto y = c.value();
    auto gx = c.parent_grad(0);
    for (int64_t o = 0; o < sp.outer; ++o) {
      for (int64_t in = 0; in < sp.inner; ++in) {
        const int64_t base = o * sp.mid * sp.inner + in;
        Real dot = 0;
        for (int64_t m = 0; m < sp.mid; ++m) {
          const size_t idx = static_cast<size_t>(base + m * sp.inner);
          dot += g[idx] * y[idx];
        }
        for (int64_t m = 0; m < sp.mid; ++m) {
          const size_t idx = static_cast<size_t>(base + m * sp.inner);
          gx[idx] += y[idx] * (g[idx] - dot);
        }
      }
    }
  });
}

template <std::floating_point Real>
Tensor<Real> sum(const Tensor<Real>& a) {
  Real s = 0;
  for (Real v : a.values()) s += v;
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("sum", Shape{1}, std::vector<Real>{s}, {a}, [](Ctx& c) {
    if (!c.needs(0)) return;
    const Real g = c.grad()[0];
    auto gx = c.parent_grad(0);
    for (auto& v : gx) v += g;
  });
}

template <std::floating_point Real>
Tensor<Real> mean(const Tensor<Real>& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  Real s = 0;
  for (Real v : a.values()) s += v;
  const Real inv = Real(1) / static_cast<Real>(a.size());
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("mean", Shape{1}, std::vector<Real>{s * inv}, {a},
                               [inv](Ctx& c) {
                                 if (!c.needs(0)) return;
                                 const Real g = c.grad()[0] * inv;
                                 auto gx = c.parent_grad(0);
                                 for (auto& v : gx) v += g;
                               });
}

namespace detail {
template <std::floating_point Real>
Tensor<Real> reduce_axis(const char* op, const Tensor<Real>& a, int axis, bool take_mean) {
  const auto sp = split_axis(a.shape(), axis, op);
  if (sp.mid == 0) throw ShapeError(std::string(op) + ": empty axis");
  const Real scale = take_mean ? Real(1) / static_cast<Real>(sp.mid) : Real(1);
  std::vector<Real> out(static_cast<size_t>(sp.outer * sp.inner), Real(0));
  auto av = a.values();
  for (int64_t o = 0; o < sp.outer; ++o) {
    for (int64_t m = 0; m < sp.mid; ++m) {
      for (int64_t in = 0; in < sp.inner; ++in) {
        out[static_cast<size_t>(o * sp.inner + in)] +=
            av[static_cast<size_t>((o * sp.mid + m) * sp.inner + in)];
      }
    }
  }
  if (take_mean) {
    for (auto& v : out) v *= scale;
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op(op, drop_axis(a.shape(), axis), std::move(out), {a},
                               [sp, scale](Ctx& c) {
                                 if (!c.needs(0)) return;
                                 auto g = c.grad();
                                 auto gx = c.parent_grad(0);
                                 for (int64_t o = 0; o < sp.outer; ++o) {
                                   for (int64_t m = 0; m < sp.mid; ++m) {
                                     for (int64_t in = 0; in < sp.inner; ++in) {
                                       gx[static_cast<size_t>((o * sp.mid + m) * sp.inner +
                                                              in)] +=
                                           scale * g[static_cast<size_t>(o * sp.inner + in)];
                                     }
                                   }
                                 }
                               });
}
}  // namespace detail

template <std::floating_point Real>
Tensor<Real> sum(const Tensor<Real>& a, int axis) {
  return detail::reduce_axis("sum_axis", a, axis, false);
}

template <std::floating_point Real>
Tensor<Real> mean(const Tensor<Real>& a, int axis) {
  return detail::reduce_axis("mean_axis", a, axis, true);
}

// ---------------------------------------------------------------------------
// Structure ops
// ---------------------------------------------------------------------------

template <std::floating_point Real>
Tensor<Real> reshape(const Tensor<Real>& a, Shape new_shape) {
  if (numel(new_shape) != static_cast<int64_t>(a.size())) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(new_shape));
  }
  std::vector<Real> out(a.values().begin(), a.values().end());
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("reshape", std::move(new_shape), std::move(out), {a},
                               [](Ctx& c) {
                                 if (c.needs(0)) detail::axpy<Real>(c.grad(), c.parent_grad(0));
                               });
}

/// [A,B,C] -> [A,C,B]; used to reorder channel-major feature maps into
/// time-major sequences for the recurrent layers.
template <std::floating_point Real>
Tensor<Real> swap_axes12(const Tensor<Real>& a) {
  if (a.ndim() != 3) throw ShapeError("swap_axes12: need rank 3, got " + shape_str(a.shape()));
  const int64_t A = a.dim(0), B = a.dim(1), C = a.dim(2);
  std::vector<Real> out(a.size());
  auto av = a.values();
  for (int64_t i = 0; i < A; ++i) {
    for (int64_t b = 0; b < B; ++b) {
      for (int64_t c = 0; c < C; ++c) {
        out[static_cast<size_t>((i * C + c) * B + b)] =
            av[static_cast<size_t>((i * B + b) * C + c)];
      }
    }
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("swap_axes12", Shape{A, C, B}, std::move(out), {a},
                               [A, B, C](Ctx& c) {
                                 if (!c.needs(0)) return;
                                 auto g = c.grad();
                                 auto gx = c.parent_grad(0);
                                 for (int64_t i = 0; i < A; ++i) {
                                   for (int64_t b = 0; b < B; ++b) {
                                     for (int64_t ch = 0; ch < C; ++ch) {
                                       gx[static_cast<size_t>((i * B + b) * C + ch)] +=
                                           g[static_cast<size_t>((i * C + ch) * B + b)];
                                     }
                                   }
                                 }
                               });
}

/// x[B,T,F] -> x[:,t,:] as [B,F].
template <std::floating_point Real>
Tensor<Real> select_time(const Tensor<Real>& a, int64_t t) {
  if (a.ndim() != 3) throw ShapeError("select_time: need rank 3, got " + shape_str(a.shape()));
  const int64_t B = a.dim(0), T = a.dim(1), F = a.dim(2);
  if (t < 0 || t >= T) throw ShapeError("select_time: index out of range");
  std::vector<Real> out(static_cast<size_t>(B * F));
  auto av = a.values();
  for (int64_t b = 0; b < B; ++b) {
    std::copy_n(av.data() + (b * T + t) * F, F, out.data() + b * F);
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("select_time", Shape{B, F}, std::move(out), {a},
                               [B, T, F, t](Ctx& c) {
                                 if (!c.needs(0)) return;
                                 auto g = c.grad();
                                 auto gx = c.parent_grad(0);
                                 for (int64_t b = 0; b < B; ++b) {
                                   for (int64_t f = 0; f < F; ++f) {
                                     gx[static_cast<size_t>((b * T + t) * F + f)] +=
                                         g[static_cast<size_t>(b * F + f)];
                                   }
                                 }
                               });
}

/// T tensors of shape [B,F] -> [B,T,F].
template <std::floating_point Real>
Tensor<Real> stack_time(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ShapeError("stack_time: no inputs");
  const int64_t B = parts[0].dim(0), F = parts[0].dim(1);
  const int64_t T = static_cast<int64_t>(parts.size());
  for (const auto& p : parts) {
    if (p.ndim() != 2 || p.dim(0) != B || p.dim(1) != F) {
      throw ShapeError("stack_time: mismatched part shape " + shape_str(p.shape()));
    }
  }
  std::vector<Real> out(static_cast<size_t>(B * T * F));
  for (int64_t t = 0; t < T; ++t) {
    auto pv = parts[static_cast<size_t>(t)].values();
    for (int64_t b = 0; b < B; ++b) {
      std::copy_n(pv.data() + b * F, F, out.data() + (b * T + t) * F);
    }
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("stack_time", Shape{B, T, F}, std::move(out), parts,
                               [B, T, F](Ctx& c) {
                                 auto g = c.grad();
                                 for (int64_t t = 0; t < T; ++t) {
                                   if (!c.needs(static_cast<size_t>(t))) continue;
                                   auto gp = c.parent_grad(static_cast<size_t>(t));
                                   for (int64_t b = 0; b < B; ++b) {
                                     for (int64_t f = 0; f < F; ++f) {
                                       gp[static_cast<size_t>(b * F + f)] +=
                                           g[static_cast<size_t>((b * T + t) * F + f)];
                                     }
                                   }
                                 }
                               });
}

/// x[R,C] -> x[:, c0:c0+w].
template <std::floating_point Real>
Tensor<Real> slice_cols(const Tensor<Real>& a, int64_t c0, int64_t w) {
  if (a.ndim() != 2) throw ShapeError("slice_cols: need rank 2, got " + shape_str(a.shape()));
  const int64_t R = a.dim(0), C = a.dim(1);
  if (c0 < 0 || w <= 0 || c0 + w > C) throw ShapeError("slice_cols: range out of bounds");
  std::vector<Real> out(static_cast<size_t>(R * w));
  auto av = a.values();
  for (int64_t r = 0; r < R; ++r) {
    std::copy_n(av.data() + r * C + c0, w, out.data() + r * w);
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("slice_cols", Shape{R, w}, std::move(out), {a},
                               [R, C, c0, w](Ctx& c) {
                                 if (!c.needs(0)) return;
                                 auto g = c.grad();
                                 auto gx = c.parent_grad(0);
                                 for (int64_t r = 0; r < R; ++r) {
                                   for (int64_t j = 0; j < w; ++j) {
                                     gx[static_cast<size_t>(r * C + c0 + j)] +=
                                         g[static_cast<size_t>(r * w + j)];
                                   }
                                 }
                               });
}

/// x[R,C] + row[C], broadcast over rows (bias add).
template <std::floating_point Real>
Tensor<Real> add_rows(const Tensor<Real>& a, const Tensor<Real>& row) {
  if (a.ndim() != 2 || row.ndim() != 1 || row.dim(0) != a.dim(1)) {
    throw ShapeError("add_rows: shapes " + shape_str(a.shape()) + " and " +
                     shape_str(row.shape()) + " do not broadcast");
  }
  const int64_t R = a.dim(0), C = a.dim(1);
  std::vector<Real> out(a.size());
  auto av = a.values(), rv = row.values();
  for (int64_t r = 0; r < R; ++r) {
    for (int64_t c = 0; c < C; ++c) {
      out[static_cast<size_t>(r * C + c)] = av[static_cast<size_t>(r * C + c)] +
                                            rv[static_cast<size_t>(c)];
    }
  }
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op("add_rows", a.shape(), std::move(out), {a, row},
                               [R, C](Ctx& c) {
                                 auto g = c.grad();
                                 if (c.needs(0)) detail::axpy<Real>(g, c.parent_grad(0));
                                 if (c.needs(1)) {
                                   auto gb = c.parent_grad(1);
                                   for (int64_t r = 0; r < R; ++r) {
                                     for (int64_t j = 0; j < C; ++j) {
                                       gb[static_cast<size_t>(j)] +=
                                           g[static_cast<size_t>(r * C + j)];
                                     }
                                   }
                                 }
                               });
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Mean categorical cross-entropy between softmax(logits) and one-hot
/// targets, fused through log-sum-exp so large logits cannot overflow.
template <std::floating_point Real>
Tensor<Real> softmax_cross_entropy(const Tensor<Real>& logits, const Tensor<Real>& targets) {
  detail::require_same_shape("softmax_cross_entropy", logits, targets);
  if (logits.ndim() != 2) {
    throw ShapeError("softmax_cross_entropy: need [batch, classes], got " +
                     shape_str(logits.shape()));
  }
  const int64_t B = logits.dim(0), C = logits.dim(1);
  if (B == 0 || C == 0) throw ShapeError("softmax_cross_entropy: empty batch or class axis");
  auto zv = logits.values();
  auto yv = targets.values();
  std::vector<Real> probs(zv.size());
  Real total = 0;
  for (int64_t b = 0; b < B; ++b) {
    const size_t base = static_cast<size_t>(b * C);
    Real mx = zv[base];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, zv[base + static_cast<size_t>(c)]);
    Real denom = 0;
    for (int64_t c = 0; c < C; ++c) {
      probs[base + static_cast<size_t>(c)] = std::exp(zv[base + static_cast<size_t>(c)] - mx);
      denom += probs[base + static_cast<size_t>(c)];
    }
    const Real lse = mx + std::log(denom);
    Real dot = 0;
    for (int64_t c = 0; c < C; ++c) {
      probs[base + static_cast<size_t>(c)] /= denom;
      dot += yv[base + static_cast<size_t>(c)] * zv[base + static_cast<size_t>(c)];
    }
    total += lse - dot;
  }
  const Real inv_b = Real(1) / static_cast<Real>(B);
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op(
      "softmax_cross_entropy", Shape{1}, std::vector<Real>{total * inv_b}, {logits, targets},
      [probs = std::move(probs), inv_b](Ctx& c) {
        const Real g = c.grad()[0] * inv_b;
        if (c.needs(0)) {
          auto y = c.parent_value(1);
          auto gz = c.parent_grad(0);
          for (size_t i = 0; i < probs.size(); ++i) gz[i] += g * (probs[i] - y[i]);
        }
        if (c.needs(1)) {
          auto z = c.parent_value(0);
          auto gy = c.parent_grad(1);
          for (size_t i = 0; i < probs.size(); ++i) gy[i] -= g * z[i];
        }
      });
}

/// Mean elementwise binary cross-entropy between sigmoid(logits) and
/// targets, in the overflow-free max/log1p form.
template <std::floating_point Real>
Tensor<Real> sigmoid_binary_cross_entropy(const Tensor<Real>& logits,
                                          const Tensor<Real>& targets) {
  detail::require_same_shape("sigmoid_binary_cross_entropy", logits, targets);
  if (logits.size() == 0) throw ShapeError("sigmoid_binary_cross_entropy: empty input");
  auto zv = logits.values();
  auto yv = targets.values();
  Real total = 0;
  for (size_t i = 0; i < zv.size(); ++i) {
    const Real z = zv[i];
    total += std::max(z, Real(0)) - z * yv[i] + std::log1p(std::exp(-std::abs(z)));
  }
  const Real inv_n = Real(1) / static_cast<Real>(zv.size());
  using Ctx = typename Tensor<Real>::BackwardCtx;
  return Tensor<Real>::make_op(
      "sigmoid_binary_cross_entropy", Shape{1}, std::vector<Real>{total * inv_n},
      {logits, targets}, [inv_n](Ctx& c) {
        const Real g = c.grad()[0] * inv_n;
        auto z = c.parent_value(0);
        auto y = c.parent_value(1);
        if (c.needs(0)) {
          auto gz = c.parent_grad(0);
          for (size_t i = 0; i < z.size(); ++i) gz[i] += g * (sigmoid_value(z[i]) - y[i]);
        }
        if (c.needs(1)) {
          auto gy = c.parent_grad(1);
          for (size_t i = 0; i < z.size(); ++i) gy[i] -= g * z[i];
        }
      });
}

}  // namespace coilsense
