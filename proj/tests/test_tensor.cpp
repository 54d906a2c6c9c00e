#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "coilsense/errors.hpp"
#include "coilsense/rng.hpp"
#include "coilsense/tensor.hpp"
#include "gradcheck.hpp"

using namespace coilsense;
using gradcheck::check_gradient;
using gradcheck::random_leaf;

namespace {
constexpr double kOpTol = 1e-4;  // relative error bound for op-level checks
constexpr int kSeeds = 20;
}  // namespace

TEST_CASE("construction validates shape and finiteness") {
  REQUIRE_THROWS_AS(Tensor<double>::from_data({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  REQUIRE_THROWS_AS(
      Tensor<double>::from_data({2}, {1.0, std::numeric_limits<double>::quiet_NaN()}),
      NumericError);
  REQUIRE_THROWS_AS(
      Tensor<double>::from_data({2}, {1.0, std::numeric_limits<double>::infinity()}),
      NumericError);
  auto t = Tensor<double>::zeros({3, 4});
  REQUIRE(t.size() == 12);
  REQUIRE(numel(t.shape()) == 12);
}

TEST_CASE("sum backward is all ones") {
  auto x = Tensor<double>::from_data({3}, {5.0, -1.0, 2.0}, true);
  auto loss = sum(x);
  loss.backward();
  auto g = x.grad();
  REQUIRE(g[0] == 1.0);
  REQUIRE(g[1] == 1.0);
  REQUIRE(g[2] == 1.0);
}

TEST_CASE("sum of squares backward doubles the input") {
  auto x = Tensor<double>::from_data({3}, {1.0, 2.0, 3.0}, true);
  auto loss = sum(mul(x, x));
  loss.backward();
  auto g = x.grad();
  REQUIRE(g[0] == Catch::Approx(2.0));
  REQUIRE(g[1] == Catch::Approx(4.0));
  REQUIRE(g[2] == Catch::Approx(6.0));
}

TEST_CASE("pointwise values") {
  auto z = Tensor<double>::scalar(0.0);
  REQUIRE(sigmoid(z).item() == Catch::Approx(0.5));

  auto s = softmax(Tensor<double>::from_data({1, 2}, {0.0, 0.0}));
  REQUIRE(s.values()[0] == Catch::Approx(0.5));
  REQUIRE(s.values()[1] == Catch::Approx(0.5));

  // d/dx tanh(x) at x=1 is 1 - tanh^2(1)
  auto x = Tensor<double>::scalar(1.0, true);
  auto loss = sum(coilsense::tanh(x));
  loss.backward();
  REQUIRE(x.grad()[0] == Catch::Approx(0.41997434161402614).epsilon(1e-9));
}

TEST_CASE("sigmoid is branch-stable at extreme inputs") {
  auto x = Tensor<double>::from_data({4}, {-800.0, -30.0, 30.0, 800.0});
  auto y = sigmoid(x);
  REQUIRE(y.values()[0] == 0.0);
  REQUIRE(y.values()[1] == Catch::Approx(std::exp(-30.0)).epsilon(1e-10));
  REQUIRE(y.values()[3] == 1.0);
}

TEST_CASE("softmax rows are probability vectors") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(static_cast<uint64_t>(seed));
    std::vector<double> v(24);
    for (auto& x : v) x = rng.uniform(-50.0, 50.0);
    auto s = softmax(Tensor<double>::from_data({4, 6}, v));
    auto sv = s.values();
    for (int r = 0; r < 4; ++r) {
      double total = 0;
      for (int c = 0; c < 6; ++c) {
        REQUIRE(sv[static_cast<size_t>(r * 6 + c)] >= 0.0);
        total += sv[static_cast<size_t>(r * 6 + c)];
      }
      REQUIRE(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("softmax rejects an empty axis") {
  auto e = Tensor<double>::zeros({3, 0});
  REQUIRE_THROWS_AS(softmax(e), ShapeError);
}

TEST_CASE("shape mismatches are rejected") {
  auto a = Tensor<double>::zeros({2, 3});
  auto b = Tensor<double>::zeros({3, 2});
  REQUIRE_THROWS_AS(add(a, b), ShapeError);
  REQUIRE_THROWS_AS(mul(a, b), ShapeError);
  REQUIRE_THROWS_AS(matmul(a, a), ShapeError);
  REQUIRE_THROWS_AS(add_rows(a, Tensor<double>::zeros({2})), ShapeError);
}

TEST_CASE("backward demands a scalar loss") {
  auto x = Tensor<double>::zeros({2, 2}, true);
  auto y = relu(x);
  REQUIRE_THROWS_AS(y.backward(), ShapeError);
}

TEST_CASE("backward twice without a fresh forward is an error") {
  auto x = Tensor<double>::from_data({2}, {1.0, 2.0}, true);
  auto loss = sum(mul(x, x));
  loss.backward();
  REQUIRE_THROWS_AS(loss.backward(), Error);
}

TEST_CASE("reusing a consumed intermediate is an error, not a silent stop") {
  auto x = Tensor<double>::from_data({2}, {1.0, 2.0}, true);
  auto y = mul(x, x);
  sum(y).backward();
  auto second = sum(y);
  REQUIRE_THROWS_AS(second.backward(), Error);
}

TEST_CASE("gradients accumulate across separate backward passes") {
  auto x = Tensor<double>::from_data({2}, {1.0, 1.0}, true);
  sum(x).backward();
  sum(x).backward();
  REQUIRE(x.grad()[0] == 2.0);
  x.zero_grad();
  REQUIRE(x.grad()[0] == 0.0);
}

TEST_CASE("tensors without requires_grad stay untouched") {
  auto x = Tensor<double>::from_data({2}, {1.0, 2.0}, true);
  auto c = Tensor<double>::from_data({2}, {3.0, 4.0}, false);
  auto loss = sum(mul(x, c));
  loss.backward();
  REQUIRE(x.grad()[0] == 3.0);
  REQUIRE_FALSE(c.has_grad());
}

TEST_CASE("eval-style forward builds no tape") {
  auto x = Tensor<double>::from_data({2}, {1.0, 2.0}, false);
  auto y = relu(mul(x, x));
  REQUIRE_FALSE(y.requires_grad());
  REQUIRE(y.is_leaf());
}

// --- finite-difference oracle over every differentiable op -----------------

TEST_CASE("elementwise ops match finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(1000 + static_cast<uint64_t>(seed));
    auto a = random_leaf({3, 4}, rng);
    auto b = random_leaf({3, 4}, rng);
    auto r = check_gradient([&] { return sum(mul(add(a, b), sub(a, b))); }, a);
    REQUIRE(r.max_rel_err < kOpTol);
    r = check_gradient([&] { return sum(mul(add(a, b), sub(a, b))); }, b);
    REQUIRE(r.max_rel_err < kOpTol);
    r = check_gradient([&] { return mean(mul_scalar(add_scalar(a, 0.7), -1.3)); }, a);
    REQUIRE(r.max_rel_err < kOpTol);
  }
}

TEST_CASE("activations match finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(2000 + static_cast<uint64_t>(seed));
    auto x = random_leaf({4, 5}, rng, true, /*avoid_zero=*/true);
    auto r = check_gradient([&] { return sum(relu(x)); }, x);
    REQUIRE(r.max_rel_err < kOpTol);
    r = check_gradient([&] { return sum(sigmoid(x)); }, x);
    REQUIRE(r.max_rel_err < kOpTol);
    r = check_gradient([&] { return sum(coilsense::tanh(x)); }, x);
    REQUIRE(r.max_rel_err < kOpTol);
    auto w = random_leaf({4, 5}, rng);  // weighting makes softmax grads nontrivial
    r = check_gradient([&] { return sum(mul(softmax(x), w)); }, x);
    REQUIRE(r.max_rel_err < kOpTol);
  }
}

TEST_CASE("matmul matches finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(3000 + static_cast<uint64_t>(seed));
    auto a = random_leaf({3, 4}, rng);
    auto b = random_leaf({4, 2}, rng);
    auto w = random_leaf({3, 2}, rng);
    auto loss = [&] { return sum(mul(matmul(a, b), w)); };
    REQUIRE(check_gradient(loss, a).max_rel_err < kOpTol);
    REQUIRE(check_gradient(loss, b).max_rel_err < kOpTol);
  }
}

TEST_CASE("reductions match finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(4000 + static_cast<uint64_t>(seed));
    auto x = random_leaf({2, 3, 4}, rng);
    for (int axis = 0; axis < 3; ++axis) {
      auto w = random_leaf(detail::drop_axis(x.shape(), axis), rng);
      auto r = check_gradient([&] { return sum(mul(sum(x, axis), w)); }, x);
      REQUIRE(r.max_rel_err < kOpTol);
      r = check_gradient([&] { return sum(mul(mean(x, axis), w)); }, x);
      REQUIRE(r.max_rel_err < kOpTol);
    }
    REQUIRE(check_gradient([&] { return mean(x); }, x).max_rel_err < kOpTol);
  }
}

TEST_CASE("structure ops match finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(5000 + static_cast<uint64_t>(seed));
    auto x = random_leaf({2, 3, 4}, rng);
    auto w = random_leaf({2, 4, 3}, rng);
    auto r = check_gradient([&] { return sum(mul(swap_axes12(x), w)); }, x);
    REQUIRE(r.max_rel_err < kOpTol);

    auto w2 = random_leaf({24}, rng);
    r = check_gradient([&] { return sum(mul(reshape(x, {24}), w2)); }, x);
    REQUIRE(r.max_rel_err < kOpTol);

    auto wt = random_leaf({2, 4}, rng);
    r = check_gradient([&] { return sum(mul(select_time(x, 1), wt)); }, x);
    REQUIRE(r.max_rel_err < kOpTol);

    auto m = random_leaf({3, 5}, rng);
    auto ws = random_leaf({3, 2}, rng);
    r = check_gradient([&] { return sum(mul(slice_cols(m, 2, 2), ws)); }, m);
    REQUIRE(r.max_rel_err < kOpTol);

    auto bias = random_leaf({5}, rng);
    auto wb = random_leaf({3, 5}, rng);
    r = check_gradient([&] { return sum(mul(add_rows(m, bias), wb)); }, bias);
    REQUIRE(r.max_rel_err < kOpTol);

    std::vector<Tensor<double>> parts{random_leaf({2, 3}, rng), random_leaf({2, 3}, rng)};
    auto wst = random_leaf({2, 2, 3}, rng);
    r = check_gradient([&] { return sum(mul(stack_time(parts), wst)); }, parts[0]);
    REQUIRE(r.max_rel_err < kOpTol);
  }
}

TEST_CASE("losses match finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(6000 + static_cast<uint64_t>(seed));
    auto z = random_leaf({4, 2}, rng);
    std::vector<double> onehot(8, 0.0);
    for (int b = 0; b < 4; ++b) onehot[static_cast<size_t>(b * 2 + (rng.next_u64() & 1))] = 1.0;
    auto y = Tensor<double>::from_data({4, 2}, onehot);
    auto r = check_gradient([&] { return softmax_cross_entropy(z, y); }, z);
    REQUIRE(r.max_rel_err < kOpTol);
    r = check_gradient([&] { return sigmoid_binary_cross_entropy(z, y); }, z);
    REQUIRE(r.max_rel_err < kOpTol);
  }
}

TEST_CASE("losses agree with hand-computed values") {
  // two classes, logits (0,0): CE = log 2 regardless of label
  auto z = Tensor<double>::from_data({1, 2}, {0.0, 0.0});
  auto y = Tensor<double>::from_data({1, 2}, {1.0, 0.0});
  REQUIRE(softmax_cross_entropy(z, y).item() == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  // BCE at logit 0 is log 2 per element
  REQUIRE(sigmoid_binary_cross_entropy(z, y).item() ==
          Catch::Approx(std::log(2.0)).epsilon(1e-12));
}
