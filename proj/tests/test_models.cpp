#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "coilsense/models.hpp"
#include "coilsense/rng.hpp"
#include "gradcheck.hpp"

using namespace coilsense;
using gradcheck::check_gradient;
using gradcheck::random_leaf;
using gradcheck::sample_coords;

namespace {

Tensor<double> random_batch(int64_t n, Rng& rng) {
  std::vector<double> v(static_cast<size_t>(n * 4 * 40));
  for (auto& x : v) x = rng.normal();
  return Tensor<double>::from_data({n, 4, 40}, std::move(v));
}

Tensor<double> onehot_labels(const std::vector<int>& labels) {
  std::vector<double> v(labels.size() * 2, 0.0);
  for (size_t i = 0; i < labels.size(); ++i) v[i * 2 + static_cast<size_t>(labels[i])] = 1.0;
  return Tensor<double>::from_data({static_cast<int64_t>(labels.size()), 2}, std::move(v));
}

std::vector<ModelKind> all_kinds() {
  return {ModelKind::fcn, ModelKind::resnet, ModelKind::tcnn, ModelKind::lstm};
}

}  // namespace

TEST_CASE("every architecture maps [n,4,40] to [n,2]") {
  Rng rng(7);
  auto x = random_batch(3, rng);
  for (auto kind : all_kinds()) {
    auto model = build_model<double>(ModelSpec::defaults(kind), 11);
    model.set_mode(Mode::eval);
    auto y = model.forward(x);
    REQUIRE(y.shape() == Shape{3, 2});
    for (double v : y.values()) REQUIRE(std::isfinite(v));
    if (model.head() == HeadKind::softmax) {
      auto yv = y.values();
      for (int64_t r = 0; r < 3; ++r) {
        REQUIRE(std::abs(yv[static_cast<size_t>(2 * r)] + yv[static_cast<size_t>(2 * r + 1)] -
                         1.0) < 1e-9);
      }
    } else {
      for (double v : y.values()) {
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
      }
    }
  }
}

TEST_CASE("wrong input shape is rejected") {
  auto model = build_model<double>(ModelSpec::defaults(ModelKind::fcn), 1);
  REQUIRE_THROWS_AS(model.forward(Tensor<double>::zeros({2, 4, 39})), ShapeError);
  REQUIRE_THROWS_AS(model.forward(Tensor<double>::zeros({2, 3, 40})), ShapeError);
  REQUIRE_THROWS_AS(model.forward(Tensor<double>::zeros({4, 40})), ShapeError);
}

TEST_CASE("sequence length traces match the layer graphs") {
  REQUIRE(sequence_length_trace(ModelSpec::defaults(ModelKind::fcn)) ==
          std::vector<int64_t>{40, 40, 40, 40});
  REQUIRE(sequence_length_trace(ModelSpec::defaults(ModelKind::resnet)) ==
          std::vector<int64_t>{40, 40, 40, 40});
  REQUIRE(sequence_length_trace(ModelSpec::defaults(ModelKind::tcnn)) ==
          std::vector<int64_t>{40, 34, 28, 9});
  REQUIRE(sequence_length_trace(ModelSpec::defaults(ModelKind::lstm)) ==
          std::vector<int64_t>{40, 38, 36, 34, 32});
}

TEST_CASE("parameter counts equal the closed-form shape arithmetic") {
  auto count = [](ModelKind k) {
    auto model = build_model<double>(ModelSpec::defaults(k), 3);
    return model.parameter_count();
  };
  REQUIRE(count(ModelKind::fcn) == 268034);
  REQUIRE(count(ModelKind::resnet) == 168194);
  REQUIRE(count(ModelKind::tcnn) == 908);
  REQUIRE(count(ModelKind::lstm) == 33986);
}

TEST_CASE("tcnn flatten width is 12 channels x 9 steps") {
  auto spec = ModelSpec::defaults(ModelKind::tcnn);
  REQUIRE(spec.tcnn_filters[1] * sequence_length_trace(spec).back() == 108);
}

TEST_CASE("all-zero tcnn weights give 0.5 activations after the sigmoids") {
  auto model = build_model<double>(ModelSpec::defaults(ModelKind::tcnn), 5);
  for (auto& nt : model.state()) {
    for (auto& v : nt.tensor.values_mut()) v = 0.0;
  }
  model.set_mode(Mode::eval);
  Rng rng(5);
  auto scores = model.forward(random_batch(1, rng));
  // zero dense on 0.5-valued features -> logits 0 -> softmax 0.5/0.5
  REQUIRE(scores.values()[0] == Catch::Approx(0.5));
  REQUIRE(scores.values()[1] == Catch::Approx(0.5));
}

TEST_CASE("identical seeds give identical scores") {
  Rng rng(9);
  auto x = random_batch(2, rng);
  for (auto kind : all_kinds()) {
    auto a = build_model<double>(ModelSpec::defaults(kind), 77);
    auto b = build_model<double>(ModelSpec::defaults(kind), 77);
    a.set_mode(Mode::eval);
    b.set_mode(Mode::eval);
    auto ya = a.forward(x);
    auto yb = b.forward(x);
    REQUIRE(std::memcmp(ya.values().data(), yb.values().data(),
                        ya.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("mode flag only matters for batchnorm and dropout") {
  Rng rng(10);
  auto x = random_batch(2, rng);
  // TCNN has neither: train and eval forward agree exactly
  auto tcnn = build_model<double>(ModelSpec::defaults(ModelKind::tcnn), 4);
  tcnn.set_mode(Mode::train);
  auto yt = tcnn.forward(x);
  tcnn.set_mode(Mode::eval);
  auto ye = tcnn.forward(x);
  REQUIRE(std::memcmp(yt.values().data(), ye.values().data(),
                      yt.size() * sizeof(double)) == 0);

  // FCN has batchnorm: fresh running stats differ from batch stats
  auto fcn = build_model<double>(ModelSpec::defaults(ModelKind::fcn), 4);
  fcn.set_mode(Mode::train);
  auto ft = fcn.forward(x);
  fcn.set_mode(Mode::eval);
  auto fe = fcn.forward(x);
  REQUIRE(std::memcmp(ft.values().data(), fe.values().data(),
                      ft.size() * sizeof(double)) != 0);
}

TEST_CASE("eval-mode dropout makes repeated lstm forwards identical") {
  Rng rng(12);
  auto x = random_batch(2, rng);
  auto model = build_model<double>(ModelSpec::defaults(ModelKind::lstm), 8);
  model.set_mode(Mode::eval);
  auto a = model.forward(x);
  auto b = model.forward(x);
  REQUIRE(std::memcmp(a.values().data(), b.values().data(),
                      a.size() * sizeof(double)) == 0);
}

TEST_CASE("scores respond to single-parameter perturbations") {
  Rng rng(13);
  auto x = random_batch(1, rng);
  for (auto kind : all_kinds()) {
    auto model = build_model<double>(ModelSpec::defaults(kind), 21);
    model.set_mode(Mode::eval);
    auto first = model.forward(x);
    std::vector<double> before(first.values().begin(), first.values().end());
    auto params = model.trainable_parameters();
    auto w = params.front().values_mut();  // earliest layer: exercises the whole depth
    w[0] += 0.05;
    auto second = model.forward(x);
    auto after = second.values();
    bool changed = false;
    for (size_t i = 0; i < after.size(); ++i) changed = changed || after[i] != before[i];
    REQUIRE(changed);
  }
}

TEST_CASE("full-model gradients match finite differences") {
  // eval mode keeps the forward deterministic (dropout off, running stats);
  // train-mode batchnorm and dropout backwards are covered layer by layer.
  Rng seed_rng(100);
  for (auto kind : all_kinds()) {
    for (int rep = 0; rep < 3; ++rep) {
      const uint64_t seed = seed_rng.next_u64();
      auto model = build_model<double>(ModelSpec::defaults(kind), seed);
      model.set_mode(Mode::eval);
      Rng rng(seed + 1);
      auto x = random_batch(2, rng);
      auto y = onehot_labels({0, 1});
      auto loss_fn = [&]() {
        auto z = model.logits(x);
        return model.head() == HeadKind::softmax ? softmax_cross_entropy(z, y)
                                                 : sigmoid_binary_cross_entropy(z, y);
      };
      auto state = model.state();
      for (auto& nt : state) {
        if (!nt.trainable) continue;
        auto coords = sample_coords(nt.tensor.size(), 2, rng);
        auto r = check_gradient(loss_fn, nt.tensor, coords);
        INFO(to_string(kind) << " " << nt.name);
        REQUIRE(r.max_rel_err < 1e-3);
      }
    }
  }
}

TEST_CASE("resnet gradient reaches the first block") {
  auto model = build_model<double>(ModelSpec::defaults(ModelKind::resnet), 31);
  model.set_mode(Mode::eval);
  Rng rng(32);
  auto x = random_batch(2, rng);
  auto y = onehot_labels({0, 1});
  softmax_cross_entropy(model.logits(x), y).backward();
  auto state = model.state();
  double mag = 0;
  for (auto& nt : state) {
    if (nt.name == "block1.conv1.weight") {
      for (double g : nt.tensor.grad()) mag = std::max(mag, std::abs(g));
    }
  }
  REQUIRE(mag > 0.0);
}

TEST_CASE("model spec round-trips through canonical text") {
  auto spec = ModelSpec::defaults(ModelKind::lstm);
  spec.lstm_units = 16;
  spec.tcnn_kernel = 5;
  auto text = spec.to_text();
  auto back = ModelSpec::from_text(text);
  REQUIRE(back.to_text() == text);
  REQUIRE(back.lstm_units == 16);
  REQUIRE_THROWS_AS(ModelSpec::from_text("kind = fcn\nbogus_key = 3\n"), ParseError);
  REQUIRE_THROWS_AS(ModelSpec::from_text("input_channels = 4\n"), ParseError);
}

// --- checkpoints -------------------------------------------------------------

TEST_CASE("checkpoint round-trip reproduces forward bit-exactly") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "coilsense_ckpt_test";
  fs::create_directories(dir);
  Rng rng(41);
  auto x = random_batch(2, rng);
  for (auto kind : all_kinds()) {
    auto model = build_model<double>(ModelSpec::defaults(kind), 1234);
    model.set_mode(Mode::eval);
    auto first = model.forward(x);
    std::vector<double> before(first.values().begin(), first.values().end());
    const auto path = dir / (to_string(kind) + ".ckpt");
    save_checkpoint(model, path);
    auto loaded = load_checkpoint<double>(path);
    auto after = loaded.forward(x);
    REQUIRE(std::memcmp(before.data(), after.values().data(),
                        before.size() * sizeof(double)) == 0);
  }
  fs::remove_all(dir);
}

TEST_CASE("loading a checkpoint against the wrong spec is a typed error") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "coilsense_ckpt_mismatch";
  fs::create_directories(dir);
  auto model = build_model<double>(ModelSpec::defaults(ModelKind::fcn), 5);
  const auto path = dir / "fcn.ckpt";
  save_checkpoint(model, path);
  REQUIRE_THROWS_AS(load_checkpoint<double>(path, ModelSpec::defaults(ModelKind::resnet)),
                    CheckpointError);
  REQUIRE_NOTHROW(load_checkpoint<double>(path, ModelSpec::defaults(ModelKind::fcn)));
  fs::remove_all(dir);
}

TEST_CASE("corrupt checkpoints fail the checksum") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "coilsense_ckpt_corrupt";
  fs::create_directories(dir);
  auto model = build_model<double>(ModelSpec::defaults(ModelKind::tcnn), 6);
  const auto path = dir / "tcnn.ckpt";
  save_checkpoint(model, path);

  std::string bytes;
  {
    std::ifstream is(path, std::ios::binary);
    bytes.assign((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  }
  bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x5A);
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  REQUIRE_THROWS_AS(load_checkpoint<double>(path), CheckpointError);
  fs::remove_all(dir);
}

TEST_CASE("precision mismatch is rejected") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "coilsense_ckpt_precision";
  fs::create_directories(dir);
  auto model = build_model<float>(ModelSpec::defaults(ModelKind::tcnn), 6);
  const auto path = dir / "tcnn32.ckpt";
  save_checkpoint(model, path);
  REQUIRE(checkpoint_scalar_size(path) == 4);
  REQUIRE_THROWS_AS(load_checkpoint<double>(path), CheckpointError);
  REQUIRE_NOTHROW(load_checkpoint<float>(path));
  fs::remove_all(dir);
}
