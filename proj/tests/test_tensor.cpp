#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "pathcast/nn.hpp"
#include "pathcast/params.hpp"
#include "pathcast/tensor.hpp"

using namespace pathcast;

TEST_CASE("softmax of equal logits is uniform and sums to one") {
  const Tensor y = softmax(Tensor::vector({2.5, 2.5, 2.5, 2.5}));
  double total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(y.at(i) == doctest::Approx(0.25).epsilon(1e-12));
    total += y.at(i);
  }
  CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("softmax is stable for large logits") {
  const Tensor y = softmax(Tensor::vector({1000.0, 999.0, 0.0}));
  CHECK(y.all_finite());
  CHECK(y.at(0) > y.at(1));
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) total += y.at(i);
  CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("sigmoid(0) = 0.5") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5));
}

TEST_CASE("matmul with identity returns the input") {
  const Tensor eye = Tensor::from({1, 0, 0, 1}, {2, 2});
  const Tensor x = Tensor::from({3, -1, 2, 5}, {2, 2});
  const Tensor y = matmul(eye, x);
  for (std::size_t i = 0; i < 4; ++i) CHECK(y.value()[i] == x.value()[i]);
}

TEST_CASE("matmul shape mismatch throws") {
  CHECK_THROWS_AS(matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 2})), NumericError);
}

TEST_CASE("log rejects non-positive input") {
  CHECK_THROWS_AS(log(Tensor::vector({1.0, 0.0})), NumericError);
  CHECK_THROWS_AS(log(Tensor::vector({-2.0})), NumericError);
}

TEST_CASE("backward of sum gives all-ones gradient") {
  Tensor x = Tensor::vector({1.0, 2.0, 3.0}, true);
  backward(sum(x));
  for (std::size_t i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(1.0));
}

TEST_CASE("backward of l2_norm_sq gives 2x") {
  Tensor x = Tensor::vector({1.0, 2.0}, true);
  backward(l2_norm_sq(x));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward requires a scalar loss") {
  Tensor x = Tensor::vector({1.0, 2.0}, true);
  CHECK_THROWS_AS(backward(add(x, x)), NumericError);
}

TEST_CASE("concat splits gradients at the right offsets") {
  Tensor a = Tensor::vector({1.0, 2.0}, true);
  Tensor b = Tensor::vector({3.0}, true);
  const Tensor w = Tensor::vector({10.0, 20.0, 30.0});
  backward(sum(elementwise_mul(concat({a, b}), w)));
  CHECK(a.grad()[0] == doctest::Approx(10.0));
  CHECK(a.grad()[1] == doctest::Approx(20.0));
  CHECK(b.grad()[0] == doctest::Approx(30.0));
}

TEST_CASE("gather_rows scatters gradients back to source rows") {
  Tensor m = Tensor::from({1, 2, 3, 4, 5, 6}, {3, 2}, true);
  backward(sum(gather_rows(m, {2, 0, 2})));
  CHECK(m.grad()[0] == doctest::Approx(1.0));  // row 0 used once
  CHECK(m.grad()[2] == doctest::Approx(0.0));  // row 1 unused
  CHECK(m.grad()[4] == doctest::Approx(2.0));  // row 2 used twice
}

TEST_CASE("gradient check: quadratic") {
  ParamStore store;
  store.add("x", Tensor::vector({3.0}));
  const auto report =
      gradient_check(store, [&] { return l2_norm_sq(store.get("x")); }, 1e-5);
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("gradient check: sigmoid of a dot product on a random 8-vector") {
  ParamStore store;
  Rng rng(7);
  store.xavier_vec("w", 8, rng);
  std::vector<double> data(8);
  for (auto& v : data) v = rng.uniform(-1, 1);
  const Tensor x = Tensor::vector(data);
  const auto report = gradient_check(
      store, [&] { return sigmoid(sum(elementwise_mul(store.get("w"), x))); }, 1e-5);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("gradient check: composite with matmul, tanh, softmax, logsigmoid") {
  ParamStore store;
  Rng rng(11);
  store.xavier("w", 4, 4, rng);
  store.xavier_vec("v", 4, rng);
  const Tensor x = Tensor::vector({0.3, -0.2, 0.8, -0.5});
  const auto loss = [&] {
    const Tensor h = tanh(matmul(store.get("w"), x));
    const Tensor p = softmax(h);
    const Tensor s = sum(elementwise_mul(p, store.get("v")));
    return add(scale(logsigmoid(s), -1.0), mean(cos(h)));
  };
  const auto report = gradient_check(store, loss, 1e-5);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("mlp and gru gradient check") {
  ParamStore store;
  Rng rng(3);
  const Mlp mlp = make_mlp(store, "mlp", {4, 6, 2}, Activation::kTanh, rng);
  const GruCell gru = make_gru(store, "gru", 2, 2, rng);
  const Tensor x = Tensor::vector({0.1, -0.4, 0.7, 0.2});
  const Tensor h0 = Tensor::vector({0.05, -0.3});
  const auto report =
      gradient_check(store, [&] { return l2_norm_sq(gru.step(mlp(x), h0)); }, 1e-5);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("gru with zero parameters keeps zero memory") {
  GruCell gru;
  gru.wz = Tensor::zeros({3, 3}); gru.uz = Tensor::zeros({3, 3}); gru.bz = Tensor::zeros({3});
  gru.wr = Tensor::zeros({3, 3}); gru.ur = Tensor::zeros({3, 3}); gru.br = Tensor::zeros({3});
  gru.wn = Tensor::zeros({3, 3}); gru.un = Tensor::zeros({3, 3}); gru.bn = Tensor::zeros({3});
  const Tensor out = gru.step(Tensor::vector({1.0, -2.0, 0.5}), Tensor::zeros({3}));
  for (std::size_t i = 0; i < 3; ++i) CHECK(out.at(i) == doctest::Approx(0.0));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  ParamStore store;
  store.add("p", Tensor::vector({1.0, -2.0}));
  store.zero_grad();
  store.adam_step(0.01);
  CHECK(store.get("p").at(0) == doctest::Approx(1.0));
  CHECK(store.get("p").at(1) == doctest::Approx(-2.0));
}

TEST_CASE("adam: first step with constant gradient moves by about lr against the sign") {
  ParamStore store;
  Tensor p = store.add("p", Tensor::vector({0.0, 0.0}));
  p.node()->grad = {0.4, -0.004};
  store.adam_step(0.01);
  // bias-corrected mhat/sqrt(vhat) = g/|g| on the first step
  CHECK(store.get("p").at(0) == doctest::Approx(-0.01).epsilon(1e-4));
  CHECK(store.get("p").at(1) == doctest::Approx(0.01).epsilon(1e-4));
  CHECK(p.grad()[0] == 0.0);  // gradients are consumed
}

TEST_CASE("adam: identical gradients yield identical updates regardless of name order") {
  ParamStore store;
  Tensor a = store.add("a", Tensor::vector({1.0}));
  Tensor b = store.add("zz", Tensor::vector({1.0}));
  a.node()->grad = {0.7};
  b.node()->grad = {0.7};
  store.adam_step(0.003);
  CHECK(store.get("a").at(0) == doctest::Approx(store.get("zz").at(0)).epsilon(1e-15));
}

TEST_CASE("checkpoint round trip and mismatch rejection") {
  const std::string prefix = "/tmp/pathcast_test_ckpt";
  ParamStore store;
  Rng rng(5);
  store.xavier("w", 3, 2, rng);
  store.xavier_vec("v", 4, rng);
  CheckpointEntry buf;
  buf.name = "buffer";
  buf.shape = {2};
  buf.data = {7.0, 8.0};
  save_checkpoint(prefix, store, {buf}, {{"note", "x"}});

  ParamStore fresh;
  Rng rng2(99);
  fresh.xavier("w", 3, 2, rng2);
  fresh.xavier_vec("v", 4, rng2);
  const Checkpoint ckpt = load_checkpoint(prefix);
  restore_params(fresh, ckpt.entries);
  CHECK(fresh.value_checksum() == store.value_checksum());
  CHECK(ckpt.meta.at("note") == "x");
  bool saw_buffer = false;
  for (const auto& e : ckpt.entries)
    if (e.name == "buffer") {
      saw_buffer = true;
      CHECK(e.trainable == false);
      CHECK(e.data[1] == doctest::Approx(8.0));
    }
  CHECK(saw_buffer);

  const std::string blob = read_text_file(prefix + ".bin");
  write_text_file(prefix + ".bin", blob.substr(0, blob.size() - 8));
  CHECK_THROWS_AS(load_checkpoint(prefix), DataError);
  std::filesystem::remove(prefix + ".json");
  std::filesystem::remove(prefix + ".bin");
}

TEST_CASE("identical seeds produce bit-identical values after a training step") {
  auto run = [] {
    ParamStore store;
    Rng rng(42);
    const Mlp mlp = make_mlp(store, "m", {3, 5, 1}, Activation::kTanh, rng);
    const Tensor x = Tensor::vector({0.2, -0.1, 0.9});
    backward(l2_norm_sq(mlp(x)));
    store.adam_step(1e-3);
    return store.value_checksum();
  };
  CHECK(run() == run());
}

TEST_CASE("backward consumes the graph but keeps leaf gradients") {
  Tensor x = Tensor::vector({2.0}, true);
  Tensor y = l2_norm_sq(x);
  backward(y);
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  CHECK(y.node()->parents.empty());
}

TEST_CASE("no-grad mode records nothing") {
  Tensor x = Tensor::vector({2.0}, true);
  NoGradGuard ng;
  Tensor y = l2_norm_sq(x);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.node()->parents.empty());
}

TEST_CASE("relu, cos, mean forward values") {
  const Tensor r = relu(Tensor::vector({-2.0, 0.0, 3.5}));
  CHECK(r.at(0) == 0.0);
  CHECK(r.at(1) == 0.0);
  CHECK(r.at(2) == 3.5);
  const Tensor c = cos(Tensor::vector({0.0, 3.14159265358979323846}));
  CHECK(c.at(0) == doctest::Approx(1.0));
  CHECK(c.at(1) == doctest::Approx(-1.0));
  CHECK(mean(Tensor::vector({1.0, 2.0, 6.0})).item() == doctest::Approx(3.0));
}

TEST_CASE("relu backward uses the right-side subgradient at zero") {
  Tensor x = Tensor::vector({-1.0, 0.0, 2.0}, true);
  backward(sum(relu(x)));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 0.0);
  CHECK(x.grad()[2] == 1.0);
}

TEST_CASE("softmax preserves score ordering") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(6);
    for (auto& s : scores) s = rng.uniform(-5, 5);
    const Tensor p = softmax(Tensor::vector(scores));
    for (std::size_t i = 0; i < scores.size(); ++i)
      for (std::size_t j = 0; j < scores.size(); ++j)
        if (scores[i] > scores[j]) CHECK(p.at(i) > p.at(j));
  }
}
