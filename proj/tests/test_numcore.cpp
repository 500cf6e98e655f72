#include <doctest.h>

#include <cmath>

#include "explmia/numcore.hpp"
#include "explmia/rng.hpp"
#include "oracles.hpp"

using namespace explmia;
using numcore::MlpConfig;
using numcore::ModelParams;
using numcore::RealVec;

TEST_CASE("gelu zero and oracle values") {
  CHECK(numcore::gelu(0.0) == 0.0);
  // expected values frozen from the quadrature CDF oracle
  double phi1 = oracles::normal_cdf_quadrature(1.0);
  CHECK(std::fabs(numcore::gelu(1.0) - phi1) < 1e-8);
  CHECK(std::fabs(numcore::gelu(1.0) - 0.8413447461) < 1e-9);
  CHECK(std::fabs(numcore::gelu(-1.0) - (-0.1586552539)) < 1e-9);
}

TEST_CASE("gelu is monotone right of its minimum and bounded by |x|") {
  // gelu has a single minimum near x = -0.7518 and is increasing to the
  // right of it; to the left it climbs back toward zero.
  double prev = numcore::gelu(-0.7);
  for (int i = 1; i <= 10000; ++i) {
    double x = -0.7 + 10.7 * i / 10000.0;
    double v = numcore::gelu(x);
    CHECK(v >= prev);
    prev = v;
  }
  for (int i = 0; i <= 1000; ++i) {
    double x = -10.0 + 20.0 * i / 1000.0;
    CHECK(std::fabs(numcore::gelu(x)) <= std::fabs(x));
    CHECK((x >= 0.0 ? numcore::gelu(x) >= 0.0 : numcore::gelu(x) <= 0.0));
  }
}

TEST_CASE("softmax sums to one and is shift invariant") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    RealVec logits(4);
    for (double& v : logits) v = rng.next_uniform(-30.0, 30.0);
    RealVec p = numcore::softmax(logits);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-12);

    double c = rng.next_uniform(-5.0, 5.0);
    RealVec shifted = logits;
    for (double& v : shifted) v += c;
    RealVec p2 = numcore::softmax(shifted);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::fabs(p[i] - p2[i]) < 1e-10);
  }
}

TEST_CASE("forward: zero params give uniform probs") {
  MlpConfig cfg{3, {4}, 5};
  auto params = ModelParams::zeros(cfg);
  auto out = numcore::forward(params, {1.0, -2.0, 0.5});
  for (double p : out.probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("forward: single linear layer is W x") {
  MlpConfig cfg{2, {}, 2};
  auto params = ModelParams::zeros(cfg);
  params.weight(0, 0, 0) = 1.5;
  params.weight(0, 0, 1) = -0.5;
  params.weight(0, 1, 0) = 2.0;
  params.weight(0, 1, 1) = 0.25;
  auto out = numcore::forward(params, {2.0, 4.0});
  CHECK(out.logits[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(out.logits[1] == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("forward matches an independent straight-line reimplementation") {
  MlpConfig cfg{4, {5, 3}, 3};
  auto params = oracles::random_mlp(cfg, 11);
  // mirror into nested layout for the reference pass
  auto sizes = cfg.layer_sizes();
  std::vector<std::vector<std::vector<double>>> w(cfg.num_layers());
  std::vector<std::vector<double>> b(cfg.num_layers());
  for (int l = 0; l < cfg.num_layers(); ++l) {
    w[l].assign(sizes[l + 1], std::vector<double>(sizes[l]));
    b[l].assign(sizes[l + 1], 0.0);
    for (int j = 0; j < sizes[l + 1]; ++j) {
      b[l][j] = params.bias(l, j);
      for (int i = 0; i < sizes[l]; ++i) w[l][j][i] = params.weight(l, j, i);
    }
  }
  RealVec x{0.3, -1.2, 0.8, 2.0};
  auto got = numcore::forward(params, x).logits;
  auto want = oracles::forward_logits_reference(w, b, x);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::fabs(got[i] - want[i]) < 1e-10);
}

TEST_CASE("forward rejects dimension mismatch") {
  MlpConfig cfg{3, {2}, 2};
  auto params = ModelParams::zeros(cfg);
  CHECK_THROWS_AS(numcore::forward(params, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("grad_input: zero params and linear closed form") {
  MlpConfig cfg{3, {2}, 2};
  auto zero = ModelParams::zeros(cfg);
  for (double g : numcore::grad_input(zero, {1.0, 2.0, 3.0}, 1)) CHECK(g == 0.0);

  MlpConfig lin{3, {}, 2};
  auto params = ModelParams::zeros(lin);
  for (int i = 0; i < 3; ++i) {
    params.weight(0, 0, i) = 0.1 * (i + 1);
    params.weight(0, 1, i) = -0.2 * (i + 1);
  }
  auto g = numcore::grad_input(params, {1.0, 2.0, 3.0}, 1);
  for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(-0.2 * (i + 1)).epsilon(1e-14));
}

TEST_CASE("grad_input rejects bad class index") {
  MlpConfig cfg{2, {}, 2};
  auto params = ModelParams::zeros(cfg);
  CHECK_THROWS_AS(numcore::grad_input(params, {1.0, 1.0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(numcore::grad_input(params, {1.0, 1.0}, -1), std::invalid_argument);
}

TEST_CASE("grad_input matches central finite differences on random MLPs") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    MlpConfig cfg{4, {6, 5}, 3};
    auto params = oracles::random_mlp(cfg, 100 + trial);
    RealVec x(cfg.input_dim);
    for (double& v : x) v = rng.next_uniform(-2.0, 2.0);
    int c = trial % cfg.num_classes;
    auto got = numcore::grad_input(params, x, c);
    auto want = oracles::finite_diff(
        [&](const RealVec& xx) { return numcore::forward(params, xx).logits[c]; }, x);
    CHECK(oracles::grad_error(got, want) < 1e-4);
  }
}

TEST_CASE("per_sample_loss_grad: saturated prediction has tiny gradient") {
  MlpConfig cfg{2, {}, 2};
  auto params = ModelParams::zeros(cfg);
  params.weight(0, 0, 0) = 50.0;  // logit gap ~100 at x = (2, 0)
  auto g = numcore::per_sample_loss_grad(params, {2.0, 0.0}, 0);
  double norm = 0.0;
  for (double v : g) norm += v * v;
  CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("per_sample_loss_grad: linear softmax closed form") {
  MlpConfig cfg{3, {}, 2};
  auto params = oracles::random_mlp(cfg, 5);
  RealVec x{0.7, -1.1, 0.4};
  int y = 1;
  auto probs = numcore::forward(params, x).probs;
  auto g = numcore::per_sample_loss_grad(params, x, y);
  // dL/dW_{ji} = x_i (p_j - 1{j=y}), dL/db_j = p_j - 1{j=y}
  for (int j = 0; j < 2; ++j) {
    double d = probs[j] - (j == y ? 1.0 : 0.0);
    for (int i = 0; i < 3; ++i) {
      CHECK(g[params.weight_offset(0) + j * 3 + i] == doctest::Approx(x[i] * d).epsilon(1e-12));
    }
    CHECK(g[params.bias_offset(0) + j] == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("per_sample_loss_grad matches finite differences over parameters") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    MlpConfig cfg{3, {4, 4}, 3};
    auto params = oracles::random_mlp(cfg, 300 + trial);
    RealVec x(cfg.input_dim);
    for (double& v : x) v = rng.next_uniform(-2.0, 2.0);
    int y = trial % cfg.num_classes;
    auto got = numcore::per_sample_loss_grad(params, x, y);
    auto want = oracles::finite_diff(
        [&](const std::vector<double>& theta) {
          ModelParams p = params;
          p.flat = theta;
          return numcore::cross_entropy(numcore::forward(p, x).probs, y);
        },
        params.flat);
    CHECK(oracles::grad_error(got, want) < 1e-4);
  }
}

TEST_CASE("cross_entropy examples and errors") {
  CHECK(numcore::cross_entropy({0.25, 0.25, 0.25, 0.25}, 2) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(numcore::cross_entropy({0.0, 1.0}, 1) == 0.0);
  CHECK(std::fabs(numcore::cross_entropy({0.7, 0.2, 0.1}, 1) - 1.6094379124341003) < 1e-9);
  CHECK_THROWS_AS(numcore::cross_entropy({0.5, 0.5}, 2), std::invalid_argument);
  // floor keeps the zero-probability case finite
  CHECK(numcore::cross_entropy({1.0, 0.0}, 1) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("predicted_class breaks ties toward the lowest index") {
  CHECK(numcore::predicted_class({1.0, 1.0, 0.5}) == 0);
  CHECK(numcore::predicted_class({0.0, 2.0, 2.0}) == 1);
}
