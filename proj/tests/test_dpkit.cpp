#include <doctest.h>

#include <cmath>

#include "explmia/dpkit.hpp"
#include "explmia/harness.hpp"
#include "explmia/rng.hpp"
#include "oracles.hpp"

using namespace explmia;

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("clip_auto: zero vector and hand-evaluated norms") {
  std::vector<double> zero(5, 0.0);
  CHECK(dpkit::clip_auto(zero, 0.5) == zero);

  std::vector<double> unit{1.0, 0.0, 0.0};
  CHECK(std::fabs(norm2(dpkit::clip_auto(unit, 0.01)) - 1.0 / 1.01) < 1e-12);

  std::vector<double> big{99.0, 0.0};
  CHECK(std::fabs(norm2(dpkit::clip_auto(big, 1.0)) - 0.99) < 1e-12);
}

TEST_CASE("clip_auto: output norm formula and strict bound, order preserved") {
  Rng rng(77);
  std::vector<std::pair<double, double>> norms;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> g(8);
    for (double& v : g) v = rng.next_uniform(-3.0, 3.0);
    double gamma = rng.next_uniform(0.001, 1.0);
    double n = norm2(g);
    double out = norm2(dpkit::clip_auto(g, gamma));
    CHECK(out < 1.0);
    CHECK(std::fabs(out - n / (n + gamma)) < 1e-9);
    norms.emplace_back(n, norm2(dpkit::clip_auto(g, 0.01)));
  }
  // larger raw norm implies larger clipped norm at fixed gamma
  for (int trial = 0; trial < 1000; ++trial) {
    auto& a = norms[rng.next_u64() % norms.size()];
    auto& b = norms[rng.next_u64() % norms.size()];
    if (a.first > b.first) CHECK(a.second > b.second);
  }
}

TEST_CASE("dp_sgd_train: deterministic and sensitive to noise") {
  auto ds = harness::gen_synthetic_blobs(32, 4, 2, 6.0, 9);
  numcore::MlpConfig cfg{4, {6}, 2};
  modelkit::TrainConfig tc;
  tc.epochs = 1;
  tc.seed = 4;
  dpkit::DpConfig dp;
  dp.noise_multiplier = 1.0;
  dp.sampling_rate = 0.25;
  dp.steps = 20;
  auto a = dpkit::dp_sgd_train(ds, cfg, tc, dp);
  auto b = dpkit::dp_sgd_train(ds, cfg, tc, dp);
  CHECK(a.flat == b.flat);

  dp.noise_multiplier = 2.0;
  auto c = dpkit::dp_sgd_train(ds, cfg, tc, dp);
  CHECK(a.flat != c.flat);
}

TEST_CASE("dp_sgd_train: sigma = 0 is deterministic clipped SGD") {
  auto ds = harness::gen_synthetic_blobs(32, 4, 2, 6.0, 10);
  numcore::MlpConfig cfg{4, {6}, 2};
  modelkit::TrainConfig tc;
  tc.seed = 12;
  dpkit::DpConfig dp;
  dp.noise_multiplier = 0.0;
  dp.allow_zero_sigma = true;
  dp.sampling_rate = 0.5;
  dp.steps = 40;
  auto a = dpkit::dp_sgd_train(ds, cfg, tc, dp);
  auto b = dpkit::dp_sgd_train(ds, cfg, tc, dp);
  CHECK(a.flat == b.flat);
  for (double v : a.flat) CHECK(std::isfinite(v));
  // clipped-SGD with no noise still learns the easy task
  CHECK(modelkit::evaluate(a, ds).accuracy > 0.9);
}

TEST_CASE("dp config validation") {
  dpkit::DpConfig dp;
  dp.noise_multiplier = 0.0;
  CHECK_THROWS_AS(dp.validate(), std::invalid_argument);
  dp.noise_multiplier = 1.0;
  dp.sampling_rate = 1.5;
  CHECK_THROWS_AS(dp.validate(), std::invalid_argument);
  dp.sampling_rate = 0.1;
  dp.stability_constant = 0.0;
  CHECK_THROWS_AS(dp.validate(), std::invalid_argument);
}

TEST_CASE("account_epsilon: monotone in sigma, steps, and q") {
  double sigmas[] = {0.6, 0.9, 1.3, 2.0, 3.1};
  int steps[] = {10, 40, 100, 400, 1000};
  double qs[] = {0.01, 0.03, 0.07, 0.15, 0.3};
  for (double q : qs) {
    for (int T : steps) {
      double prev = std::numeric_limits<double>::infinity();
      for (double s : sigmas) {
        double eps = dpkit::account_epsilon(s, q, T, 1e-5);
        CHECK(eps <= prev);  // non-increasing in sigma
        prev = eps;
      }
    }
  }
  for (double s : sigmas) {
    for (double q : qs) {
      double prev = 0.0;
      for (int T : steps) {
        double eps = dpkit::account_epsilon(s, q, T, 1e-5);
        CHECK(eps >= prev);  // non-decreasing in T
        prev = eps;
      }
    }
    for (int T : steps) {
      double prev = 0.0;
      for (double q : qs) {
        double eps = dpkit::account_epsilon(s, q, T, 1e-5);
        CHECK(eps >= prev);  // non-decreasing in q
        prev = eps;
      }
    }
  }
}

TEST_CASE("account_epsilon: doubling sigma strictly shrinks epsilon") {
  double e1 = dpkit::account_epsilon(1.0, 0.05, 100, 1e-5);
  double e2 = dpkit::account_epsilon(2.0, 0.05, 100, 1e-5);
  CHECK(e2 < e1);
}

TEST_CASE("account_epsilon: vanishing q approaches the conversion floor") {
  // With alpha capped at 64 the delta-conversion term log(1/delta)/63
  // remains; epsilon cannot drop below it. The sampling rate must be tiny
  // enough that q^j beats exp(j(j-1)/(2 sigma^2)) at every order up to 64.
  double floor = std::log(1e5) / 63.0;
  double eps = dpkit::account_epsilon(1.0, 1e-20, 100, 1e-5);
  CHECK(eps < floor + 1e-3);
  CHECK(eps >= floor - 1e-9);
  // at moderate q the high orders dominate and epsilon sits above the floor
  CHECK(dpkit::account_epsilon(1.0, 1e-8, 100, 1e-5) > floor);
}

TEST_CASE("account_epsilon matches the quadrature oracle within 5%") {
  double got = dpkit::account_epsilon(1.0, 0.05, 100, 1e-5);
  double want = oracles::account_epsilon_quadrature(1.0, 0.05, 100, 1e-5);
  CHECK(std::fabs(got - want) < 0.05 * want);
}

TEST_CASE("calibrate_sigma: round trip and monotone targets") {
  double q = 0.05, delta = 1e-5;
  int T = 100;
  for (double target : {0.5, 1.0, 2.0, 8.0}) {
    double sigma = dpkit::calibrate_sigma(target, q, T, delta);
    double eps = dpkit::account_epsilon(sigma, q, T, delta);
    CHECK(eps >= 0.98 * target);
    CHECK(eps <= 1.02 * target);
  }
  CHECK(dpkit::calibrate_sigma(0.5, q, T, delta) > dpkit::calibrate_sigma(8.0, q, T, delta));
}

TEST_CASE("calibrate_sigma cross-checked against the quadrature oracle") {
  double sigma = dpkit::calibrate_sigma(1.0, 0.05, 100, 1e-5);
  double eps = oracles::account_epsilon_quadrature(sigma, 0.05, 100, 1e-5);
  CHECK(std::fabs(eps - 1.0) < 0.07);
}

TEST_CASE("calibrate_sigma rejects unreachable targets") {
  // below the conversion floor for this delta
  CHECK_THROWS_AS(dpkit::calibrate_sigma(0.05, 0.05, 100, 1e-5), std::invalid_argument);
}

TEST_CASE("accountant rejects invalid inputs") {
  CHECK_THROWS_AS(dpkit::account_epsilon(0.0, 0.1, 10, 1e-5), std::invalid_argument);
  CHECK_THROWS_AS(dpkit::account_epsilon(1.0, 0.0, 10, 1e-5), std::invalid_argument);
  CHECK_THROWS_AS(dpkit::account_epsilon(1.0, 1.1, 10, 1e-5), std::invalid_argument);
}
