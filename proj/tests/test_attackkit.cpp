#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "explmia/attackkit.hpp"
#include "explmia/evalkit.hpp"
#include "explmia/harness.hpp"
#include "explmia/rng.hpp"
#include "oracles.hpp"

using namespace explmia;
using attackkit::MembershipMatrix;
using attackkit::ScoreMatrix;
using explainkit::Method;
using explainkit::ScoreKind;

namespace {

ScoreMatrix make_scores(std::size_t n, std::size_t m, ScoreKind kind = ScoreKind::Variance) {
  ScoreMatrix s;
  s.n_examples = n;
  s.n_models = m;
  s.scores.assign(n * m, 0.0);
  s.kind = kind;
  return s;
}

double hand_log_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - (x - mean) * (x - mean) / (2.0 * var);
}

}  // namespace

TEST_CASE("build_split_plan: column sums, determinism, rejections") {
  auto m = attackkit::build_split_plan(100, 9, 7);
  for (std::size_t col = 0; col < m.n_models; ++col) {
    std::size_t sum = 0;
    for (std::size_t i = 0; i < m.n_examples; ++i) sum += m.at(i, col);
    CHECK(sum == 50);
  }
  auto m2 = attackkit::build_split_plan(100, 9, 7);
  CHECK(m.flags == m2.flags);
  auto m3 = attackkit::build_split_plan(100, 9, 8);
  CHECK(m.flags != m3.flags);

  CHECK_THROWS_AS(attackkit::build_split_plan(101, 9, 7), std::invalid_argument);
  CHECK_THROWS_AS(attackkit::build_split_plan(100, 2, 7), std::invalid_argument);
}

TEST_CASE("build_split_plan: per-example IN counts behave binomially over 33 columns") {
  auto m = attackkit::build_split_plan(512, 33, 42);
  double total = 0.0;
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    int count = 0;
    for (std::size_t col = 0; col < m.n_models; ++col) count += m.at(i, col);
    // Binomial(33, 1/2) leaves [5, 28] with probability > 0.999 per example.
    CHECK(count >= 5);
    CHECK(count <= 28);
    total += count;
  }
  CHECK(total / m.n_examples == doctest::Approx(16.5).epsilon(0.02));
}

TEST_CASE("fit_gaussian: floor and hand values") {
  auto single = attackkit::fit_gaussian({5.0});
  CHECK(single.mean == 5.0);
  CHECK(single.variance == 1e-12);

  auto zeros = attackkit::fit_gaussian({0.0, 0.0, 0.0});
  CHECK(zeros.mean == 0.0);
  CHECK(zeros.variance == 1e-12);

  auto f = attackkit::fit_gaussian({1.0, 2.0, 3.0, 4.0});
  CHECK(f.mean == doctest::Approx(2.5));
  CHECK(f.variance == doctest::Approx(1.25));

  CHECK_THROWS_AS(attackkit::fit_gaussian({}), std::invalid_argument);
}

TEST_CASE("lira_scores: symmetric, directional, and closed-form cases") {
  // 1 target + 4 shadows, 2 examples
  auto membership = MembershipMatrix{2, 5, {1, 1, 0, 1, 0, 0, 1, 0, 1, 0}};
  auto scores = make_scores(2, 5);

  SUBCASE("identical populations give log lambda zero") {
    for (auto& v : scores.scores) v = 2.0;
    auto r = attackkit::lira_scores(scores, membership, 0);
    CHECK(r.log_lambda[0] == doctest::Approx(0.0));
    CHECK(r.log_lambda[1] == doctest::Approx(0.0));
  }

  SUBCASE("observation at the IN mean gives large positive log lambda") {
    // example 0: IN shadows at columns 1 and 3, OUT at 2 and 4
    scores.at(0, 1) = 1.0;
    scores.at(0, 3) = 1.0;
    scores.at(0, 2) = 3.0;
    scores.at(0, 4) = 3.0;
    scores.at(0, 0) = 1.0;
    auto r = attackkit::lira_scores(scores, membership, 0);
    CHECK(r.log_lambda[0] > 100.0);
  }

  SUBCASE("matches a hand-evaluated Gaussian log-pdf difference") {
    scores.at(0, 1) = 0.8;
    scores.at(0, 3) = 1.2;
    scores.at(0, 2) = 2.9;
    scores.at(0, 4) = 3.1;
    scores.at(0, 0) = 1.5;
    auto r = attackkit::lira_scores(scores, membership, 0);
    double want = hand_log_pdf(1.5, 1.0, 0.04) - hand_log_pdf(1.5, 3.0, 0.01);
    CHECK(std::fabs(r.log_lambda[0] - want) < 1e-9);
  }
}

TEST_CASE("lira_scores: empty shadow side gives zero and a degenerate flag") {
  // all shadows IN for example 0
  MembershipMatrix membership{1, 4, {1, 1, 1, 1}};
  auto scores = make_scores(1, 4);
  scores.scores = {0.5, 1.0, 2.0, 3.0};
  auto r = attackkit::lira_scores(scores, membership, 0);
  CHECK(r.log_lambda[0] == 0.0);
  CHECK(r.degenerate[0] == 1);
}

TEST_CASE("lira_scores: invariant under shared affine maps of the scores") {
  Rng rng(8);
  // Hand-built plan so every example keeps 4 IN and 4 OUT shadow models;
  // single-shadow sides hit the variance floor, which is not affine
  // invariant by design.
  MembershipMatrix membership{20, 9, std::vector<std::uint8_t>(20 * 9, 0)};
  for (int i = 0; i < 20; ++i) {
    for (int m = 0; m < 9; ++m) membership.flags[i * 9 + m] = static_cast<std::uint8_t>((i + m) % 2);
  }
  auto scores = make_scores(20, 9);
  for (auto& v : scores.scores) v = rng.next_uniform(0.0, 4.0);
  auto base = attackkit::lira_scores(scores, membership, 2);
  for (int trial = 0; trial < 10; ++trial) {
    double a = rng.next_uniform(0.1, 5.0);
    double b = rng.next_uniform(-3.0, 3.0);
    auto mapped = scores;
    for (auto& v : mapped.scores) v = a * v + b;
    auto r = attackkit::lira_scores(mapped, membership, 2);
    for (std::size_t i = 0; i < r.log_lambda.size(); ++i) {
      CHECK(std::fabs(r.log_lambda[i] - base.log_lambda[i]) < 1e-8);
    }
  }
}

TEST_CASE("lira_scores: shadow column order does not matter") {
  Rng rng(9);
  auto membership = attackkit::build_split_plan(12, 7, 3);
  auto scores = make_scores(12, 7);
  for (auto& v : scores.scores) v = rng.next_uniform(0.0, 2.0);
  auto base = attackkit::lira_scores(scores, membership, 0);

  // permute shadow columns 1..6 identically in both matrices
  std::vector<std::size_t> perm{0, 4, 2, 6, 5, 1, 3};
  auto pscores = make_scores(12, 7);
  MembershipMatrix pmem{12, 7, std::vector<std::uint8_t>(12 * 7, 0)};
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t c = 0; c < 7; ++c) {
      pscores.at(i, c) = scores.at(i, perm[c]);
      pmem.at(i, c) = membership.at(i, perm[c]);
    }
  }
  auto r = attackkit::lira_scores(pscores, pmem, 0);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(std::fabs(r.log_lambda[i] - base.log_lambda[i]) < 1e-12);
  }
}

TEST_CASE("lira_scores: moving the observation toward the IN mean raises log lambda") {
  MembershipMatrix membership{1, 5, {0, 1, 1, 0, 0}};
  auto scores = make_scores(1, 5);
  scores.scores = {0.0, 1.0, 1.4, 3.0, 3.4};  // IN fit: mean 1.2; OUT fit: mean 3.2, same var
  double prev = -std::numeric_limits<double>::infinity();
  for (double obs : {3.2, 2.7, 2.2, 1.7, 1.2}) {
    scores.at(0, 0) = obs;
    auto r = attackkit::lira_scores(scores, membership, 0);
    CHECK(r.log_lambda[0] > prev);
    prev = r.log_lambda[0];
  }
}

TEST_CASE("lira_scores: example permutation permutes outputs identically") {
  Rng rng(10);
  auto membership = attackkit::build_split_plan(10, 5, 77);
  auto scores = make_scores(10, 5);
  for (auto& v : scores.scores) v = rng.next_uniform(0.0, 1.0);
  auto base = attackkit::lira_scores(scores, membership, 1);

  std::vector<std::size_t> perm{7, 2, 9, 0, 4, 6, 1, 8, 3, 5};
  auto pscores = make_scores(10, 5);
  MembershipMatrix pmem{10, 5, std::vector<std::uint8_t>(50, 0)};
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t c = 0; c < 5; ++c) {
      pscores.at(i, c) = scores.at(perm[i], c);
      pmem.at(i, c) = membership.at(perm[i], c);
    }
  }
  auto r = attackkit::lira_scores(pscores, pmem, 1);
  for (std::size_t i = 0; i < 10; ++i) CHECK(r.log_lambda[i] == base.log_lambda[perm[i]]);
}

TEST_CASE("run_lira_all_targets returns one run per model") {
  auto membership = attackkit::build_split_plan(8, 4, 3);
  auto scores = make_scores(8, 4);
  Rng rng(4);
  for (auto& v : scores.scores) v = rng.next_uniform(0.0, 1.0);
  auto runs = attackkit::run_lira_all_targets(scores, membership);
  CHECK(runs.size() == 4);
  for (std::size_t t = 0; t < runs.size(); ++t) {
    CHECK(runs[t].target_model == t);
    CHECK(runs[t].log_lambda.size() == 8);
  }
}

TEST_CASE("threshold_attack_scores: orientation and brute-force agreement") {
  auto scores = make_scores(4, 3, ScoreKind::Variance);
  // members have low variance under the target model (column 0)
  scores.at(0, 0) = 0.1;
  scores.at(1, 0) = 0.1;
  scores.at(2, 0) = 0.9;
  scores.at(3, 0) = 0.9;
  auto s = attackkit::threshold_attack_scores(scores, 0);
  std::vector<std::uint8_t> labels{1, 1, 0, 0};
  auto curve = evalkit::roc_curve(s, labels);
  CHECK(evalkit::auc(curve) == doctest::Approx(1.0));

  // all-equal variances carry no signal
  auto flat = make_scores(4, 3, ScoreKind::Variance);
  for (auto& v : flat.scores) v = 0.5;
  CHECK(evalkit::auc(evalkit::roc_curve(attackkit::threshold_attack_scores(flat, 0), labels)) ==
        doctest::Approx(0.5));

  // hand mixture matches brute-force threshold enumeration
  auto mix = make_scores(4, 3, ScoreKind::Variance);
  mix.at(0, 0) = 0.2;
  mix.at(1, 0) = 0.7;
  mix.at(2, 0) = 0.4;
  mix.at(3, 0) = 0.9;
  auto ms = attackkit::threshold_attack_scores(mix, 0);
  auto got = evalkit::roc_curve(ms, labels);
  auto want = oracles::brute_force_roc(ms, labels);
  REQUIRE(got.points.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(got.points[i].first == doctest::Approx(want[i].fpr));
    CHECK(got.points[i].second == doctest::Approx(want[i].tpr));
  }

  auto wrong = make_scores(4, 3, ScoreKind::L1Norm);
  CHECK_THROWS_AS(attackkit::threshold_attack_scores(wrong, 0), std::invalid_argument);
}

TEST_CASE("collect_scores: determinism, loss kind, and spot recomputation") {
  auto ds = harness::gen_synthetic_blobs(16, 4, 2, 4.0, 5);
  numcore::MlpConfig cfg{4, {5}, 2};
  auto model = oracles::random_mlp(cfg, 44);
  std::vector<numcore::ModelParams> models{model, model, oracles::random_mlp(cfg, 45)};
  attackkit::CollectParams cp;
  cp.seed = 11;

  auto m = attackkit::collect_scores(models, ds, Method::IXG, ScoreKind::Variance, cp);
  CHECK(m.n_examples == 16);
  CHECK(m.n_models == 3);
  for (std::size_t i = 0; i < m.n_examples; ++i) {
    CHECK(m.at(i, 0) == m.at(i, 1));  // identical models, identical columns
    CHECK(m.at(i, 0) >= 0.0);
  }
  // spot entry equals an independent recomputation
  auto phi = explainkit::ixg(models[2], ds.example(3));
  CHECK(m.at(3, 2) == explainkit::summarize(phi, ScoreKind::Variance));

  auto loss = attackkit::collect_scores(models, ds, Method::IXG, ScoreKind::Loss, cp);
  auto fwd = numcore::forward(models[2], ds.example(7));
  CHECK(loss.at(7, 2) == numcore::cross_entropy(fwd.probs, ds.labels[7]));
  CHECK_FALSE(loss.has_method);

  // worker count does not change results
  attackkit::CollectParams cp4 = cp;
  cp4.workers = 4;
  auto m4 = attackkit::collect_scores(models, ds, Method::IXG, ScoreKind::Variance, cp4);
  CHECK(m.scores == m4.scores);

  auto gs1 = attackkit::collect_scores(models, ds, Method::GS, ScoreKind::L1Norm, cp);
  auto gs4 = attackkit::collect_scores(models, ds, Method::GS, ScoreKind::L1Norm, cp4);
  CHECK(gs1.scores == gs4.scores);
}
