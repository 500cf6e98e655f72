#ifndef EXPLMIA_ATTACKKIT_HPP
#define EXPLMIA_ATTACKKIT_HPP

#include <cstdint>
#include <vector>

#include "explmia/dataset.hpp"
#include "explmia/explainkit.hpp"
#include "explmia/numcore.hpp"

namespace explmia::attackkit {

// Column m holds the membership flags of model m's training half. Every
// column sums to exactly n/2.
struct MembershipMatrix {
  std::size_t n_examples = 0;
  std::size_t n_models = 0;
  std::vector<std::uint8_t> flags;  // row-major n_examples x n_models

  std::uint8_t at(std::size_t example, std::size_t model) const {
    return flags[example * n_models + model];
  }
  std::uint8_t& at(std::size_t example, std::size_t model) {
    return flags[example * n_models + model];
  }
};

struct ScoreMatrix {
  std::size_t n_examples = 0;
  std::size_t n_models = 0;
  std::vector<double> scores;  // row-major
  explainkit::ScoreKind kind = explainkit::ScoreKind::Variance;
  explainkit::Method method = explainkit::Method::IXG;  // ignored for Loss
  bool has_method = true;

  double at(std::size_t example, std::size_t model) const {
    return scores[example * n_models + model];
  }
  double& at(std::size_t example, std::size_t model) {
    return scores[example * n_models + model];
  }
};

struct GaussianFit {
  double mean = 0.0;
  double variance = 1e-12;  // floored
};

// Per-example log likelihood ratios for one target model, with true
// membership flags and a marker for degenerate shadow populations.
struct PerExampleLambda {
  std::size_t target_model = 0;
  std::vector<double> log_lambda;
  std::vector<std::uint8_t> is_member;
  std::vector<std::uint8_t> degenerate;  // empty IN or OUT shadow set
};

// Independent uniformly random half-subsets per column, deterministic in
// (master_seed, column index).
MembershipMatrix build_split_plan(std::size_t n_examples, std::size_t n_models,
                                  std::uint64_t master_seed);

struct CollectParams {
  int ig_steps = 25;
  explainkit::GsParams gs;
  std::uint64_t seed = 0;  // GS stream root
  int workers = 1;
};

// scores(i, m) = summarize(explain(model_m, x_i), kind); for Loss the
// per-example cross-entropy under model m.
ScoreMatrix collect_scores(const std::vector<numcore::ModelParams>& models, const Dataset& dataset,
                           explainkit::Method method, explainkit::ScoreKind kind,
                           const CollectParams& params);

// Sample mean and population (1/n) variance, variance floored at 1e-12.
GaussianFit fit_gaussian(const std::vector<double>& samples);

double gaussian_log_pdf(double x, const GaussianFit& fit);

// For each example: fit IN/OUT Gaussians over shadow columns (all columns
// except the target) and score log N(s_obs; in) - log N(s_obs; out).
// Examples with an empty shadow side get log_lambda 0 and a degenerate flag.
PerExampleLambda lira_scores(const ScoreMatrix& scores, const MembershipMatrix& membership,
                             std::size_t target_model);

// One LiRA run per target-model choice.
std::vector<PerExampleLambda> run_lira_all_targets(const ScoreMatrix& scores,
                                                   const MembershipMatrix& membership);

// Thresholding baseline: membership score = -variance, so the shared
// score>=tau ROC sweep realizes the "member iff variance <= tau" rule.
std::vector<double> threshold_attack_scores(const ScoreMatrix& scores, std::size_t target_model);

}  // namespace explmia::attackkit

#endif  // EXPLMIA_ATTACKKIT_HPP
