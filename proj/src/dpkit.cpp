#include "explmia/dpkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "explmia/rng.hpp"

namespace explmia::dpkit {

using numcore::MlpConfig;
using numcore::ModelParams;
using numcore::RealVec;

void DpConfig::validate() const {
  if (noise_multiplier < 0.0 || (noise_multiplier == 0.0 && !allow_zero_sigma)) {
    throw std::invalid_argument("DpConfig: sigma must be > 0");
  }
  if (stability_constant <= 0.0) throw std::invalid_argument("DpConfig: gamma must be > 0");
  if (sampling_rate <= 0.0 || sampling_rate > 1.0) {
    throw std::invalid_argument("DpConfig: q must be in (0, 1]");
  }
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("DpConfig: delta must be in (0, 1)");
  if (steps < 1) throw std::invalid_argument("DpConfig: steps must be >= 1");
}

std::vector<double> clip_auto(const std::vector<double>& g, double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("clip_auto: gamma must be > 0");
  double norm_sq = 0.0;
  for (double v : g) norm_sq += v * v;
  double scale = 1.0 / (std::sqrt(norm_sq) + gamma);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] * scale;
  return out;
}

ModelParams dp_sgd_train(const Dataset& dataset, const MlpConfig& config,
                         const modelkit::TrainConfig& train, const DpConfig& dp) {
  if (dataset.size() == 0) throw std::invalid_argument("dp_sgd_train: empty dataset");
  if (dataset.dim != config.input_dim) {
    throw std::invalid_argument("dp_sgd_train: dimension mismatch");
  }
  dp.validate();

  ModelParams params = modelkit::init_params(config, train.seed);
  const std::size_t n = dataset.size();
  const double lot_size = dp.sampling_rate * static_cast<double>(n);

  numcore::GradWorkspace ws;
  RealVec g(params.flat.size());
  for (int t = 0; t < dp.steps; ++t) {
    Rng sample_rng = Rng::derive(train.seed, {0x64707331ULL, static_cast<std::uint64_t>(t)});
    RealVec sum(params.flat.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (sample_rng.next_double() >= dp.sampling_rate) continue;
      std::fill(g.begin(), g.end(), 0.0);
      numcore::accumulate_loss_grad(params, dataset.row(i), dataset.labels[i], ws, g);
      RealVec clipped = clip_auto(g, dp.stability_constant);
      for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += clipped[p];
    }
    if (dp.noise_multiplier > 0.0) {
      Rng noise_rng = Rng::derive(train.seed, {0x64707332ULL, static_cast<std::uint64_t>(t)});
      for (std::size_t p = 0; p < sum.size(); ++p) {
        sum[p] += noise_rng.next_normal(0.0, dp.noise_multiplier);
      }
    }
    double scale = train.learning_rate / lot_size;
    for (std::size_t p = 0; p < sum.size(); ++p) params.flat[p] -= scale * sum[p];
  }
  return params;
}

double subsampled_gaussian_rdp(double sigma, double q, int alpha) {
  if (sigma <= 0.0) throw std::invalid_argument("rdp: sigma must be > 0");
  if (q <= 0.0 || q > 1.0) throw std::invalid_argument("rdp: q must be in (0, 1]");
  if (alpha < 2) throw std::invalid_argument("rdp: alpha must be >= 2");
  if (q == 1.0) return static_cast<double>(alpha) / (2.0 * sigma * sigma);

  // log of sum_j C(alpha, j) (1-q)^(alpha-j) q^j exp(j(j-1) / (2 sigma^2)),
  // accumulated with log-sum-exp.
  double log_q = std::log(q);
  double log_1mq = std::log1p(-q);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(alpha + 1);
  double log_binom = 0.0;  // log C(alpha, 0)
  for (int j = 0; j <= alpha; ++j) {
    if (j > 0) log_binom += std::log(static_cast<double>(alpha - j + 1)) - std::log(static_cast<double>(j));
    double t = log_binom + j * log_q + (alpha - j) * log_1mq +
               (static_cast<double>(j) * (j - 1)) / (2.0 * sigma * sigma);
    terms[j] = t;
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  double log_moment = max_term + std::log(acc);
  return std::max(0.0, log_moment / (alpha - 1));
}

double account_epsilon(double sigma, double q, int steps, double delta) {
  if (sigma <= 0.0) throw std::invalid_argument("account_epsilon: sigma must be > 0");
  if (q <= 0.0 || q > 1.0) throw std::invalid_argument("account_epsilon: q must be in (0, 1]");
  if (steps < 1) throw std::invalid_argument("account_epsilon: steps must be >= 1");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("account_epsilon: bad delta");

  double best = std::numeric_limits<double>::infinity();
  for (int alpha = 2; alpha <= 64; ++alpha) {
    double eps = steps * subsampled_gaussian_rdp(sigma, q, alpha) +
                 std::log(1.0 / delta) / (alpha - 1);
    best = std::min(best, eps);
  }
  return best;
}

double calibrate_sigma(double target_epsilon, double q, int steps, double delta) {
  if (target_epsilon <= 0.0) throw std::invalid_argument("calibrate_sigma: target must be > 0");
  double lo = 0.3, hi = 100.0;
  double eps_lo = account_epsilon(lo, q, steps, delta);
  double eps_hi = account_epsilon(hi, q, steps, delta);
  if (target_epsilon > eps_lo || target_epsilon < eps_hi) {
    throw std::invalid_argument("calibrate_sigma: target epsilon unreachable in sigma bracket");
  }
  for (int iter = 0; iter < 200; ++iter) {
    double mid = 0.5 * (lo + hi);
    double eps = account_epsilon(mid, q, steps, delta);
    if (eps >= 0.98 * target_epsilon && eps <= 1.02 * target_epsilon) return mid;
    if (eps > target_epsilon) {
      lo = mid;  // more noise needed
    } else {
      hi = mid;
    }
  }
  throw std::runtime_error("calibrate_sigma: bisection failed to converge");
}

}  // namespace explmia::dpkit
