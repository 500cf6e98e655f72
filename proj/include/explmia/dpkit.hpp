#ifndef EXPLMIA_DPKIT_HPP
#define EXPLMIA_DPKIT_HPP

#include <cstdint>
#include <vector>

#include "explmia/dataset.hpp"
#include "explmia/modelkit.hpp"
#include "explmia/numcore.hpp"

namespace explmia::dpkit {

struct DpConfig {
  double noise_multiplier = 1.0;   // sigma; 0 allowed only with allow_zero_sigma
  double stability_constant = 0.01;  // gamma
  double sampling_rate = 0.1;      // q, Poisson inclusion probability
  double delta = 1e-5;
  int steps = 1;                   // T
  bool allow_zero_sigma = false;   // testing escape hatch

  void validate() const;
};

// Automatic clipping: g * 1 / (||g||_2 + gamma). Output norm is
// ||g|| / (||g|| + gamma), always strictly below 1.
std::vector<double> clip_auto(const std::vector<double>& g, double gamma);

// DP-SGD with Poisson subsampling and automatic per-sample clipping.
// Each step: include each example independently with probability q, clip
// per-sample loss gradients, sum, add N(0, sigma^2 I) to the sum, divide by
// the expected lot size L = q * n, descend with the learning rate.
numcore::ModelParams dp_sgd_train(const Dataset& dataset, const numcore::MlpConfig& config,
                                  const modelkit::TrainConfig& train, const DpConfig& dp);

// Epsilon for the Poisson-subsampled Gaussian mechanism composed over T
// steps, via RDP at integer orders alpha in [2, 64] and the standard
// conversion eps = min_alpha [T * rdp(alpha) + log(1/delta) / (alpha - 1)].
double account_epsilon(double sigma, double q, int steps, double delta);

// Renyi divergence bound of one subsampled Gaussian release at integer
// order alpha (binomial expansion, evaluated in log space).
double subsampled_gaussian_rdp(double sigma, double q, int alpha);

// Binary search over sigma in [0.3, 100] until account_epsilon lands within
// 2% of the target. Throws if the target is unreachable in the bracket.
double calibrate_sigma(double target_epsilon, double q, int steps, double delta);

}  // namespace explmia::dpkit

#endif  // EXPLMIA_DPKIT_HPP
