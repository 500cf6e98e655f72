#ifndef EXPLMIA_EXPLAINKIT_HPP
#define EXPLMIA_EXPLAINKIT_HPP

#include <cstdint>
#include <string>

#include "explmia/numcore.hpp"

namespace explmia::explainkit {

enum class Method { IXG, SL, IG, GS };

enum class ScoreKind { Variance, L1Norm, L2Norm, Loss };

std::string method_name(Method m);
std::string kind_name(ScoreKind k);
Method parse_method(const std::string& s);     // throws on unknown
ScoreKind parse_kind(const std::string& s);

struct AttributionVector {
  numcore::RealVec phi;
  Method method;
  int target_class;
};

struct GsParams {
  int n_samples = 5;
  double noise_std = 0.001;      // white noise added to the input
  double baseline_std = 0.001;   // baseline draws N(0, baseline_std^2 I)
};

// Input x Gradient: phi = x (.) grad of the predicted-class logit.
AttributionVector ixg(const numcore::ModelParams& params, const numcore::RealVec& x);

// Saliency: elementwise absolute gradient.
AttributionVector saliency(const numcore::ModelParams& params, const numcore::RealVec& x);

// Integrated gradients with zero baseline, right-endpoint Riemann sum over
// n_steps points. The target class is fixed to the prediction at x.
AttributionVector integrated_gradients(const numcore::ModelParams& params,
                                       const numcore::RealVec& x, int n_steps);

// Sampled SHAP approximation: averages (x - b) (.) grad at random points
// between a noisy input and a Gaussian baseline draw. Deterministic in seed.
AttributionVector gradient_shap(const numcore::ModelParams& params, const numcore::RealVec& x,
                                const GsParams& gs, std::uint64_t seed);

// Variance uses the population (1/d) convention. Loss is not computable
// from an attribution and is rejected.
double summarize(const AttributionVector& phi, ScoreKind kind);

}  // namespace explmia::explainkit

#endif  // EXPLMIA_EXPLAINKIT_HPP
