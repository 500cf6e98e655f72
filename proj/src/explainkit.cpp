#include "explmia/explainkit.hpp"

#include <cmath>
#include <stdexcept>

#include "explmia/rng.hpp"

namespace explmia::explainkit {

using numcore::ModelParams;
using numcore::RealVec;

std::string method_name(Method m) {
  switch (m) {
    case Method::IXG: return "IXG";
    case Method::SL: return "SL";
    case Method::IG: return "IG";
    case Method::GS: return "GS";
  }
  return "?";
}

std::string kind_name(ScoreKind k) {
  switch (k) {
    case ScoreKind::Variance: return "Variance";
    case ScoreKind::L1Norm: return "L1";
    case ScoreKind::L2Norm: return "L2";
    case ScoreKind::Loss: return "Loss";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  if (s == "IXG") return Method::IXG;
  if (s == "SL") return Method::SL;
  if (s == "IG") return Method::IG;
  if (s == "GS") return Method::GS;
  throw std::invalid_argument("unknown attribution method: " + s);
}

ScoreKind parse_kind(const std::string& s) {
  if (s == "Variance") return ScoreKind::Variance;
  if (s == "L1") return ScoreKind::L1Norm;
  if (s == "L2") return ScoreKind::L2Norm;
  if (s == "Loss") return ScoreKind::Loss;
  throw std::invalid_argument("unknown score kind: " + s);
}

namespace {

int predict(const ModelParams& params, const RealVec& x) {
  return numcore::predicted_class(numcore::forward(params, x).logits);
}

}  // namespace

AttributionVector ixg(const ModelParams& params, const RealVec& x) {
  int c = predict(params, x);
  RealVec g = numcore::grad_input(params, x, c);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= x[i];
  return {std::move(g), Method::IXG, c};
}

AttributionVector saliency(const ModelParams& params, const RealVec& x) {
  int c = predict(params, x);
  RealVec g = numcore::grad_input(params, x, c);
  for (double& v : g) v = std::fabs(v);
  return {std::move(g), Method::SL, c};
}

AttributionVector integrated_gradients(const ModelParams& params, const RealVec& x, int n_steps) {
  if (n_steps < 1) throw std::invalid_argument("integrated_gradients: n_steps must be >= 1");
  int c = predict(params, x);
  RealVec acc(x.size(), 0.0);
  RealVec point(x.size());
  for (int m = 1; m <= n_steps; ++m) {
    double alpha = static_cast<double>(m) / n_steps;
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = alpha * x[i];
    RealVec g = numcore::grad_input(params, point, c);
    for (std::size_t i = 0; i < x.size(); ++i) acc[i] += g[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) acc[i] *= x[i] / n_steps;
  return {std::move(acc), Method::IG, c};
}

AttributionVector gradient_shap(const ModelParams& params, const RealVec& x, const GsParams& gs,
                                std::uint64_t seed) {
  if (gs.n_samples < 1) throw std::invalid_argument("gradient_shap: n_samples must be >= 1");
  if (gs.noise_std < 0.0) throw std::invalid_argument("gradient_shap: noise_std must be >= 0");
  int c = predict(params, x);
  RealVec acc(x.size(), 0.0);
  Rng rng = Rng::derive(seed, {0x6773ULL});
  RealVec baseline(x.size()), point(x.size());
  for (int s = 0; s < gs.n_samples; ++s) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      baseline[i] = rng.next_normal(0.0, gs.baseline_std);
    }
    double alpha = rng.next_double();
    for (std::size_t i = 0; i < x.size(); ++i) {
      double noisy = x[i] + (gs.noise_std > 0.0 ? rng.next_normal(0.0, gs.noise_std) : 0.0);
      point[i] = baseline[i] + alpha * (noisy - baseline[i]);
    }
    RealVec g = numcore::grad_input(params, point, c);
    for (std::size_t i = 0; i < x.size(); ++i) acc[i] += (x[i] - baseline[i]) * g[i];
  }
  for (double& v : acc) v /= gs.n_samples;
  return {std::move(acc), Method::GS, c};
}

double summarize(const AttributionVector& phi, ScoreKind kind) {
  const RealVec& v = phi.phi;
  double d = static_cast<double>(v.size());
  switch (kind) {
    case ScoreKind::Variance: {
      double mean = 0.0;
      for (double e : v) mean += e;
      mean /= d;
      double var = 0.0;
      for (double e : v) var += (e - mean) * (e - mean);
      return var / d;
    }
    case ScoreKind::L1Norm: {
      double s = 0.0;
      for (double e : v) s += std::fabs(e);
      return s;
    }
    case ScoreKind::L2Norm: {
      double s = 0.0;
      for (double e : v) s += e * e;
      return std::sqrt(s);
    }
    case ScoreKind::Loss:
      throw std::invalid_argument("summarize: Loss is computed from the model, not an attribution");
  }
  throw std::invalid_argument("summarize: bad kind");
}

}  // namespace explmia::explainkit
