#include "explmia/attackkit.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "explmia/parallel.hpp"
#include "explmia/rng.hpp"

namespace explmia::attackkit {

using explainkit::Method;
using explainkit::ScoreKind;

MembershipMatrix build_split_plan(std::size_t n_examples, std::size_t n_models,
                                  std::uint64_t master_seed) {
  if (n_examples % 2 != 0) throw std::invalid_argument("build_split_plan: n_examples must be even");
  if (n_examples < 4) throw std::invalid_argument("build_split_plan: n_examples must be >= 4");
  if (n_models < 3) throw std::invalid_argument("build_split_plan: n_models must be >= 3");

  MembershipMatrix m;
  m.n_examples = n_examples;
  m.n_models = n_models;
  m.flags.assign(n_examples * n_models, 0);

  std::vector<std::size_t> idx(n_examples);
  for (std::size_t col = 0; col < n_models; ++col) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng = Rng::derive(master_seed, {0x73706c69ULL, col});
    for (std::size_t i = n_examples - 1; i > 0; --i) {
      std::size_t j = rng.next_u64() % (i + 1);
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < n_examples / 2; ++i) m.at(idx[i], col) = 1;
  }
  return m;
}

ScoreMatrix collect_scores(const std::vector<numcore::ModelParams>& models, const Dataset& dataset,
                           Method method, ScoreKind kind, const CollectParams& params) {
  if (models.empty()) throw std::invalid_argument("collect_scores: no models");
  for (const auto& mp : models) {
    if (mp.config.input_dim != dataset.dim) {
      throw std::invalid_argument("collect_scores: model/dataset dimension mismatch");
    }
  }

  ScoreMatrix out;
  out.n_examples = dataset.size();
  out.n_models = models.size();
  out.scores.assign(out.n_examples * out.n_models, 0.0);
  out.kind = kind;
  out.method = method;
  out.has_method = kind != ScoreKind::Loss;

  parallel_for(models.size(), params.workers, [&](std::size_t m) {
    const auto& model = models[m];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      auto x = dataset.example(i);
      double s;
      if (kind == ScoreKind::Loss) {
        auto fwd = numcore::forward(model, x);
        s = numcore::cross_entropy(fwd.probs, dataset.labels[i]);
      } else {
        explainkit::AttributionVector phi;
        switch (method) {
          case Method::IXG: phi = explainkit::ixg(model, x); break;
          case Method::SL: phi = explainkit::saliency(model, x); break;
          case Method::IG: phi = explainkit::integrated_gradients(model, x, params.ig_steps); break;
          case Method::GS:
            phi = explainkit::gradient_shap(model, x, params.gs,
                                            Rng::mix(params.seed ^ Rng::mix(m * 0x10001ULL + i)));
            break;
        }
        s = explainkit::summarize(phi, kind);
      }
      out.at(i, m) = s;
    }
  });
  return out;
}

GaussianFit fit_gaussian(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("fit_gaussian: empty sample set");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= static_cast<double>(samples.size());
  GaussianFit fit;
  fit.mean = mean;
  fit.variance = std::max(var, 1e-12);
  return fit;
}

double gaussian_log_pdf(double x, const GaussianFit& fit) {
  double z = x - fit.mean;
  return -0.5 * std::log(2.0 * M_PI * fit.variance) - z * z / (2.0 * fit.variance);
}

PerExampleLambda lira_scores(const ScoreMatrix& scores, const MembershipMatrix& membership,
                             std::size_t target_model) {
  if (scores.n_examples != membership.n_examples || scores.n_models != membership.n_models) {
    throw std::invalid_argument("lira_scores: matrix shape mismatch");
  }
  if (target_model >= scores.n_models) {
    throw std::invalid_argument("lira_scores: target model index out of range");
  }

  PerExampleLambda out;
  out.target_model = target_model;
  out.log_lambda.resize(scores.n_examples);
  out.is_member.resize(scores.n_examples);
  out.degenerate.assign(scores.n_examples, 0);

  std::vector<double> in_samples, out_samples;
  for (std::size_t i = 0; i < scores.n_examples; ++i) {
    in_samples.clear();
    out_samples.clear();
    for (std::size_t m = 0; m < scores.n_models; ++m) {
      if (m == target_model) continue;
      (membership.at(i, m) ? in_samples : out_samples).push_back(scores.at(i, m));
    }
    out.is_member[i] = membership.at(i, target_model);
    if (in_samples.empty() || out_samples.empty()) {
      out.log_lambda[i] = 0.0;
      out.degenerate[i] = 1;
      continue;
    }
    GaussianFit fit_in = fit_gaussian(in_samples);
    GaussianFit fit_out = fit_gaussian(out_samples);
    double s_obs = scores.at(i, target_model);
    out.log_lambda[i] = gaussian_log_pdf(s_obs, fit_in) - gaussian_log_pdf(s_obs, fit_out);
  }
  return out;
}

std::vector<PerExampleLambda> run_lira_all_targets(const ScoreMatrix& scores,
                                                   const MembershipMatrix& membership) {
  std::vector<PerExampleLambda> runs;
  runs.reserve(scores.n_models);
  for (std::size_t t = 0; t < scores.n_models; ++t) {
    runs.push_back(lira_scores(scores, membership, t));
  }
  return runs;
}

std::vector<double> threshold_attack_scores(const ScoreMatrix& scores, std::size_t target_model) {
  if (scores.kind != ScoreKind::Variance) {
    throw std::invalid_argument("threshold_attack_scores: expected variance scores");
  }
  if (target_model >= scores.n_models) {
    throw std::invalid_argument("threshold_attack_scores: target model index out of range");
  }
  std::vector<double> out(scores.n_examples);
  for (std::size_t i = 0; i < scores.n_examples; ++i) out[i] = -scores.at(i, target_model);
  return out;
}

}  // namespace explmia::attackkit
