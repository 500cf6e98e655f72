#include "explmia/modelkit.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "explmia/rng.hpp"

namespace explmia::modelkit {

using numcore::MlpConfig;
using numcore::ModelParams;
using numcore::RealVec;

ModelParams init_params(const MlpConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  auto sizes = config.layer_sizes();
  Rng rng = Rng::derive(seed, {0x696e6974ULL});
  for (int l = 0; l < config.num_layers(); ++l) {
    double bound = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
    std::size_t woff = p.weight_offset(l);
    std::size_t count = static_cast<std::size_t>(sizes[l + 1]) * sizes[l];
    for (std::size_t i = 0; i < count; ++i) {
      p.flat[woff + i] = rng.next_uniform(-bound, bound);
    }
    // biases stay zero
  }
  return p;
}

namespace {

// Batched minibatch gradient with activations stored transposed
// (unit-major, batch-minor) so the innermost loops run contiguously over
// the batch and vectorize.
struct BatchWorkspace {
  // acts[l]: sizes[l] x B, acts[l][i*B + b]; phis/preacts for hidden layers.
  std::vector<RealVec> acts, preacts, phis;
  RealVec delta, prev, logits, probs;
};

void batch_loss_grad(const ModelParams& params, const Dataset& dataset,
                     const std::size_t* idx, std::size_t B, BatchWorkspace& ws, RealVec& grad) {
  const auto& cfg = params.config;
  auto sizes = cfg.layer_sizes();
  int L = cfg.num_layers();
  ws.acts.resize(L + 1);
  ws.preacts.resize(L);
  ws.phis.resize(L);

  RealVec& a0 = ws.acts[0];
  a0.resize(static_cast<std::size_t>(sizes[0]) * B);
  for (std::size_t b = 0; b < B; ++b) {
    const double* row = dataset.row(idx[b]);
    for (int i = 0; i < sizes[0]; ++i) a0[static_cast<std::size_t>(i) * B + b] = row[i];
  }

  for (int l = 0; l < L; ++l) {
    const RealVec& in = ws.acts[l];
    RealVec& z = ws.preacts[l];
    z.resize(static_cast<std::size_t>(sizes[l + 1]) * B);
    std::size_t woff = params.weight_offset(l);
    std::size_t boff = params.bias_offset(l);
    for (int j = 0; j < sizes[l + 1]; ++j) {
      double* zrow = &z[static_cast<std::size_t>(j) * B];
      double bj = params.flat[boff + j];
      for (std::size_t b = 0; b < B; ++b) zrow[b] = bj;
      const double* wrow = &params.flat[woff + static_cast<std::size_t>(j) * sizes[l]];
      for (int i = 0; i < sizes[l]; ++i) {
        double w = wrow[i];
        const double* arow = &in[static_cast<std::size_t>(i) * B];
        for (std::size_t b = 0; b < B; ++b) zrow[b] += w * arow[b];
      }
    }
    RealVec& a = ws.acts[l + 1];
    a.resize(z.size());
    if (l + 1 < L) {
      RealVec& phi = ws.phis[l];
      phi.resize(z.size());
      for (std::size_t p = 0; p < z.size(); ++p) {
        phi[p] = 0.5 * (1.0 + std::erf(z[p] * M_SQRT1_2));
        a[p] = z[p] * phi[p];
      }
    } else {
      a = z;
    }
  }

  // Softmax delta per sample over the k logits (k is small).
  int k = sizes[L];
  RealVec& delta = ws.delta;
  delta.resize(static_cast<std::size_t>(k) * B);
  const RealVec& logits = ws.acts[L];
  for (std::size_t b = 0; b < B; ++b) {
    double m = logits[b];
    for (int j = 1; j < k; ++j) m = std::max(m, logits[static_cast<std::size_t>(j) * B + b]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(logits[static_cast<std::size_t>(j) * B + b] - m);
    for (int j = 0; j < k; ++j) {
      delta[static_cast<std::size_t>(j) * B + b] =
          std::exp(logits[static_cast<std::size_t>(j) * B + b] - m) / sum;
    }
    delta[static_cast<std::size_t>(dataset.labels[idx[b]]) * B + b] -= 1.0;
  }

  constexpr double inv_sqrt_2pi = 0.3989422804014327;
  for (int l = L - 1; l >= 0; --l) {
    const RealVec& in = ws.acts[l];
    std::size_t woff = params.weight_offset(l);
    std::size_t boff = params.bias_offset(l);
    for (int j = 0; j < sizes[l + 1]; ++j) {
      const double* drow = &delta[static_cast<std::size_t>(j) * B];
      double bsum = 0.0;
      for (std::size_t b = 0; b < B; ++b) bsum += drow[b];
      grad[boff + j] += bsum;
      double* grow = &grad[woff + static_cast<std::size_t>(j) * sizes[l]];
      for (int i = 0; i < sizes[l]; ++i) {
        const double* arow = &in[static_cast<std::size_t>(i) * B];
        double acc = 0.0;
        for (std::size_t b = 0; b < B; ++b) acc += drow[b] * arow[b];
        grow[i] += acc;
      }
    }
    if (l > 0) {
      RealVec& prev = ws.prev;
      prev.assign(static_cast<std::size_t>(sizes[l]) * B, 0.0);
      for (int j = 0; j < sizes[l + 1]; ++j) {
        const double* wrow = &params.flat[woff + static_cast<std::size_t>(j) * sizes[l]];
        const double* drow = &delta[static_cast<std::size_t>(j) * B];
        for (int i = 0; i < sizes[l]; ++i) {
          double w = wrow[i];
          double* prow = &prev[static_cast<std::size_t>(i) * B];
          for (std::size_t b = 0; b < B; ++b) prow[b] += w * drow[b];
        }
      }
      const RealVec& z = ws.preacts[l - 1];
      const RealVec& phi = ws.phis[l - 1];
      for (std::size_t p = 0; p < prev.size(); ++p) {
        double pdf = std::exp(-0.5 * z[p] * z[p]) * inv_sqrt_2pi;
        prev[p] *= phi[p] + z[p] * pdf;
      }
      std::swap(ws.delta, ws.prev);
    }
  }
}

}  // namespace

ModelParams sgd_train(const Dataset& dataset, const MlpConfig& config, const TrainConfig& train) {
  if (dataset.size() == 0) throw std::invalid_argument("sgd_train: empty dataset");
  if (dataset.dim != config.input_dim) throw std::invalid_argument("sgd_train: dimension mismatch");
  if (train.minibatch_size < 1 || train.minibatch_size > static_cast<int>(dataset.size())) {
    throw std::invalid_argument("sgd_train: bad minibatch size");
  }

  ModelParams params = init_params(config, train.seed);
  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  RealVec grad(params.flat.size());
  BatchWorkspace ws;

  for (int epoch = 0; epoch < train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::derive(train.seed, {0x73687566ULL, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = n - 1; i > 0; --i) {
      std::size_t j = rng.next_u64() % (i + 1);
      std::swap(order[i], order[j]);
    }
    for (std::size_t start = 0; start < n; start += train.minibatch_size) {
      std::size_t end = std::min(n, start + train.minibatch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      batch_loss_grad(params, dataset, &order[start], end - start, ws, grad);
      double scale = train.learning_rate / static_cast<double>(end - start);
      for (std::size_t i = 0; i < grad.size(); ++i) params.flat[i] -= scale * grad[i];
    }
  }
  return params;
}

EvalResult evaluate(const ModelParams& params, const Dataset& dataset) {
  if (dataset.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (dataset.dim != params.config.input_dim) {
    throw std::invalid_argument("evaluate: dimension mismatch");
  }
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto out = numcore::forward(params, dataset.example(i));
    if (numcore::predicted_class(out.logits) == dataset.labels[i]) ++correct;
    loss_sum += numcore::cross_entropy(out.probs, dataset.labels[i]);
  }
  EvalResult r;
  r.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
  r.mean_loss = loss_sum / static_cast<double>(dataset.size());
  return r;
}

}  // namespace explmia::modelkit
