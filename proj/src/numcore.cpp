#include "explmia/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace explmia::numcore {

void MlpConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("MlpConfig: input_dim must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("MlpConfig: num_classes must be >= 2");
  for (int h : hidden_sizes) {
    if (h < 1) throw std::invalid_argument("MlpConfig: hidden sizes must be >= 1");
  }
}

std::vector<int> MlpConfig::layer_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(hidden_sizes.size() + 2);
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
  sizes.push_back(num_classes);
  return sizes;
}

ModelParams ModelParams::zeros(const MlpConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  std::size_t count = 0;
  auto sizes = config.layer_sizes();
  for (int l = 0; l < config.num_layers(); ++l) {
    count += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }
  p.flat.assign(count, 0.0);
  return p;
}

std::size_t ModelParams::weight_offset(int layer) const {
  auto sizes = config.layer_sizes();
  std::size_t off = 0;
  for (int l = 0; l < layer; ++l) {
    off += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }
  return off;
}

std::size_t ModelParams::bias_offset(int layer) const {
  auto sizes = config.layer_sizes();
  return weight_offset(layer) + static_cast<std::size_t>(sizes[layer + 1]) * sizes[layer];
}

double ModelParams::weight(int layer, int out, int in) const {
  auto sizes = config.layer_sizes();
  return flat[weight_offset(layer) + static_cast<std::size_t>(out) * sizes[layer] + in];
}

double& ModelParams::weight(int layer, int out, int in) {
  auto sizes = config.layer_sizes();
  return flat[weight_offset(layer) + static_cast<std::size_t>(out) * sizes[layer] + in];
}

double ModelParams::bias(int layer, int out) const { return flat[bias_offset(layer) + out]; }
double& ModelParams::bias(int layer, int out) { return flat[bias_offset(layer) + out]; }

void ModelParams::check_consistent() const {
  config.validate();
  std::size_t expected = 0;
  auto sizes = config.layer_sizes();
  for (int l = 0; l < config.num_layers(); ++l) {
    expected += static_cast<std::size_t>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
  }
  if (flat.size() != expected) throw std::invalid_argument("ModelParams: flat size mismatch");
  for (double v : flat) {
    if (!std::isfinite(v)) throw std::invalid_argument("ModelParams: non-finite parameter");
  }
}

double gelu(double x) {
  // x * Phi(x), Phi via erf.
  return x * 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_grad(double x) {
  double phi = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return phi + x * pdf;
}

RealVec softmax(const RealVec& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  RealVec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

namespace {

// Forward pass keeping pre-activations of hidden layers for backprop.
struct ForwardCache {
  // acts[l] is the input to layer l; acts[0] = x, acts[L] = logits.
  std::vector<RealVec> acts;
  // preacts[l] is the pre-GELU output of hidden layer l.
  std::vector<RealVec> preacts;
};

ForwardCache forward_cached(const ModelParams& params, const RealVec& x) {
  const auto& cfg = params.config;
  if (static_cast<int>(x.size()) != cfg.input_dim) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  auto sizes = cfg.layer_sizes();
  ForwardCache cache;
  cache.acts.resize(cfg.num_layers() + 1);
  cache.preacts.resize(cfg.num_layers());
  cache.acts[0] = x;
  for (int l = 0; l < cfg.num_layers(); ++l) {
    const RealVec& in = cache.acts[l];
    RealVec z(sizes[l + 1]);
    std::size_t woff = params.weight_offset(l);
    std::size_t boff = params.bias_offset(l);
    for (int j = 0; j < sizes[l + 1]; ++j) {
      double acc = params.flat[boff + j];
      const double* row = &params.flat[woff + static_cast<std::size_t>(j) * sizes[l]];
      for (int i = 0; i < sizes[l]; ++i) acc += row[i] * in[i];
      z[j] = acc;
    }
    cache.preacts[l] = z;
    if (l + 1 < cfg.num_layers()) {
      RealVec a(z.size());
      for (std::size_t j = 0; j < z.size(); ++j) a[j] = gelu(z[j]);
      cache.acts[l + 1] = std::move(a);
    } else {
      cache.acts[l + 1] = std::move(z);  // output layer is linear
    }
  }
  return cache;
}

}  // namespace

ForwardResult forward(const ModelParams& params, const RealVec& x) {
  auto cache = forward_cached(params, x);
  ForwardResult r;
  r.logits = cache.acts.back();
  r.probs = softmax(r.logits);
  return r;
}

RealVec grad_input(const ModelParams& params, const RealVec& x, int target_class) {
  const auto& cfg = params.config;
  if (target_class < 0 || target_class >= cfg.num_classes) {
    throw std::invalid_argument("grad_input: class index out of range");
  }
  auto cache = forward_cached(params, x);
  auto sizes = cfg.layer_sizes();
  int L = cfg.num_layers();
  // delta over the output of layer l, starting from d z_c / d logits.
  RealVec delta(sizes[L], 0.0);
  delta[target_class] = 1.0;
  for (int l = L - 1; l >= 0; --l) {
    RealVec prev(sizes[l], 0.0);
    std::size_t woff = params.weight_offset(l);
    for (int j = 0; j < sizes[l + 1]; ++j) {
      if (delta[j] == 0.0) continue;
      const double* row = &params.flat[woff + static_cast<std::size_t>(j) * sizes[l]];
      for (int i = 0; i < sizes[l]; ++i) prev[i] += row[i] * delta[j];
    }
    if (l > 0) {
      for (int i = 0; i < sizes[l]; ++i) prev[i] *= gelu_grad(cache.preacts[l - 1][i]);
    }
    delta = std::move(prev);
  }
  return delta;
}

void accumulate_loss_grad(const ModelParams& params, const double* x, int y, GradWorkspace& ws,
                          RealVec& grad) {
  const auto& cfg = params.config;
  auto sizes = cfg.layer_sizes();
  int L = cfg.num_layers();

  // Forward pass into the workspace buffers. The hidden-layer CDF values
  // Phi(z) are kept so the backward pass does not recompute erf.
  ws.acts.resize(L + 1);
  ws.preacts.resize(L);
  ws.phis.resize(L);
  ws.acts[0].assign(x, x + cfg.input_dim);
  for (int l = 0; l < L; ++l) {
    const RealVec& in = ws.acts[l];
    RealVec& z = ws.preacts[l];
    z.resize(sizes[l + 1]);
    std::size_t woff = params.weight_offset(l);
    std::size_t boff = params.bias_offset(l);
    for (int j = 0; j < sizes[l + 1]; ++j) {
      double acc = params.flat[boff + j];
      const double* row = &params.flat[woff + static_cast<std::size_t>(j) * sizes[l]];
      for (int i = 0; i < sizes[l]; ++i) acc += row[i] * in[i];
      z[j] = acc;
    }
    RealVec& a = ws.acts[l + 1];
    a.resize(z.size());
    if (l + 1 < L) {
      RealVec& phi = ws.phis[l];
      phi.resize(z.size());
      for (std::size_t j = 0; j < z.size(); ++j) {
        phi[j] = 0.5 * (1.0 + std::erf(z[j] * M_SQRT1_2));
        a[j] = z[j] * phi[j];
      }
    } else {
      for (std::size_t j = 0; j < z.size(); ++j) a[j] = z[j];
    }
  }

  ws.probs = softmax(ws.acts[L]);
  ws.delta = ws.probs;
  ws.delta[y] -= 1.0;
  for (int l = L - 1; l >= 0; --l) {
    const RealVec& in = ws.acts[l];
    std::size_t woff = params.weight_offset(l);
    std::size_t boff = params.bias_offset(l);
    for (int j = 0; j < sizes[l + 1]; ++j) {
      double d = ws.delta[j];
      grad[boff + j] += d;
      double* grow = &grad[woff + static_cast<std::size_t>(j) * sizes[l]];
      for (int i = 0; i < sizes[l]; ++i) grow[i] += d * in[i];
    }
    if (l > 0) {
      ws.prev.assign(sizes[l], 0.0);
      for (int j = 0; j < sizes[l + 1]; ++j) {
        const double* row = &params.flat[woff + static_cast<std::size_t>(j) * sizes[l]];
        double d = ws.delta[j];
        for (int i = 0; i < sizes[l]; ++i) ws.prev[i] += row[i] * d;
      }
      const RealVec& z = ws.preacts[l - 1];
      const RealVec& phi = ws.phis[l - 1];
      constexpr double inv_sqrt_2pi = 0.3989422804014327;
      for (int i = 0; i < sizes[l]; ++i) {
        double pdf = std::exp(-0.5 * z[i] * z[i]) * inv_sqrt_2pi;
        ws.prev[i] *= phi[i] + z[i] * pdf;
      }
      std::swap(ws.delta, ws.prev);
    }
  }
}

RealVec per_sample_loss_grad(const ModelParams& params, const RealVec& x, int y) {
  const auto& cfg = params.config;
  if (y < 0 || y >= cfg.num_classes) {
    throw std::invalid_argument("per_sample_loss_grad: class index out of range");
  }
  if (static_cast<int>(x.size()) != cfg.input_dim) {
    throw std::invalid_argument("per_sample_loss_grad: input dimension mismatch");
  }
  RealVec grad(params.flat.size(), 0.0);
  GradWorkspace ws;
  accumulate_loss_grad(params, x.data(), y, ws, grad);
  return grad;
}

double cross_entropy(const RealVec& probs, int y) {
  if (y < 0 || y >= static_cast<int>(probs.size())) {
    throw std::invalid_argument("cross_entropy: class index out of range");
  }
  return -std::log(std::max(probs[y], 1e-12));
}

int predicted_class(const RealVec& logits) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(logits.size()); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

}  // namespace explmia::numcore
