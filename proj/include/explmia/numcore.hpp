#ifndef EXPLMIA_NUMCORE_HPP
#define EXPLMIA_NUMCORE_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace explmia::numcore {

using RealVec = std::vector<double>;

// Feed-forward classifier topology. Hidden layers use GELU; the output layer
// is linear (logits).
struct MlpConfig {
  int input_dim = 0;
  std::vector<int> hidden_sizes;
  int num_classes = 0;

  void validate() const;  // throws std::invalid_argument

  // Layer widths including input and output: [d, h0, ..., k].
  std::vector<int> layer_sizes() const;
  int num_layers() const { return static_cast<int>(hidden_sizes.size()) + 1; }
};

// Parameters stored as one flat vector in canonical order: layer-major,
// weights before bias, weights row-major with rows indexed by output unit.
// The flat layout is what DP clipping norms and gradient layouts refer to.
struct ModelParams {
  MlpConfig config;
  std::vector<double> flat;

  static ModelParams zeros(const MlpConfig& config);

  std::size_t param_count() const { return flat.size(); }

  // Offset of layer l's weight block; bias block follows the weights.
  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;

  double weight(int layer, int out, int in) const;
  double bias(int layer, int out) const;
  double& weight(int layer, int out, int in);
  double& bias(int layer, int out);

  void check_consistent() const;  // shapes and finiteness
};

// Exact GELU: x * Phi(x) with Phi the standard normal CDF via erf.
double gelu(double x);
double gelu_grad(double x);

// Numerically stable softmax (max-logit subtraction).
RealVec softmax(const RealVec& logits);

struct ForwardResult {
  RealVec logits;
  RealVec probs;
};

ForwardResult forward(const ModelParams& params, const RealVec& x);

// Gradient of the pre-softmax logit of target_class w.r.t. the input.
RealVec grad_input(const ModelParams& params, const RealVec& x, int target_class);

// Gradient of cross-entropy loss w.r.t. all parameters, in the canonical
// flat layout.
RealVec per_sample_loss_grad(const ModelParams& params, const RealVec& x, int y);

// Reusable scratch for the training hot loop; buffers are resized once and
// then recycled so no per-sample allocation happens.
struct GradWorkspace {
  std::vector<RealVec> acts;
  std::vector<RealVec> preacts;
  std::vector<RealVec> phis;  // Phi(z) per hidden layer, reused in backward
  RealVec delta, prev, probs;
};

// Adds the per-sample loss gradient of (x, y) into grad, entrywise identical
// to summing per_sample_loss_grad results.
void accumulate_loss_grad(const ModelParams& params, const double* x, int y, GradWorkspace& ws,
                          RealVec& grad);

// -log(probs[y]) with the argument floored at 1e-12.
double cross_entropy(const RealVec& probs, int y);

// argmax with ties broken toward the lowest class index.
int predicted_class(const RealVec& logits);

}  // namespace explmia::numcore

#endif  // EXPLMIA_NUMCORE_HPP
