#ifndef EXPLMIA_MODELKIT_HPP
#define EXPLMIA_MODELKIT_HPP

#include <cstdint>

#include "explmia/dataset.hpp"
#include "explmia/numcore.hpp"

namespace explmia::modelkit {

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 30;
  int minibatch_size = 32;
  std::uint64_t seed = 0;
};

// Scaled-uniform weight init with bound sqrt(6 / (fan_in + fan_out)),
// biases zero. Deterministic in seed.
numcore::ModelParams init_params(const numcore::MlpConfig& config, std::uint64_t seed);

// Plain mini-batch SGD over shuffled epochs. The shuffle for epoch e comes
// from an RNG stream derived from (seed, e), so results do not depend on
// execution order elsewhere.
numcore::ModelParams sgd_train(const Dataset& dataset, const numcore::MlpConfig& config,
                               const TrainConfig& train);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

EvalResult evaluate(const numcore::ModelParams& params, const Dataset& dataset);

}  // namespace explmia::modelkit

#endif  // EXPLMIA_MODELKIT_HPP
