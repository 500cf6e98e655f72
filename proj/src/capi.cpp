#include "explmia.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>

#include "explmia/dpkit.hpp"
#include "explmia/harness.hpp"
#include "explmia/rng.hpp"

namespace {

thread_local std::string g_last_error;
thread_local std::string g_report_text;

int fail(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return EXPLMIA_OK;
  } catch (const std::invalid_argument& e) {
    return fail(EXPLMIA_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(EXPLMIA_ERR_RUNTIME, e.what());
  }
}

}  // namespace

struct explmia_config_s {
  explmia::harness::ExperimentConfig config;
};

extern "C" {

const char* explmia_version(void) { return "0.1.0"; }

const char* explmia_last_error(void) { return g_last_error.c_str(); }

int explmia_config_load(const char* path, explmia_config* out) {
  if (!path || !out) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] {
    auto* h = new explmia_config_s;
    try {
      h->config = explmia::harness::parse_config_file(path);
    } catch (...) {
      delete h;
      throw;
    }
    *out = h;
  });
}

int explmia_config_default(explmia_config* out) {
  if (!out) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  *out = new explmia_config_s;
  g_last_error.clear();
  return EXPLMIA_OK;
}

int explmia_config_set(explmia_config cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] { explmia::harness::apply_override(cfg->config, key, value); });
}

void explmia_config_free(explmia_config cfg) { delete cfg; }

int explmia_gen_data(explmia_config cfg, const char* out_csv) {
  if (!cfg || !out_csv) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] {
    const auto& c = cfg->config;
    explmia::Dataset ds =
        c.use_csv ? explmia::harness::load_csv(c.csv.path, c.csv.label_column)
                  : explmia::harness::gen_synthetic_blobs(c.blobs.n, c.blobs.d, c.blobs.k,
                                                          c.blobs.separation, c.master_seed);
    explmia::harness::save_dataset_csv(ds, out_csv);
  });
}

int explmia_train_eval(explmia_config cfg, double* train_accuracy, double* test_accuracy) {
  if (!cfg) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] {
    const auto& c = cfg->config;
    explmia::Dataset ds =
        c.use_csv ? explmia::harness::load_csv(c.csv.path, c.csv.label_column)
                  : explmia::harness::gen_synthetic_blobs(c.blobs.n, c.blobs.d, c.blobs.k,
                                                          c.blobs.separation, c.master_seed);
    auto membership = explmia::attackkit::build_split_plan(ds.size(), 3, c.master_seed);

    explmia::Dataset train_half, test_half;
    train_half.dim = test_half.dim = ds.dim;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      auto& half = membership.at(i, 0) ? train_half : test_half;
      half.features.insert(half.features.end(), ds.row(i), ds.row(i) + ds.dim);
      half.labels.push_back(ds.labels[i]);
    }

    explmia::numcore::MlpConfig mlp;
    mlp.input_dim = ds.dim;
    mlp.hidden_sizes = c.hidden_sizes;
    mlp.num_classes = std::max(2, ds.num_classes());

    explmia::modelkit::TrainConfig tc = c.train;
    tc.seed = explmia::Rng::derive(c.master_seed, {0x6d6f64656cULL, 0}).next_u64();
    tc.minibatch_size = std::min<int>(tc.minibatch_size, static_cast<int>(train_half.size()));

    explmia::numcore::ModelParams params;
    if (c.dp_enabled) {
      explmia::dpkit::DpConfig dp;
      dp.stability_constant = c.dp_gamma;
      dp.sampling_rate = c.dp_sampling_rate;
      dp.delta = c.dp_delta;
      dp.steps = c.train.epochs * static_cast<int>(std::ceil(1.0 / c.dp_sampling_rate));
      dp.noise_multiplier =
          c.dp_sigma > 0.0
              ? c.dp_sigma
              : explmia::dpkit::calibrate_sigma(c.dp_epsilon, dp.sampling_rate, dp.steps, dp.delta);
      params = explmia::dpkit::dp_sgd_train(train_half, mlp, tc, dp);
    } else {
      params = explmia::modelkit::sgd_train(train_half, mlp, tc);
    }
    if (train_accuracy) *train_accuracy = explmia::modelkit::evaluate(params, train_half).accuracy;
    if (test_accuracy) *test_accuracy = explmia::modelkit::evaluate(params, test_half).accuracy;
  });
}

int explmia_attack(explmia_config cfg) {
  if (!cfg) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] { explmia::harness::run_experiment(cfg->config); });
}

int explmia_replay(const char* run_dir, const char* out_dir) {
  if (!run_dir || !out_dir) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] { explmia::harness::replay(run_dir, out_dir); });
}

int explmia_dp_sweep(explmia_config cfg) {
  if (!cfg) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] {
    double inf = std::numeric_limits<double>::infinity();
    explmia::harness::dp_sweep(cfg->config, {0.5, 1.0, 2.0, 8.0, inf});
  });
}

int explmia_report_text(const char* report_json_path, const char** out_text) {
  if (!report_json_path || !out_text) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] {
    g_report_text = explmia::harness::report_summary_text(report_json_path);
    *out_text = g_report_text.c_str();
  });
}

int explmia_account_epsilon(double sigma, double q, int steps, double delta, double* out_epsilon) {
  if (!out_epsilon) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded([&] { *out_epsilon = explmia::dpkit::account_epsilon(sigma, q, steps, delta); });
}

int explmia_calibrate_sigma(double target_epsilon, double q, int steps, double delta,
                            double* out_sigma) {
  if (!out_sigma) return fail(EXPLMIA_ERR_CONFIG, "null argument");
  return guarded(
      [&] { *out_sigma = explmia::dpkit::calibrate_sigma(target_epsilon, q, steps, delta); });
}

}  // extern "C"
