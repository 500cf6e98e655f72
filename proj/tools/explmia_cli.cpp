// CLI front end over the explmia C API.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "explmia.h"

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  long seed = -1;
  int workers = 0;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config file (key = value lines)");
  cmd->add_option("--set", opts.overrides, "Extra key=value override (repeatable)");
  cmd->add_option("--seed", opts.seed, "Master seed override");
  cmd->add_option("--workers", opts.workers, "Worker thread count");
  cmd->add_option("--out", opts.out, "Output directory");
}

int report_error(int rc) {
  std::fprintf(stderr, "error: %s\n", explmia_last_error());
  return rc;
}

// Builds a config handle from --config plus overrides. Returns nullptr on
// failure (error already printed).
explmia_config build_config(const CommonOpts& opts) {
  explmia_config cfg = nullptr;
  int rc = opts.config_path.empty() ? explmia_config_default(&cfg)
                                    : explmia_config_load(opts.config_path.c_str(), &cfg);
  if (rc != EXPLMIA_OK) {
    report_error(rc);
    return nullptr;
  }
  auto set = [&](const std::string& key, const std::string& value) {
    if (cfg && explmia_config_set(cfg, key.c_str(), value.c_str()) != EXPLMIA_OK) {
      std::fprintf(stderr, "error: %s\n", explmia_last_error());
      explmia_config_free(cfg);
      cfg = nullptr;
    }
  };
  for (const auto& ov : opts.overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", ov.c_str());
      explmia_config_free(cfg);
      return nullptr;
    }
    set(ov.substr(0, eq), ov.substr(eq + 1));
    if (!cfg) return nullptr;
  }
  if (opts.seed >= 0) set("seed", std::to_string(opts.seed));
  if (cfg && opts.workers > 0) set("workers", std::to_string(opts.workers));
  if (cfg && !opts.out.empty()) set("out", opts.out);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"explmia: membership-inference auditing of feature-attribution explanations"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(explmia_version()));

  CommonOpts gen_opts, train_opts, attack_opts, sweep_opts;
  std::string gen_out_csv = "dataset.csv";
  double train_epsilon = 0.0;
  int train_epochs = 0, attack_epochs = 0, attack_n_shadow = 0, sweep_epochs = 0;
  double attack_epsilon = 0.0;
  std::string replay_run_dir, replay_out_dir, report_path;

  auto* gen = app.add_subcommand("gen-data", "Generate or ingest a dataset and write it as CSV");
  add_common(gen, gen_opts);
  gen->add_option("--out-csv", gen_out_csv, "Dataset CSV path");

  auto* train = app.add_subcommand("train", "Train one model on a 50% split and report accuracy");
  add_common(train, train_opts);
  train->add_option("--epsilon", train_epsilon, "Train with DP at this epsilon");
  train->add_option("--epochs", train_epochs, "Epoch override");

  auto* attack = app.add_subcommand("attack", "Run the full shadow-model attack experiment");
  add_common(attack, attack_opts);
  attack->add_option("--epsilon", attack_epsilon, "Train the models with DP at this epsilon");
  attack->add_option("--epochs", attack_epochs, "Epoch override");
  attack->add_option("--n-shadow", attack_n_shadow, "Shadow model count override");

  auto* replay_cmd = app.add_subcommand("replay", "Recompute attacks from persisted matrices");
  replay_cmd->add_option("--run-dir", replay_run_dir, "Directory of a previous attack run")
      ->required();
  replay_cmd->add_option("--out", replay_out_dir, "Output directory")->required();

  auto* report_cmd = app.add_subcommand("report", "Print a summary of a report.json");
  report_cmd->add_option("--report", report_path, "Path to report.json")->required();

  auto* sweep = app.add_subcommand("dp-sweep", "Run the attack over the epsilon grid");
  add_common(sweep, sweep_opts);
  sweep->add_option("--epochs", sweep_epochs, "Epoch override");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    explmia_config cfg = build_config(gen_opts);
    if (!cfg) return EXPLMIA_ERR_CONFIG;
    int rc = explmia_gen_data(cfg, gen_out_csv.c_str());
    explmia_config_free(cfg);
    if (rc != EXPLMIA_OK) return report_error(rc);
    std::printf("wrote %s\n", gen_out_csv.c_str());
    return 0;
  }

  if (train->parsed()) {
    if (train_epsilon > 0.0) {
      train_opts.overrides.push_back("dp.enabled=true");
      train_opts.overrides.push_back("dp.epsilon=" + std::to_string(train_epsilon));
    }
    if (train_epochs > 0) train_opts.overrides.push_back("train.epochs=" + std::to_string(train_epochs));
    explmia_config cfg = build_config(train_opts);
    if (!cfg) return EXPLMIA_ERR_CONFIG;
    double train_acc = 0.0, test_acc = 0.0;
    int rc = explmia_train_eval(cfg, &train_acc, &test_acc);
    explmia_config_free(cfg);
    if (rc != EXPLMIA_OK) return report_error(rc);
    std::printf("train accuracy: %.4f\ntest accuracy:  %.4f\n", train_acc, test_acc);
    return 0;
  }

  if (attack->parsed()) {
    if (attack_epsilon > 0.0) {
      attack_opts.overrides.push_back("dp.enabled=true");
      attack_opts.overrides.push_back("dp.epsilon=" + std::to_string(attack_epsilon));
    }
    if (attack_epochs > 0) attack_opts.overrides.push_back("train.epochs=" + std::to_string(attack_epochs));
    if (attack_n_shadow > 0) {
      attack_opts.overrides.push_back("attack.n_shadow=" + std::to_string(attack_n_shadow));
    }
    explmia_config cfg = build_config(attack_opts);
    if (!cfg) return EXPLMIA_ERR_CONFIG;
    int rc = explmia_attack(cfg);
    explmia_config_free(cfg);
    if (rc != EXPLMIA_OK) return report_error(rc);
    return 0;
  }

  if (replay_cmd->parsed()) {
    int rc = explmia_replay(replay_run_dir.c_str(), replay_out_dir.c_str());
    if (rc != EXPLMIA_OK) return report_error(rc);
    return 0;
  }

  if (report_cmd->parsed()) {
    const char* text = nullptr;
    int rc = explmia_report_text(report_path.c_str(), &text);
    if (rc != EXPLMIA_OK) return report_error(rc);
    std::printf("%s", text);
    return 0;
  }

  if (sweep->parsed()) {
    if (sweep_epochs > 0) sweep_opts.overrides.push_back("train.epochs=" + std::to_string(sweep_epochs));
    explmia_config cfg = build_config(sweep_opts);
    if (!cfg) return EXPLMIA_ERR_CONFIG;
    int rc = explmia_dp_sweep(cfg);
    explmia_config_free(cfg);
    if (rc != EXPLMIA_OK) return report_error(rc);
    return 0;
  }

  return 0;
}
