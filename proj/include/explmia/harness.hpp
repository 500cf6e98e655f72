#ifndef EXPLMIA_HARNESS_HPP
#define EXPLMIA_HARNESS_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "explmia/attackkit.hpp"
#include "explmia/dataset.hpp"
#include "explmia/dpkit.hpp"
#include "explmia/evalkit.hpp"
#include "explmia/explainkit.hpp"
#include "explmia/modelkit.hpp"
#include "explmia/numcore.hpp"

namespace explmia::harness {

struct BlobsSpec {
  int n = 512;
  int d = 32;
  int k = 2;
  double separation = 1.5;
};

struct CsvSpec {
  std::string path;
  std::string label_column;
};

struct ExperimentConfig {
  bool use_csv = false;
  BlobsSpec blobs;
  CsvSpec csv;

  std::vector<int> hidden_sizes = {32, 32};

  modelkit::TrainConfig train;

  bool dp_enabled = false;
  double dp_epsilon = 0.0;  // > 0: calibrate sigma; <= 0 with dp_sigma set: use sigma
  double dp_sigma = 0.0;    // explicit noise multiplier, 0 = calibrate from epsilon
  double dp_gamma = 0.01;
  double dp_delta = 1e-5;
  double dp_sampling_rate = 0.125;

  std::vector<explainkit::Method> methods = {explainkit::Method::IXG};
  std::vector<explainkit::ScoreKind> kinds = {explainkit::ScoreKind::Variance,
                                              explainkit::ScoreKind::L1Norm};
  int n_shadow = 16;

  int ig_steps = 25;
  explainkit::GsParams gs;

  std::uint64_t master_seed = 42;
  int workers = 1;
  std::string out_dir = "out";

  // Raw key-value pairs as parsed, echoed into the report.
  std::map<std::string, std::string> echo;

  int n_models() const { return n_shadow + 1; }
};

// Config file parsing: one `key = value` pair per line, `#` comments.
// Throws std::invalid_argument with the offending key on errors.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

// k Gaussian clusters with unit within-class std; class means sit on random
// orthonormal directions, scaled so inter-mean distances equal `separation`.
Dataset gen_synthetic_blobs(int n, int d, int k, double separation, std::uint64_t seed);

// Numeric CSV with a header row; features standardized to mean 0 / std 1,
// constant columns mapped to zero.
Dataset load_csv(const std::string& path, const std::string& label_column);

void save_dataset_csv(const Dataset& dataset, const std::string& path);

void save_matrix(const attackkit::ScoreMatrix& m, const std::string& path);
void save_matrix(const attackkit::MembershipMatrix& m, const std::string& path);
attackkit::ScoreMatrix load_score_matrix(const std::string& path);
attackkit::MembershipMatrix load_membership_matrix(const std::string& path);

struct AttackCell {
  std::string attack;  // var_lrt | l1_lrt | l2_lrt | loss_lira | threshold
  std::string method;  // attribution tag, empty for loss_lira
  evalkit::AttackMetrics metrics;
  std::vector<evalkit::RocCurve> per_run_curves;
  std::vector<double> per_run_auc, per_run_tpr001, per_run_tpr01;

  std::string name() const { return method.empty() ? attack : attack + "/" + method; }
};

struct AttackReport {
  std::map<std::string, std::string> config_echo;
  std::vector<AttackCell> cells;
  int n_models = 0;
  double train_accuracy_mean = 0.0;
  double test_accuracy_mean = 0.0;
  bool dp_enabled = false;
  double dp_epsilon = 0.0;
  double dp_sigma = 0.0;
  int dp_steps = 0;
};

// The full shadow-model protocol: split plan, N+1 trainings, score
// collection, every configured attack over every target choice, persisted
// matrices and report. Failures raise with a stage tag and leave a MANIFEST
// marking the run incomplete.
AttackReport run_experiment(const ExperimentConfig& config);

// Recompute attacks and the report from matrices persisted by a previous
// run; no training.
AttackReport replay(const std::string& run_dir, const std::string& out_dir);

// Runs the epsilon grid {0.5, 1, 2, 8, inf} into subdirectories of out_dir.
void dp_sweep(const ExperimentConfig& config, const std::vector<double>& epsilons);

void emit_report(const AttackReport& report, const std::string& dir);

std::string report_summary_text(const std::string& report_json_path);

}  // namespace explmia::harness

#endif  // EXPLMIA_HARNESS_HPP
