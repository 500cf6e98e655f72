#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "explmia/harness.hpp"
#include "explmia/parallel.hpp"
#include "explmia/rng.hpp"

namespace explmia::harness {

namespace fs = std::filesystem;
using explainkit::Method;
using explainkit::ScoreKind;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("[stage:" + stage + "] " + what) {}
};

std::string matrix_filename(ScoreKind kind, Method method) {
  if (kind == ScoreKind::Loss) return "scores_Loss.csv";
  return "scores_" + explainkit::kind_name(kind) + "_" + explainkit::method_name(method) + ".csv";
}

Dataset build_dataset(const ExperimentConfig& config) {
  if (config.use_csv) return load_csv(config.csv.path, config.csv.label_column);
  return gen_synthetic_blobs(config.blobs.n, config.blobs.d, config.blobs.k,
                             config.blobs.separation, config.master_seed);
}

Dataset subset(const Dataset& ds, const attackkit::MembershipMatrix& membership, std::size_t model,
               bool members) {
  Dataset out;
  out.dim = ds.dim;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if ((membership.at(i, model) != 0) == members) {
      out.features.insert(out.features.end(), ds.row(i), ds.row(i) + ds.dim);
      out.labels.push_back(ds.labels[i]);
    }
  }
  return out;
}

void write_roc_csv(const evalkit::RocCurve& curve, const std::string& path, double fpr_floor) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "fpr,tpr\n";
  char buf[96];
  for (const auto& [fpr, tpr] : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", std::max(fpr, fpr_floor), tpr);
    out << buf;
  }
}

std::string cell_file_tag(const AttackCell& cell) {
  return cell.method.empty() ? cell.attack : cell.attack + "_" + cell.method;
}

// Membership scores for one attack cell and one target model.
std::vector<double> cell_target_scores(const std::string& attack,
                                       const attackkit::ScoreMatrix& scores,
                                       const attackkit::MembershipMatrix& membership,
                                       std::size_t target) {
  if (attack == "threshold") return attackkit::threshold_attack_scores(scores, target);
  return attackkit::lira_scores(scores, membership, target).log_lambda;
}

void evaluate_cell(AttackCell& cell, const attackkit::ScoreMatrix& scores,
                   const attackkit::MembershipMatrix& membership) {
  for (std::size_t t = 0; t < scores.n_models; ++t) {
    auto s = cell_target_scores(cell.attack, scores, membership, t);
    std::vector<std::uint8_t> labels(scores.n_examples);
    for (std::size_t i = 0; i < scores.n_examples; ++i) labels[i] = membership.at(i, t);
    auto curve = evalkit::roc_curve(s, labels);
    cell.per_run_auc.push_back(evalkit::auc(curve));
    cell.per_run_tpr001.push_back(evalkit::tpr_at_fpr(curve, 0.001));
    cell.per_run_tpr01.push_back(evalkit::tpr_at_fpr(curve, 0.01));
    cell.per_run_curves.push_back(std::move(curve));
  }
  cell.metrics.auc = evalkit::aggregate(cell.per_run_auc);
  cell.metrics.tpr_at_fpr_001 = evalkit::aggregate(cell.per_run_tpr001);
  cell.metrics.tpr_at_fpr_01 = evalkit::aggregate(cell.per_run_tpr01);
}

// The attack cells implied by a (kinds x methods) config.
std::vector<AttackCell> plan_cells(const std::vector<ScoreKind>& kinds,
                                   const std::vector<Method>& methods) {
  std::vector<AttackCell> cells;
  for (ScoreKind kind : kinds) {
    if (kind == ScoreKind::Loss) {
      cells.push_back({"loss_lira", "", {}, {}, {}, {}, {}});
      continue;
    }
    for (Method method : methods) {
      std::string mname = explainkit::method_name(method);
      switch (kind) {
        case ScoreKind::Variance:
          cells.push_back({"var_lrt", mname, {}, {}, {}, {}, {}});
          cells.push_back({"threshold", mname, {}, {}, {}, {}, {}});
          break;
        case ScoreKind::L1Norm:
          cells.push_back({"l1_lrt", mname, {}, {}, {}, {}, {}});
          break;
        case ScoreKind::L2Norm:
          cells.push_back({"l2_lrt", mname, {}, {}, {}, {}, {}});
          break;
        default:
          break;
      }
    }
  }
  return cells;
}

ScoreKind cell_kind(const std::string& attack) {
  if (attack == "var_lrt" || attack == "threshold") return ScoreKind::Variance;
  if (attack == "l1_lrt") return ScoreKind::L1Norm;
  if (attack == "l2_lrt") return ScoreKind::L2Norm;
  if (attack == "loss_lira") return ScoreKind::Loss;
  throw std::invalid_argument("unknown attack: " + attack);
}

void write_manifest(const std::string& dir, const std::vector<std::string>& files, bool complete,
                    const std::string& stage) {
  std::ofstream out(fs::path(dir) / "MANIFEST");
  out << "status=" << (complete ? "complete" : "incomplete") << "\n";
  if (!complete) out << "failed_stage=" << stage << "\n";
  auto now = std::chrono::system_clock::now().time_since_epoch();
  out << "timestamp=" << std::chrono::duration_cast<std::chrono::seconds>(now).count() << "\n";
  for (const auto& f : files) out << "file=" << f << "\n";
}

json aggregate_json(const evalkit::Aggregate& a) {
  return json{{"mean", a.mean}, {"std", a.stddev}};
}

void emit_roc_files(const AttackReport& report, const std::string& dir, std::size_t n_examples,
                    std::vector<std::string>& files) {
  double floor = n_examples > 0 ? 1.0 / static_cast<double>(n_examples) : 0.0;
  for (const auto& cell : report.cells) {
    for (std::size_t run = 0; run < cell.per_run_curves.size(); ++run) {
      std::string base = cell_file_tag(cell) + "_run" + std::to_string(run) + ".csv";
      write_roc_csv(cell.per_run_curves[run], (fs::path(dir) / ("roc_" + base)).string(), 0.0);
      write_roc_csv(cell.per_run_curves[run], (fs::path(dir) / ("roc_logaxis_" + base)).string(),
                    floor);
      files.push_back("roc_" + base);
      files.push_back("roc_logaxis_" + base);
    }
  }
}

}  // namespace

void emit_report(const AttackReport& report, const std::string& dir) {
  json doc;
  doc["version"] = kVersion;
  doc["config"] = report.config_echo;
  doc["n_models"] = report.n_models;
  doc["run_count"] = report.n_models;
  doc["train_accuracy_mean"] = report.train_accuracy_mean;
  doc["test_accuracy_mean"] = report.test_accuracy_mean;
  doc["dp"] = {{"enabled", report.dp_enabled},
               {"epsilon", report.dp_enabled ? json(report.dp_epsilon) : json(nullptr)},
               {"sigma", report.dp_enabled ? json(report.dp_sigma) : json(nullptr)},
               {"steps", report.dp_enabled ? json(report.dp_steps) : json(nullptr)}};
  json attacks = json::object();
  for (const auto& cell : report.cells) {
    attacks[cell.name()] = {{"auc", aggregate_json(cell.metrics.auc)},
                            {"tpr_at_fpr_001", aggregate_json(cell.metrics.tpr_at_fpr_001)},
                            {"tpr_at_fpr_01", aggregate_json(cell.metrics.tpr_at_fpr_01)},
                            {"run_count", cell.metrics.auc.run_count}};
  }
  doc["attacks"] = attacks;

  std::ofstream out(fs::path(dir) / "report.json");
  if (!out) throw std::runtime_error("emit_report: cannot write report.json in " + dir);
  out << doc.dump(2) << "\n";
}

AttackReport run_experiment(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  std::vector<std::string> files;
  std::string stage = "init";
  try {
    stage = "dataset";
    Dataset dataset = build_dataset(config);
    if (dataset.size() % 2 != 0) throw std::invalid_argument("dataset size must be even");

    numcore::MlpConfig mlp;
    mlp.input_dim = dataset.dim;
    mlp.hidden_sizes = config.hidden_sizes;
    mlp.num_classes = std::max(2, dataset.num_classes());
    mlp.validate();

    stage = "plan";
    std::size_t n_models = static_cast<std::size_t>(config.n_models());
    auto membership = attackkit::build_split_plan(dataset.size(), n_models, config.master_seed);
    save_matrix(membership, (fs::path(config.out_dir) / "membership.csv").string());
    files.push_back("membership.csv");

    stage = "calibrate";
    bool dp_active = config.dp_enabled && !std::isinf(config.dp_epsilon);
    dpkit::DpConfig dp;
    double dp_epsilon = 0.0;
    if (dp_active) {
      dp.stability_constant = config.dp_gamma;
      dp.sampling_rate = config.dp_sampling_rate;
      dp.delta = config.dp_delta;
      dp.steps = config.train.epochs *
                 static_cast<int>(std::ceil(1.0 / config.dp_sampling_rate));
      if (config.dp_sigma > 0.0) {
        dp.noise_multiplier = config.dp_sigma;
        dp_epsilon = dpkit::account_epsilon(dp.noise_multiplier, dp.sampling_rate, dp.steps,
                                            dp.delta);
      } else {
        if (config.dp_epsilon <= 0.0) {
          throw std::invalid_argument("dp enabled but neither dp.epsilon nor dp.sigma set");
        }
        dp.noise_multiplier =
            dpkit::calibrate_sigma(config.dp_epsilon, dp.sampling_rate, dp.steps, dp.delta);
        dp_epsilon = config.dp_epsilon;
      }
    }

    stage = "train";
    std::vector<numcore::ModelParams> models(n_models);
    std::vector<double> train_acc(n_models), test_acc(n_models);
    parallel_for(n_models, config.workers, [&](std::size_t m) {
      Dataset half = subset(dataset, membership, m, true);
      modelkit::TrainConfig tc = config.train;
      tc.seed = Rng::derive(config.master_seed, {0x6d6f64656cULL, m}).next_u64();
      tc.minibatch_size = std::min<int>(tc.minibatch_size, static_cast<int>(half.size()));
      models[m] = dp_active ? dpkit::dp_sgd_train(half, mlp, tc, dp)
                            : modelkit::sgd_train(half, mlp, tc);
      Dataset heldout = subset(dataset, membership, m, false);
      train_acc[m] = modelkit::evaluate(models[m], half).accuracy;
      test_acc[m] = modelkit::evaluate(models[m], heldout).accuracy;
    });

    AttackReport report;
    report.config_echo = config.echo;
    report.n_models = static_cast<int>(n_models);
    for (std::size_t m = 0; m < n_models; ++m) {
      report.train_accuracy_mean += train_acc[m] / n_models;
      report.test_accuracy_mean += test_acc[m] / n_models;
    }
    report.dp_enabled = dp_active;
    report.dp_epsilon = dp_epsilon;
    report.dp_sigma = dp.noise_multiplier;
    report.dp_steps = dp.steps;

    stage = "scores";
    attackkit::CollectParams cp;
    cp.ig_steps = config.ig_steps;
    cp.gs = config.gs;
    cp.seed = config.master_seed;
    cp.workers = config.workers;
    std::map<std::string, attackkit::ScoreMatrix> matrices;
    for (ScoreKind kind : config.kinds) {
      if (kind == ScoreKind::Loss) {
        auto m = attackkit::collect_scores(models, dataset, Method::IXG, kind, cp);
        std::string fname = matrix_filename(kind, Method::IXG);
        save_matrix(m, (fs::path(config.out_dir) / fname).string());
        files.push_back(fname);
        matrices[fname] = std::move(m);
        continue;
      }
      for (Method method : config.methods) {
        auto m = attackkit::collect_scores(models, dataset, method, kind, cp);
        std::string fname = matrix_filename(kind, method);
        save_matrix(m, (fs::path(config.out_dir) / fname).string());
        files.push_back(fname);
        matrices[fname] = std::move(m);
      }
    }

    stage = "attacks";
    report.cells = plan_cells(config.kinds, config.methods);
    for (auto& cell : report.cells) {
      ScoreKind kind = cell_kind(cell.attack);
      Method method = cell.method.empty() ? Method::IXG : explainkit::parse_method(cell.method);
      const auto& scores = matrices.at(matrix_filename(kind, method));
      evaluate_cell(cell, scores, membership);
    }

    stage = "report";
    emit_roc_files(report, config.out_dir, dataset.size(), files);
    emit_report(report, config.out_dir);
    files.push_back("report.json");
    write_manifest(config.out_dir, files, true, "");
    return report;
  } catch (const std::exception& e) {
    write_manifest(config.out_dir, files, false, stage);
    throw StageError(stage, e.what());
  }
}

AttackReport replay(const std::string& run_dir, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<std::string> files;
  try {
    auto membership = load_membership_matrix((fs::path(run_dir) / "membership.csv").string());

    AttackReport report;
    report.n_models = static_cast<int>(membership.n_models);

    std::ifstream rin(fs::path(run_dir) / "report.json");
    if (rin) {
      json doc = json::parse(rin);
      if (doc.contains("config")) {
        for (auto& [k, v] : doc["config"].items()) report.config_echo[k] = v.get<std::string>();
      }
      if (doc.contains("train_accuracy_mean")) {
        report.train_accuracy_mean = doc["train_accuracy_mean"].get<double>();
        report.test_accuracy_mean = doc["test_accuracy_mean"].get<double>();
      }
    }

    // Rebuild the attack plan from the persisted score matrices.
    std::vector<std::string> matrix_files;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      std::string name = entry.path().filename().string();
      if (name.rfind("scores_", 0) == 0 && name.size() > 4 &&
          name.substr(name.size() - 4) == ".csv") {
        matrix_files.push_back(name);
      }
    }
    std::sort(matrix_files.begin(), matrix_files.end());

    for (const auto& fname : matrix_files) {
      std::string stem = fname.substr(7, fname.size() - 11);  // strip scores_ and .csv
      auto scores = load_score_matrix((fs::path(run_dir) / fname).string());
      std::vector<AttackCell> cells;
      if (stem == "Loss") {
        scores.kind = ScoreKind::Loss;
        scores.has_method = false;
        cells = plan_cells({ScoreKind::Loss}, {});
      } else {
        std::size_t us = stem.find('_');
        if (us == std::string::npos) throw std::invalid_argument("bad matrix filename " + fname);
        scores.kind = explainkit::parse_kind(stem.substr(0, us));
        scores.method = explainkit::parse_method(stem.substr(us + 1));
        cells = plan_cells({scores.kind}, {scores.method});
      }
      for (auto& cell : cells) {
        evaluate_cell(cell, scores, membership);
        report.cells.push_back(std::move(cell));
      }
    }
    if (report.cells.empty()) throw std::invalid_argument("no score matrices found in " + run_dir);

    emit_roc_files(report, out_dir, membership.n_examples, files);
    emit_report(report, out_dir);
    files.push_back("report.json");
    write_manifest(out_dir, files, true, "");
    return report;
  } catch (const std::exception& e) {
    write_manifest(out_dir, files, false, "replay");
    throw StageError("replay", e.what());
  }
}

void dp_sweep(const ExperimentConfig& config, const std::vector<double>& epsilons) {
  fs::create_directories(config.out_dir);
  for (double eps : epsilons) {
    ExperimentConfig c = config;
    std::string label;
    if (std::isinf(eps)) {
      label = "inf";
      c.dp_enabled = false;
      c.echo["dp.enabled"] = "false";
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", eps);
      label = buf;
      c.dp_enabled = true;
      c.dp_epsilon = eps;
      c.dp_sigma = 0.0;
      c.echo["dp.enabled"] = "true";
      c.echo["dp.epsilon"] = label;
    }
    c.out_dir = (fs::path(config.out_dir) / ("eps_" + label)).string();
    c.echo["out"] = c.out_dir;
    run_experiment(c);
  }
}

std::string report_summary_text(const std::string& report_json_path) {
  std::ifstream in(report_json_path);
  if (!in) throw std::invalid_argument("report: cannot open " + report_json_path);
  json doc = json::parse(in);
  std::ostringstream out;
  out << "explmia report (version " << doc.value("version", "?") << ")\n";
  out << "models: " << doc.value("n_models", 0)
      << "  train acc: " << doc.value("train_accuracy_mean", 0.0)
      << "  test acc: " << doc.value("test_accuracy_mean", 0.0) << "\n";
  if (doc.contains("dp") && doc["dp"].value("enabled", false)) {
    out << "dp: epsilon=" << doc["dp"]["epsilon"].get<double>()
        << " sigma=" << doc["dp"]["sigma"].get<double>()
        << " steps=" << doc["dp"]["steps"].get<int>() << "\n";
  }
  out << "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-20s %18s %18s %18s\n", "attack", "AUC",
                "TPR@FPR=0.001", "TPR@FPR=0.01");
  out << line;
  for (auto& [name, cell] : doc["attacks"].items()) {
    std::snprintf(line, sizeof(line), "%-20s %8.4f +- %6.4f %8.4f +- %6.4f %8.4f +- %6.4f\n",
                  name.c_str(), cell["auc"]["mean"].get<double>(),
                  cell["auc"]["std"].get<double>(), cell["tpr_at_fpr_001"]["mean"].get<double>(),
                  cell["tpr_at_fpr_001"]["std"].get<double>(),
                  cell["tpr_at_fpr_01"]["mean"].get<double>(),
                  cell["tpr_at_fpr_01"]["std"].get<double>());
    out << line;
  }
  return out.str();
}

}  // namespace explmia::harness
