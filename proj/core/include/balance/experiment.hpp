#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "balance/classifier.hpp"
#include "balance/config.hpp"
#include "balance/longtail.hpp"
#include "balance/trainer.hpp"

namespace balance {

/// Datasets and frozen classifiers shared by every GAN run of one config.
struct PreparedData {
  LabeledDataset train;
  LabeledDataset test;  // balanced, for accuracies and the Frechet reference
  TrainedClassifier classifier;  // in-loop, long-tailed
  TrainedClassifier annotator;   // trained on balanced data, used for kl_uniform
  /// In-loop classifier accuracy on the GAN training set's least populated class.
  double tail_accuracy = 0.0;
  bool divergence_warning = false;
};

/// Builds the training set, the balanced test set, the balanced annotator and
/// the in-loop classifier. With `drop_tail` the in-loop classifier never sees
/// the least populated class.
PreparedData prepare_data(const ExperimentConfig& cfg, bool drop_tail = false);

struct RunSummary {
  std::string name;
  std::string kind;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double sweep_value = 0.0;
  double kl_uniform = 0.0;
  double frechet = 0.0;
  double tail_accuracy = 0.0;
  double cas = 0.0;
  bool divergence_warning = false;
  std::string status = "ok";
};

void write_summary(const std::filesystem::path& path, const RunSummary& s);
RunSummary read_summary(const std::filesystem::path& path);

/// Full GAN run into `dir`: metrics.csv, checkpoint/, train_data.csv(+.meta),
/// class_fractions.svg, quality.svg, summary.txt, config.txt.
RunSummary run_train(const ExperimentConfig& cfg, const std::filesystem::path& dir, bool drop_tail = false);

struct FixedStatsOutcome {
  std::vector<double> class0_trajectory;
  TrainResult result;
};

/// Pinned-statistics run: trajectory.csv, trajectory.svg, metrics.csv.
FixedStatsOutcome run_fixed_stats(const ExperimentConfig& cfg, const std::filesystem::path& dir);

struct TheoryOutcome {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_bound_violation = 0.0;
  double max_prop2_residual = 0.0;
  double max_oracle_linf = 0.0;
  /// max over K in [k_min, k_max] of |p*_k - bound_k| at uniform N.
  double max_tightness_gap = 0.0;
};

/// Randomized check of the stationary-point properties; writes theory.csv
/// with one row per trial.
TheoryOutcome run_theory(const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Values a sweep visits; falls back to the kind's default grid when the
/// config lists none.
std::vector<double> sweep_grid(const ExperimentConfig& cfg);

/// One run per sweep value (plus a drop-tail run when requested), `jobs` at a
/// time. Failed members are recorded and the rest continue. Writes
/// aggregate.csv and aggregate.svg.
std::vector<RunSummary> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& dir, std::size_t jobs);

/// Collects summary.txt from each directory (or from its immediate
/// subdirectories) and writes report.csv ranked by kl_uniform.
std::vector<RunSummary> run_report(const std::vector<std::filesystem::path>& dirs,
                                   const std::filesystem::path& out_csv);

/// Runs `tasks` on up to `jobs` threads; exceptions stay inside each task.
void run_parallel(std::vector<std::function<void()>> tasks, std::size_t jobs);

}  // namespace balance
