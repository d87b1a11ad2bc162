#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "balance/csv.hpp"
#include "balance/experiment.hpp"

using namespace balance;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  c.data.n_max = 200;
  c.data.rho = 20;
  c.test_per_class = 40;
  c.annotator_per_class = 40;
  c.cas_samples = 200;
  c.classifier.epochs = 5;
  c.trainer.iterations = 200;
  c.trainer.cycle_len = 100;
  c.trainer.eval_samples = 200;
  apply_seed(c, 2);
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "balance_experiment_tests" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Experiment, TrainRunWritesArtifacts) {
  const auto dir = scratch("train");
  const auto s = run_train(tiny(ExperimentKind::Train), dir);
  for (const char* f : {"metrics.csv", "summary.txt", "config.txt", "train_data.csv", "train_data.csv.meta",
                        "class_fractions.svg", "kl_uniform.svg", "frechet.svg", "checkpoint/generator.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto table = read_csv(dir / "metrics.csv");
  EXPECT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.header.size(), 7u + 16u);
  const auto back = read_summary(dir / "summary.txt");
  EXPECT_EQ(back.kl_uniform, s.kl_uniform);
  EXPECT_EQ(back.status, "ok");
  EXPECT_NE(slurp(dir / "class_fractions.svg").find(config_hash(tiny(ExperimentKind::Train))), std::string::npos);
}

TEST(Experiment, RerunIsByteIdentical) {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  run_train(tiny(ExperimentKind::Train), a);
  run_train(tiny(ExperimentKind::Train), b);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "checkpoint/generator.txt"), slurp(b / "checkpoint/generator.txt"));
}

TEST(Experiment, BaselineForcesLambdaZero) {
  const auto dir = scratch("baseline");
  auto cfg = tiny(ExperimentKind::Baseline);
  cfg.trainer.lambda = 7.0;
  EXPECT_EQ(run_train(cfg, dir).lambda, 0.0);
  EXPECT_NE(slurp(dir / "config.txt").find("lambda=0\n"), std::string::npos);
}

TEST(Experiment, ReportRanksByKl) {
  const auto root = scratch("report");
  RunSummary hi, lo;
  hi.name = "hi";
  hi.kl_uniform = 0.6;
  lo.name = "lo";
  lo.kl_uniform = 0.01;
  fs::create_directories(root / "hi");
  fs::create_directories(root / "lo");
  write_summary(root / "hi/summary.txt", hi);
  write_summary(root / "lo/summary.txt", lo);
  const auto runs = run_report({root}, root / "report.csv");
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0].name, "lo");
  const auto t = read_csv(root / "report.csv");
  EXPECT_EQ(t.rows[0][t.column("name")], "lo");
  EXPECT_EQ(t.rows[0][t.column("rank")], "1");
}

TEST(Experiment, SweepRecordsFailuresAndContinues) {
  const auto dir = scratch("sweep");
  auto cfg = tiny(ExperimentKind::ClassifierSweep);
  cfg.sweep_values = {1, 1000};  // 200 / 1000 rounds to an empty tail: that member fails
  cfg.trainer.iterations = 100;
  const auto res = run_sweep(cfg, dir, 2);
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(res[0].status, "ok");
  EXPECT_EQ(res[1].status.rfind("failed", 0), 0u);
  const auto t = read_csv(dir / "aggregate.csv");
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "aggregate.svg"));
}

TEST(Experiment, DropTailIsFlagged) {
  auto cfg = tiny(ExperimentKind::Train);
  const auto prep = prepare_data(cfg, true);
  EXPECT_TRUE(prep.divergence_warning);
  EXPECT_EQ(prep.tail_accuracy, 0.0);
  EXPECT_FALSE(prepare_data(cfg, false).classifier.net.params().empty());
}

TEST(Experiment, SweepGrids) {
  auto cfg = tiny(ExperimentKind::ClassifierSweep);
  EXPECT_EQ(sweep_grid(cfg), (std::vector<double>{1, 10, 100, 500}));
  cfg.kind = ExperimentKind::BetaAblation;
  cfg.trainer.alpha = 0.25;
  EXPECT_EQ(sweep_grid(cfg), (std::vector<double>{1, 0.25}));
  cfg.kind = ExperimentKind::CycleSweep;
  EXPECT_EQ(sweep_grid(cfg).size(), 5u);
  cfg.kind = ExperimentKind::Train;
  EXPECT_THROW(sweep_grid(cfg), ConfigError);
}

TEST(Experiment, TheoryRunSmall) {
  const auto dir = scratch("theory");
  auto cfg = tiny(ExperimentKind::Theory);
  cfg.theory.trials = 30;
  cfg.theory.k_min = 2;
  cfg.theory.k_max = 12;
  const auto out = run_theory(cfg, dir);
  EXPECT_EQ(out.violations, 0u);
  EXPECT_EQ(read_csv(dir / "theory.csv").rows.size(), 30u);
  EXPECT_EQ(read_csv(dir / "tightness.csv").rows.size(), 11u);
}

TEST(Experiment, ParallelRunsEveryTask) {
  std::vector<int> hits(20, 0);
  std::vector<std::function<void()>> tasks;
  for (int i = 0; i < 20; ++i) tasks.push_back([&hits, i] {
    if (i == 3) throw std::runtime_error("boom");
    hits[i] = 1;
  });
  run_parallel(std::move(tasks), 4);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(hits[i], i == 3 ? 0 : 1);
}
