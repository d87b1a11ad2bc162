#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "balance/classifier.hpp"
#include "balance/csv.hpp"
#include "balance/trainer.hpp"

using namespace balance;

namespace {

struct Small {
  LabeledDataset train;
  LabeledDataset test;
  TrainedClassifier clf;
  TrainerConfig cfg;

  Small() {
    LongTailSpec s;
    s.n_max = 200;
    s.rho = 20;
    s.seed = 4;
    train = make_longtail(s);
    test = make_balanced_test(s, 50);
    ClassifierOptions o;
    o.epochs = 8;
    o.seed = 4;
    clf = pretrain_classifier(train, test, o);
    cfg.iterations = 300;
    cfg.cycle_len = 100;
    cfg.eval_samples = 200;
    cfg.seed = 4;
  }
};

const Small& small() {
  static const Small s;
  return s;
}

std::string render(const std::vector<MetricsRow>& rows, std::size_t k) {
  std::ostringstream os;
  for (const auto& h : metrics_header(k)) os << h << ',';
  for (const auto& r : rows)
    for (const auto& f : metrics_fields(r)) os << f << ',';
  return os.str();
}

}  // namespace

TEST(Relativistic, EqualCriticOutputsGiveLog2) {
  Graph g;
  const NodeId real = g.constant(Tensor(4, 1, 0.7));
  const NodeId fake = g.constant(Tensor(4, 1, 0.7));
  const auto l = relativistic_losses(g, real, fake);
  EXPECT_NEAR(g.value(l.loss_d).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(g.value(l.loss_g).item(), std::log(2.0), 1e-15);
}

TEST(Relativistic, SwapExchangesLosses) {
  Graph g;
  const NodeId a = g.constant(Tensor::from_rows({{0.3}, {-1.2}, {2.0}}));
  const NodeId b = g.constant(Tensor::from_rows({{1.1}, {0.4}, {-0.5}}));
  const auto ab = relativistic_losses(g, a, b);
  const auto ba = relativistic_losses(g, b, a);
  EXPECT_DOUBLE_EQ(g.value(ab.loss_d).item(), g.value(ba.loss_g).item());
  EXPECT_DOUBLE_EQ(g.value(ab.loss_g).item(), g.value(ba.loss_d).item());
}

TEST(Relativistic, LargeMarginLimits) {
  Graph g;
  const auto l = relativistic_losses(g, g.constant(Tensor(2, 1, 50.0)), g.constant(Tensor(2, 1, -50.0)));
  EXPECT_LT(g.value(l.loss_d).item(), 1e-40);
  EXPECT_NEAR(g.value(l.loss_g).item(), 100.0, 1e-9);
}

TEST(Relativistic, ShapeMismatch) {
  Graph g;
  EXPECT_THROW(relativistic_losses(g, g.constant(Tensor(3, 1)), g.constant(Tensor(2, 1))), ShapeError);
}

TEST(TrainerConfig, ValidationNamesTheField) {
  TrainerConfig c;
  c.lambda = -1.0;
  try {
    validate(c);
    FAIL() << "negative lambda accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_EQ(std::string(e.what()).rfind("lambda", 0), 0u);
  }
  c = {};
  c.alpha = 0.0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  c = {};
  c.cycle_len = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  EXPECT_EQ(TrainerConfig{}.resolved_ema_start(), 800u);
}

TEST(Train, HistoryHasOneRowPerCycle) {
  const auto& s = small();
  const auto r = train(s.cfg, s.train, s.clf.net, {&s.clf.net, &s.test});
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_EQ(r.history.back().iter, 300u);
  for (const auto& row : r.history) {
    EXPECT_EQ(row.class_fracs.size(), 8u);
    EXPECT_EQ(row.n_dist.size(), 8u);
    EXPECT_GE(row.kl_uniform, 0.0);
    EXPECT_LE(row.kl_uniform, std::log(8.0) + 1e-12);
    EXPECT_GE(row.frechet, 0.0);
    double total = 0.0;
    for (double v : row.n_dist) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Train, PartialFinalCycleGetsARow) {
  const auto& s = small();
  TrainerConfig c = s.cfg;
  c.iterations = 250;
  const auto r = train(c, s.train, s.clf.net);
  ASSERT_EQ(r.history.size(), 3u);
  EXPECT_EQ(r.history.back().iter, 250u);
}

TEST(Train, DeterministicMetrics) {
  const auto& s = small();
  const auto a = train(s.cfg, s.train, s.clf.net, {&s.clf.net, &s.test});
  const auto b = train(s.cfg, s.train, s.clf.net, {&s.clf.net, &s.test});
  EXPECT_EQ(render(a.history, 8), render(b.history, 8));
  EXPECT_EQ(a.generator.params(), b.generator.params());
}

TEST(Train, SeedChangesTheRun) {
  const auto& s = small();
  TrainerConfig c = s.cfg;
  c.seed = 5;
  const auto a = train(s.cfg, s.train, s.clf.net);
  const auto b = train(c, s.train, s.clf.net);
  EXPECT_NE(render(a.history, 8), render(b.history, 8));
}

TEST(Train, ClassifierIsUntouched) {
  const auto& s = small();
  const Mlp before = s.clf.net;
  (void)train(s.cfg, s.train, s.clf.net);
  EXPECT_EQ(s.clf.net.params(), before.params());
}

TEST(Train, EmaOffMeansRawWeights) {
  const auto& s = small();
  TrainerConfig c = s.cfg;
  c.ema_start = 10'000;
  const auto r = train(c, s.train, s.clf.net);
  EXPECT_EQ(r.generator.params(), r.raw_generator.params());
  c.ema_start = 100;
  const auto e = train(c, s.train, s.clf.net);
  EXPECT_NE(e.generator.params(), e.raw_generator.params());
}

TEST(Train, LabelProposalsRun) {
  const auto& s = small();
  for (auto p : {LabelProposal::Uniform, LabelProposal::InverseFrequency}) {
    TrainerConfig c = s.cfg;
    c.label_proposal = p;
    c.iterations = 100;
    const auto r = train(c, s.train, s.clf.net);
    EXPECT_EQ(r.generator.input_dim(), c.noise_dim + 8);
  }
  EXPECT_EQ(parse_label_proposal(label_proposal_name(LabelProposal::InverseFrequency)),
            LabelProposal::InverseFrequency);
  EXPECT_THROW(parse_label_proposal("sometimes"), std::invalid_argument);
}

TEST(Train, SoftCountsRun) {
  const auto& s = small();
  TrainerConfig c = s.cfg;
  c.soft_counts = true;
  c.iterations = 100;
  EXPECT_EQ(train(c, s.train, s.clf.net).history.size(), 1u);
}

TEST(Train, NonFiniteLossIsReported) {
  const auto& s = small();
  TrainerConfig c = s.cfg;
  c.lr_g = c.lr_d = 1e300;
  EXPECT_THROW(train(c, s.train, s.clf.net), TrainingError);
}

TEST(Train, RejectsMismatchedClassifier) {
  const auto& s = small();
  Rng rng(1);
  Mlp wrong(MlpSpec{{2, 4, 5}}, rng);
  EXPECT_THROW(train(s.cfg, s.train, wrong), ShapeError);
}

TEST(FixedStats, TrajectoryStartsAtWarmup) {
  const auto& s = small();
  const std::vector<double> pinned{1e6, 1, 1, 1, 1, 1, 1, 1};
  const auto r = fixed_stats_experiment(s.cfg, {pinned, 100}, s.train, s.clf.net);
  EXPECT_EQ(r.class0_trajectory.size(), 4u);  // start + 3 cycles
  for (double f : r.class0_trajectory) EXPECT_TRUE(f >= 0.0 && f <= 1.0);
  // The pinned distribution is what the history reports.
  EXPECT_NEAR(r.history.back().n_dist[0], 1e6 / (1e6 + 7.0), 1e-12);
  const std::vector<double> bad{1, 1};
  EXPECT_THROW(fixed_stats_experiment(s.cfg, {bad, 0}, s.train, s.clf.net), ShapeError);
}

TEST(Checkpoint, ExportsLoadableNetworks) {
  const auto& s = small();
  TrainerConfig c = s.cfg;
  c.iterations = 100;
  const auto r = train(c, s.train, s.clf.net);
  const auto dir = std::filesystem::temp_directory_path() / "balance_ckpt_test";
  export_checkpoint(dir, r, c);
  EXPECT_EQ(load_mlp(dir / "generator.txt").params(), r.generator.params());
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.txt"));
}
