// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "balance/class_stats.hpp"
#include "balance/experiment.hpp"
#include "balance/theory.hpp"
#include "gradcheck.hpp"

using namespace balance;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr std::size_t kTheoryTrials = 1000;
constexpr std::size_t kTheoryKMin = 3;
constexpr std::size_t kTheoryKMax = 50;
constexpr double kBoundTol = 1e-9;
constexpr double kProp2Tol = 1e-8;
constexpr double kOracleTol = 1e-5;
constexpr double kTightTol = 1e-10;
constexpr double kTheorySeconds = 30.0;

constexpr std::size_t kGradOpsPerKind = 6;
constexpr std::size_t kGradRegCases = 50;
constexpr std::size_t kGradCombinedCases = 50;
constexpr std::size_t kGradMinInstances = 100;
constexpr double kGradSeconds = 60.0;

constexpr double kFixedStatsSeconds = 600.0;
constexpr double kNoiseBandSigmas = 3.0;

constexpr double kKlRatio = 0.5;
constexpr double kKlAbsolute = 0.10;
constexpr double kFrechetRatio = 1.5;
constexpr double kEndToEndSeconds = 900.0;

constexpr double kStatsTol = 1e-12;
constexpr double kUsableTailAccuracy = 0.6;

const std::vector<std::uint64_t> kSeeds{1, 2, 3};
const std::vector<std::uint64_t> kControlSeeds{101, 102, 103, 104, 105};

const fs::path kOut = "acceptance_out";

double cpu_seconds() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome criterion_theory() {
  const double t0 = cpu_seconds();
  Rng rng(20240601, "acceptance-theory");
  theory::VerifyOptions opts;
  opts.bound_tol = kBoundTol;
  opts.prop2_tol = kProp2Tol;
  opts.oracle_tol = kOracleTol;
  std::size_t violations = 0;
  double worst_bound = -1.0, worst_prop2 = 0.0, worst_oracle = 0.0, worst_tight = 0.0;
  std::string first;
  for (std::size_t trial = 0; trial < kTheoryTrials; ++trial) {
    const std::size_t k = kTheoryKMin + rng.index(kTheoryKMax - kTheoryKMin + 1);
    const auto n = theory::sample_simplex(rng, k);
    const auto rep = theory::verify_propositions(n, rng, opts);
    worst_bound = std::max(worst_bound, rep.max_bound_violation);
    worst_prop2 = std::max(worst_prop2, rep.prop2_residual);
    worst_oracle = std::max(worst_oracle, rep.oracle_linf);
    if (!rep.passed()) {
      ++violations;
      if (first.empty()) first = rep.violations.front();
    }
  }
  for (std::size_t k = kTheoryKMin; k <= kTheoryKMax; ++k) {
    const std::vector<double> n(k, 1.0 / static_cast<double>(k));
    const auto sol = theory::solve_lambda(n);
    const auto bound = theory::prop1_bound(n, k);
    for (std::size_t i = 0; i < k; ++i) worst_tight = std::max(worst_tight, std::abs(sol.p_star[i] - bound[i]));
  }
  const double secs = cpu_seconds() - t0;
  Outcome o;
  o.pass = violations == 0 && worst_tight <= kTightTol && secs < kTheorySeconds;
  o.detail = std::to_string(kTheoryTrials) + " trials K in [3,50]: violations=" + std::to_string(violations) +
             " max(p*-bound)=" + fmt(worst_bound) + " prop2=" + fmt(worst_prop2) + " oracle_linf=" +
             fmt(worst_oracle) + " tight_gap=" + fmt(worst_tight) + " cpu=" + fmt(secs) + "s" +
             (first.empty() ? "" : " first: " + first);
  return o;
}

Outcome criterion_gradients() {
  const double t0 = cpu_seconds();
  Rng rng(20240602, "acceptance-grad");
  std::vector<testkit::GradCase> cases = testkit::op_cases(rng, kGradOpsPerKind);
  const std::size_t op_count = cases.size();
  for (auto& c : testkit::regularizer_cases(rng, kGradRegCases)) cases.push_back(std::move(c));
  for (auto& c : testkit::combined_loss_cases(rng, kGradCombinedCases)) cases.push_back(std::move(c));
  double worst = 0.0;
  std::string where;
  std::size_t failed = 0, coords = 0;
  for (const auto& c : cases) {
    const auto r = testkit::check_gradients(c);
    coords += r.coords;
    if (r.max_rel_error > testkit::kFdRelTol) ++failed;
    if (r.max_rel_error >= worst) worst = r.max_rel_error, where = r.worst;
  }
  const double secs = cpu_seconds() - t0;
  Outcome o;
  o.pass = failed == 0 && cases.size() >= kGradMinInstances && secs < kGradSeconds;
  o.detail = std::to_string(cases.size()) + " instances (" + std::to_string(op_count) + " op, " +
             std::to_string(kGradRegCases) + " l_reg, " + std::to_string(kGradCombinedCases) + " combined), " +
             std::to_string(coords) + " coords: failed=" + std::to_string(failed) + " max_rel_err=" + fmt(worst) +
             " cpu=" + fmt(secs) + "s; worst at " + where;
  return o;
}

ExperimentConfig fixed_stats_config(std::uint64_t seed, std::vector<double> n_hat) {
  ExperimentConfig c;
  c.kind = ExperimentKind::FixedStats;
  c.data.rho = 1.0;  // balanced data, as in the original fixed-statistics experiment
  c.trainer.iterations = 2000;
  c.fixed_warmup = 1000;
  c.fixed_n_hat = std::move(n_hat);
  apply_seed(c, seed);
  return c;
}

Outcome criterion_fixed_stats() {
  const double t0 = cpu_seconds();
  const std::size_t k = ExperimentConfig{}.data.num_classes;
  std::vector<double> high(k, 1.0), low(k, 1.0), uniform(k, 1.0);
  high[0] = 1e6;
  low[0] = 1e-6;

  auto run = [&](std::uint64_t seed, const std::vector<double>& n_hat, const std::string& tag) {
    const auto cfg = fixed_stats_config(seed, n_hat);
    const auto out = run_fixed_stats(cfg, kOut / "fixed_stats" / (tag + "-s" + std::to_string(seed)));
    return std::make_pair(out.class0_trajectory.front(), out.class0_trajectory.back());
  };

  std::vector<double> control_starts;
  for (auto s : kControlSeeds) control_starts.push_back(run(s, uniform, "control").first);
  const double mean = std::accumulate(control_starts.begin(), control_starts.end(), 0.0) / control_starts.size();
  double var = 0.0;
  for (double v : control_starts) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(control_starts.size() - 1));
  const double eval_n = static_cast<double>(TrainerConfig{}.eval_samples);
  const double binomial = std::sqrt(mean * (1.0 - mean) / eval_n);
  const double band = kNoiseBandSigmas * std::max(sd, binomial);

  bool ok = true;
  std::string detail;
  for (auto s : kSeeds) {
    const auto [hs, he] = run(s, high, "high");
    const auto [ls, le] = run(s, low, "low");
    const auto [us, ue] = run(s, uniform, "uniform");
    const bool seed_ok = he < hs && le > ls && std::abs(ue - us) <= band;
    ok = ok && seed_ok;
    detail += " s" + std::to_string(s) + "[high " + fmt(hs) + "->" + fmt(he) + ", low " + fmt(ls) + "->" + fmt(le) +
              ", uniform " + fmt(us) + "->" + fmt(ue) + "]";
  }
  const double secs = cpu_seconds() - t0;
  Outcome o;
  o.pass = ok && secs < kFixedStatsSeconds;
  o.detail = "band=" + fmt(band) + " (control sd " + fmt(sd) + ", binomial se " + fmt(binomial) + ");" + detail +
             " cpu=" + fmt(secs) + "s";
  return o;
}

ExperimentConfig end_to_end_config(std::uint64_t seed, ExperimentKind kind) {
  ExperimentConfig c;  // K=8 circle mixture, rho=100, default trainer
  c.kind = kind;
  apply_seed(c, seed);
  return c;
}

Outcome criterion_end_to_end() {
  const double t0 = cpu_seconds();
  bool ok = true;
  std::string detail;
  for (auto s : kSeeds) {
    const auto reg = run_train(end_to_end_config(s, ExperimentKind::Train), kOut / "end_to_end" / ("reg-s" + std::to_string(s)));
    const auto base =
        run_train(end_to_end_config(s, ExperimentKind::Baseline), kOut / "end_to_end" / ("base-s" + std::to_string(s)));
    const bool seed_ok = reg.kl_uniform <= kKlRatio * base.kl_uniform && reg.kl_uniform <= kKlAbsolute &&
                         reg.frechet <= kFrechetRatio * base.frechet;
    ok = ok && seed_ok;
    detail += " s" + std::to_string(s) + "[kl " + fmt(reg.kl_uniform) + " vs " + fmt(base.kl_uniform) + ", frechet " +
              fmt(reg.frechet) + " vs " + fmt(base.frechet) + "]";
  }
  const double secs = cpu_seconds() - t0;
  Outcome o;
  o.pass = ok && secs < kEndToEndSeconds;
  o.detail = "regularized vs baseline:" + detail + " cpu=" + fmt(secs) + "s";
  return o;
}

Outcome criterion_stats() {
  bool ok = true;
  std::string detail;
  {
    EffectiveClassStats s({6.0, 2.0}, {0.5, 1.0, 200, 1.0});
    const std::vector<int> labels{0, 1, 1, 1, 1, 1, 1, 1};
    s.record_batch(labels);
    s.end_cycle();
    const auto d = s.distribution();
    const bool exact = s.n_hat()[0] == 4.0 && s.n_hat()[1] == 8.0 && d[0] == 1.0 / 3.0 && d[1] == 2.0 / 3.0;
    ok = ok && exact;
    detail += std::string("(6,2)+(1,7) -> (") + fmt(s.n_hat()[0]) + "," + fmt(s.n_hat()[1]) + ") -> (" + fmt(d[0]) +
              "," + fmt(d[1]) + ")" + (exact ? " exact" : " MISMATCH");
  }
  double worst = 0.0;
  for (double alpha : {0.1, 0.5, 0.9}) {
    const std::size_t k = 6;
    std::vector<double> start{50.0, 1.0, 3.0, 0.5, 20.0, 7.0};
    EffectiveClassStats s(start, {alpha, 1.0, 200, 1.0});
    const double c = 4.0;
    std::vector<int> labels;
    for (std::size_t i = 0; i < k; ++i) labels.insert(labels.end(), 4, static_cast<int>(i));
    std::vector<double> dev(k);
    for (std::size_t i = 0; i < k; ++i) dev[i] = start[i] - c / alpha;
    for (int cycle = 0; cycle < 60; ++cycle) {
      s.record_batch(labels);
      s.end_cycle();
      for (std::size_t i = 0; i < k; ++i) {
        dev[i] *= 1.0 - alpha;
        worst = std::max(worst, std::abs((s.n_hat()[i] - c / alpha) - dev[i]));
      }
    }
  }
  ok = ok && worst <= kStatsTol;
  detail += "; geometric rate (1-alpha) max deviation " + fmt(worst);
  return {ok, detail};
}

Outcome criterion_classifier_sweep() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::ClassifierSweep;
  cfg.sweep_values = {1, 10, 100, 500};
  cfg.sweep_drop_tail = true;
  apply_seed(cfg, 1);
  const auto results = run_sweep(cfg, kOut / "classifier_sweep", 1);
  bool ok = true;
  bool flagged = false;
  std::string detail;
  std::vector<double> tails;
  for (const auto& r : results) {
    const bool usable = r.tail_accuracy >= kUsableTailAccuracy;
    const bool dropped = r.name == "clf_drop_tail";
    if (dropped) flagged = r.divergence_warning;
    if (usable && !dropped) {
      ok = ok && r.status == "ok" && r.kl_uniform <= kKlAbsolute;
      tails.push_back(r.tail_accuracy);
    }
    detail += " " + r.name + "[tail " + fmt(r.tail_accuracy) + ", kl " + fmt(r.kl_uniform) +
              (r.divergence_warning ? ", flagged" : "") + "]";
  }
  const bool monotone = std::is_sorted(tails.rbegin(), tails.rend());
  return {ok && flagged, (monotone ? "tail accuracy non-increasing in rho_clf;" : "tail accuracy not monotone;") + detail};
}

Outcome criterion_determinism() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::Train;
  cfg.trainer.iterations = 1000;
  apply_seed(cfg, 7);
  const fs::path a = kOut / "determinism" / "a", b = kOut / "determinism" / "b";
  run_train(cfg, a);
  run_train(cfg, b);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  const std::string ma = slurp(a / "metrics.csv"), mb = slurp(b / "metrics.csv");
  const bool same = !ma.empty() && ma == mb;
  return {same, "metrics.csv " + std::to_string(ma.size()) + " bytes, " + (same ? "identical" : "DIFFERENT")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"theory verification", criterion_theory},
      {"gradient integrity", criterion_gradients},
      {"fixed statistics direction", criterion_fixed_stats},
      {"end-to-end balancing", criterion_end_to_end},
      {"statistics semantics", criterion_stats},
      {"classifier-robustness sweep", criterion_classifier_sweep},
      {"determinism", criterion_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  fs::create_directories(kOut);
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
