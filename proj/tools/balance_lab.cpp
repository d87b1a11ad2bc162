// balance_lab: command line front end for the class-balancing GAN experiments.
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 a verification
// or run failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "balance/config.hpp"
#include "balance/experiment.hpp"

namespace fs = std::filesystem;
using namespace balance;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailed = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "Experiment config (key=value text)");
  if (config_required) opt->required();
  cmd->add_option("--seed", c.seed, "Seed overriding the config");
  cmd->add_option("--out", c.out, "Run directory (default: <output root>/<kind>-s<seed>-<hash>)");
  cmd->add_option("--jobs", c.jobs, "Concurrent member runs for sweeps")->check(CLI::PositiveNumber);
}

fs::path output_root(const ExperimentConfig& cfg) {
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  if (const char* env = std::getenv("BALANCE_LAB_OUT"); env && *env) return env;
  return "runs";
}

fs::path run_dir(const Common& c, const ExperimentConfig& cfg) {
  if (!c.out.empty()) return c.out;
  return output_root(cfg) /
         (std::string(kind_name(cfg.kind)) + "-s" + std::to_string(cfg.trainer.seed) + "-" + config_hash(cfg).substr(0, 8));
}

ExperimentConfig load(const Common& c, ExperimentKind kind) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  cfg.kind = kind;
  if (c.seed) apply_seed(cfg, *c.seed);
  return cfg;
}

int cmd_train(const Common& c, ExperimentKind kind) {
  const ExperimentConfig cfg = load(c, kind);
  const fs::path dir = run_dir(c, cfg);
  const RunSummary s = run_train(cfg, dir);
  std::cout << dir.string() << "\n"
            << "kl_uniform=" << s.kl_uniform << " frechet=" << s.frechet << " tail_accuracy=" << s.tail_accuracy
            << " cas=" << s.cas << "\n";
  if (s.divergence_warning) std::cerr << "warning: in-loop classifier has zero tail accuracy; training may diverge\n";
  return kOk;
}

int cmd_fixed_stats(const Common& c) {
  ExperimentConfig cfg = load(c, ExperimentKind::FixedStats);
  if (cfg.fixed_n_hat.size() != cfg.data.num_classes) {
    throw ConfigError("fixed_n_hat", "needs exactly num_classes values");
  }
  const fs::path dir = run_dir(c, cfg);
  const auto out = run_fixed_stats(cfg, dir);
  std::cout << dir.string() << "\n";
  if (!out.class0_trajectory.empty()) {
    std::cout << "class0_start=" << out.class0_trajectory.front() << " class0_end=" << out.class0_trajectory.back()
              << "\n";
  }
  return kOk;
}

struct TheoryFlags {
  std::optional<std::size_t> trials, k_min, k_max;
  std::optional<double> tol;
};

int cmd_verify_theory(const Common& c, const TheoryFlags& f) {
  ExperimentConfig cfg = load(c, ExperimentKind::Theory);
  if (f.trials) cfg.theory.trials = *f.trials;
  if (f.k_min) cfg.theory.k_min = *f.k_min;
  if (f.k_max) cfg.theory.k_max = *f.k_max;
  if (f.tol) {
    cfg.theory.bound_tol = cfg.theory.prop2_tol = cfg.theory.oracle_tol = cfg.theory.tight_tol = *f.tol;
  }
  if (cfg.theory.trials < 1) throw ConfigError("trials", "must be >= 1");
  if (cfg.theory.k_min < 2 || cfg.theory.k_max < cfg.theory.k_min) throw ConfigError("k_min", "need 2 <= k_min <= k_max");
  const fs::path dir = run_dir(c, cfg);
  const auto out = run_theory(cfg, dir);
  std::cout << dir.string() << "\n"
            << "trials=" << out.trials << " violations=" << out.violations
            << " max_bound_violation=" << out.max_bound_violation << " max_prop2_residual=" << out.max_prop2_residual
            << " max_oracle_linf=" << out.max_oracle_linf << " max_tightness_gap=" << out.max_tightness_gap << "\n";
  return out.violations == 0 ? kOk : kFailed;
}

ExperimentKind sweep_kind(const std::string& name) {
  if (name == "classifier-quality" || name == "classifier-sweep") return ExperimentKind::ClassifierSweep;
  if (name == "beta" || name == "beta-ablation") return ExperimentKind::BetaAblation;
  if (name == "cycle-length" || name == "cycle-sweep") return ExperimentKind::CycleSweep;
  throw ConfigError("kind", "unknown sweep '" + name + "' (classifier-quality, beta, cycle-length)");
}

int cmd_sweep(const Common& c, const std::string& kind) {
  ExperimentKind k = ExperimentKind::ClassifierSweep;
  if (!kind.empty()) {
    k = sweep_kind(kind);
  } else {
    k = load_config(c.config).kind;
    if (k != ExperimentKind::ClassifierSweep && k != ExperimentKind::BetaAblation && k != ExperimentKind::CycleSweep) {
      throw ConfigError("kind", "config does not describe a sweep; pass --kind");
    }
  }
  const ExperimentConfig cfg = load(c, k);
  const fs::path dir = run_dir(c, cfg);
  const auto results = run_sweep(cfg, dir, c.jobs);
  std::cout << dir.string() << "\n";
  for (const auto& r : results) {
    std::cout << r.name << " value=" << r.sweep_value << " tail_accuracy=" << r.tail_accuracy
              << " kl_uniform=" << r.kl_uniform << " frechet=" << r.frechet << " status=" << r.status
              << (r.divergence_warning ? " [divergence warning]" : "") << "\n";
  }
  return kOk;
}

int cmd_report(const Common& c, const std::vector<std::string>& dirs) {
  std::vector<fs::path> paths(dirs.begin(), dirs.end());
  fs::path out = c.out;
  if (out.empty()) {
    const char* env = std::getenv("BALANCE_LAB_OUT");
    out = fs::path(env && *env ? env : "runs") / "report.csv";
  }
  const auto runs = run_report(paths, out);
  std::cout << out.string() << "\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::cout << i + 1 << ". " << runs[i].name << " lambda=" << runs[i].lambda << " kl_uniform=" << runs[i].kl_uniform
              << " frechet=" << runs[i].frechet << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-balancing GAN experiments on long-tailed toy data"};
  app.require_subcommand(1);

  Common train_opts, base_opts, fixed_opts, theory_opts, sweep_opts, report_opts;
  auto* train = app.add_subcommand("train", "Train the classifier-regularized GAN");
  add_common(train, train_opts, true);
  auto* baseline = app.add_subcommand("baseline", "Train with the regularizer disabled (lambda = 0)");
  add_common(baseline, base_opts, true);
  auto* fixed = app.add_subcommand("fixed-stats", "Train with pinned class statistics");
  add_common(fixed, fixed_opts, true);

  auto* theory = app.add_subcommand("verify-theory", "Randomized check of the stationary-point results");
  add_common(theory, theory_opts, false);
  TheoryFlags tflags;
  theory->add_option("--trials", tflags.trials, "Random distributions to check");
  theory->add_option("--k-min", tflags.k_min, "Smallest class count");
  theory->add_option("--k-max", tflags.k_max, "Largest class count");
  theory->add_option("--tol", tflags.tol, "Override every tolerance");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  add_common(sweep, sweep_opts, true);
  std::string sweep_name;
  sweep->add_option("--kind", sweep_name, "classifier-quality | beta | cycle-length");

  auto* report = app.add_subcommand("report", "Rank finished runs by kl_uniform");
  report->add_option("--out", report_opts.out, "Report CSV path (default <output root>/report.csv)");
  std::vector<std::string> report_dirs;
  report->add_option("dirs", report_dirs, "Run or sweep directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  }

  try {
    if (*train) return cmd_train(train_opts, ExperimentKind::Train);
    if (*baseline) return cmd_train(base_opts, ExperimentKind::Baseline);
    if (*fixed) return cmd_fixed_stats(fixed_opts);
    if (*theory) return cmd_verify_theory(theory_opts, tflags);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_name);
    if (*report) return cmd_report(report_opts, report_dirs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kInvalid;
}
