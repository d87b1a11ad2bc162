#include "balance/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "balance/csv.hpp"
#include "balance/metrics.hpp"
#include "balance/rng.hpp"
#include "balance/svg.hpp"
#include "balance/theory.hpp"

namespace balance {

namespace fs = std::filesystem;

namespace {

std::string provenance(const ExperimentConfig& cfg) {
  return "balance_lab kind=" + std::string(kind_name(cfg.kind)) + " seed=" + std::to_string(cfg.trainer.seed) +
         " config_hash=" + config_hash(cfg);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ClassifierOptions with_seed(ClassifierOptions opts, std::string_view stream) {
  opts.seed = derive_seed(opts.seed, stream);
  return opts;
}

// Samples from a trained generator; conditional generators get uniformly
// drawn one-hot labels so every class is requested equally often.
Sampler gan_sampler(const Mlp& generator, const TrainerConfig& cfg, std::size_t num_classes) {
  if (cfg.label_proposal == LabelProposal::None) return generator_sampler(generator);
  return [generator, noise_dim = cfg.noise_dim, num_classes](std::size_t n, Rng& rng) {
    Tensor z(n, noise_dim + num_classes);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < noise_dim; ++j) z(i, j) = rng.normal();
      z(i, noise_dim + rng.index(num_classes)) = 1.0;
    }
    return generator.forward(z);
  };
}

void write_metrics(const fs::path& path, const std::vector<MetricsRow>& history, std::size_t num_classes) {
  CsvWriter csv(path, metrics_header(num_classes));
  for (const auto& row : history) csv.row(metrics_fields(row));
}

void plot_history(const fs::path& dir, const ExperimentConfig& cfg, const std::vector<MetricsRow>& history,
                  std::size_t num_classes) {
  const std::string prov = provenance(cfg);
  std::vector<PlotSeries> fracs(num_classes);
  PlotSeries kl{"kl_uniform", {}, {}};
  PlotSeries fd{"frechet", {}, {}};
  for (std::size_t k = 0; k < num_classes; ++k) fracs[k].name = "class " + std::to_string(k);
  for (const auto& row : history) {
    const double x = static_cast<double>(row.iter);
    for (std::size_t k = 0; k < num_classes && k < row.class_fracs.size(); ++k) {
      fracs[k].x.push_back(x);
      fracs[k].y.push_back(row.class_fracs[k]);
    }
    kl.x.push_back(x);
    kl.y.push_back(row.kl_uniform);
    fd.x.push_back(x);
    fd.y.push_back(row.frechet);
  }
  write_line_plot(dir / "class_fractions.svg", {"Generated class fractions", "iteration", "fraction"}, fracs, prov);
  write_line_plot(dir / "kl_uniform.svg", {"KL to uniform", "iteration", "nats"}, {kl}, prov);
  write_line_plot(dir / "frechet.svg", {"Frechet proxy", "iteration", "distance"}, {fd}, prov);
}

LongTailSpec derived_spec(const LongTailSpec& base, std::string_view stream) {
  LongTailSpec spec = base;
  spec.seed = derive_seed(base.seed, stream);
  return spec;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg, bool drop_tail) {
  PreparedData prep;
  prep.train = make_longtail(cfg.data);
  prep.test = make_balanced_test(cfg.data, cfg.test_per_class);

  const LabeledDataset annot_data = make_balanced_test(derived_spec(cfg.data, "annotator"), cfg.annotator_per_class);
  prep.annotator = pretrain_classifier(annot_data, prep.test, with_seed(cfg.classifier, "annotator"));

  const int tail = least_populated_class(prep.train.counts);
  LabeledDataset clf_data;
  if (cfg.clf_rho) {
    LongTailSpec spec = derived_spec(cfg.data, "classifier-data");
    spec.rho = *cfg.clf_rho;
    clf_data = make_longtail(spec);
  } else {
    clf_data = prep.train;
  }
  if (drop_tail) clf_data = drop_class(clf_data, tail);
  prep.classifier = pretrain_classifier(clf_data, prep.test, with_seed(cfg.classifier, "classifier"));

  prep.tail_accuracy = evaluate_classifier(prep.classifier.net, prep.test, tail).tail;
  prep.divergence_warning = prep.tail_accuracy == 0.0 || prep.classifier.divergence_warning;
  return prep;
}

void write_summary(const fs::path& path, const RunSummary& s) {
  std::string text;
  text += "name=" + s.name + "\n";
  text += "kind=" + s.kind + "\n";
  text += "seed=" + std::to_string(s.seed) + "\n";
  text += "lambda=" + format_double(s.lambda) + "\n";
  text += "sweep_value=" + format_double(s.sweep_value) + "\n";
  text += "kl_uniform=" + format_double(s.kl_uniform) + "\n";
  text += "frechet=" + format_double(s.frechet) + "\n";
  text += "tail_accuracy=" + format_double(s.tail_accuracy) + "\n";
  text += "cas=" + format_double(s.cas) + "\n";
  text += std::string("divergence_warning=") + (s.divergence_warning ? "true" : "false") + "\n";
  text += "status=" + s.status + "\n";
  write_text(path, text);
}

RunSummary read_summary(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto num = [&](const char* key) { return kv.count(key) ? std::stod(kv[key]) : 0.0; };
  RunSummary s;
  s.name = kv["name"];
  s.kind = kv["kind"];
  s.seed = kv.count("seed") ? std::stoull(kv["seed"]) : 0;
  s.lambda = num("lambda");
  s.sweep_value = num("sweep_value");
  s.kl_uniform = num("kl_uniform");
  s.frechet = num("frechet");
  s.tail_accuracy = num("tail_accuracy");
  s.cas = num("cas");
  s.divergence_warning = kv["divergence_warning"] == "true";
  s.status = kv.count("status") ? kv["status"] : "unknown";
  return s;
}

RunSummary run_train(const ExperimentConfig& base, const fs::path& dir, bool drop_tail) {
  ExperimentConfig cfg = base;
  if (cfg.kind == ExperimentKind::Baseline) cfg.trainer.lambda = 0.0;
  fs::create_directories(dir);
  write_text(dir / "config.txt", serialize(cfg));

  RunSummary s;
  s.name = dir.filename().string();
  s.kind = kind_name(cfg.kind);
  s.seed = cfg.trainer.seed;
  s.lambda = cfg.trainer.lambda;

  const PreparedData prep = prepare_data(cfg, drop_tail);
  s.tail_accuracy = prep.tail_accuracy;
  s.divergence_warning = prep.divergence_warning;
  write_dataset_csv(dir / "train_data.csv", prep.train);
  write_dataset_metadata(dir / "train_data.csv.meta", cfg.data, prep.train);

  const std::size_t k = cfg.data.num_classes;
  TrainResult result;
  try {
    result = train(cfg.trainer, prep.train, prep.classifier.net, {&prep.annotator.net, &prep.test});
  } catch (const std::exception& e) {
    s.status = std::string("failed: ") + e.what();
    write_summary(dir / "summary.txt", s);
    throw;
  }

  write_metrics(dir / "metrics.csv", result.history, k);
  export_checkpoint(dir / "checkpoint", result, cfg.trainer);
  plot_history(dir, cfg, result.history, k);

  if (!result.history.empty()) {
    s.kl_uniform = result.history.back().kl_uniform;
    s.frechet = result.history.back().frechet;
  }
  const CasResult cas = classifier_accuracy_score(gan_sampler(result.generator, cfg.trainer, k), prep.classifier.net,
                                                  prep.test, cfg.cas_samples, with_seed(cfg.classifier, "cas"));
  s.cas = cas.accuracy;
  write_summary(dir / "summary.txt", s);
  return s;
}

FixedStatsOutcome run_fixed_stats(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "config.txt", serialize(cfg));
  const PreparedData prep = prepare_data(cfg);

  FixedStatsOutcome out;
  out.result = fixed_stats_experiment(cfg.trainer, {cfg.fixed_n_hat, cfg.fixed_warmup}, prep.train,
                                      prep.classifier.net, {&prep.annotator.net, &prep.test});
  out.class0_trajectory = out.result.class0_trajectory;
  write_metrics(dir / "metrics.csv", out.result.history, cfg.data.num_classes);

  std::vector<double> iters{static_cast<double>(cfg.fixed_warmup)};
  for (const auto& row : out.result.history)
    if (row.iter > cfg.fixed_warmup) iters.push_back(static_cast<double>(row.iter));
  iters.resize(out.class0_trajectory.size(), iters.back());

  CsvWriter csv(dir / "trajectory.csv", {"step", "iter", "class0_fraction"});
  for (std::size_t i = 0; i < out.class0_trajectory.size(); ++i) {
    csv.row({std::to_string(i), std::to_string(static_cast<std::size_t>(iters[i])),
             format_double(out.class0_trajectory[i])});
  }
  write_line_plot(dir / "trajectory.svg", {"Class 0 fraction under fixed statistics", "iteration", "fraction"},
                  {{"class 0", iters, out.class0_trajectory}}, provenance(cfg));
  return out;
}

TheoryOutcome run_theory(const ExperimentConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  const TheorySettings& t = cfg.theory;
  theory::VerifyOptions opts;
  opts.bound_tol = t.bound_tol;
  opts.prop2_tol = t.prop2_tol;
  opts.oracle_tol = t.oracle_tol;

  TheoryOutcome out;
  Rng rng(cfg.data.seed, "theory");
  CsvWriter csv(dir / "theory.csv", {"trial", "K", "lambda", "max_bound_violation", "prop2_residual", "oracle_linf",
                                     "min_random_margin", "status", "n"});
  for (std::size_t trial = 0; trial < t.trials; ++trial) {
    const std::size_t k = t.k_min + rng.index(t.k_max - t.k_min + 1);
    const std::vector<double> n = theory::sample_simplex(rng, k);
    const auto rep = theory::verify_propositions(n, rng, opts);
    ++out.trials;
    if (!rep.passed()) ++out.violations;
    out.max_bound_violation = std::max(out.max_bound_violation, rep.max_bound_violation);
    out.max_prop2_residual = std::max(out.max_prop2_residual, rep.prop2_residual);
    out.max_oracle_linf = std::max(out.max_oracle_linf, rep.oracle_linf);

    std::string status = "ok";
    if (!rep.passed()) {
      status.clear();
      for (const auto& v : rep.violations) status += (status.empty() ? "" : "; ") + v;
    }
    std::string ns;
    for (double v : n) ns += (ns.empty() ? "" : ";") + format_double(v);
    csv.row({std::to_string(trial), std::to_string(k), format_double(rep.lambda),
             format_double(rep.max_bound_violation), format_double(rep.prop2_residual),
             format_double(rep.oracle_linf), format_double(rep.min_random_margin), status, ns});
  }

  // At uniform N the bound is attained.
  CsvWriter tight(dir / "tightness.csv", {"K", "gap", "status"});
  for (std::size_t k = t.k_min; k <= t.k_max; ++k) {
    const std::vector<double> n(k, 1.0 / static_cast<double>(k));
    const auto sol = theory::solve_lambda(n);
    const auto bound = theory::prop1_bound(n, k);
    double gap = 0.0;
    for (std::size_t i = 0; i < k; ++i) gap = std::max(gap, std::abs(sol.p_star[i] - bound[i]));
    out.max_tightness_gap = std::max(out.max_tightness_gap, gap);
    const bool ok = gap <= t.tight_tol;
    if (!ok) ++out.violations;
    tight.row({std::to_string(k), format_double(gap), ok ? "ok" : "not tight"});
  }
  return out;
}

std::vector<double> sweep_grid(const ExperimentConfig& cfg) {
  if (!cfg.sweep_values.empty()) return cfg.sweep_values;
  switch (cfg.kind) {
    case ExperimentKind::ClassifierSweep: return {1.0, 10.0, 100.0, 500.0};
    case ExperimentKind::BetaAblation: return {1.0, cfg.trainer.alpha};
    case ExperimentKind::CycleSweep: return {50.0, 100.0, 200.0, 400.0, 800.0};
    default: throw ConfigError("kind", std::string(kind_name(cfg.kind)) + " is not a sweep");
  }
}

std::vector<RunSummary> run_sweep(const ExperimentConfig& cfg, const fs::path& dir, std::size_t jobs) {
  struct Member {
    ExperimentConfig cfg;
    std::string name;
    double value = 0.0;
    bool drop_tail = false;
  };
  std::vector<Member> members;
  for (double v : sweep_grid(cfg)) {
    Member m{cfg, {}, v, false};
    m.cfg.kind = ExperimentKind::Train;
    switch (cfg.kind) {
      case ExperimentKind::ClassifierSweep:
        m.cfg.clf_rho = v;
        m.name = "clf_rho-" + format_double(v);
        break;
      case ExperimentKind::BetaAblation:
        m.cfg.trainer.beta = v;
        m.name = "beta-" + format_double(v);
        break;
      case ExperimentKind::CycleSweep:
        if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("sweep_values", "cycle lengths must be positive integers");
        m.cfg.trainer.cycle_len = static_cast<std::size_t>(v);
        m.name = "cycle_len-" + format_double(v);
        break;
      default: break;
    }
    members.push_back(std::move(m));
  }
  if (cfg.kind == ExperimentKind::ClassifierSweep && cfg.sweep_drop_tail) {
    Member m{cfg, "clf_drop_tail", cfg.clf_rho.value_or(cfg.data.rho), true};
    m.cfg.kind = ExperimentKind::Train;
    members.push_back(std::move(m));
  }

  fs::create_directories(dir);
  write_text(dir / "config.txt", serialize(cfg));
  std::vector<RunSummary> results(members.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < members.size(); ++i) {
    tasks.push_back([&, i] {
      const Member& m = members[i];
      try {
        results[i] = run_train(m.cfg, dir / m.name, m.drop_tail);
      } catch (const std::exception& e) {
        results[i].name = m.name;
        results[i].kind = kind_name(ExperimentKind::Train);
        results[i].seed = m.cfg.trainer.seed;
        results[i].lambda = m.cfg.trainer.lambda;
        results[i].status = std::string("failed: ") + e.what();
      }
      results[i].sweep_value = m.value;
    });
  }
  run_parallel(std::move(tasks), jobs);

  CsvWriter csv(dir / "aggregate.csv", {"member", "sweep_value", "tail_accuracy", "kl_uniform", "frechet", "cas",
                                        "divergence_warning", "status"});
  PlotSeries kl{"kl_uniform", {}, {}};
  PlotSeries tail{"tail_accuracy", {}, {}};
  for (std::size_t i = 0; i < members.size(); ++i) {
    const RunSummary& r = results[i];
    fs::create_directories(dir / members[i].name);
    write_summary(dir / members[i].name / "summary.txt", r);
    csv.row({members[i].name, format_double(r.sweep_value), format_double(r.tail_accuracy),
             format_double(r.kl_uniform), format_double(r.frechet), format_double(r.cas),
             r.divergence_warning ? "true" : "false", r.status});
    if (!members[i].drop_tail && r.status == "ok") {
      kl.x.push_back(r.sweep_value);
      kl.y.push_back(r.kl_uniform);
      tail.x.push_back(r.sweep_value);
      tail.y.push_back(r.tail_accuracy);
    }
  }
  write_line_plot(dir / "aggregate.svg", {std::string("Sweep: ") + kind_name(cfg.kind), "sweep value", "value"},
                  {kl, tail}, provenance(cfg));
  return results;
}

std::vector<RunSummary> run_report(const std::vector<fs::path>& dirs, const fs::path& out_csv) {
  std::vector<fs::path> files;
  for (const auto& d : dirs) {
    if (fs::is_regular_file(d / "summary.txt")) {
      files.push_back(d / "summary.txt");
      continue;
    }
    if (!fs::is_directory(d)) throw std::runtime_error("not a run directory: " + d.string());
    for (const auto& entry : fs::recursive_directory_iterator(d))
      if (entry.is_regular_file() && entry.path().filename() == "summary.txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunSummary> runs;
  for (const auto& f : files) runs.push_back(read_summary(f));
  std::stable_sort(runs.begin(), runs.end(),
                   [](const RunSummary& a, const RunSummary& b) { return a.kl_uniform < b.kl_uniform; });

  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  CsvWriter csv(out_csv, {"rank", "name", "kind", "seed", "lambda", "sweep_value", "kl_uniform", "frechet",
                          "tail_accuracy", "cas", "divergence_warning", "status"});
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    csv.row({std::to_string(i + 1), r.name, r.kind, std::to_string(r.seed), format_double(r.lambda),
             format_double(r.sweep_value), format_double(r.kl_uniform), format_double(r.frechet),
             format_double(r.tail_accuracy), format_double(r.cas), r.divergence_warning ? "true" : "false",
             r.status});
  }
  return runs;
}

void run_parallel(std::vector<std::function<void()>> tasks, std::size_t jobs) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(tasks.size(), 1));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) {
      try {
        tasks[i]();
      } catch (...) {
        // Tasks report their own failures.
      }
    }
  };
  if (jobs == 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace balance
