#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "balance/classifier.hpp"
#include "balance/longtail.hpp"
#include "balance/trainer.hpp"

namespace balance {

/// Config problem tied to one key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::invalid_argument(key + ": " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class ExperimentKind { Train, Baseline, FixedStats, Theory, ClassifierSweep, BetaAblation, CycleSweep };

const char* kind_name(ExperimentKind k);
ExperimentKind parse_kind(const std::string& name);

struct TheorySettings {
  std::size_t trials = 1000;
  std::size_t k_min = 3;
  std::size_t k_max = 50;
  double bound_tol = 1e-9;
  double prop2_tol = 1e-8;
  double oracle_tol = 1e-5;
  /// Allowed |p* - bound| at uniform N, where the bound is attained.
  double tight_tol = 1e-10;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Train;
  LongTailSpec data;
  TrainerConfig trainer;
  ClassifierOptions classifier;
  /// Imbalance of the data the in-loop classifier learns from; unset means
  /// it shares the GAN training set.
  std::optional<double> clf_rho;
  std::size_t test_per_class = 250;
  std::size_t annotator_per_class = 250;
  std::size_t cas_samples = 2000;

  std::vector<double> fixed_n_hat;
  std::size_t fixed_warmup = 1000;

  std::vector<double> sweep_values;
  /// Directs the classifier sweep to add one run whose classifier never saw the tail class.
  bool sweep_drop_tail = false;

  TheorySettings theory;
  std::filesystem::path output_dir;
};

/// Flat key=value text, one pair per line, '#' starts a comment. `kind` is
/// required; unknown keys are rejected.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical key=value rendering; parse_config(serialize(c)) reproduces c.
std::string serialize(const ExperimentConfig& cfg);

/// FNV-1a of the canonical rendering, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Applies a seed to every seeded component.
void apply_seed(ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace balance
