#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace balance {

/// Discrete distribution over K class labels.
class ClassDistribution {
 public:
  ClassDistribution() = default;
  /// Normalizes `weights`; throws std::invalid_argument if any weight is
  /// negative or non-finite, or if they sum to zero.
  static ClassDistribution from_weights(std::span<const double> weights);
  static ClassDistribution uniform(std::size_t k);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t k) const { return p_[k]; }
  std::span<const double> values() const { return p_; }

 private:
  std::vector<double> p_;
};

/// Effective class frequency with exponential forgetting.
///
///   n_hat_k <- (1 - alpha) * n_hat_k + beta * c_k     (once per cycle)
///
/// c_k are the counts accumulated by record_batch() during the current cycle.
/// After every cycle n_hat_k is floored at kCountFloor so the normalized
/// distribution stays strictly positive.
class EffectiveClassStats {
 public:
  static constexpr double kCountFloor = 1e-8;

  struct Options {
    double alpha = 0.5;
    double beta = 1.0;
    std::size_t cycle_len = 200;
    double initial = 1.0;
  };

  EffectiveClassStats(std::size_t num_classes, Options opts);
  /// Start from explicit counters (all must be > 0).
  EffectiveClassStats(std::vector<double> n_hat, Options opts);

  /// Count hard labels produced in the current cycle.
  void record_batch(std::span<const int> labels);
  /// Soft-count variant: add each row of a probability matrix (row-major, K columns).
  void record_soft(std::span<const double> probs);

  void end_cycle();

  ClassDistribution distribution() const;

  std::size_t num_classes() const { return n_hat_.size(); }
  std::span<const double> n_hat() const { return n_hat_; }
  std::span<const double> pending() const { return pending_; }
  std::size_t cycle() const { return cycle_; }
  const Options& options() const { return opts_; }

 private:
  Options opts_;
  std::vector<double> n_hat_;
  std::vector<double> pending_;
  std::size_t cycle_ = 0;
};

}  // namespace balance
