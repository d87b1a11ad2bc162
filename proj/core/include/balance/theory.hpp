#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "balance/class_stats.hpp"
#include "balance/rng.hpp"

namespace balance::theory {

/// Thrown when bisection cannot reach the requested residual.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Stationary point of the weighted-entropy objective on the simplex:
/// p*_k = exp(lambda * n_k - 1) with lambda chosen so that sum_k p*_k = 1.
struct StationarySolution {
  double lambda = 0.0;
  std::vector<double> p_star;
  /// lambda - sum_k exp(lambda n_k - 1) / n_k
  double objective_value = 0.0;
  /// sum_k p*_k - 1 at the returned lambda.
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// sum_k p_k log(p_k) / n_k with 0 log 0 = 0.
double objective(std::span<const double> p, std::span<const double> n);

/// lambda - sum_k exp(lambda n_k - 1) / n_k.
double closed_form_minimum(double lambda, std::span<const double> n);

/// Bisection on the monotone residual sum_k exp(lambda n_k - 1) - 1. The
/// bracket starts at [-10K, 10K] and doubles until the residual changes sign.
StationarySolution solve_lambda(std::span<const double> n, double tol = 1e-12, std::size_t max_iter = 4000);
StationarySolution solve_lambda(const ClassDistribution& n, double tol = 1e-12, std::size_t max_iter = 4000);

/// Per-class upper bound exp(-K (log K - 1) n_k / sum(n) - 1).
std::vector<double> prop1_bound(std::span<const double> n, std::size_t num_classes);

enum class DescentStatus { Converged, StepLimit, Diverged };

struct DescentResult {
  std::vector<double> p;
  double objective = 0.0;
  std::size_t steps = 0;
  DescentStatus status = DescentStatus::StepLimit;
};

/// Iterative minimizer of `objective` over the simplex that never uses the
/// closed-form stationary condition.
///
/// Each step moves along the gradient scaled by the inverse diagonal Hessian
/// (n_k p_k), with the sum-to-one direction projected out in that metric.
/// Coordinates that would leave the simplex shrink by 10x instead, followed
/// by renormalization; the step length starts at `rate` and halves until the
/// objective decreases. Diverged means the full-rate trial step increased
/// the objective on 10 consecutive iterations.
DescentResult minimize_bruteforce(std::span<const double> n, std::size_t steps = 500, double rate = 1.0);

/// Dirichlet(1, ..., 1) draw, i.e. uniform on the simplex.
std::vector<double> sample_simplex(Rng& rng, std::size_t k);

struct VerifyOptions {
  double bound_tol = 1e-9;
  double prop2_tol = 1e-8;
  double oracle_tol = 1e-5;
  std::size_t random_points = 1000;
  /// Check lambda < 0 and p* non-increasing in n. Applies only when K >= 3.
  bool check_direction = true;
};

struct PropositionReport {
  std::vector<double> n;
  std::size_t num_classes = 0;
  double lambda = 0.0;
  double max_bound_violation = 0.0;  // max_k (p*_k - bound_k), <= 0 when the bound holds
  double prop2_residual = 0.0;       // |objective(p*) - closed form|
  double oracle_linf = 0.0;          // |p* - brute force|_inf
  double min_random_margin = 0.0;    // min_q objective(q) - objective(p*)
  std::optional<bool> direction_ok;  // unset when not checked
  std::vector<std::string> violations;

  bool passed() const { return violations.empty(); }
};

PropositionReport verify_propositions(std::span<const double> n, Rng& rng, const VerifyOptions& opts = {});

}  // namespace balance::theory
