#include "balance/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "balance/csv.hpp"

namespace balance::theory {

namespace {

double residual_at(double lambda, std::span<const double> n) {
  double s = 0.0;
  for (double v : n) s += std::exp(lambda * v - 1.0);
  return s - 1.0;
}

void check_positive(std::span<const double> n) {
  if (n.empty()) throw std::invalid_argument("need at least one class");
  for (double v : n)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("class weights must be finite and > 0");
}

std::string describe(std::span<const double> n) {
  std::string s = "N=(";
  for (std::size_t k = 0; k < n.size(); ++k) s += (k ? "," : "") + format_double(n[k]);
  return s + ")";
}

}  // namespace

double objective(std::span<const double> p, std::span<const double> n) {
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) total += p[k] * std::log(p[k]) / n[k];
  return total;
}

double closed_form_minimum(double lambda, std::span<const double> n) {
  double s = 0.0;
  for (double v : n) s += std::exp(lambda * v - 1.0) / v;
  return lambda - s;
}

StationarySolution solve_lambda(std::span<const double> n, double tol, std::size_t max_iter) {
  check_positive(n);
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  const double k = static_cast<double>(n.size());
  double lo = -10.0 * k, hi = 10.0 * k;
  std::size_t it = 0;
  while (residual_at(lo, n) > 0.0 && it < max_iter) lo *= 2.0, ++it;
  while (residual_at(hi, n) < 0.0 && it < max_iter) hi *= 2.0, ++it;

  for (; it < max_iter; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (residual_at(mid, n) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double rlo = residual_at(lo, n), rhi = residual_at(hi, n);
  const double lambda = std::abs(rlo) <= std::abs(rhi) ? lo : hi;
  const double r = std::min(std::abs(rlo), std::abs(rhi));
  if (!(r <= tol)) {
    throw ConvergenceError("solve_lambda: residual " + format_double(r) + " above tol after " +
                               std::to_string(it) + " iterations",
                           r);
  }

  StationarySolution sol;
  sol.lambda = lambda;
  sol.iterations = it;
  sol.p_star.reserve(n.size());
  for (double v : n) sol.p_star.push_back(std::exp(lambda * v - 1.0));
  sol.residual = std::accumulate(sol.p_star.begin(), sol.p_star.end(), 0.0) - 1.0;
  sol.objective_value = closed_form_minimum(lambda, n);
  return sol;
}

StationarySolution solve_lambda(const ClassDistribution& n, double tol, std::size_t max_iter) {
  return solve_lambda(n.values(), tol, max_iter);
}

std::vector<double> prop1_bound(std::span<const double> n, std::size_t num_classes) {
  check_positive(n);
  const double k = static_cast<double>(num_classes);
  const double penalty = k * (std::log(k) - 1.0);
  const double total = std::accumulate(n.begin(), n.end(), 0.0);
  std::vector<double> bound;
  bound.reserve(n.size());
  for (double v : n) bound.push_back(std::exp(-penalty * v / total - 1.0));
  return bound;
}

DescentResult minimize_bruteforce(std::span<const double> n, std::size_t steps, double rate) {
  check_positive(n);
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be > 0");

  const std::size_t k = n.size();
  DescentResult res;
  std::vector<double> p(k, 1.0 / static_cast<double>(k)), q(k), dir(k);
  double fp = objective(p, n);
  int rising = 0;

  auto trial = [&](double t) {
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double v = p[i] + t * dir[i];
      if (v <= 0.1 * p[i]) v = 0.1 * p[i];
      q[i] = v;
      total += v;
    }
    for (double& v : q) v /= total;
    return objective(q, n);
  };

  for (res.steps = 0; res.steps < steps; ++res.steps) {
    double hg = 0.0, hsum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const double h = n[i] * p[i];
      const double g = (1.0 + std::log(p[i])) / n[i];
      dir[i] = g;
      hg += h * g;
      hsum += h;
    }
    const double mu = hg / hsum;
    double dmax = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      dir[i] = -n[i] * p[i] * (dir[i] - mu);
      dmax = std::max(dmax, std::abs(dir[i]));
    }
    if (dmax <= 1e-16) {
      res.status = DescentStatus::Converged;
      break;
    }

    double t = rate;
    double fq = trial(t);
    rising = fq > fp + 1e-12 * std::max(1.0, std::abs(fp)) ? rising + 1 : 0;
    if (rising >= 10) {
      res.status = DescentStatus::Diverged;
      break;
    }
    while (!(fq < fp) && t > 1e-12) {
      t *= 0.5;
      fq = trial(t);
    }
    if (!(fq < fp)) {
      // No representable decrease left along the scaled direction.
      res.status = DescentStatus::Converged;
      break;
    }
    p.swap(q);
    fp = fq;
  }
  res.p = std::move(p);
  res.objective = fp;
  return res;
}

std::vector<double> sample_simplex(Rng& rng, std::size_t k) {
  std::vector<double> w(k);
  double total = 0.0;
  for (double& v : w) total += (v = rng.gamma(1.0));
  for (double& v : w) v /= total;
  return w;
}

PropositionReport verify_propositions(std::span<const double> n, Rng& rng, const VerifyOptions& opts) {
  PropositionReport rep;
  rep.n.assign(n.begin(), n.end());
  rep.num_classes = n.size();

  const StationarySolution sol = solve_lambda(n);
  rep.lambda = sol.lambda;

  const auto bound = prop1_bound(n, n.size());
  rep.max_bound_violation = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n.size(); ++k)
    rep.max_bound_violation = std::max(rep.max_bound_violation, sol.p_star[k] - bound[k]);
  if (rep.max_bound_violation > opts.bound_tol) {
    rep.violations.push_back("bound exceeded by " + format_double(rep.max_bound_violation) + " at " + describe(n));
  }

  const double f_star = objective(sol.p_star, n);
  rep.prop2_residual = std::abs(f_star - sol.objective_value);
  if (!(rep.prop2_residual <= opts.prop2_tol)) {
    rep.violations.push_back("closed-form minimum off by " + format_double(rep.prop2_residual) + " at " +
                             describe(n));
  }

  const DescentResult brute = minimize_bruteforce(n);
  rep.oracle_linf = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k)
    rep.oracle_linf = std::max(rep.oracle_linf, std::abs(brute.p[k] - sol.p_star[k]));
  if (brute.status == DescentStatus::Diverged) {
    rep.violations.push_back("brute-force descent diverged at " + describe(n));
  }
  if (!(rep.oracle_linf <= opts.oracle_tol)) {
    rep.violations.push_back("brute force disagrees by " + format_double(rep.oracle_linf) + " at " + describe(n));
  }

  rep.min_random_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < opts.random_points; ++i) {
    const auto q = sample_simplex(rng, n.size());
    rep.min_random_margin = std::min(rep.min_random_margin, objective(q, n) - f_star);
  }
  if (rep.min_random_margin < -opts.prop2_tol) {
    rep.violations.push_back("random simplex point beats p* by " + format_double(-rep.min_random_margin) + " at " +
                             describe(n));
  }

  if (opts.check_direction && n.size() >= 3) {
    std::vector<std::size_t> order(n.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return n[a] < n[b]; });
    bool ok = sol.lambda < 0.0;
    for (std::size_t i = 1; i < order.size(); ++i) ok = ok && sol.p_star[order[i]] <= sol.p_star[order[i - 1]];
    rep.direction_ok = ok;
    if (!ok) rep.violations.push_back("p* not non-increasing in N (lambda=" + format_double(sol.lambda) + ") at " + describe(n));
  }
  return rep;
}

}  // namespace balance::theory
