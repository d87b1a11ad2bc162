#include "balance/class_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace balance {

namespace {

void check_options(const EffectiveClassStats::Options& o) {
  if (!(o.alpha > 0.0 && o.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(o.beta > 0.0)) throw std::invalid_argument("beta must be > 0");
  if (o.cycle_len < 1) throw std::invalid_argument("cycle_len must be >= 1");
}

}  // namespace

ClassDistribution ClassDistribution::from_weights(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("class weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("class weights sum to zero; distribution undefined");
  ClassDistribution d;
  d.p_.reserve(weights.size());
  for (double w : weights) d.p_.push_back(w / total);
  return d;
}

ClassDistribution ClassDistribution::uniform(std::size_t k) {
  std::vector<double> w(k, 1.0);
  return from_weights(w);
}

EffectiveClassStats::EffectiveClassStats(std::size_t num_classes, Options opts)
    : opts_(opts), n_hat_(num_classes, opts.initial), pending_(num_classes, 0.0) {
  check_options(opts_);
  if (num_classes < 1) throw std::invalid_argument("need at least one class");
  if (!(opts_.initial > 0.0)) throw std::invalid_argument("initial effective frequency must be > 0");
}

EffectiveClassStats::EffectiveClassStats(std::vector<double> n_hat, Options opts)
    : opts_(opts), n_hat_(std::move(n_hat)), pending_(n_hat_.size(), 0.0) {
  check_options(opts_);
  if (n_hat_.empty()) throw std::invalid_argument("need at least one class");
  for (double v : n_hat_)
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("effective frequencies must be finite and > 0");
}

void EffectiveClassStats::record_batch(std::span<const int> labels) {
  const auto k = static_cast<int>(n_hat_.size());
  for (int label : labels) {
    if (label < 0 || label >= k) {
      throw std::out_of_range("label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
    }
  }
  for (int label : labels) pending_[static_cast<std::size_t>(label)] += 1.0;
}

void EffectiveClassStats::record_soft(std::span<const double> probs) {
  const std::size_t k = n_hat_.size();
  if (probs.size() % k != 0) throw std::invalid_argument("soft counts must have K columns");
  for (std::size_t i = 0; i < probs.size(); ++i) pending_[i % k] += probs[i];
}

void EffectiveClassStats::end_cycle() {
  for (std::size_t k = 0; k < n_hat_.size(); ++k) {
    n_hat_[k] = (1.0 - opts_.alpha) * n_hat_[k] + opts_.beta * pending_[k];
    n_hat_[k] = std::max(n_hat_[k], kCountFloor);
  }
  std::fill(pending_.begin(), pending_.end(), 0.0);
  ++cycle_;
}

ClassDistribution EffectiveClassStats::distribution() const { return ClassDistribution::from_weights(n_hat_); }

}  // namespace balance
