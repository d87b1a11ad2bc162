#include "balance/regularizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace balance {

namespace {

void check_weights(std::size_t k, const ClassDistribution& n) {
  if (n.size() != k) {
    throw ShapeError("l_reg: p_hat has " + std::to_string(k) + " classes, distribution has " +
                     std::to_string(n.size()));
  }
  for (double v : n.values())
    if (!(v > 0.0)) throw std::invalid_argument("l_reg: effective class distribution must be strictly positive");
}

}  // namespace

MeanSoftmax mean_softmax(const Tensor& probs) {
  if (probs.rows() == 0) throw ShapeError("mean_softmax: empty batch");
  MeanSoftmax out;
  out.batch_size = probs.rows();
  out.p_hat.assign(probs.cols(), 0.0);
  for (std::size_t i = 0; i < probs.rows(); ++i)
    for (std::size_t j = 0; j < probs.cols(); ++j) out.p_hat[j] += probs(i, j);
  for (double& v : out.p_hat) v /= static_cast<double>(probs.rows());
  return out;
}

NodeId mean_softmax(Graph& g, const Mlp& classifier, NodeId generated, NodeId* probs_out) {
  const auto bound = classifier.bind(g, generated, false);
  const NodeId probs = g.softmax_rows(bound.output);
  if (probs_out) *probs_out = probs;
  return g.mean_rows(probs);
}

double l_reg(std::span<const double> p_hat, const ClassDistribution& n) {
  check_weights(p_hat.size(), n);
  double total = 0.0;
  for (std::size_t k = 0; k < p_hat.size(); ++k) {
    total += p_hat[k] * std::log(std::max(p_hat[k], kProbFloor)) / n[k];
  }
  return total;
}

std::vector<double> l_reg_gradient(std::span<const double> p_hat, const ClassDistribution& n) {
  check_weights(p_hat.size(), n);
  std::vector<double> grad(p_hat.size());
  for (std::size_t k = 0; k < p_hat.size(); ++k) {
    grad[k] = (1.0 + std::log(std::max(p_hat[k], kProbFloor))) / n[k];
  }
  return grad;
}

NodeId l_reg(Graph& g, NodeId p_hat, const ClassDistribution& n) {
  const Tensor& p = g.value(p_hat);
  if (p.rows() != 1) throw ShapeError("l_reg: p_hat must be a single row, got " + to_string(p.shape()));
  check_weights(p.cols(), n);
  Tensor inv_n(1, n.size());
  for (std::size_t k = 0; k < n.size(); ++k) inv_n[k] = 1.0 / n[k];
  const NodeId weights = g.constant(std::move(inv_n));
  const NodeId plogp = g.mul(p_hat, g.log(p_hat));
  return g.sum(g.mul(plogp, weights));
}

NodeId combined_generator_loss(Graph& g, NodeId gan_term, NodeId l_reg_term, double lambda,
                               std::size_t num_classes) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (num_classes == 0) throw std::invalid_argument("num_classes must be positive");
  if (lambda == 0.0) return gan_term;
  return g.add(gan_term, g.scale(l_reg_term, lambda / static_cast<double>(num_classes)));
}

}  // namespace balance
