#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "balance/class_stats.hpp"
#include "balance/graph.hpp"
#include "balance/mlp.hpp"

namespace balance {

inline constexpr double kProbFloor = 1e-12;

/// Batch-mean classifier softmax over generated samples.
struct MeanSoftmax {
  std::vector<double> p_hat;
  std::size_t batch_size = 0;
};

/// Mean of the rows of a probability matrix.
MeanSoftmax mean_softmax(const Tensor& probs);

/// Differentiable mean softmax of a frozen classifier applied to `generated`.
/// Classifier parameters enter as constants, so gradients reach only whatever
/// produced `generated`. `probs_out`, when given, receives the per-row
/// softmax node (used for argmax counting).
NodeId mean_softmax(Graph& g, const Mlp& classifier, NodeId generated, NodeId* probs_out = nullptr);

/// sum_k p_k log(p_k) / n_k with p_k clamped at kProbFloor inside the log.
double l_reg(std::span<const double> p_hat, const ClassDistribution& n);

/// d l_reg / d p_k = (1 + log p_k) / n_k.
std::vector<double> l_reg_gradient(std::span<const double> p_hat, const ClassDistribution& n);

/// Graph form of l_reg. `n` enters as a constant and receives no gradient.
NodeId l_reg(Graph& g, NodeId p_hat, const ClassDistribution& n);

/// gan_term + (lambda / K) * l_reg_term. With lambda == 0 the GAN node is
/// returned unchanged.
NodeId combined_generator_loss(Graph& g, NodeId gan_term, NodeId l_reg_term, double lambda,
                               std::size_t num_classes);

}  // namespace balance
