#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "balance/tensor.hpp"

namespace balance {

/// Handle to a node inside one Graph. Only meaningful for the graph that issued it.
struct NodeId {
  std::uint32_t index = 0;
  bool operator==(const NodeId&) const = default;
};

enum class OpKind : std::uint8_t {
  Leaf,
  MatMul,
  AddBias,
  Add,
  Sub,
  Mul,
  Scale,
  LeakyRelu,
  Relu,
  Tanh,
  Sigmoid,
  LogSigmoid,
  SoftmaxRows,
  LogSoftmaxRows,
  Log,
  MeanRows,
  Sum,
  Mean,
};

const char* op_name(OpKind op);

inline constexpr double kLeakySlope = 0.1;
inline constexpr double kLogFloor = 1e-12;

/// Append-only tape for reverse-mode differentiation.
///
/// Nodes are stored in creation order, which is a valid topological order
/// because every op only refers to nodes that already exist. A node tracks
/// gradients when it is a trainable leaf or depends on one; everything else
/// (frozen parameters, data, constants) is skipped by backward() and keeps a
/// zero gradient.
class Graph {
 public:
  Graph() = default;

  NodeId leaf(Tensor value, bool trainable);
  NodeId constant(Tensor value) { return leaf(std::move(value), false); }
  NodeId parameter(Tensor value) { return leaf(std::move(value), true); }

  NodeId matmul(NodeId a, NodeId b);
  /// x (m x n) plus bias row (1 x n) broadcast over rows.
  NodeId add_bias(NodeId x, NodeId bias);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId leaky_relu(NodeId a, double slope = kLeakySlope);
  NodeId relu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  /// log(sigmoid(x)) evaluated without overflow.
  NodeId log_sigmoid(NodeId a);
  NodeId softmax_rows(NodeId a);
  NodeId log_softmax_rows(NodeId a);
  /// Natural log with inputs clamped at kLogFloor.
  NodeId log(NodeId a);
  /// Column means over the batch dimension: m x n -> 1 x n.
  NodeId mean_rows(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);

  /// Reverse pass from a scalar root. Resets every gradient first.
  void backward(NodeId root);

  const Tensor& value(NodeId id) const { return nodes_.at(id.index).value; }
  const Tensor& grad(NodeId id) const { return nodes_.at(id.index).grad; }
  OpKind op(NodeId id) const { return nodes_.at(id.index).op; }
  bool trainable(NodeId id) const { return nodes_.at(id.index).trainable; }
  bool tracks_grad(NodeId id) const { return nodes_.at(id.index).tracks_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    OpKind op = OpKind::Leaf;
    std::array<std::uint32_t, 2> parents{};
    std::uint8_t arity = 0;
    double attr = 0.0;
    bool trainable = false;
    bool tracks_grad = false;
    Tensor value;
    Tensor grad;
  };

  NodeId push(OpKind op, std::initializer_list<NodeId> parents, Tensor value, double attr = 0.0);
  const Node& node(NodeId id) const;
  void propagate(const Node& n);

  std::vector<Node> nodes_;
};

}  // namespace balance
