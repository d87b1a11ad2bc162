#include "balance/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace balance {

namespace {

void require_same(Shape a, Shape b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": shape conflict " + to_string(a) + " vs " + to_string(b));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(-|x|)) keeps log_sigmoid finite for large |x|.
double log_sigmoid_value(double x) {
  return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Leaf: return "leaf";
    case OpKind::MatMul: return "matmul";
    case OpKind::AddBias: return "add_bias";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::LeakyRelu: return "leaky_relu";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Sigmoid: return "sigmoid";
    case OpKind::LogSigmoid: return "log_sigmoid";
    case OpKind::SoftmaxRows: return "softmax_rows";
    case OpKind::LogSoftmaxRows: return "log_softmax_rows";
    case OpKind::Log: return "log";
    case OpKind::MeanRows: return "mean_rows";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
  }
  return "unknown";
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw std::out_of_range("graph node id out of range");
  return nodes_[id.index];
}

NodeId Graph::push(OpKind op, std::initializer_list<NodeId> parents, Tensor value, double attr) {
  Node n;
  n.op = op;
  n.attr = attr;
  for (NodeId p : parents) {
    n.parents[n.arity++] = p.index;
    n.tracks_grad = n.tracks_grad || nodes_[p.index].tracks_grad;
  }
  n.grad = Tensor(value.rows(), value.cols());
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Graph::leaf(Tensor value, bool trainable) {
  Node n;
  n.trainable = trainable;
  n.tracks_grad = trainable;
  n.grad = Tensor(value.rows(), value.cols());
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: shape conflict " + to_string(x.shape()) + " x " + to_string(y.shape()));
  }
  const std::size_t m = x.rows(), k = x.cols(), n = y.cols();
  Tensor out(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = &out(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x(i, p);
      const double* yrow = &y(p, 0);
      for (std::size_t j = 0; j < n; ++j) orow[j] += xv * yrow[j];
    }
  }
  return push(OpKind::MatMul, {a, b}, std::move(out));
}

NodeId Graph::add_bias(NodeId xid, NodeId bid) {
  const Tensor& x = node(xid).value;
  const Tensor& b = node(bid).value;
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw ShapeError("add_bias: shape conflict " + to_string(x.shape()) + " + " + to_string(b.shape()));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) += b[j];
  return push(OpKind::AddBias, {xid, bid}, std::move(out));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  require_same(x.shape(), y.shape(), "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  return push(OpKind::Add, {a, b}, std::move(out));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  require_same(x.shape(), y.shape(), "sub");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  return push(OpKind::Sub, {a, b}, std::move(out));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Tensor& x = node(a).value;
  const Tensor& y = node(b).value;
  require_same(x.shape(), y.shape(), "mul");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  return push(OpKind::Mul, {a, b}, std::move(out));
}

NodeId Graph::scale(NodeId a, double factor) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v *= factor;
  return push(OpKind::Scale, {a}, std::move(out), factor);
}

NodeId Graph::leaky_relu(NodeId a, double slope) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  return push(OpKind::LeakyRelu, {a}, std::move(out), slope);
}

NodeId Graph::relu(NodeId a) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return push(OpKind::Relu, {a}, std::move(out));
}

NodeId Graph::tanh(NodeId a) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v = std::tanh(v);
  return push(OpKind::Tanh, {a}, std::move(out));
}

NodeId Graph::sigmoid(NodeId a) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v = stable_sigmoid(v);
  return push(OpKind::Sigmoid, {a}, std::move(out));
}

NodeId Graph::log_sigmoid(NodeId a) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v = log_sigmoid_value(v);
  return push(OpKind::LogSigmoid, {a}, std::move(out));
}

NodeId Graph::softmax_rows(NodeId a) {
  Tensor out = node(a).value;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = &out(i, 0);
    const double mx = *std::max_element(r, r + out.cols());
    double total = 0.0;
    for (std::size_t j = 0; j < out.cols(); ++j) {
      r[j] = std::exp(r[j] - mx);
      total += r[j];
    }
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] /= total;
  }
  return push(OpKind::SoftmaxRows, {a}, std::move(out));
}

NodeId Graph::log_softmax_rows(NodeId a) {
  Tensor out = node(a).value;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = &out(i, 0);
    const double mx = *std::max_element(r, r + out.cols());
    double total = 0.0;
    for (std::size_t j = 0; j < out.cols(); ++j) total += std::exp(r[j] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] -= lse;
  }
  return push(OpKind::LogSoftmaxRows, {a}, std::move(out));
}

NodeId Graph::log(NodeId a) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v = std::log(std::max(v, kLogFloor));
  return push(OpKind::Log, {a}, std::move(out));
}

NodeId Graph::mean_rows(NodeId a) {
  const Tensor& x = node(a).value;
  if (x.rows() == 0) throw ShapeError("mean_rows: empty batch");
  Tensor out(1, x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) out[j] += x(i, j);
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (double& v : out.data()) v *= inv;
  return push(OpKind::MeanRows, {a}, std::move(out));
}

NodeId Graph::sum(NodeId a) {
  double total = 0.0;
  for (double v : node(a).value.data()) total += v;
  return push(OpKind::Sum, {a}, Tensor::scalar(total));
}

NodeId Graph::mean(NodeId a) {
  const Tensor& x = node(a).value;
  if (x.empty()) throw ShapeError("mean: empty tensor");
  double total = 0.0;
  for (double v : x.data()) total += v;
  return push(OpKind::Mean, {a}, Tensor::scalar(total / static_cast<double>(x.size())));
}

void Graph::backward(NodeId root) {
  const Node& r = node(root);
  if (r.value.size() != 1) {
    throw ShapeError("backward: root must be scalar, got " + to_string(r.value.shape()));
  }
  for (Node& n : nodes_) n.grad.fill(0.0);
  if (!r.tracks_grad) return;
  nodes_[root.index].grad[0] = 1.0;
  for (std::size_t i = root.index + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.tracks_grad && n.arity > 0) propagate(n);
  }
}

void Graph::propagate(const Node& n) {
  const Tensor& g = n.grad;
  auto parent = [&](int k) -> Node& { return nodes_[n.parents[k]]; };

  switch (n.op) {
    case OpKind::Leaf:
      return;
    case OpKind::MatMul: {
      Node& a = parent(0);
      Node& b = parent(1);
      const std::size_t m = a.value.rows(), k = a.value.cols(), cols = b.value.cols();
      if (a.tracks_grad) {
        // dA = G * B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += g(i, j) * b.value(p, j);
            a.grad(i, p) += acc;
          }
      }
      if (b.tracks_grad) {
        // dB = A^T * G
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const double av = a.value(i, p);
            for (std::size_t j = 0; j < cols; ++j) b.grad(p, j) += av * g(i, j);
          }
      }
      return;
    }
    case OpKind::AddBias: {
      Node& x = parent(0);
      Node& b = parent(1);
      if (x.tracks_grad)
        for (std::size_t i = 0; i < g.size(); ++i) x.grad[i] += g[i];
      if (b.tracks_grad)
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) b.grad[j] += g(i, j);
      return;
    }
    case OpKind::Add:
    case OpKind::Sub: {
      const double sign = n.op == OpKind::Add ? 1.0 : -1.0;
      Node& a = parent(0);
      Node& b = parent(1);
      if (a.tracks_grad)
        for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i];
      if (b.tracks_grad)
        for (std::size_t i = 0; i < g.size(); ++i) b.grad[i] += sign * g[i];
      return;
    }
    case OpKind::Mul: {
      Node& a = parent(0);
      Node& b = parent(1);
      if (a.tracks_grad)
        for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] * b.value[i];
      if (b.tracks_grad)
        for (std::size_t i = 0; i < g.size(); ++i) b.grad[i] += g[i] * a.value[i];
      return;
    }
    case OpKind::Scale: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += n.attr * g[i];
      return;
    }
    case OpKind::LeakyRelu: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        a.grad[i] += g[i] * (a.value[i] > 0.0 ? 1.0 : n.attr);
      return;
    }
    case OpKind::Relu: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.value[i] > 0.0) a.grad[i] += g[i];
      return;
    }
    case OpKind::Tanh: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
      return;
    }
    case OpKind::Sigmoid: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
      return;
    }
    case OpKind::LogSigmoid: {
      // d/dx log sigmoid(x) = sigmoid(-x)
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i) a.grad[i] += g[i] * stable_sigmoid(-a.value[i]);
      return;
    }
    case OpKind::SoftmaxRows: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * n.value(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j) a.grad(i, j) += n.value(i, j) * (g(i, j) - dot);
      }
      return;
    }
    case OpKind::LogSoftmaxRows: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double gsum = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) gsum += g(i, j);
        for (std::size_t j = 0; j < g.cols(); ++j)
          a.grad(i, j) += g(i, j) - std::exp(n.value(i, j)) * gsum;
      }
      return;
    }
    case OpKind::Log: {
      Node& a = parent(0);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.value[i] >= kLogFloor) a.grad[i] += g[i] / a.value[i];
      return;
    }
    case OpKind::MeanRows: {
      Node& a = parent(0);
      const double inv = 1.0 / static_cast<double>(a.value.rows());
      for (std::size_t i = 0; i < a.value.rows(); ++i)
        for (std::size_t j = 0; j < a.value.cols(); ++j) a.grad(i, j) += g[j] * inv;
      return;
    }
    case OpKind::Sum: {
      Node& a = parent(0);
      for (double& v : a.grad.data()) v += g[0];
      return;
    }
    case OpKind::Mean: {
      Node& a = parent(0);
      const double share = g[0] / static_cast<double>(a.value.size());
      for (double& v : a.grad.data()) v += share;
      return;
    }
  }
}

}  // namespace balance
