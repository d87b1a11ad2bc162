#include "balance/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "balance/csv.hpp"

namespace balance {

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::Identity: return v;
    case Activation::LeakyRelu: return v > 0.0 ? v : kLeakySlope * v;
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Tanh: return std::tanh(v);
    case Activation::Sigmoid: return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  return v;
}

NodeId activate(Graph& g, Activation a, NodeId x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::LeakyRelu: return g.leaky_relu(x);
    case Activation::Relu: return g.relu(x);
    case Activation::Tanh: return g.tanh(x);
    case Activation::Sigmoid: return g.sigmoid(x);
  }
  return x;
}

void check_spec(const MlpSpec& spec) {
  if (spec.sizes.size() < 2) throw std::invalid_argument("mlp needs at least input and output sizes");
  for (auto s : spec.sizes)
    if (s == 0) throw std::invalid_argument("mlp layer sizes must be positive");
}

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  for (Activation a : {Activation::Identity, Activation::LeakyRelu, Activation::Relu, Activation::Tanh,
                       Activation::Sigmoid}) {
    if (name == activation_name(a)) return a;
  }
  throw std::invalid_argument("unknown activation '" + name + "'");
}

Mlp::Mlp(MlpSpec spec, Rng& rng) : spec_(std::move(spec)) {
  check_spec(spec_);
  for (std::size_t l = 0; l + 1 < spec_.sizes.size(); ++l) {
    const std::size_t in = spec_.sizes[l], out = spec_.sizes[l + 1];
    Tensor w(in, out);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w.data()) v = stddev * rng.normal();
    params_.push_back(std::move(w));
    params_.emplace_back(1, out);
  }
}

Mlp::Mlp(MlpSpec spec, std::vector<Tensor> params) : spec_(std::move(spec)), params_(std::move(params)) {
  check_spec(spec_);
  const std::size_t layers = spec_.sizes.size() - 1;
  if (params_.size() != 2 * layers) throw ShapeError("mlp parameter count does not match layer sizes");
  for (std::size_t l = 0; l < layers; ++l) {
    if (params_[2 * l].shape() != Shape{spec_.sizes[l], spec_.sizes[l + 1]} ||
        params_[2 * l + 1].shape() != Shape{1, spec_.sizes[l + 1]}) {
      throw ShapeError("mlp layer " + std::to_string(l) + " parameters do not conform");
    }
  }
}

Mlp::Bound Mlp::bind(Graph& g, NodeId input, bool track) const {
  auto shared = bind_shared(g, std::span<const NodeId>(&input, 1), track);
  return Bound{shared.outputs.front(), std::move(shared.params)};
}

Mlp::SharedBound Mlp::bind_shared(Graph& g, std::span<const NodeId> inputs, bool track) const {
  const bool trainable = track && !frozen_;
  SharedBound b;
  for (const auto& p : params_) b.params.push_back(g.leaf(p, trainable));
  const std::size_t layers = spec_.sizes.size() - 1;
  for (NodeId h : inputs) {
    for (std::size_t l = 0; l < layers; ++l) {
      h = g.add_bias(g.matmul(h, b.params[2 * l]), b.params[2 * l + 1]);
      h = activate(g, l + 1 == layers ? spec_.output : spec_.hidden, h);
    }
    b.outputs.push_back(h);
  }
  return b;
}

Tensor Mlp::forward(const Tensor& x) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("mlp input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(input_dim()));
  }
  Tensor h = x;
  const std::size_t layers = spec_.sizes.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = params_[2 * l];
    const Tensor& b = params_[2 * l + 1];
    const Activation act = l + 1 == layers ? spec_.output : spec_.hidden;
    Tensor out(h.rows(), w.cols());
    for (std::size_t i = 0; i < h.rows(); ++i) {
      double* orow = &out(i, 0);
      for (std::size_t p = 0; p < w.rows(); ++p) {
        const double hv = h(i, p);
        const double* wrow = &w(p, 0);
        for (std::size_t j = 0; j < w.cols(); ++j) orow[j] += hv * wrow[j];
      }
      for (std::size_t j = 0; j < w.cols(); ++j) orow[j] = activate(act, orow[j] + b[j]);
    }
    h = std::move(out);
  }
  return h;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

void save_mlp(const std::filesystem::path& path, const Mlp& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "mlp 1\nsizes";
  for (auto s : net.spec().sizes) out << ' ' << s;
  out << "\nhidden " << activation_name(net.spec().hidden) << "\noutput " << activation_name(net.spec().output)
      << '\n';
  for (std::size_t i = 0; i < net.params().size(); ++i) {
    const Tensor& t = net.params()[i];
    out << (i % 2 == 0 ? "W" : "b") << i / 2 << ' ' << t.rows() << ' ' << t.cols() << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t c = 0; c < t.cols(); ++c) out << (c ? " " : "") << format_double(t(r, c));
      out << '\n';
    }
  }
}

Mlp load_mlp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string tag, line;
  int version = 0;
  in >> tag >> version;
  if (tag != "mlp" || version != 1) throw std::runtime_error(path.string() + ": not an mlp checkpoint");
  MlpSpec spec;
  in >> tag;
  std::getline(in, line);
  std::istringstream sizes(line);
  for (std::size_t s; sizes >> s;) spec.sizes.push_back(s);
  std::string act;
  in >> tag >> act;
  spec.hidden = parse_activation(act);
  in >> tag >> act;
  spec.output = parse_activation(act);
  std::vector<Tensor> params;
  for (std::size_t i = 0; i + 1 < 2 * spec.sizes.size() - 1; ++i) {
    std::size_t r = 0, c = 0;
    in >> tag >> r >> c;
    Tensor t(r, c);
    for (double& v : t.data()) {
      std::string tok;
      in >> tok;
      v = std::stod(tok);
    }
    if (!in) throw std::runtime_error(path.string() + ": truncated tensor " + tag);
    params.push_back(std::move(t));
  }
  return Mlp(std::move(spec), std::move(params));
}

std::vector<int> argmax_rows(const Tensor& scores) {
  std::vector<int> out(scores.rows());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    auto r = scores.row_span(i);
    out[i] = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  Tensor out = logits;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double* r = &out(i, 0);
    const double mx = *std::max_element(r, r + out.cols());
    double total = 0.0;
    for (std::size_t j = 0; j < out.cols(); ++j) total += (r[j] = std::exp(r[j] - mx));
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] /= total;
  }
  return out;
}

}  // namespace balance
