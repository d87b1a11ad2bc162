#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "balance/graph.hpp"
#include "balance/rng.hpp"
#include "balance/tensor.hpp"

namespace balance {

enum class Activation { Identity, LeakyRelu, Relu, Tanh, Sigmoid };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct MlpSpec {
  std::vector<std::size_t> sizes;  // input, hidden..., output
  Activation hidden = Activation::LeakyRelu;
  Activation output = Activation::Identity;
};

/// Dense feed-forward network. Parameters are owned here and copied into a
/// Graph as leaves for each pass; gradients are read back by parameter index
/// in the order W0, b0, W1, b1, ...
class Mlp {
 public:
  struct Bound {
    NodeId output;
    std::vector<NodeId> params;
  };

  /// One parameter binding applied to several inputs; gradients from every
  /// input accumulate on the shared parameter nodes.
  struct SharedBound {
    std::vector<NodeId> outputs;
    std::vector<NodeId> params;
  };

  Mlp() = default;
  Mlp(MlpSpec spec, Rng& rng);
  Mlp(MlpSpec spec, std::vector<Tensor> params);

  /// Adds this network to `g`. Parameters become trainable leaves only when
  /// `track` is set and the network is not frozen.
  Bound bind(Graph& g, NodeId input, bool track) const;
  SharedBound bind_shared(Graph& g, std::span<const NodeId> inputs, bool track) const;

  /// Graph-free evaluation.
  Tensor forward(const Tensor& x) const;

  const MlpSpec& spec() const { return spec_; }
  std::size_t input_dim() const { return spec_.sizes.front(); }
  std::size_t output_dim() const { return spec_.sizes.back(); }
  std::vector<Tensor>& params() { return params_; }
  const std::vector<Tensor>& params() const { return params_; }
  std::size_t parameter_count() const;

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

 private:
  MlpSpec spec_;
  std::vector<Tensor> params_;
  bool frozen_ = false;
};

/// Plain-text parameter dump: header lines followed by one tensor per block.
void save_mlp(const std::filesystem::path& path, const Mlp& net);
Mlp load_mlp(const std::filesystem::path& path);

/// Row-wise argmax of a score matrix.
std::vector<int> argmax_rows(const Tensor& scores);

/// Row-wise softmax of a score matrix.
Tensor softmax(const Tensor& logits);

}  // namespace balance
