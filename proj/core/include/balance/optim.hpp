#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "balance/tensor.hpp"

namespace balance {

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are shaped like the parameters they
/// track and are created on the first step.
class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  void step(std::span<Tensor> params, std::span<const Tensor> grads);

  std::size_t steps() const { return step_; }
  const AdamOptions& options() const { return opts_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }

 private:
  AdamOptions opts_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::size_t step_ = 0;
};

/// Exponential moving average of a parameter set. The shadow copy is taken
/// verbatim at `start_step` and blended with decay afterwards.
class Ema {
 public:
  Ema(double decay, std::size_t start_step);

  void update(std::size_t step, std::span<const Tensor> params);

  bool active() const { return active_; }
  double decay() const { return decay_; }
  std::size_t start_step() const { return start_; }
  const std::vector<Tensor>& shadow() const { return shadow_; }

 private:
  double decay_;
  std::size_t start_;
  bool active_ = false;
  std::vector<Tensor> shadow_;
};

}  // namespace balance
