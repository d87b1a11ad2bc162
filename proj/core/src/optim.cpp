#include "balance/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace balance {

void Adam::step(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam: params/grads length mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.rows(), p.cols());
      v_.emplace_back(p.rows(), p.cols());
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("adam: parameter set changed between steps");

  ++step_;
  const double b1 = opts_.beta1, b2 = opts_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    if (p.shape() != g.shape() || p.shape() != m_[i].shape()) throw ShapeError("adam: gradient shape conflict");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m_[i][j] = b1 * m_[i][j] + (1.0 - b1) * g[j];
      v_[i][j] = b2 * v_[i][j] + (1.0 - b2) * g[j] * g[j];
      const double mhat = m_[i][j] / c1;
      const double vhat = v_[i][j] / c2;
      p[j] -= opts_.lr * mhat / (std::sqrt(vhat) + opts_.eps);
    }
  }
}

Ema::Ema(double decay, std::size_t start_step) : decay_(decay), start_(start_step) {
  if (!(decay >= 0.0 && decay <= 1.0)) throw std::invalid_argument("ema decay must lie in [0, 1]");
}

void Ema::update(std::size_t step, std::span<const Tensor> params) {
  if (step < start_) return;
  if (!active_) {
    shadow_.assign(params.begin(), params.end());
    active_ = true;
    return;
  }
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].size(); ++j)
      shadow_[i][j] = decay_ * shadow_[i][j] + (1.0 - decay_) * params[i][j];
}

}  // namespace balance
