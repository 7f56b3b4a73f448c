#include "fullend/ad/adam.hpp"

#include <cmath>

#include "fullend/error.hpp"

namespace fullend::ad {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ContractError("adam: learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0)) throw ContractError("adam: betas must lie in (0, 1)");
  if (!(eps > 0.0)) throw ContractError("adam: eps must be positive");
}

Adam::Adam(ParamList params, AdamConfig config) : params_(std::move(params)), config_(config) {
  config_.validate();
  for (const auto& p : params_) {
    m_.emplace_back(p.tensor.size(), 0.0);
    v_.emplace_back(p.tensor.size(), 0.0);
  }
}

void Adam::step() {
  for (const auto& p : params_)
    for (double g : p.tensor.grad())
      if (!std::isfinite(g)) throw NumericError(p.name, "non-finite gradient, step aborted");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor p = params_[k].tensor;
    const auto g = p.grad();
    auto& m = m_[k];
    auto& v = v_[k];
    double* w = p.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double gi = g.empty() ? 0.0 : g[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
      w[i] -= config_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace fullend::ad
