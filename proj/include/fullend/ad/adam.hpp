#pragma once

#include <cstdint>
#include <vector>

#include "fullend/ad/tensor.hpp"

namespace fullend::ad {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  void validate() const;
};

/// Adam with bias correction. Parameters without a gradient buffer are
/// treated as having a zero gradient.
class Adam {
 public:
  Adam(ParamList params, AdamConfig config);

  /// Throws NumericError naming the parameter if any gradient is non-finite;
  /// nothing is updated in that case.
  void step();
  void zero_grad();

  std::int64_t steps() const { return t_; }
  const ParamList& params() const { return params_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
  const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }

 private:
  ParamList params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace fullend::ad
