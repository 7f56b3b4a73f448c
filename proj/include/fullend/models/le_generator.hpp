#pragma once

#include <memory>
#include <vector>

#include "fullend/ad/layers.hpp"
#include "fullend/models/profile.hpp"

namespace fullend::models {

struct LeOutput {
  ad::Tensor u;      // [T,F] pre-activation
  ad::Tensor alpha;  // [T,F] exp(4 tanh(u))
  ad::Tensor spec;   // alpha applied to the input, rescaled to its spectral energy
};

inline constexpr double kAlphaRange = 4.0;

/// Listening-enhancement generator: causal conv1d stack with cumulative layer
/// norm and PReLU over [log|S|, near-end log-PSD, embedding], then a
/// per-frame FC to one gain per bin.
class LeGenerator {
 public:
  LeGenerator(const ModelProfile& profile, ad::ParamRng& rng);

  /// s_spec [2,T,F]; psd_feature [T,F]; embedding [T,E] or nullptr for zeros.
  LeOutput forward(const ad::Tensor& s_spec, const ad::Tensor& psd_feature, const ad::Tensor* embedding) const;
  /// Gains from an explicit u (used to probe the activation range).
  static ad::Tensor gains(const ad::Tensor& u);
  /// alpha * s, rescaled to s's spectral energy.
  static ad::Tensor apply(const ad::Tensor& alpha, const ad::Tensor& s_spec);

  ad::ParamList params() const;

 private:
  struct Stage {
    std::unique_ptr<ad::Conv1dCausal> conv;
    std::unique_ptr<ad::CumulativeLayerNorm> norm;
    std::unique_ptr<ad::PRelu> act;
  };
  ModelProfile profile_;
  std::vector<Stage> stages_;
  std::unique_ptr<ad::Linear> out_;
};

}  // namespace fullend::models
