#pragma once

#include <memory>
#include <vector>

#include "fullend/ad/layers.hpp"
#include "fullend/models/profile.hpp"

namespace fullend::models {

struct TokenOutput {
  ad::Tensor embedding;         // [T,E], one embedding per frame
  std::vector<double> weights;  // [heads,T,tokens] attention weights
};

/// Noise token module: log-magnitude of the noisy input through six causal
/// 3x3 / stride 1x2 convs and an LSTM; the LSTM state at each frame queries a
/// bank of trainable tokens with multi-head attention.
class NoiseTokenNet {
 public:
  NoiseTokenNet(const ModelProfile& profile, ad::ParamRng& rng);

  TokenOutput forward(const ad::Tensor& x_spec) const;
  ad::ParamList params() const;

  ad::Tensor tokens;  // [N,E]

 private:
  struct Stage {
    std::unique_ptr<ad::Conv2d> conv;
    std::unique_ptr<ad::FrameLayerNorm> norm;
    std::unique_ptr<ad::PRelu> act;
  };
  ModelProfile profile_;
  std::vector<Stage> stages_;
  std::unique_ptr<ad::Lstm> lstm_;
  std::unique_ptr<ad::MultiHeadAttention> attention_;
};

}  // namespace fullend::models
