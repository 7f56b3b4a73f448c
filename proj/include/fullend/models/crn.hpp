#pragma once

#include <memory>
#include <vector>

#include "fullend/ad/layers.hpp"
#include "fullend/models/profile.hpp"

namespace fullend::models {

struct CrnOutput {
  ad::Tensor mask;    // [2,T,F] complex ratio mask
  ad::Tensor masked;  // mask * x, per bin
  ad::Tensor spec;    // masked, rescaled to the input's spectral energy
};

/// Causal convolutional recurrent network predicting a complex ratio mask.
/// Encoder: six 1x3 / stride 1x2 convs (frame layer norm, PReLU). Bottleneck:
/// flattened frame features concatenated with the noise embedding, two LSTMs
/// and a linear map back. Two decoders (real, imaginary) with skip inputs.
class Crn {
 public:
  Crn(const ModelProfile& profile, ad::ParamRng& rng);

  /// x_spec [2,T,F]; embedding [T,E] or nullptr for zeros.
  CrnOutput forward(const ad::Tensor& x_spec, const ad::Tensor* embedding) const;
  /// Mask only (no global rescaling); strictly causal in time.
  ad::Tensor mask(const ad::Tensor& x_spec, const ad::Tensor* embedding) const;

  ad::ParamList params() const;
  /// Frequency sizes observed at each encoder output during the last forward.
  const std::vector<std::size_t>& last_encoder_bins() const { return last_bins_; }

 private:
  struct Stage {
    std::unique_ptr<ad::Conv2d> conv;
    std::unique_ptr<ad::FrameLayerNorm> norm;
    std::unique_ptr<ad::PRelu> act;
  };
  struct DecoderStage {
    std::unique_ptr<ad::ConvTranspose2d> conv;
    std::unique_ptr<ad::FrameLayerNorm> norm;  // null on the output layer
    std::unique_ptr<ad::PRelu> act;
  };
  ad::Tensor decode(const std::vector<DecoderStage>& dec, const ad::Tensor& bottleneck,
                    const std::vector<ad::Tensor>& skips) const;

  ModelProfile profile_;
  std::vector<Stage> encoder_;
  std::vector<std::unique_ptr<ad::Lstm>> lstms_;
  std::unique_ptr<ad::Linear> project_;
  std::vector<DecoderStage> decoder_real_, decoder_imag_;
  mutable std::vector<std::size_t> last_bins_;
};

}  // namespace fullend::models
