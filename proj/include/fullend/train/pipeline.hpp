#pragma once

#include <vector>

#include "fullend/ad/tensor.hpp"
#include "fullend/dsp/stft.hpp"
#include "fullend/dsp/waveform.hpp"
#include "fullend/models/bundle.hpp"
#include "fullend/noise/noise_estimator.hpp"

namespace fullend::train {

/// Non-differentiable per-scene inputs of the generator.
struct SceneInputs {
  dsp::StftConfig config;
  std::size_t length = 0;
  ad::Tensor x_spec;    // [2,T,F] far-end input
  ad::Tensor near_psd;  // [T,F] log near-end noise PSD, estimated from the reference
};

/// x is the generator input (noisy far-end speech, or clean speech when the LE
/// is trained alone); v_ref is the near-end noise reference.
SceneInputs prepare_inputs(const dsp::Waveform& x, const dsp::Waveform& v_ref,
                           const noise::EstimatorParams& estimator = {});

struct GeneratorOptions {
  bool use_token = true;  // false feeds a zero embedding
  bool run_nr = true;     // false passes x_spec straight to the LE
  bool run_le = true;     // false makes y = s~
};

struct GeneratorOutput {
  ad::Tensor embedding;  // [T,E]; undefined when the token is off
  std::vector<double> token_weights;
  ad::Tensor mask;    // [2,T,F]; undefined when NR is skipped
  ad::Tensor s_spec;  // denoised spectrum
  ad::Tensor s_wave;  // istft(s_spec)
  ad::Tensor alpha;   // [T,F]; undefined when LE is skipped
  ad::Tensor y_spec;  // LE output spectrum
  ad::Tensor y_wave;  // istft(y_spec), rescaled to the energy of s_wave
};

/// token -> NR -> iSTFT (s~) -> LE -> renormalization -> iSTFT (y).
GeneratorOutput generator_forward(const models::ModelBundle& bundle, const SceneInputs& in,
                                  const GeneratorOptions& options);

std::vector<double> to_vector(const ad::Tensor& t);
dsp::Waveform to_waveform(const ad::Tensor& t, int sample_rate);

}  // namespace fullend::train
