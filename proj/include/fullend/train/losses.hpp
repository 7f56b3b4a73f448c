#pragma once

#include <vector>

#include "fullend/ad/tensor.hpp"
#include "fullend/dsp/stft.hpp"
#include "fullend/models/bundle.hpp"

namespace fullend::train {

struct LossWeights {
  double alpha = 0.6;  // quality term
  double beta = 0.005;  // SI-SNR term
  double t_int = 1.0;
  double t_qua = 1.0;
  void validate() const;
};

struct JointLoss {
  ad::Tensor total;  // differentiable
  double value = 0.0;
  double l_int = 0.0;
  double l_qua = 0.0;
  double l_sisnr = 0.0;  // -SI-SNR(s~, s) in dB
};

/// L = L_int + alpha L_qua + beta L_sisnr with L_int = |D_int - t_int|^2,
/// L_qua = |D_qua - t_qua|^2 and L_sisnr = -si_snr_db. Any non-finite component
/// throws NumericError naming it.
JointLoss combine_loss(const ad::Tensor& d_int_pred, const ad::Tensor& d_qua_pred, const ad::Tensor& si_snr_db,
                       const LossWeights& w);

/// Fixed reference material for the discriminators of one scene.
struct DiscContext {
  dsp::StftConfig config;
  ad::Tensor v_spec;  // near-end noise
  ad::Tensor s_spec;  // clean speech
  std::vector<double> s;
};
DiscContext make_disc_context(const dsp::Waveform& s, const dsp::Waveform& v);

/// D_int(y | v) and D_qua(y | s) on a waveform tensor.
ad::Tensor predict_int(const models::ModelBundle& b, const ad::Tensor& y_wave, const DiscContext& ctx);
ad::Tensor predict_qua(const models::ModelBundle& b, const ad::Tensor& y_wave, const DiscContext& ctx);

/// The generator objective for one scene forward pass.
JointLoss joint_loss(const models::ModelBundle& b, const ad::Tensor& y_wave, const ad::Tensor& s_tilde_wave,
                     const DiscContext& ctx, const LossWeights& w);

/// Mean squared error between predictions and normalized metric scores.
ad::Tensor disc_loss(const ad::Tensor& prediction, const std::vector<double>& truth);

}  // namespace fullend::train
