#include "fullend/train/losses.hpp"

#include <cmath>

#include "fullend/ad/ops.hpp"
#include "fullend/error.hpp"

namespace fullend::train {

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ContractError("loss weights must be non-negative");
  if (!std::isfinite(t_int) || !std::isfinite(t_qua)) throw ContractError("loss targets must be finite");
}

namespace {

double checked(const ad::Tensor& t, const char* name) {
  const double v = t.item();
  if (!std::isfinite(v)) throw NumericError(name, "non-finite loss component");
  return v;
}

}  // namespace

JointLoss combine_loss(const ad::Tensor& d_int_pred, const ad::Tensor& d_qua_pred, const ad::Tensor& si_snr_db,
                       const LossWeights& w) {
  w.validate();
  const ad::Tensor l_int = ad::squared_error(d_int_pred, std::vector<double>(d_int_pred.size(), w.t_int));
  const ad::Tensor l_qua = ad::squared_error(d_qua_pred, std::vector<double>(d_qua_pred.size(), w.t_qua));
  const ad::Tensor l_sisnr = ad::scale(si_snr_db, -1.0);
  JointLoss out;
  out.l_int = checked(l_int, "L_int");
  out.l_qua = checked(l_qua, "L_qua");
  out.l_sisnr = checked(l_sisnr, "L_sisnr");
  out.total = ad::add(ad::add(l_int, ad::scale(l_qua, w.alpha)), ad::scale(l_sisnr, w.beta));
  out.value = checked(out.total, "L");
  return out;
}

DiscContext make_disc_context(const dsp::Waveform& s, const dsp::Waveform& v) {
  if (s.size() != v.size()) throw ContractError("make_disc_context: s and v differ in length");
  DiscContext ctx;
  ctx.config = dsp::StftConfig::standard(s.sample_rate);
  ctx.v_spec = ad::spectrogram_tensor(dsp::stft(v, ctx.config));
  ctx.s_spec = ad::spectrogram_tensor(dsp::stft(s, ctx.config));
  ctx.s = s.samples;
  return ctx;
}

ad::Tensor predict_int(const models::ModelBundle& b, const ad::Tensor& y_wave, const DiscContext& ctx) {
  return b.d_int.forward(models::disc_features(ad::stft(y_wave, ctx.config), ctx.v_spec));
}

ad::Tensor predict_qua(const models::ModelBundle& b, const ad::Tensor& y_wave, const DiscContext& ctx) {
  return b.d_qua.forward(models::disc_features(ad::stft(y_wave, ctx.config), ctx.s_spec));
}

JointLoss joint_loss(const models::ModelBundle& b, const ad::Tensor& y_wave, const ad::Tensor& s_tilde_wave,
                     const DiscContext& ctx, const LossWeights& w) {
  return combine_loss(predict_int(b, y_wave, ctx), predict_qua(b, y_wave, ctx), ad::si_snr(s_tilde_wave, ctx.s), w);
}

ad::Tensor disc_loss(const ad::Tensor& prediction, const std::vector<double>& truth) {
  if (prediction.size() != truth.size()) throw ContractError("disc_loss: prediction and truth sizes differ");
  return ad::scale(ad::squared_error(prediction, truth), 1.0 / static_cast<double>(truth.size()));
}

}  // namespace fullend::train
