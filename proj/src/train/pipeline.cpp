#include "fullend/train/pipeline.hpp"

#include "fullend/ad/ops.hpp"
#include "fullend/error.hpp"

namespace fullend::train {

SceneInputs prepare_inputs(const dsp::Waveform& x, const dsp::Waveform& v_ref,
                           const noise::EstimatorParams& estimator) {
  if (x.sample_rate != v_ref.sample_rate) throw ContractError("prepare_inputs: sample rate mismatch");
  if (x.size() != v_ref.size()) throw ContractError("prepare_inputs: x and near-end reference differ in length");
  SceneInputs in;
  in.config = dsp::StftConfig::standard(x.sample_rate);
  in.length = x.size();
  const auto xs = dsp::stft(x, in.config);
  in.x_spec = ad::spectrogram_tensor(xs);
  const auto psd = noise::estimate_noise_psd(dsp::stft(v_ref, in.config), estimator);
  const auto feat = noise::psd_feature(psd, xs.frames);
  in.near_psd = ad::Tensor::from({feat.rows, feat.cols}, feat.data);
  return in;
}

GeneratorOutput generator_forward(const models::ModelBundle& bundle, const SceneInputs& in,
                                  const GeneratorOptions& options) {
  GeneratorOutput out;
  const ad::Tensor* emb = nullptr;
  if (options.use_token) {
    auto tok = bundle.token.forward(in.x_spec);
    out.embedding = tok.embedding;
    out.token_weights = std::move(tok.weights);
    emb = &out.embedding;
  }
  if (options.run_nr) {
    auto nr = bundle.crn.forward(in.x_spec, emb);
    out.mask = nr.mask;
    out.s_spec = nr.spec;
  } else {
    out.s_spec = in.x_spec;
  }
  out.s_wave = ad::istft(out.s_spec, in.length, in.config);
  if (options.run_le) {
    auto le = bundle.le.forward(out.s_spec, in.near_psd, emb);
    out.alpha = le.alpha;
    out.y_spec = le.spec;
    out.y_wave = ad::match_energy(ad::istft(out.y_spec, in.length, in.config), out.s_wave);
  } else {
    out.y_spec = out.s_spec;
    out.y_wave = out.s_wave;
  }
  return out;
}

std::vector<double> to_vector(const ad::Tensor& t) { return {t.values().begin(), t.values().end()}; }

dsp::Waveform to_waveform(const ad::Tensor& t, int sample_rate) {
  if (t.rank() != 1) throw ContractError("to_waveform: expected a rank-1 tensor");
  return {to_vector(t), sample_rate};
}

}  // namespace fullend::train
