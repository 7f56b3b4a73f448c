#include "fullend/models/crn.hpp"

#include "fullend/error.hpp"

namespace fullend::models {

using ad::Tensor;

Crn::Crn(const ModelProfile& profile, ad::ParamRng& rng) : profile_(profile) {
  profile_.validate();
  const auto& enc = profile_.crn_encoder_channels;
  const auto ladder = profile_.encoder_bin_ladder();
  ad::Conv2dGeometry geo;
  geo.stride_f = 2;
  std::size_t in = 2;
  for (std::size_t i = 0; i < enc.size(); ++i) {
    const std::string n = "crn.enc" + std::to_string(i);
    encoder_.push_back({std::make_unique<ad::Conv2d>(n + ".conv", in, enc[i], 1, 3, geo, rng),
                        std::make_unique<ad::FrameLayerNorm>(n + ".norm", enc[i]),
                        std::make_unique<ad::PRelu>(n + ".act", enc[i], 0)});
    in = enc[i];
  }
  const std::size_t flat = enc.back() * ladder.back();
  std::size_t lstm_in = flat + profile_.embedding_dim();
  for (std::size_t l = 0; l < profile_.crn_lstm_layers; ++l) {
    lstms_.push_back(std::make_unique<ad::Lstm>("crn.lstm" + std::to_string(l), lstm_in, profile_.crn_lstm_hidden, rng));
    lstm_in = profile_.crn_lstm_hidden;
  }
  project_ = std::make_unique<ad::Linear>("crn.project", profile_.crn_lstm_hidden, flat, rng);

  const auto ins = profile_.crn_decoder_inputs();
  const auto outs = profile_.crn_decoder_outputs();
  for (const char* part : {"real", "imag"}) {
    auto& dec = std::string(part) == "real" ? decoder_real_ : decoder_imag_;
    for (std::size_t i = 0; i < outs.size(); ++i) {
      const std::size_t from = ladder[enc.size() - i], to = ladder[enc.size() - 1 - i];
      const std::size_t pad = to - (2 * from + 1);
      if (pad > 1) throw ContractError("crn: decoder cannot reach " + std::to_string(to) + " bins");
      const std::string n = std::string("crn.dec_") + part + std::to_string(i);
      DecoderStage st;
      st.conv = std::make_unique<ad::ConvTranspose2d>(n + ".conv", ins[i], outs[i], 3, 2, pad, rng);
      if (i + 1 < outs.size()) {
        st.norm = std::make_unique<ad::FrameLayerNorm>(n + ".norm", outs[i]);
        st.act = std::make_unique<ad::PRelu>(n + ".act", outs[i], 0);
      }
      dec.push_back(std::move(st));
    }
  }
}

Tensor Crn::decode(const std::vector<DecoderStage>& dec, const Tensor& bottleneck,
                   const std::vector<Tensor>& skips) const {
  Tensor h = bottleneck;
  for (std::size_t i = 0; i < dec.size(); ++i) {
    h = ad::concat({h, skips[skips.size() - 1 - i]}, 0);
    h = dec[i].conv->forward(h);
    if (dec[i].norm) h = dec[i].act->forward(dec[i].norm->forward(h));
  }
  return h;
}

Tensor Crn::mask(const Tensor& x_spec, const Tensor* embedding) const {
  if (x_spec.rank() != 3 || x_spec.dim(0) != 2 || x_spec.dim(2) != profile_.bins)
    throw ContractError("crn: input must be [2,T," + std::to_string(profile_.bins) + "], got " +
                        ad::shape_str(x_spec.shape()));
  const std::size_t T = x_spec.dim(1);
  std::vector<Tensor> skips;
  last_bins_.clear();
  Tensor h = x_spec;
  for (const auto& st : encoder_) {
    h = st.act->forward(st.norm->forward(st.conv->forward(h)));
    last_bins_.push_back(h.dim(2));
    skips.push_back(h);
  }
  const std::size_t C = h.dim(0);
  Tensor seq = ad::frames_to_sequence(h);
  const std::size_t E = profile_.embedding_dim();
  Tensor emb = embedding != nullptr ? *embedding : Tensor::zeros({T, E});
  if (emb.shape() != ad::Shape{T, E})
    throw ContractError("crn: embedding must be [" + std::to_string(T) + "," + std::to_string(E) + "], got " +
                        ad::shape_str(emb.shape()));
  seq = ad::concat({seq, emb}, 1);
  for (const auto& l : lstms_) seq = l->forward(seq);
  Tensor bottleneck = ad::sequence_to_frames(project_->forward(seq), C);
  Tensor real = decode(decoder_real_, bottleneck, skips);
  Tensor imag = decode(decoder_imag_, bottleneck, skips);
  return ad::concat({real, imag}, 0);
}

CrnOutput Crn::forward(const Tensor& x_spec, const Tensor* embedding) const {
  CrnOutput out;
  out.mask = mask(x_spec, embedding);
  out.masked = ad::cmul(out.mask, x_spec);
  out.spec = ad::match_energy(out.masked, x_spec);
  return out;
}

ad::ParamList Crn::params() const {
  ad::ParamList p;
  for (const auto& st : encoder_) {
    st.conv->collect(p);
    st.norm->collect(p);
    st.act->collect(p);
  }
  for (const auto& l : lstms_) l->collect(p);
  project_->collect(p);
  for (const auto* dec : {&decoder_real_, &decoder_imag_})
    for (const auto& st : *dec) {
      st.conv->collect(p);
      if (st.norm) {
        st.norm->collect(p);
        st.act->collect(p);
      }
    }
  return p;
}

}  // namespace fullend::models
