#include "fullend/models/le_generator.hpp"

#include "fullend/error.hpp"
#include "fullend/util/log.hpp"

namespace fullend::models {

using ad::Tensor;

LeGenerator::LeGenerator(const ModelProfile& profile, ad::ParamRng& rng) : profile_(profile) {
  profile_.validate();
  std::size_t in = 2 * profile_.bins + profile_.embedding_dim();
  for (std::size_t i = 0; i < profile_.le_layers; ++i) {
    const std::string n = "le.conv" + std::to_string(i);
    stages_.push_back(
        {std::make_unique<ad::Conv1dCausal>(n + ".conv", in, profile_.le_channels, profile_.le_kernel, rng),
         std::make_unique<ad::CumulativeLayerNorm>(n + ".norm", profile_.le_channels),
         std::make_unique<ad::PRelu>(n + ".act", profile_.le_channels, 1)});
    in = profile_.le_channels;
  }
  out_ = std::make_unique<ad::Linear>("le.fc", in, profile_.bins, rng);
  // Starts as the identity modification (alpha = 1).
  std::fill(out_->weight.values().begin(), out_->weight.values().end(), 0.0);
}

Tensor LeGenerator::gains(const Tensor& u) { return ad::exp(ad::scale(ad::tanh(u), kAlphaRange)); }

Tensor LeGenerator::apply(const Tensor& alpha, const Tensor& s_spec) {
  double energy = 0.0;
  for (double v : s_spec.values()) energy += v * v;
  if (energy <= 0.0) util::warn("le: zero-energy input, energy normalisation skipped");
  return ad::match_energy(ad::apply_gain(alpha, s_spec), s_spec);
}

LeOutput LeGenerator::forward(const Tensor& s_spec, const Tensor& psd_feature, const Tensor* embedding) const {
  if (s_spec.rank() != 3 || s_spec.dim(0) != 2 || s_spec.dim(2) != profile_.bins)
    throw ContractError("le: input must be [2,T," + std::to_string(profile_.bins) + "], got " +
                        ad::shape_str(s_spec.shape()));
  const std::size_t T = s_spec.dim(1), E = profile_.embedding_dim();
  if (psd_feature.shape() != ad::Shape{T, profile_.bins})
    throw ContractError("le: near-end PSD feature has shape " + ad::shape_str(psd_feature.shape()) + ", expected [" +
                        std::to_string(T) + "," + std::to_string(profile_.bins) + "]");
  Tensor emb = embedding != nullptr ? *embedding : Tensor::zeros({T, E});
  if (emb.shape() != ad::Shape{T, E}) throw ContractError("le: embedding has shape " + ad::shape_str(emb.shape()));
  Tensor h = ad::concat({ad::log_magnitude(s_spec), psd_feature, emb}, 1);
  for (const auto& st : stages_) h = st.act->forward(st.norm->forward(st.conv->forward(h)));
  LeOutput out;
  out.u = out_->forward(h);
  out.alpha = gains(out.u);
  out.spec = apply(out.alpha, s_spec);
  return out;
}

ad::ParamList LeGenerator::params() const {
  ad::ParamList p;
  for (const auto& st : stages_) {
    st.conv->collect(p);
    st.norm->collect(p);
    st.act->collect(p);
  }
  out_->collect(p);
  return p;
}

}  // namespace fullend::models
