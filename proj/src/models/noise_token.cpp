#include "fullend/models/noise_token.hpp"

#include "fullend/error.hpp"

namespace fullend::models {

using ad::Tensor;

NoiseTokenNet::NoiseTokenNet(const ModelProfile& profile, ad::ParamRng& rng) : profile_(profile) {
  profile_.validate();
  ad::Conv2dGeometry geo;
  geo.stride_f = 2;
  geo.pad_t_before = 2;  // causal 3-frame context
  std::size_t in = 1;
  for (std::size_t i = 0; i < profile_.token_conv_channels.size(); ++i) {
    const std::size_t c = profile_.token_conv_channels[i];
    const std::string n = "token.enc" + std::to_string(i);
    stages_.push_back({std::make_unique<ad::Conv2d>(n + ".conv", in, c, 3, 3, geo, rng),
                       std::make_unique<ad::FrameLayerNorm>(n + ".norm", c),
                       std::make_unique<ad::PRelu>(n + ".act", c, 0)});
    in = c;
  }
  const std::size_t flat = in * profile_.encoder_bin_ladder().back();
  lstm_ = std::make_unique<ad::Lstm>("token.lstm", flat, profile_.token_lstm_hidden, rng);
  if (profile_.token_lstm_hidden != profile_.token_dim)
    throw ContractError("token: the LSTM width must equal the token dimension (it is the attention query)");
  attention_ =
      std::make_unique<ad::MultiHeadAttention>("token.attention", profile_.token_dim, profile_.token_heads, rng);
  std::vector<double> t(profile_.token_count * profile_.token_dim);
  for (double& v : t) v = rng.normal(0.0, profile_.token_init_std);
  tokens = Tensor::from({profile_.token_count, profile_.token_dim}, std::move(t), true);
}

TokenOutput NoiseTokenNet::forward(const Tensor& x_spec) const {
  if (x_spec.rank() != 3 || x_spec.dim(0) != 2 || x_spec.dim(2) != profile_.bins)
    throw ContractError("token: input must be [2,T," + std::to_string(profile_.bins) + "], got " +
                        ad::shape_str(x_spec.shape()));
  const std::size_t T = x_spec.dim(1);
  Tensor h = ad::reshape(ad::log_magnitude(x_spec), {1, T, profile_.bins});
  for (const auto& st : stages_) h = st.act->forward(st.norm->forward(st.conv->forward(h)));
  Tensor q = lstm_->forward(ad::frames_to_sequence(h));
  TokenOutput out;
  out.embedding = attention_->forward(q, tokens, &out.weights);
  return out;
}

ad::ParamList NoiseTokenNet::params() const {
  ad::ParamList p;
  for (const auto& st : stages_) {
    st.conv->collect(p);
    st.norm->collect(p);
    st.act->collect(p);
  }
  lstm_->collect(p);
  attention_->collect(p);
  p.push_back({"token.bank", tokens});
  return p;
}

}  // namespace fullend::models
