#include "fullend/models/profile.hpp"

#include <sstream>

#include "fullend/error.hpp"

namespace fullend::models {

namespace {
std::size_t div_up(std::size_t v, std::size_t d) { return std::max<std::size_t>(1, (v + d - 1) / d); }
}  // namespace

ModelProfile ModelProfile::scaled(std::size_t scale, std::string name) {
  if (scale == 0) throw ContractError("profile: scale must be positive");
  ModelProfile p;
  p.name = std::move(name);
  p.scale = scale;
  for (std::size_t c : {16, 32, 48, 64, 96, 128}) p.crn_encoder_channels.push_back(div_up(c, scale));
  p.crn_lstm_hidden = div_up(512, scale);
  for (std::size_t c : {32, 32, 64, 64, 128, 128}) p.token_conv_channels.push_back(div_up(c, scale));
  p.token_lstm_hidden = div_up(256, scale);
  p.token_dim = div_up(256, scale);
  if (p.token_dim % p.token_heads != 0) p.token_dim += p.token_heads - p.token_dim % p.token_heads;
  p.token_lstm_hidden = p.token_dim;
  p.le_channels = div_up(256, scale);
  // the discriminators keep their widths at every scale
  p.disc_channels = {16, 32, 48, 64, 80};
  return p;
}

ModelProfile ModelProfile::tiny() { return scaled(8, "tiny"); }

ModelProfile ModelProfile::paper() {
  ModelProfile p = scaled(1, "paper");
  p.int_outputs = 3;
  return p;
}

ModelProfile ModelProfile::by_name(const std::string& name) {
  if (name == "tiny") return tiny();
  if (name == "paper") return paper();
  throw ContractError("unknown model profile '" + name + "' (valid: tiny, paper)");
}

ModelProfile ModelProfile::from_config(const util::KvConfig& cfg) {
  const std::string name = cfg.get_string("model.profile", "tiny");
  ModelProfile p = by_name(name);
  if (cfg.has("model.scale")) {
    const auto s = cfg.get_int("model.scale");
    if (s <= 0) throw ContractError("model.scale must be positive");
    p = scaled(static_cast<std::size_t>(s), name);
  }
  p.int_outputs = static_cast<std::size_t>(cfg.get_int("model.int_outputs", static_cast<std::int64_t>(p.int_outputs)));
  p.qua_outputs = static_cast<std::size_t>(cfg.get_int("model.qua_outputs", static_cast<std::int64_t>(p.qua_outputs)));
  p.validate();
  return p;
}

std::vector<std::size_t> ModelProfile::crn_decoder_outputs() const {
  std::vector<std::size_t> out;
  for (std::size_t i = crn_encoder_channels.size() - 1; i > 0; --i) out.push_back(crn_encoder_channels[i - 1]);
  out.push_back(1);
  return out;
}

std::vector<std::size_t> ModelProfile::crn_decoder_inputs() const {
  std::vector<std::size_t> in;
  const auto outs = crn_decoder_outputs();
  const std::size_t n = crn_encoder_channels.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = i == 0 ? crn_encoder_channels[n - 1] : outs[i - 1];
    in.push_back(prev + crn_encoder_channels[n - 1 - i]);
  }
  return in;
}

std::vector<std::size_t> ModelProfile::encoder_bin_ladder() const {
  std::vector<std::size_t> ladder{bins};
  for (std::size_t i = 0; i < crn_encoder_channels.size(); ++i) ladder.push_back((ladder.back() - 3) / 2 + 1);
  return ladder;
}

void ModelProfile::validate() const {
  if (crn_encoder_channels.size() != 6) throw ContractError("profile: the CRN encoder has six stages");
  if (token_conv_channels.size() != 6) throw ContractError("profile: the token encoder has six stages");
  if (disc_channels.size() != 5) throw ContractError("profile: discriminators have five conv layers");
  if (token_heads == 0 || token_dim % token_heads != 0) throw ContractError("profile: token dim must divide by heads");
  if (token_lstm_hidden != token_dim) throw ContractError("profile: token LSTM width must equal the token dim");
  if (int_outputs == 0 || qua_outputs == 0) throw ContractError("profile: discriminator outputs must be positive");
  if (encoder_bin_ladder().back() == 0) throw ContractError("profile: too few bins for six stages");
}

std::string ModelProfile::describe() const {
  std::ostringstream os;
  auto list = [&](const std::vector<std::size_t>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  os << "profile=" << name << " scale=" << scale << " crn_enc=";
  list(crn_encoder_channels);
  os << " crn_lstm=" << crn_lstm_layers << "x" << crn_lstm_hidden << " token_conv=";
  list(token_conv_channels);
  os << " token_lstm=" << token_lstm_hidden << " tokens=" << token_count << "x" << token_dim << " heads=" << token_heads
     << " le=" << le_layers << "x" << le_channels << "k" << le_kernel << " disc=";
  list(disc_channels);
  os << " k_int=" << int_outputs << " k_qua=" << qua_outputs;
  return os.str();
}

}  // namespace fullend::models
