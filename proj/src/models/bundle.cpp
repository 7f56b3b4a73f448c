#include "fullend/models/bundle.hpp"

#include "fullend/error.hpp"
#include "fullend/signal/synth.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::models {

namespace {
void append(ad::ParamList& dst, const ad::ParamList& src) { dst.insert(dst.end(), src.begin(), src.end()); }
}  // namespace

ModelBundle::InitStreams::InitStreams(std::uint64_t seed)
    : token(signal::mix_seed(seed, 101)),
      crn(signal::mix_seed(seed, 102)),
      le(signal::mix_seed(seed, 103)),
      d_int(signal::mix_seed(seed, 104)),
      d_qua(signal::mix_seed(seed, 105)) {}

ModelBundle::ModelBundle(const ModelProfile& profile, std::uint64_t seed)
    : profile_(profile),
      seed_(seed),
      streams_(seed),
      token(profile_, streams_.token),
      crn(profile_, streams_.crn),
      le(profile_, streams_.le),
      d_int("d_int", profile_, profile_.int_outputs, streams_.d_int),
      d_qua("d_qua", profile_, profile_.qua_outputs, streams_.d_qua) {}

ad::ParamList ModelBundle::generator_params() const {
  ad::ParamList p = token.params();
  append(p, crn.params());
  append(p, le.params());
  return p;
}

ad::ParamList ModelBundle::disc_params() const {
  ad::ParamList p = d_int.params();
  append(p, d_qua.params());
  return p;
}

ad::ParamList ModelBundle::all_params() const {
  ad::ParamList p = generator_params();
  append(p, disc_params());
  return p;
}

void ModelBundle::save(const std::string& path, std::map<std::string, std::string> meta) const {
  meta["profile"] = profile_.name;
  meta["scale"] = std::to_string(profile_.scale);
  meta["int_outputs"] = std::to_string(profile_.int_outputs);
  meta["qua_outputs"] = std::to_string(profile_.qua_outputs);
  meta["seed"] = std::to_string(seed_);
  meta["init"] = kInitScheme;
  ad::save_checkpoint(path, all_params(), meta);
}

std::unique_ptr<ModelBundle> ModelBundle::from_checkpoint(const ad::Checkpoint& ckpt) {
  auto get = [&](const std::string& k) -> std::string {
    auto it = ckpt.meta.find(k);
    if (it == ckpt.meta.end()) throw IoError("checkpoint: metadata lacks '" + k + "'");
    return it->second;
  };
  util::KvConfig cfg;
  cfg.set("model.profile", get("profile"));
  cfg.set("model.scale", get("scale"));
  cfg.set("model.int_outputs", get("int_outputs"));
  cfg.set("model.qua_outputs", get("qua_outputs"));
  auto bundle = std::make_unique<ModelBundle>(ModelProfile::from_config(cfg), std::stoull(get("seed")));
  ad::restore(ckpt, bundle->all_params());
  return bundle;
}

std::unique_ptr<ModelBundle> ModelBundle::load(const std::string& path) {
  return from_checkpoint(ad::load_checkpoint(path));
}

void copy_params(const ad::ParamList& from, const ad::ParamList& to) {
  for (const auto& dst : to) {
    const ad::Tensor* src = nullptr;
    for (const auto& f : from)
      if (f.name == dst.name) src = &f.tensor;
    if (src == nullptr) throw ContractError("copy_params: no source for " + dst.name);
    if (src->shape() != dst.tensor.shape()) throw ContractError("copy_params: shape mismatch for " + dst.name);
    ad::Tensor t = dst.tensor;
    std::copy(src->values().begin(), src->values().end(), t.data());
  }
}

std::size_t parameter_count(const ad::ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.size();
  return n;
}

}  // namespace fullend::models
