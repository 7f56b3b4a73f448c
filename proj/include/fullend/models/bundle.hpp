#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "fullend/ad/checkpoint.hpp"
#include "fullend/models/crn.hpp"
#include "fullend/models/discriminator.hpp"
#include "fullend/models/le_generator.hpp"
#include "fullend/models/noise_token.hpp"

namespace fullend::models {

inline constexpr const char* kInitScheme =
    "kaiming_uniform(prelu=0.25) conv/linear; lstm w_ih uniform(1/sqrt(H)), w_hh orthogonal, forget bias 1; "
    "prelu 0.25; tokens normal(0,token_init_std); le.fc weight 0";

/// All networks of one system: noise token, NR, LE and both discriminators.
class ModelBundle {
  // Each network draws from its own stream; declared first so it is ready
  // before the networks are constructed.
  struct InitStreams {
    ad::ParamRng token, crn, le, d_int, d_qua;
    explicit InitStreams(std::uint64_t seed);
  };
  ModelProfile profile_;
  std::uint64_t seed_;
  InitStreams streams_;

 public:
  ModelBundle(const ModelProfile& profile, std::uint64_t seed);

  const ModelProfile& profile() const { return profile_; }
  std::uint64_t seed() const { return seed_; }

  NoiseTokenNet token;
  Crn crn;
  LeGenerator le;
  Discriminator d_int;
  Discriminator d_qua;

  ad::ParamList token_params() const { return token.params(); }
  ad::ParamList crn_params() const { return crn.params(); }
  ad::ParamList le_params() const { return le.params(); }
  ad::ParamList generator_params() const;
  ad::ParamList disc_params() const;
  ad::ParamList all_params() const;

  void save(const std::string& path, std::map<std::string, std::string> meta = {}) const;
  /// Rebuilds the bundle from a checkpoint (profile taken from its metadata).
  static std::unique_ptr<ModelBundle> load(const std::string& path);
  static std::unique_ptr<ModelBundle> from_checkpoint(const ad::Checkpoint& ckpt);
};

/// Copies values between parameter lists by name (every destination name must exist in `from`).
void copy_params(const ad::ParamList& from, const ad::ParamList& to);
std::size_t parameter_count(const ad::ParamList& params);

}  // namespace fullend::models
