#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fullend/ad/layers.hpp"
#include "fullend/models/profile.hpp"

namespace fullend::models {

/// Metric-regressing discriminator: five 3x3 / stride 2 convs with PReLU,
/// global average pooling, a linear layer and a sigmoid per target.
class Discriminator {
 public:
  Discriminator(std::string name, const ModelProfile& profile, std::size_t outputs, ad::ParamRng& rng);

  /// features [2,T,F] -> scores [outputs], each in (0,1).
  ad::Tensor forward(const ad::Tensor& features) const;
  ad::ParamList params() const;
  std::size_t outputs() const { return outputs_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::size_t outputs_;
  std::vector<std::unique_ptr<ad::Conv2d>> convs_;
  std::vector<std::unique_ptr<ad::PRelu>> acts_;
  std::unique_ptr<ad::Linear> head_;
};

/// Two-channel discriminator input from spectra [2,T,F]: 0.1 * log power of each.
ad::Tensor disc_features(const ad::Tensor& first_spec, const ad::Tensor& second_spec);

}  // namespace fullend::models
