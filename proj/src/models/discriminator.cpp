#include "fullend/models/discriminator.hpp"

#include "fullend/error.hpp"

namespace fullend::models {

using ad::Tensor;

Discriminator::Discriminator(std::string name, const ModelProfile& profile, std::size_t outputs, ad::ParamRng& rng)
    : name_(std::move(name)), outputs_(outputs) {
  if (outputs == 0) throw ContractError(name_ + ": needs at least one output");
  ad::Conv2dGeometry geo;
  geo.stride_t = geo.stride_f = 2;
  geo.pad_t_before = geo.pad_t_after = geo.pad_f = 1;
  std::size_t in = 2;
  for (std::size_t i = 0; i < profile.disc_channels.size(); ++i) {
    const std::size_t c = profile.disc_channels[i];
    const std::string n = name_ + ".conv" + std::to_string(i);
    convs_.push_back(std::make_unique<ad::Conv2d>(n, in, c, 3, 3, geo, rng));
    acts_.push_back(std::make_unique<ad::PRelu>(n + ".act", c, 0));
    in = c;
  }
  head_ = std::make_unique<ad::Linear>(name_ + ".head", in, outputs, rng);
}

Tensor Discriminator::forward(const Tensor& features) const {
  if (features.rank() != 3 || features.dim(0) != 2)
    throw ContractError(name_ + ": input must be [2,T,F], got " + ad::shape_str(features.shape()));
  Tensor h = features;
  for (std::size_t i = 0; i < convs_.size(); ++i) h = acts_[i]->forward(convs_[i]->forward(h));
  h = ad::reshape(ad::global_avg_pool(h), {1, h.dim(0)});
  return ad::reshape(ad::sigmoid(head_->forward(h)), {outputs_});
}

ad::ParamList Discriminator::params() const {
  ad::ParamList p;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    convs_[i]->collect(p);
    acts_[i]->collect(p);
  }
  head_->collect(p);
  return p;
}

Tensor disc_features(const Tensor& first_spec, const Tensor& second_spec) {
  const std::size_t T = first_spec.dim(1), F = first_spec.dim(2);
  Tensor a = ad::reshape(ad::scale(ad::log_power(first_spec), 0.1), {1, T, F});
  Tensor b = ad::reshape(ad::scale(ad::log_power(second_spec), 0.1), {1, T, F});
  return ad::concat({a, b}, 0);
}

}  // namespace fullend::models
