#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fullend/ad/ops.hpp"
#include "fullend/ad/tensor.hpp"

namespace fullend::ad {

/// Deterministic source for parameter initialisation.
class ParamRng {
 public:
  explicit ParamRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
};

/// He-uniform for a PReLU(0.25)-style nonlinearity: bound sqrt(6 / ((1 + 0.25^2) fan_in)).
Tensor kaiming_uniform(const Shape& shape, std::size_t fan_in, ParamRng& rng);
/// rows x cols with orthonormal rows (or columns when rows > cols), via Gram-Schmidt.
std::vector<double> orthogonal(std::size_t rows, std::size_t cols, ParamRng& rng);

/// Every layer: named parameters, shape checks and NaN checks reported with
/// the layer name.
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  const std::string& name() const { return name_; }
  virtual void collect(ParamList& out) const = 0;

 protected:
  template <class F>
  Tensor guarded(F&& f) const;

 private:
  std::string name_;
};

class Linear : public Layer {
 public:
  Linear(std::string name, std::size_t in, std::size_t out, ParamRng& rng, bool bias = true);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor weight, bias;
  bool has_bias;
};

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kt, std::size_t kf,
         Conv2dGeometry geometry, ParamRng& rng);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor weight, bias;
  Conv2dGeometry geometry;
};

class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kf, std::size_t stride_f,
                  std::size_t output_padding, ParamRng& rng);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor weight, bias;
  std::size_t stride_f, output_padding;
};

class Conv1dCausal : public Layer {
 public:
  Conv1dCausal(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel, ParamRng& rng);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor weight, bias;
};

class FrameLayerNorm : public Layer {
 public:
  FrameLayerNorm(std::string name, std::size_t channels);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor gamma, beta;
};

class CumulativeLayerNorm : public Layer {
 public:
  CumulativeLayerNorm(std::string name, std::size_t channels);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor gamma, beta;
};

class PRelu : public Layer {
 public:
  PRelu(std::string name, std::size_t channels, std::size_t channel_axis, double init = 0.25);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor alpha;
  std::size_t channel_axis;
};

class Lstm : public Layer {
 public:
  Lstm(std::string name, std::size_t input, std::size_t hidden, ParamRng& rng);
  Tensor forward(const Tensor& x) const;
  void collect(ParamList& out) const override;
  Tensor w_ih, w_hh, bias;
  std::size_t hidden;
};

/// Bias-free Q/K/V/O projections around multi_head_attention_core.
class MultiHeadAttention : public Layer {
 public:
  MultiHeadAttention(std::string name, std::size_t dim, std::size_t heads, ParamRng& rng);
  Tensor forward(const Tensor& query, const Tensor& memory, std::vector<double>* weights = nullptr) const;
  void collect(ParamList& out) const override;
  Linear wq, wk, wv, wo;
  std::size_t heads;
};

}  // namespace fullend::ad
