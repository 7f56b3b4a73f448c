#include "fullend/ad/layers.hpp"

#include <cmath>

#include "fullend/error.hpp"

namespace fullend::ad {

double ParamRng::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
double ParamRng::normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(engine_); }

Tensor kaiming_uniform(const Shape& shape, std::size_t fan_in, ParamRng& rng) {
  const double bound = std::sqrt(6.0 / ((1.0 + 0.25 * 0.25) * static_cast<double>(fan_in)));
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(shape, std::move(v), true);
}

std::vector<double> orthogonal(std::size_t rows, std::size_t cols, ParamRng& rng) {
  // Orthonormalise along the longer side's partner: vectors of length `len`, `count` of them.
  const bool by_rows = rows <= cols;
  const std::size_t count = by_rows ? rows : cols, len = by_rows ? cols : rows;
  std::vector<std::vector<double>> vecs;
  while (vecs.size() < count) {
    std::vector<double> v(len);
    for (double& x : v) x = rng.normal(0.0, 1.0);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : vecs) {
        double d = 0.0;
        for (std::size_t i = 0; i < len; ++i) d += u[i] * v[i];
        for (std::size_t i = 0; i < len; ++i) v[i] -= d * u[i];
      }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-8) continue;
    for (double& x : v) x /= n;
    vecs.push_back(std::move(v));
  }
  std::vector<double> out(rows * cols);
  for (std::size_t a = 0; a < count; ++a)
    for (std::size_t i = 0; i < len; ++i) {
      if (by_rows)
        out[a * cols + i] = vecs[a][i];
      else
        out[i * cols + a] = vecs[a][i];
    }
  return out;
}

template <class F>
Tensor Layer::guarded(F&& f) const {
  Tensor out;
  try {
    out = f();
  } catch (const ContractError& e) {
    throw ContractError(name_ + ": " + e.what());
  }
  check_finite(out, name_);
  return out;
}

Linear::Linear(std::string name, std::size_t in, std::size_t out, ParamRng& rng, bool with_bias)
    : Layer(std::move(name)),
      weight(kaiming_uniform({out, in}, in, rng)),
      bias(Tensor::zeros({out}, true)),
      has_bias(with_bias) {}

Tensor Linear::forward(const Tensor& x) const {
  return guarded([&] { return linear(x, weight, has_bias ? &bias : nullptr); });
}

void Linear::collect(ParamList& out) const {
  out.push_back({name() + ".weight", weight});
  if (has_bias) out.push_back({name() + ".bias", bias});
}

Conv2d::Conv2d(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kt, std::size_t kf,
               Conv2dGeometry geo, ParamRng& rng)
    : Layer(std::move(name)),
      weight(kaiming_uniform({out_ch, in_ch, kt, kf}, in_ch * kt * kf, rng)),
      bias(Tensor::zeros({out_ch}, true)),
      geometry(geo) {}

Tensor Conv2d::forward(const Tensor& x) const {
  return guarded([&] { return conv2d(x, weight, bias, geometry); });
}

void Conv2d::collect(ParamList& out) const {
  out.push_back({name() + ".weight", weight});
  out.push_back({name() + ".bias", bias});
}

ConvTranspose2d::ConvTranspose2d(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kf,
                                 std::size_t stride, std::size_t out_pad, ParamRng& rng)
    : Layer(std::move(name)),
      weight(kaiming_uniform({in_ch, out_ch, 1, kf}, in_ch * kf / stride, rng)),
      bias(Tensor::zeros({out_ch}, true)),
      stride_f(stride),
      output_padding(out_pad) {}

Tensor ConvTranspose2d::forward(const Tensor& x) const {
  return guarded([&] { return conv_transpose2d(x, weight, bias, stride_f, output_padding); });
}

void ConvTranspose2d::collect(ParamList& out) const {
  out.push_back({name() + ".weight", weight});
  out.push_back({name() + ".bias", bias});
}

Conv1dCausal::Conv1dCausal(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel,
                           ParamRng& rng)
    : Layer(std::move(name)),
      weight(kaiming_uniform({out_ch, in_ch, kernel}, in_ch * kernel, rng)),
      bias(Tensor::zeros({out_ch}, true)) {}

Tensor Conv1dCausal::forward(const Tensor& x) const {
  return guarded([&] { return conv1d_causal(x, weight, bias); });
}

void Conv1dCausal::collect(ParamList& out) const {
  out.push_back({name() + ".weight", weight});
  out.push_back({name() + ".bias", bias});
}

FrameLayerNorm::FrameLayerNorm(std::string name, std::size_t channels)
    : Layer(std::move(name)), gamma(Tensor::full({channels}, 1.0, true)), beta(Tensor::zeros({channels}, true)) {}

Tensor FrameLayerNorm::forward(const Tensor& x) const {
  return guarded([&] { return frame_layer_norm(x, gamma, beta); });
}

void FrameLayerNorm::collect(ParamList& out) const {
  out.push_back({name() + ".gamma", gamma});
  out.push_back({name() + ".beta", beta});
}

CumulativeLayerNorm::CumulativeLayerNorm(std::string name, std::size_t channels)
    : Layer(std::move(name)), gamma(Tensor::full({channels}, 1.0, true)), beta(Tensor::zeros({channels}, true)) {}

Tensor CumulativeLayerNorm::forward(const Tensor& x) const {
  return guarded([&] { return cumulative_layer_norm(x, gamma, beta); });
}

void CumulativeLayerNorm::collect(ParamList& out) const {
  out.push_back({name() + ".gamma", gamma});
  out.push_back({name() + ".beta", beta});
}

PRelu::PRelu(std::string name, std::size_t channels, std::size_t axis, double init)
    : Layer(std::move(name)), alpha(Tensor::full({channels}, init, true)), channel_axis(axis) {}

Tensor PRelu::forward(const Tensor& x) const {
  return guarded([&] { return prelu(x, alpha, channel_axis); });
}

void PRelu::collect(ParamList& out) const { out.push_back({name() + ".alpha", alpha}); }

Lstm::Lstm(std::string name, std::size_t input, std::size_t hid, ParamRng& rng)
    : Layer(std::move(name)), hidden(hid) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hid));
  std::vector<double> wi(4 * hid * input);
  for (double& x : wi) x = rng.uniform(-bound, bound);
  w_ih = Tensor::from({4 * hid, input}, std::move(wi), true);
  // Orthogonal recurrent block per gate.
  std::vector<double> wh(4 * hid * hid);
  for (std::size_t g = 0; g < 4; ++g) {
    const auto q = orthogonal(hid, hid, rng);
    std::copy(q.begin(), q.end(), wh.begin() + static_cast<std::ptrdiff_t>(g * hid * hid));
  }
  w_hh = Tensor::from({4 * hid, hid}, std::move(wh), true);
  std::vector<double> b(4 * hid, 0.0);
  for (std::size_t j = hid; j < 2 * hid; ++j) b[j] = 1.0;  // forget gate
  bias = Tensor::from({4 * hid}, std::move(b), true);
}

Tensor Lstm::forward(const Tensor& x) const {
  return guarded([&] { return lstm(x, w_ih, w_hh, bias); });
}

void Lstm::collect(ParamList& out) const {
  out.push_back({name() + ".w_ih", w_ih});
  out.push_back({name() + ".w_hh", w_hh});
  out.push_back({name() + ".bias", bias});
}

MultiHeadAttention::MultiHeadAttention(std::string name, std::size_t dim, std::size_t h, ParamRng& rng)
    : Layer(name),
      wq(name + ".q", dim, dim, rng, false),
      wk(name + ".k", dim, dim, rng, false),
      wv(name + ".v", dim, dim, rng, false),
      wo(name + ".o", dim, dim, rng, false),
      heads(h) {
  if (h == 0 || dim % h != 0) throw ContractError(this->name() + ": dim must be divisible by heads");
}

Tensor MultiHeadAttention::forward(const Tensor& query, const Tensor& memory, std::vector<double>* weights) const {
  const Tensor q = wq.forward(query);
  const Tensor k = wk.forward(memory);
  const Tensor v = wv.forward(memory);
  const Tensor mixed = guarded([&] { return multi_head_attention_core(q, k, v, heads, weights); });
  return wo.forward(mixed);
}

void MultiHeadAttention::collect(ParamList& out) const {
  wq.collect(out);
  wk.collect(out);
  wv.collect(out);
  wo.collect(out);
}

}  // namespace fullend::ad
