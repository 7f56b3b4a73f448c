#include <cmath>
#include <complex>

#include "fullend/ad/ops.hpp"
#include "fullend/dsp/fft.hpp"
#include "op_util.hpp"

namespace fullend::ad {

using detail::gbuf;
using detail::make_output;
using detail::val;
using detail::wants;

namespace {

void expect_complex(const Tensor& t, const char* op, const char* what) {
  if (t.rank() != 3 || t.dim(0) != 2)
    throw ContractError(std::string(op) + ": " + what + " must be [2,T,F], got " + shape_str(t.shape()));
}

}  // namespace

Tensor spectrogram_tensor(const dsp::ComplexSpectrogram& spec, bool requires_grad) {
  const std::size_t n = spec.frames * spec.bins;
  std::vector<double> v(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = spec.data[i].real();
    v[n + i] = spec.data[i].imag();
  }
  return Tensor::from({2, spec.frames, spec.bins}, std::move(v), requires_grad);
}

dsp::ComplexSpectrogram to_spectrogram(const Tensor& t, std::size_t signal_length, const dsp::StftConfig& config) {
  expect_complex(t, "to_spectrogram", "input");
  dsp::ComplexSpectrogram spec;
  spec.frames = t.dim(1);
  spec.bins = t.dim(2);
  spec.signal_length = signal_length;
  spec.config = config;
  const std::size_t n = spec.frames * spec.bins;
  spec.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) spec.data[i] = {t[i], t[n + i]};
  spec.validate();
  return spec;
}

Tensor cmul(const Tensor& mask, const Tensor& spec) {
  expect_complex(mask, "cmul", "mask");
  if (mask.shape() != spec.shape())
    throw ContractError("cmul: mask " + shape_str(mask.shape()) + " vs spectrum " + shape_str(spec.shape()));
  const std::size_t n = mask.size() / 2;
  Tensor out = make_output(spec.shape(), {&mask, &spec}, "cmul");
  for (std::size_t i = 0; i < n; ++i) {
    const double mr = mask[i], mi = mask[n + i], xr = spec[i], xi = spec[n + i];
    out.data()[i] = mr * xr - mi * xi;
    out.data()[n + i] = mr * xi + mi * xr;
  }
  if (out.requires_grad()) {
    out.node()->backward = [n](Node& self) {
      const auto& M = val(self, 0);
      const auto& X = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 0)) {
        auto& g = gbuf(self, 0);
        for (std::size_t i = 0; i < n; ++i) {
          g[i] += G[i] * X[i] + G[n + i] * X[n + i];
          g[n + i] += -G[i] * X[n + i] + G[n + i] * X[i];
        }
      }
      if (wants(self, 1)) {
        auto& g = gbuf(self, 1);
        for (std::size_t i = 0; i < n; ++i) {
          g[i] += G[i] * M[i] + G[n + i] * M[n + i];
          g[n + i] += -G[i] * M[n + i] + G[n + i] * M[i];
        }
      }
    };
  }
  return out;
}

Tensor apply_gain(const Tensor& gain, const Tensor& spec) {
  expect_complex(spec, "apply_gain", "spectrum");
  detail::expect_shape(gain, {spec.dim(1), spec.dim(2)}, "apply_gain", "gain");
  const std::size_t n = gain.size();
  Tensor out = make_output(spec.shape(), {&gain, &spec}, "apply_gain");
  for (std::size_t i = 0; i < n; ++i) {
    out.data()[i] = gain[i] * spec[i];
    out.data()[n + i] = gain[i] * spec[n + i];
  }
  if (out.requires_grad()) {
    out.node()->backward = [n](Node& self) {
      const auto& A = val(self, 0);
      const auto& X = val(self, 1);
      const auto& G = self.grad;
      if (wants(self, 0)) {
        auto& g = gbuf(self, 0);
        for (std::size_t i = 0; i < n; ++i) g[i] += G[i] * X[i] + G[n + i] * X[n + i];
      }
      if (wants(self, 1)) {
        auto& g = gbuf(self, 1);
        for (std::size_t i = 0; i < n; ++i) {
          g[i] += G[i] * A[i];
          g[n + i] += G[n + i] * A[i];
        }
      }
    };
  }
  return out;
}

Tensor log_magnitude(const Tensor& spec, double eps) {
  expect_complex(spec, "log_magnitude", "spectrum");
  const std::size_t n = spec.size() / 2;
  Tensor out = make_output({spec.dim(1), spec.dim(2)}, {&spec}, "log_magnitude");
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::log(std::hypot(spec[i], spec[n + i]) + eps);
  if (out.requires_grad()) {
    out.node()->backward = [n, eps](Node& self) {
      const auto& X = val(self, 0);
      auto& g = gbuf(self, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const double m = std::hypot(X[i], X[n + i]);
        if (m == 0.0) continue;
        const double d = self.grad[i] / ((m + eps) * m);
        g[i] += d * X[i];
        g[n + i] += d * X[n + i];
      }
    };
  }
  return out;
}

Tensor log_power(const Tensor& spec, double eps) {
  expect_complex(spec, "log_power", "spectrum");
  const std::size_t n = spec.size() / 2;
  Tensor out = make_output({spec.dim(1), spec.dim(2)}, {&spec}, "log_power");
  for (std::size_t i = 0; i < n; ++i) out.data()[i] = std::log(spec[i] * spec[i] + spec[n + i] * spec[n + i] + eps);
  if (out.requires_grad()) {
    out.node()->backward = [n, eps](Node& self) {
      const auto& X = val(self, 0);
      auto& g = gbuf(self, 0);
      for (std::size_t i = 0; i < n; ++i) {
        const double d = 2.0 * self.grad[i] / (X[i] * X[i] + X[n + i] * X[n + i] + eps);
        g[i] += d * X[i];
        g[n + i] += d * X[n + i];
      }
    };
  }
  return out;
}

Tensor stft(const Tensor& wave, const dsp::StftConfig& config) {
  config.validate();
  detail::expect_rank(wave, 1, "stft", "waveform");
  const std::size_t L = wave.size();
  if (L == 0) throw ContractError("stft: empty waveform");
  const std::size_t T = dsp::frame_count(L, config), F = config.bins(), N = config.fft_size;
  const std::size_t W = config.window_len, hop = config.hop, pad = config.pad();
  Tensor out = make_output({2, T, F}, {&wave}, "stft");
  const std::vector<double> padded = dsp::reflect_pad(wave.values(), pad);
  dsp::RealFft fft(N);
  std::vector<double> frame(N, 0.0);
  std::vector<std::complex<double>> bins(F);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < W; ++i) frame[i] = padded[t * hop + i] * config.window[i];
    fft.forward(frame, bins);
    for (std::size_t k = 0; k < F; ++k) {
      out.data()[t * F + k] = bins[k].real();
      out.data()[T * F + t * F + k] = bins[k].imag();
    }
  }
  if (out.requires_grad()) {
    out.node()->backward = [config, L, T, F, N, W, hop, pad](Node& self) {
      const auto& G = self.grad;
      dsp::RealFft fft(N);
      std::vector<std::complex<double>> z(F);
      std::vector<double> frame(N);
      std::vector<double> gpad(L + 2 * pad, 0.0);
      const double n = static_cast<double>(N);
      for (std::size_t t = 0; t < T; ++t) {
        // grad_n = Re sum_k G_k e^{+i2pi kn/N}, realised with the 1/N inverse.
        for (std::size_t k = 0; k < F; ++k) {
          const std::complex<double> gk(G[t * F + k], G[T * F + t * F + k]);
          const bool edge = k == 0 || 2 * k == N;
          z[k] = edge ? std::complex<double>(n * gk.real(), 0.0) : 0.5 * n * gk;
        }
        fft.inverse(z, frame);
        for (std::size_t i = 0; i < W; ++i) gpad[t * hop + i] += frame[i] * config.window[i];
      }
      auto& gx = gbuf(self, 0);
      for (std::size_t j = 0; j < gpad.size(); ++j)
        gx[dsp::reflect_index(static_cast<long>(j) - static_cast<long>(pad), L)] += gpad[j];
    };
  }
  return out;
}

Tensor istft(const Tensor& spec, std::size_t signal_length, const dsp::StftConfig& config) {
  config.validate();
  expect_complex(spec, "istft", "spectrum");
  const std::size_t T = spec.dim(1), F = spec.dim(2), N = config.fft_size;
  if (F != config.bins()) throw ContractError("istft: bin count does not match the profile");
  if (T != dsp::frame_count(signal_length, config))
    throw ContractError("istft: " + std::to_string(T) + " frames cannot produce " + std::to_string(signal_length) +
                        " samples");
  const std::size_t W = config.window_len, hop = config.hop, pad = config.pad();
  const std::vector<double> norm = dsp::window_square_sum(T, config);
  Tensor out = make_output({signal_length}, {&spec}, "istft");
  std::vector<double> acc(norm.size(), 0.0);
  dsp::RealFft fft(N);
  std::vector<std::complex<double>> z(F);
  std::vector<double> frame(N);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < F; ++k) z[k] = {spec[t * F + k], spec[T * F + t * F + k]};
    fft.inverse(z, frame);
    for (std::size_t i = 0; i < W; ++i) acc[t * hop + i] += frame[i] * config.window[i];
  }
  for (std::size_t n = 0; n < signal_length; ++n) {
    const double d = norm[n + pad];
    out.data()[n] = d > 1e-10 ? acc[n + pad] / d : 0.0;
  }
  if (out.requires_grad()) {
    out.node()->backward = [config, signal_length, T, F, N, W, hop, pad, norm](Node& self) {
      const auto& G = self.grad;
      std::vector<double> gpad(norm.size(), 0.0);
      for (std::size_t n = 0; n < signal_length; ++n) {
        const double d = norm[n + pad];
        if (d > 1e-10) gpad[n + pad] = G[n] / d;
      }
      dsp::RealFft fft(N);
      std::vector<double> frame(N, 0.0);
      std::vector<std::complex<double>> z(F);
      auto& gs = gbuf(self, 0);
      const double n = static_cast<double>(N);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < W; ++i) frame[i] = gpad[t * hop + i] * config.window[i];
        fft.forward(frame, z);
        for (std::size_t k = 0; k < F; ++k) {
          const bool edge = k == 0 || 2 * k == N;
          const double c = (edge ? 1.0 : 2.0) / n;
          gs[t * F + k] += c * z[k].real();
          if (!edge) gs[T * F + t * F + k] += c * z[k].imag();
        }
      }
    };
  }
  return out;
}

Tensor match_energy(const Tensor& a, const Tensor& ref) {
  if (a.size() != ref.size())
    throw ContractError("match_energy: size mismatch " + shape_str(a.shape()) + " vs " + shape_str(ref.shape()));
  double S = 0.0, R = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    S += a[i] * a[i];
    R += ref[i] * ref[i];
  }
  const bool pass = !(S > 0.0 && R > 0.0);
  const double gain = pass ? 1.0 : std::sqrt(R / S);
  Tensor out = make_output(a.shape(), {&a, &ref}, "match_energy");
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = gain * a[i];
  if (out.requires_grad()) {
    out.node()->backward = [pass, gain, S, R](Node& self) {
      const auto& A = val(self, 0);
      const auto& Rv = val(self, 1);
      const auto& G = self.grad;
      double ga = 0.0;  // sum g * a
      for (std::size_t i = 0; i < A.size(); ++i) ga += G[i] * A[i];
      if (wants(self, 0)) {
        auto& g = gbuf(self, 0);
        for (std::size_t i = 0; i < A.size(); ++i) g[i] += pass ? G[i] : gain * (G[i] - ga * A[i] / S);
      }
      if (wants(self, 1) && !pass) {
        auto& g = gbuf(self, 1);
        for (std::size_t i = 0; i < A.size(); ++i) g[i] += gain * ga * Rv[i] / R;
      }
    };
  }
  return out;
}

}  // namespace fullend::ad
