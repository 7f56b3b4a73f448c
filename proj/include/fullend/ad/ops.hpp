#pragma once

#include <cstddef>
#include <vector>

#include "fullend/ad/tensor.hpp"
#include "fullend/dsp/stft.hpp"

namespace fullend::ad {

// ---- elementwise (shapes must match exactly; no broadcasting) ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);

// ---- reductions ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// sum((a - target)^2); target carries no gradient.
Tensor squared_error(const Tensor& a, const std::vector<double>& target);

// ---- shape ----
Tensor reshape(const Tensor& a, const Shape& shape);
/// Concatenates along `axis`; all other dimensions must agree.
Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
/// Elements [begin, end) along axis 0.
Tensor slice0(const Tensor& a, std::size_t begin, std::size_t end);
/// [N] or [1,N] -> [rows, N]
Tensor repeat_rows(const Tensor& a, std::size_t rows);
/// [C,T,F] -> [T, C*F] (frame-major) and back.
Tensor frames_to_sequence(const Tensor& a);
Tensor sequence_to_frames(const Tensor& a, std::size_t channels);
/// [T,C] <-> [C,T]
Tensor transpose2d(const Tensor& a);

// ---- dense ----
Tensor matmul(const Tensor& a, const Tensor& b);  // [M,K] x [K,N]
/// x [T,in], w [out,in], b [out] (may be undefined/empty) -> [T,out]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b);

// ---- convolution on [C,T,F] ----
struct Conv2dGeometry {
  std::size_t stride_t = 1, stride_f = 1;
  std::size_t pad_t_before = 0, pad_t_after = 0;  // causal layers pad only before
  std::size_t pad_f = 0;                           // symmetric
};
/// w [Co,Ci,kt,kf], b [Co]
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dGeometry& g);
std::size_t conv_out_size(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad_total);
/// Frequency-only transposed convolution: w [Ci,Co,1,kf], stride_f along F,
/// out_f = (in_f - 1) * stride_f + kf + output_padding.
Tensor conv_transpose2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t stride_f,
                        std::size_t output_padding);
/// Causal (left-padded) conv1d on channels-last [T,Ci]; w [Co,Ci,k] -> [T,Co].
Tensor conv1d_causal(const Tensor& x, const Tensor& w, const Tensor& b);

// ---- normalisation / activation ----
/// Per-frame layer norm of [C,T,F] over (C,F), per-channel affine.
Tensor frame_layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-8);
/// Cumulative layer norm of [T,C]: statistics at t over all (tau <= t, c).
Tensor cumulative_layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-8);
/// PReLU with one slope per channel. channel_axis 0 for [C,...], 1 for [T,C].
/// At exactly 0 the negative-side slope is used.
Tensor prelu(const Tensor& x, const Tensor& alpha, std::size_t channel_axis);
/// [C,T,F] -> [C] mean over (T,F).
Tensor global_avg_pool(const Tensor& x);

// ---- recurrent / attention ----
/// Single-layer unidirectional LSTM from zero state. x [T,I], w_ih [4H,I],
/// w_hh [4H,H], b [4H]; gate order i, f, g, o. Returns hidden states [T,H].
Tensor lstm(const Tensor& x, const Tensor& w_ih, const Tensor& w_hh, const Tensor& b);
/// Scaled dot-product attention split into `heads`. q [T,D], k/v [N,D] -> [T,D].
/// When `weights` is non-null it receives [heads, T, N] softmax weights.
Tensor multi_head_attention_core(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t heads,
                                 std::vector<double>* weights = nullptr);

// ---- complex spectra stored as [2,T,F] (real plane, imaginary plane) ----
Tensor spectrogram_tensor(const dsp::ComplexSpectrogram& spec, bool requires_grad = false);
dsp::ComplexSpectrogram to_spectrogram(const Tensor& t, std::size_t signal_length, const dsp::StftConfig& config);
/// Complex product per bin.
Tensor cmul(const Tensor& mask, const Tensor& spec);
/// g [T,F] real gain applied to both planes (phase kept).
Tensor apply_gain(const Tensor& g, const Tensor& spec);
/// log(|X| + eps) -> [T,F]; zero-magnitude bins get zero gradient.
Tensor log_magnitude(const Tensor& spec, double eps = 1e-7);
/// log(|X|^2 + eps) -> [T,F]
Tensor log_power(const Tensor& spec, double eps = 1e-10);
/// Waveform [L] -> [2,T,F]
Tensor stft(const Tensor& wave, const dsp::StftConfig& config);
/// [2,T,F] -> waveform [signal_length]
Tensor istft(const Tensor& spec, std::size_t signal_length, const dsp::StftConfig& config);
/// a * sqrt(sum(ref^2) / sum(a^2)). When either energy is zero, a is passed through.
Tensor match_energy(const Tensor& a, const Tensor& ref);

// ---- losses ----
/// SI-SNR in dB of est against ref (both [L], zero-meaned inside); gradient w.r.t. est only.
Tensor si_snr(const Tensor& est, const std::vector<double>& ref);

}  // namespace fullend::ad
