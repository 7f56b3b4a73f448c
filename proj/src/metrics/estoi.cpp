#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "fullend/dsp/fft.hpp"
#include "fullend/dsp/filterbank.hpp"
#include "fullend/dsp/resample.hpp"
#include "fullend/error.hpp"
#include "fullend/metrics/metrics.hpp"

namespace fullend::metrics {
namespace {

using C = EstoiConstants;

// Symmetric Hann of length n + 2 with both zero endpoints dropped.
std::vector<double> inner_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(n + 1));
  return w;
}

std::vector<std::size_t> frame_starts(std::size_t len) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + C::frame_len < len; s += C::hop) starts.push_back(s);
  return starts;
}

// Drops frames more than 40 dB below the loudest reference frame and
// overlap-adds the surviving windowed frames of both signals.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y, const std::vector<double>& win) {
  const auto starts = frame_starts(y.size());
  std::vector<double> level(starts.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double e = 0.0;
    for (std::size_t i = 0; i < C::frame_len; ++i) {
      const double v = win[i] * y[starts[f] + i];
      e += v * v;
    }
    level[f] = 20.0 * std::log10(std::sqrt(e) + std::numeric_limits<double>::epsilon());
    top = std::max(top, level[f]);
  }
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < starts.size(); ++f)
    if (level[f] - top + C::dynamic_range_db > 0.0) kept.push_back(starts[f]);
  const std::size_t out_len = kept.empty() ? 0 : (kept.size() - 1) * C::hop + C::frame_len;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t j = 0; j < kept.size(); ++j) {
    for (std::size_t i = 0; i < C::frame_len; ++i) {
      xo[j * C::hop + i] += win[i] * x[kept[j] + i];
      yo[j * C::hop + i] += win[i] * y[kept[j] + i];
    }
  }
  x = std::move(xo);
  y = std::move(yo);
}

dsp::Matrix band_envelopes(const std::vector<double>& x, const std::vector<double>& win,
                           const dsp::ThirdOctaveLayout& layout) {
  const auto starts = frame_starts(x.size());
  const dsp::RealFft fft(C::fft_size);
  dsp::Matrix mag(starts.size(), fft.bins());
  std::vector<double> buf(C::fft_size);
  std::vector<std::complex<double>> spec(fft.bins());
  for (std::size_t f = 0; f < starts.size(); ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < C::frame_len; ++i) buf[i] = win[i] * x[starts[f] + i];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < fft.bins(); ++k) mag(f, k) = std::abs(spec[k]);
  }
  return dsp::third_octave_bands(mag, layout);
}

// Subtract the mean and scale to unit norm; an all-constant vector becomes zero.
void normalize(std::vector<double>& v) {
  double mean = 0.0;
  for (double a : v) mean += a;
  mean /= static_cast<double>(v.size());
  double norm = 0.0;
  for (double& a : v) {
    a -= mean;
    norm += a * a;
  }
  norm = std::sqrt(norm);
  for (double& a : v) a = norm > 0.0 ? a / norm : 0.0;
}

}  // namespace

double estoi(const dsp::Waveform& est, const dsp::Waveform& ref) {
  if (est.size() != ref.size()) throw ContractError("estoi: length mismatch");
  if (est.sample_rate != ref.sample_rate) throw ContractError("estoi: sample rate mismatch");
  est.validate();
  ref.validate();
  auto x = dsp::resample(est, C::sample_rate).samples;
  auto y = dsp::resample(ref, C::sample_rate).samples;
  const auto win = inner_hann(C::frame_len);
  remove_silent_frames(x, y, win);

  const auto layout = dsp::third_octave_layout(C::sample_rate, C::fft_size, C::bands, C::min_freq_hz);
  const dsp::Matrix xb = band_envelopes(x, win, layout);
  const dsp::Matrix yb = band_envelopes(y, win, layout);
  const std::size_t frames = yb.rows;
  if (frames < C::segment_frames)
    throw ContractError("estoi: " + std::to_string(frames) + " frames after silence removal, need at least " +
                        std::to_string(C::segment_frames));

  const std::size_t nb = C::bands, n = C::segment_frames;
  double total = 0.0;
  std::vector<double> xs(nb * n), ys(nb * n), tmp_x(n), tmp_y(n), col_x(nb), col_y(nb);
  for (std::size_t m = n; m <= frames; ++m) {
    // band-major segment: xs[j * n + t]
    for (std::size_t j = 0; j < nb; ++j) {
      for (std::size_t t = 0; t < n; ++t) {
        tmp_x[t] = xb(m - n + t, j);
        tmp_y[t] = yb(m - n + t, j);
      }
      normalize(tmp_x);
      normalize(tmp_y);
      std::copy(tmp_x.begin(), tmp_x.end(), xs.begin() + static_cast<long>(j * n));
      std::copy(tmp_y.begin(), tmp_y.end(), ys.begin() + static_cast<long>(j * n));
    }
    double d = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < nb; ++j) {
        col_x[j] = xs[j * n + t];
        col_y[j] = ys[j * n + t];
      }
      normalize(col_x);
      normalize(col_y);
      for (std::size_t j = 0; j < nb; ++j) d += col_x[j] * col_y[j];
    }
    total += d / static_cast<double>(n);
  }
  return total / static_cast<double>(frames - n + 1);
}

}  // namespace fullend::metrics
