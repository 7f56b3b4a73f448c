#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace fullend::dsp {

/// Real-input FFT of fixed length backed by FFTW. Plans are shared per size and
/// created under a lock; execution is safe from any thread.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  std::size_t bins() const noexcept { return n_ / 2 + 1; }

  /// Unnormalized forward transform: out has n/2 + 1 bins.
  void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
  /// Inverse transform divided by n. Imaginary parts of the DC and Nyquist bins are ignored.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

 private:
  std::size_t n_;
  void* forward_plan_;
  void* inverse_plan_;
};

}  // namespace fullend::dsp
