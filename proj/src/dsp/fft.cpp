#include "fullend/dsp/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "fullend/error.hpp"

namespace fullend::dsp {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

PlanPair plans_for(std::size_t n) {
  static std::map<std::size_t, PlanPair> cache;
  std::lock_guard lock(plan_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  const int len = static_cast<int>(n);
  double* real = fftw_alloc_real(n);
  fftw_complex* cplx = fftw_alloc_complex(n / 2 + 1);
  PlanPair p;
  p.forward = fftw_plan_dft_r2c_1d(len, real, cplx, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(len, cplx, real, FFTW_ESTIMATE);
  fftw_free(real);
  fftw_free(cplx);
  cache.emplace(n, p);
  return p;
}

// Aligned scratch so new-array execution always sees the planner's alignment.
struct Scratch {
  std::size_t n = 0;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  ~Scratch() {
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
  }
  void ensure(std::size_t len) {
    if (len <= n) return;
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
    real = fftw_alloc_real(len);
    cplx = fftw_alloc_complex(len / 2 + 1);
    n = len;
  }
};

Scratch& scratch(std::size_t n) {
  thread_local Scratch s;
  s.ensure(n);
  return s;
}

}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2) throw ContractError("RealFft: size must be at least 2");
  PlanPair p = plans_for(n);
  forward_plan_ = p.forward;
  inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
  if (in.size() != n_ || out.size() != bins()) throw ContractError("RealFft::forward: size mismatch");
  Scratch& s = scratch(n_);
  std::memcpy(s.real, in.data(), n_ * sizeof(double));
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), s.real, s.cplx);
  for (std::size_t k = 0; k < bins(); ++k) out[k] = {s.cplx[k][0], s.cplx[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
  if (in.size() != bins() || out.size() != n_) throw ContractError("RealFft::inverse: size mismatch");
  Scratch& s = scratch(n_);
  for (std::size_t k = 0; k < bins(); ++k) {
    s.cplx[k][0] = in[k].real();
    s.cplx[k][1] = in[k].imag();
  }
  s.cplx[0][1] = 0.0;
  if (n_ % 2 == 0) s.cplx[n_ / 2][1] = 0.0;
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), s.cplx, s.real);
  const double scale = 1.0 / static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = s.real[i] * scale;
}

}  // namespace fullend::dsp
