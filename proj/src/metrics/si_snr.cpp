#include <algorithm>
#include <cmath>

#include "fullend/error.hpp"
#include "fullend/metrics/metrics.hpp"

namespace fullend::metrics {

double si_snr(const dsp::Waveform& est, const dsp::Waveform& ref) {
  if (est.size() != ref.size()) throw ContractError("si_snr: length mismatch");
  if (est.empty()) throw ContractError("si_snr: empty input");
  const std::size_t n = est.size();
  double me = 0.0, mr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    me += est.samples[i];
    mr += ref.samples[i];
  }
  me /= static_cast<double>(n);
  mr /= static_cast<double>(n);
  double dot = 0.0, rr = 0.0, ee = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = est.samples[i] - me, r = ref.samples[i] - mr;
    dot += e * r;
    rr += r * r;
    ee += e * e;
  }
  if (!(rr > 0.0)) throw ContractError("si_snr: zero reference");
  const double target = dot * dot / rr;
  // |e - t|^2 computed directly; the difference form ee - target cancels badly near equality.
  const double a = dot / rr;
  double noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (est.samples[i] - me) - a * (ref.samples[i] - mr);
    noise += d * d;
  }
  if (noise == 0.0) return kSiSnrCapDb;
  if (target <= 0.0) return -kSiSnrCapDb;
  return std::clamp(10.0 * std::log10(target / noise), -kSiSnrCapDb, kSiSnrCapDb);
}

}  // namespace fullend::metrics
