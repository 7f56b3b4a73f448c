#include <algorithm>
#include <cmath>

#include "fullend/error.hpp"
#include "fullend/metrics/metrics.hpp"

namespace fullend::metrics {

double logistic_normalize(double raw, double m, double k) { return 1.0 / (1.0 + std::exp(-k * (raw - m))); }

double Logistic::operator()(double raw) const { return logistic_normalize(raw, m, k); }

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ContractError("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractError("quantile: q outside [0, 1]");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

Logistic fit_logistic(std::vector<double> samples) {
  for (double s : samples)
    if (!std::isfinite(s)) throw NumericError("fit_logistic", "non-finite score");
  const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
  if (!(iqr > 0.0)) throw ContractError("fit_logistic: zero interquartile range");
  return {median(std::move(samples)), 2.0 / iqr};
}

}  // namespace fullend::metrics
