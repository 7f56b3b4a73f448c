#include "fullend/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace fullend::ad {

bool GradcheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_err);
  return w;
}

std::string GradcheckReport::str() const {
  std::ostringstream os;
  for (const auto& e : entries)
    os << (e.passed ? "ok   " : "FAIL ") << e.name << " checked=" << e.checked << " max_rel=" << e.max_rel_err
       << " max_abs=" << e.max_abs_err << '\n';
  return os.str();
}

GradcheckReport gradcheck(const std::function<Tensor()>& loss, const ParamList& inputs,
                          const GradcheckOptions& options) {
  std::vector<bool> previous;
  for (const auto& p : inputs) {
    previous.push_back(p.tensor.requires_grad());
    Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.clear_grad();
  }
  loss().backward();

  GradcheckReport report;
  std::mt19937_64 rng(options.seed);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor t = inputs[k].tensor;
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    analytic.resize(t.size(), 0.0);
    std::vector<std::size_t> idx(t.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (options.max_entries > 0 && idx.size() > options.max_entries) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(options.max_entries);
      std::sort(idx.begin(), idx.end());
    }
    double scale = 0.0;
    for (double a : analytic) scale = std::max(scale, std::abs(a));
    GradcheckEntry e;
    e.name = inputs[k].name;
    NoGradGuard guard;
    for (std::size_t i : idx) {
      const double orig = t.data()[i];
      auto central = [&](double h) {
        t.data()[i] = orig + h;
        const double up = loss().item();
        t.data()[i] = orig - h;
        const double down = loss().item();
        t.data()[i] = orig;
        return (up - down) / (2.0 * h);
      };
      const double numeric = options.richardson
                                 ? (4.0 * central(0.5 * options.step) - central(options.step)) / 3.0
                                 : central(options.step);
      const double abs_err = std::abs(numeric - analytic[i]);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3 * scale, options.abs_floor, 1e-10});
      e.max_abs_err = std::max(e.max_abs_err, abs_err);
      e.max_rel_err = std::max(e.max_rel_err, abs_err / denom);
      ++e.checked;
    }
    e.passed = e.max_rel_err < options.tolerance;
    report.entries.push_back(e);
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor t = inputs[k].tensor;
    t.clear_grad();
    t.set_requires_grad(previous[k]);
  }
  return report;
}

}  // namespace fullend::ad
