#pragma once

#include <string>
#include <vector>

#include "fullend/ad/gradcheck.hpp"

namespace fullend::train {

struct GradcheckCase {
  std::string module;
  std::string name;
  double tolerance = 1e-4;
  ad::GradcheckReport report;
  bool passed() const { return report.passed(); }
};

inline constexpr double kLayerTolerance = 1e-4;
inline constexpr double kEndToEndTolerance = 1e-3;

/// layers, ops, token, crn, le, disc, generator
const std::vector<std::string>& gradcheck_modules();

/// Finite-difference checks in double precision. Layers and ops use a 1e-4
/// relative tolerance; whole networks and the generator composition
/// (token -> NR -> iSTFT -> LE -> renormalization -> D, on 6 frames) use 1e-3.
/// `module` is one of gradcheck_modules() or "all".
std::vector<GradcheckCase> run_gradchecks(const std::string& module = "all");

std::string format_gradcheck(const GradcheckCase& c);

}  // namespace fullend::train
