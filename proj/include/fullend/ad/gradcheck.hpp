#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fullend/ad/tensor.hpp"

namespace fullend::ad {

struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Entries checked per tensor; larger tensors are sampled deterministically.
  std::size_t max_entries = 0;  // 0 = all
  std::uint64_t seed = 1;
  /// Lower bound on the relative-error denominator: absolute errors below
  /// abs_floor * tolerance always pass (finite-difference roundoff floor).
  double abs_floor = 0.0;
  /// Richardson-extrapolated central difference from steps h and h/2 (O(h^4) error).
  bool richardson = false;
};

struct GradcheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool passed() const;
  double worst() const;
  std::string str() const;
};

/// Compares backward() of `loss` against central differences for every listed
/// tensor. Relative error per entry is |a - n| / max(|a|, |n|, 1e-3 * max|a| over the
/// tensor, abs_floor, 1e-10), so entries that are tiny relative to their tensor are
/// judged on an absolute scale.
GradcheckReport gradcheck(const std::function<Tensor()>& loss, const ParamList& inputs,
                          const GradcheckOptions& options = {});

}  // namespace fullend::ad
