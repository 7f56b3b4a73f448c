#pragma once

#include <string>
#include <vector>

#include "fullend/signal/dataset.hpp"
#include "fullend/train/systems.hpp"
#include "fullend/train/targets.hpp"

namespace fullend::train {

struct EvalRow {
  std::string scene;
  std::string system;
  double far_snr = 0.0;
  double near_snr = 0.0;
  std::string metric;  // estoi (of o = y + v), seg_snr, lsd
  double raw = 0.0;
  double normalized = 0.0;
};

struct EvalOptions {
  std::vector<System> systems;
  std::string checkpoint_dir = ".";
  unsigned threads = 1;
  EnhanceOptions enhance;
};

/// Rows ordered by system, then scene, then metric.
std::vector<EvalRow> evaluate(const std::vector<signal::Scene>& scenes, const MetricNormalizers& norm,
                              const EvalOptions& options);

/// Header: scene,system,far_snr,near_snr,metric,raw,normalized
std::string format_csv(const std::vector<EvalRow>& rows);

/// Mean raw score per system and metric for each far-end SNR (averaged over
/// the near-end SNRs), one column per far-end SNR.
std::string format_table(const std::vector<EvalRow>& rows);

/// Median of the raw values of one metric for one system.
double median_score(const std::vector<EvalRow>& rows, const std::string& system, const std::string& metric);

}  // namespace fullend::train
