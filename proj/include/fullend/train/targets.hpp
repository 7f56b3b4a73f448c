#pragma once

#include <map>
#include <string>
#include <vector>

#include "fullend/dsp/waveform.hpp"
#include "fullend/metrics/metrics.hpp"
#include "fullend/signal/dataset.hpp"

namespace fullend::train {

/// Raw metrics of a processed signal y heard in near-end noise v.
struct RawScores {
  double estoi = 0.0;    // ESTOI(y + v, s)
  double seg_snr = 0.0;  // segSNR(y, s)
  double neg_lsd = 0.0;  // -LSD(y, s)
};
RawScores raw_scores(const dsp::Waveform& y, const dsp::Waveform& s, const dsp::Waveform& v);

/// Logistic maps fitted once on the unprocessed training mixtures and frozen.
struct MetricNormalizers {
  metrics::Logistic estoi;
  metrics::Logistic seg_snr;
  metrics::Logistic neg_lsd;

  /// Discriminator targets; every intelligibility output regresses ESTOI.
  std::vector<double> int_targets(const RawScores& r, std::size_t outputs) const;
  /// Quality outputs regress segSNR then -LSD, repeating cyclically.
  std::vector<double> qua_targets(const RawScores& r, std::size_t outputs) const;

  std::map<std::string, std::string> to_meta() const;
  static MetricNormalizers from_meta(const std::map<std::string, std::string>& meta);
};

/// Fits each logistic on raw_scores(x, s, v) over the given scenes.
MetricNormalizers fit_normalizers(const std::vector<signal::Scene>& train_scenes);

}  // namespace fullend::train
