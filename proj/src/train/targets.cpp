#include "fullend/train/targets.hpp"

#include "fullend/error.hpp"
#include "fullend/signal/mixing.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::train {

RawScores raw_scores(const dsp::Waveform& y, const dsp::Waveform& s, const dsp::Waveform& v) {
  RawScores r;
  r.estoi = metrics::estoi(signal::observe(y, v), s);
  r.seg_snr = metrics::seg_snr(y, s);
  r.neg_lsd = -metrics::log_spectral_distance(y, s);
  return r;
}

std::vector<double> MetricNormalizers::int_targets(const RawScores& r, std::size_t outputs) const {
  return std::vector<double>(outputs, estoi(r.estoi));
}

std::vector<double> MetricNormalizers::qua_targets(const RawScores& r, std::size_t outputs) const {
  const double q[2] = {seg_snr(r.seg_snr), neg_lsd(r.neg_lsd)};
  std::vector<double> out(outputs);
  for (std::size_t i = 0; i < outputs; ++i) out[i] = q[i % 2];
  return out;
}

std::map<std::string, std::string> MetricNormalizers::to_meta() const {
  using util::format_double;
  return {{"logistic.estoi.m", format_double(estoi.m)},     {"logistic.estoi.k", format_double(estoi.k)},
          {"logistic.seg_snr.m", format_double(seg_snr.m)}, {"logistic.seg_snr.k", format_double(seg_snr.k)},
          {"logistic.neg_lsd.m", format_double(neg_lsd.m)}, {"logistic.neg_lsd.k", format_double(neg_lsd.k)}};
}

MetricNormalizers MetricNormalizers::from_meta(const std::map<std::string, std::string>& meta) {
  auto get = [&](const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) throw IoError("missing logistic parameter '" + key + "'");
    return std::stod(it->second);
  };
  MetricNormalizers n;
  n.estoi = {get("logistic.estoi.m"), get("logistic.estoi.k")};
  n.seg_snr = {get("logistic.seg_snr.m"), get("logistic.seg_snr.k")};
  n.neg_lsd = {get("logistic.neg_lsd.m"), get("logistic.neg_lsd.k")};
  return n;
}

MetricNormalizers fit_normalizers(const std::vector<signal::Scene>& train_scenes) {
  if (train_scenes.empty()) throw ContractError("fit_normalizers: no training scenes");
  std::vector<double> e, q, l;
  for (const auto& sc : train_scenes) {
    const auto r = raw_scores(sc.x, sc.s, sc.v);
    e.push_back(r.estoi);
    q.push_back(r.seg_snr);
    l.push_back(r.neg_lsd);
  }
  return {metrics::fit_logistic(e), metrics::fit_logistic(q), metrics::fit_logistic(l)};
}

}  // namespace fullend::train
