#include "fullend/train/evaluate.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include "fullend/error.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::train {

namespace {

std::vector<EvalRow> score_scene(const signal::Scene& sc, const dsp::Waveform& y, System system,
                                 const MetricNormalizers& norm) {
  const auto r = raw_scores(y, sc.s, sc.v);
  EvalRow base;
  base.scene = sc.id;
  base.system = to_string(system);
  base.far_snr = sc.condition.far_snr_db;
  base.near_snr = sc.condition.near_snr_db;
  std::vector<EvalRow> rows(3, base);
  rows[0].metric = "estoi";
  rows[0].raw = r.estoi;
  rows[0].normalized = norm.estoi(r.estoi);
  rows[1].metric = "seg_snr";
  rows[1].raw = r.seg_snr;
  rows[1].normalized = norm.seg_snr(r.seg_snr);
  rows[2].metric = "lsd";
  rows[2].raw = -r.neg_lsd;
  rows[2].normalized = norm.neg_lsd(r.neg_lsd);
  return rows;
}

}  // namespace

std::vector<EvalRow> evaluate(const std::vector<signal::Scene>& scenes, const MetricNormalizers& norm,
                              const EvalOptions& options) {
  if (options.systems.empty()) throw ContractError("evaluate: no systems");
  std::vector<EvalRow> rows;
  const unsigned threads = std::max(1u, options.threads);
  for (System system : options.systems) {
    const std::string path =
        needs_checkpoint(system)
            ? (std::filesystem::path(options.checkpoint_dir) / checkpoint_file(system)).string()
            : std::string();
    // One bundle per worker; models keep per-pass scratch state.
    std::vector<std::unique_ptr<models::ModelBundle>> bundles(threads);
    for (auto& b : bundles) b = load_system_bundle(system, path);

    std::vector<std::vector<EvalRow>> per_scene(scenes.size());
    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](unsigned w) {
      try {
        for (std::size_t i = w; i < scenes.size(); i += threads) {
          const auto& sc = scenes[i];
          const auto y = enhance(sc.x, sc.v, bundles[w].get(), system, options.enhance);
          per_scene[i] = score_scene(sc, y, system, norm);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (auto& r : per_scene) rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

std::string format_csv(const std::vector<EvalRow>& rows) {
  using util::format_double;
  std::ostringstream os;
  os << "scene,system,far_snr,near_snr,metric,raw,normalized\n";
  for (const auto& r : rows)
    os << r.scene << ',' << r.system << ',' << format_double(r.far_snr) << ',' << format_double(r.near_snr) << ','
       << r.metric << ',' << format_double(r.raw) << ',' << format_double(r.normalized) << '\n';
  return os.str();
}

std::string format_table(const std::vector<EvalRow>& rows) {
  std::vector<std::string> systems, metrics;
  std::set<double> fars;
  // (system, metric, far) -> near -> (sum, count)
  std::map<std::tuple<std::string, std::string, double>, std::map<double, std::pair<double, int>>> cells;
  for (const auto& r : rows) {
    if (std::find(systems.begin(), systems.end(), r.system) == systems.end()) systems.push_back(r.system);
    if (std::find(metrics.begin(), metrics.end(), r.metric) == metrics.end()) metrics.push_back(r.metric);
    fars.insert(r.far_snr);
    auto& c = cells[{r.system, r.metric, r.far_snr}][r.near_snr];
    c.first += r.raw;
    c.second += 1;
  }
  std::ostringstream os;
  os << std::fixed;
  for (const auto& metric : metrics) {
    os << metric << " (mean over near-end SNRs)\n";
    os << std::left << std::setw(12) << "system";
    for (double f : fars) os << std::right << std::setw(10) << ("far " + util::format_double(f));
    os << '\n';
    for (const auto& system : systems) {
      os << std::left << std::setw(12) << system;
      for (double f : fars) {
        const auto it = cells.find({system, metric, f});
        if (it == cells.end()) {
          os << std::right << std::setw(10) << "-";
          continue;
        }
        double acc = 0.0;
        for (const auto& [near, sc] : it->second) acc += sc.first / sc.second;
        os << std::right << std::setw(10) << std::setprecision(metric == "estoi" ? 3 : 2)
           << acc / static_cast<double>(it->second.size());
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

double median_score(const std::vector<EvalRow>& rows, const std::string& system, const std::string& metric) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.system == system && r.metric == metric) v.push_back(r.raw);
  if (v.empty()) throw ContractError("median_score: no rows for " + system + "/" + metric);
  return metrics::median(std::move(v));
}

}  // namespace fullend::train
