#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "fullend/signal/dataset.hpp"
#include "fullend/train/evaluate.hpp"
#include "fullend/train/targets.hpp"
#include "support.hpp"

using namespace fullend;
using Catch::Matchers::WithinAbs;

namespace {

signal::DatasetDescriptor grid_descriptor() {
  signal::DatasetDescriptor d;
  d.train_count = 3;
  d.val_count = 0;
  d.test_sentences = 1;
  d.duration_s = 0.75;
  return d;
}

}  // namespace

TEST_CASE("evaluation covers the full test grid and is reproducible", "[evaluate]") {
  const auto scenes = signal::synthesize_scenes(grid_descriptor());
  const auto test = signal::filter_split(scenes, "test");
  const auto norm = train::fit_normalizers(signal::filter_split(scenes, "train"));
  train::EvalOptions opt;
  opt.systems = train::parse_systems("noisy,dsppipe");
  const auto rows = train::evaluate(test, norm, opt);

  std::map<std::tuple<std::string, std::string, double, double>, int> cells;
  for (const auto& r : rows) {
    ++cells[{r.system, r.metric, r.far_snr, r.near_snr}];
    if (r.metric == "estoi") CHECK(r.normalized == norm.estoi(r.raw));
    if (r.metric == "lsd") CHECK(r.normalized == norm.neg_lsd(-r.raw));
  }
  CHECK(cells.size() == 2 * 3 * 9);
  std::set<double> far, near;
  for (const auto& [key, n] : cells) {
    CHECK(n == 1);
    far.insert(std::get<2>(key));
    near.insert(std::get<3>(key));
  }
  CHECK(far == std::set<double>{6, 10, 14});
  CHECK(near == std::set<double>{-9, -5, -1});

  const auto csv = train::format_csv(rows);
  CHECK(csv.rfind("scene,system,far_snr,near_snr,metric,raw,normalized\n", 0) == 0);
  CHECK(train::format_csv(train::evaluate(test, norm, opt)) == csv);
  opt.threads = 3;
  CHECK(train::format_csv(train::evaluate(test, norm, opt)) == csv);

  // noisy passes x through, so its scores are those of the unprocessed mixture
  for (const auto& r : rows)
    if (r.system == "noisy" && r.metric == "seg_snr") {
      const auto it = std::find_if(test.begin(), test.end(), [&](const auto& s) { return s.id == r.scene; });
      CHECK(r.raw == metrics::seg_snr(it->x, it->s));
    }
}

TEST_CASE("table columns average the near-end SNRs", "[evaluate]") {
  std::vector<train::EvalRow> rows;
  const std::vector<double> far{6, 10, 14}, near{-9, -5, -1};
  double expected[3] = {0, 0, 0};
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t n = 0; n < 3; ++n) {
      const double raw = 0.1 * static_cast<double>(f) + 0.01 * static_cast<double>(n * n);
      expected[f] += raw / 3.0;
      rows.push_back({"s" + std::to_string(f * 3 + n), "joint+nt", far[f], near[n], "estoi", raw, 0.5});
    }
  const auto table = train::format_table(rows);
  INFO(table);
  CHECK(table.find("joint+nt") != std::string::npos);
  for (double e : expected) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << e;
    CHECK(table.find(os.str()) != std::string::npos);
  }
  CHECK_THAT(train::median_score(rows, "joint+nt", "estoi"), WithinAbs(0.11, 1e-12));
}
