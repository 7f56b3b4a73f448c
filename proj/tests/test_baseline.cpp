#include <catch_amalgamated.hpp>

#include "fullend/baseline/ssdrc.hpp"
#include "fullend/baseline/wiener.hpp"
#include "fullend/error.hpp"
#include "fullend/metrics/metrics.hpp"
#include "fullend/signal/dataset.hpp"
#include "fullend/signal/synth.hpp"
#include "support.hpp"

using namespace fullend;
using namespace fullend::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Wiener gain is bounded and monotone", "[wiener]") {
  double prev = 0.0;
  for (double xi = 0.0; xi < 1e4; xi = xi * 1.3 + 1e-3) {
    const double g = baseline::wiener_gain(xi, 0.1);
    CHECK(g >= 0.1);
    CHECK(g <= 1.0);
    CHECK(g >= prev);
    prev = g;
  }
  CHECK_THAT(baseline::wiener_gain(1.0, 0.1), WithinAbs(0.5, 1e-15));
  CHECK_THAT(baseline::wiener_gain(1e12, 0.1), WithinAbs(1.0, 1e-11));
  CHECK(baseline::wiener_gain(0.0, 0.1) == 0.1);
}

TEST_CASE("Wiener traced gains stay within the floor", "[wiener]") {
  const auto x = signal::synthesize_scenes({})[0].x;
  const auto r = baseline::wiener_enhance_traced(x);
  CHECK(r.output.size() == x.size());
  for (double g : r.gains.data) {
    REQUIRE(g >= 0.1);
    REQUIRE(g <= 1.0);
  }
}

TEST_CASE("Wiener with a zero noise PSD is near identity", "[wiener]") {
  const auto x = signal::synth_speech(2, 1.5);
  const auto spec = dsp::stft(x, dsp::StftConfig::standard());
  const auto r = baseline::wiener_enhance_with_psd(x, dsp::Matrix(spec.frames, spec.bins, 0.0));
  CHECK(metrics::si_snr(r.output, x) > 20.0);
}

TEST_CASE("Wiener suppresses stationary noise", "[wiener]") {
  const auto n = white(4, 5 * 16000, 0.1);
  const auto out = baseline::wiener_enhance(n);
  const std::size_t skip = 16000;
  double ein = 0.0, eout = 0.0;
  for (std::size_t i = skip; i < n.size(); ++i) {
    ein += n.samples[i] * n.samples[i];
    eout += out.samples[i] * out.samples[i];
  }
  INFO("energy ratio " << eout / ein);
  CHECK(eout < 0.1 * ein);
}

TEST_CASE("Wiener parameters are validated", "[wiener]") {
  baseline::WienerParams p;
  p.beta_dd = 1.0;
  CHECK_THROWS_AS(p.validate(), ContractError);
  p = {};
  p.gain_floor = 0.0;
  CHECK_THROWS_AS(p.validate(), ContractError);
}

TEST_CASE("SSDRC keeps the input power", "[ssdrc][property]") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(600, 8000);
  std::uniform_real_distribution<double> amp(1e-3, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = trial % 2 ? white(rng(), len(rng), amp(rng)) : signal::synth_speech(rng(), 0.4);
    const auto out = baseline::ssdrc(w);
    REQUIRE(out.size() == w.size());
    REQUIRE_THAT(out.power(), WithinRel(w.power(), 1e-6));
  }
}

TEST_CASE("SSDRC lowers crest factor and flattens the tilt of speech", "[ssdrc]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto sp = signal::synth_speech(seed, 2.0);
    const auto out = baseline::ssdrc(sp);
    CHECK(dsp::crest_factor(out.samples) <= dsp::crest_factor(sp.samples));
    CHECK(baseline::spectral_tilt(out) > baseline::spectral_tilt(sp));
  }
}

TEST_CASE("compression curve and time constants are validated", "[ssdrc]") {
  const auto knee = baseline::CompressionCurve::knee(-20.0, 3.0);
  CHECK_THAT(knee(-30.0), WithinAbs(-30.0, 1e-12));
  CHECK_THAT(knee(-5.0), WithinAbs(-15.0, 1e-12));
  baseline::SsdrcParams p;
  p.attack_ms = 30.0;
  CHECK_THROWS_AS(p.validate(), ContractError);
  p = {};
  p.curve.points = {{-40.0, -30.0}, {0.0, -35.0}};
  CHECK_THROWS_AS(p.validate(), ContractError);
}

TEST_CASE("dsppipe is SSDRC after Wiener", "[dsppipe]") {
  signal::DatasetDescriptor d;
  d.train_count = 10;
  d.val_count = d.test_sentences = 0;
  d.duration_s = 0.75;
  for (const auto& sc : signal::synthesize_scenes(d)) {
    const auto a = baseline::dsppipe(sc.x);
    const auto b = baseline::ssdrc(baseline::wiener_enhance(sc.x));
    REQUIRE(a.samples == b.samples);
  }
}
