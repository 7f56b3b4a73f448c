#include <catch_amalgamated.hpp>

#include <filesystem>
#include <set>

#include "fullend/error.hpp"
#include "fullend/signal/dataset.hpp"
#include "fullend/signal/mixing.hpp"
#include "fullend/signal/synth.hpp"
#include "fullend/signal/wav.hpp"
#include "support.hpp"

using namespace fullend;
using namespace fullend::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

dsp::Waveform unit_power(dsp::Waveform w) {
  const double g = 1.0 / std::sqrt(w.power());
  for (auto& v : w.samples) v *= g;
  return w;
}

signal::DatasetDescriptor small_descriptor() {
  signal::DatasetDescriptor d;
  d.train_count = 3;
  d.val_count = 1;
  d.test_sentences = 1;
  d.duration_s = 0.5;
  return d;
}

}  // namespace

TEST_CASE("mix_at_snr scales the noise to the requested SNR", "[mixing]") {
  const auto s = unit_power(white(1, 8000));
  const auto n = unit_power(white(2, 8000));
  CHECK_THAT(signal::mix_at_snr(s, n, 0.0).noise_scale, WithinAbs(1.0, 1e-12));
  const auto m6 = signal::mix_at_snr(s, n, 6.0);
  CHECK_THAT(m6.noise_scale, WithinRel(std::pow(10.0, -6.0 / 20.0), 1e-12));
  CHECK_THAT(m6.noise_scale, WithinAbs(0.5012, 1e-4));
  CHECK_THAT(signal::snr_db(s, m6.scaled_noise), WithinAbs(6.0, 0.01));
  CHECK_THAT(signal::snr_db(s, signal::mix_at_snr(s, n, -9.0).scaled_noise), WithinAbs(-9.0, 0.01));
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(m6.mixture.samples[i] == s.samples[i] + m6.scaled_noise.samples[i]);
}

TEST_CASE("realized SNR matches on random triples", "[mixing][property]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> snr(-30.0, 30.0), amp(1e-3, 10.0);
  std::uniform_int_distribution<std::size_t> len(16, 2000);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = len(rng);
    const auto s = white(rng(), n, amp(rng));
    const auto v = white(rng(), n, amp(rng));
    const double target = snr(rng);
    const auto m = signal::mix_at_snr(s, v, target);
    REQUIRE_THAT(signal::snr_db(s, m.scaled_noise), WithinAbs(target, 0.01));
  }
}

TEST_CASE("mix_at_snr rejects degenerate input", "[mixing]") {
  const auto s = white(1, 100);
  const dsp::Waveform zero(std::vector<double>(100, 0.0), 16000);
  CHECK_THROWS_AS(signal::mix_at_snr(zero, s, 0.0), ContractError);
  CHECK_THROWS_AS(signal::mix_at_snr(s, zero, 0.0), ContractError);
  CHECK_THROWS_AS(signal::mix_at_snr(s, white(2, 99), 0.0), ContractError);
}

TEST_CASE("observe adds the near-end noise", "[mixing]") {
  const auto y = white(1, 500), v = white(2, 500);
  const dsp::Waveform zero(std::vector<double>(500, 0.0), 16000);
  CHECK(signal::observe(y, zero).samples == y.samples);
  CHECK(signal::observe(zero, v).samples == v.samples);
  auto neg = v;
  for (auto& x : neg.samples) x = -x;
  for (double x : signal::observe(neg, v).samples) CHECK(x == 0.0);
  CHECK_THROWS_AS(signal::observe(y, white(3, 499)), ContractError);
}

TEST_CASE("synthetic speech has a speech-like envelope", "[synth]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto sp = signal::synth_speech(seed, 1.5);
    CHECK(sp.size() == 24000);
    CHECK_THAT(std::sqrt(sp.power()), WithinRel(0.05, 1e-9));
    CHECK(dsp::crest_factor(sp.samples) > dsp::crest_factor(white(seed, sp.size()).samples));
  }
  CHECK(signal::synth_speech(4, 1.0).samples == signal::synth_speech(4, 1.0).samples);
  CHECK(signal::synth_speech(4, 1.0).samples != signal::synth_speech(5, 1.0).samples);
}

TEST_CASE("every noise type is unit RMS and seeded", "[synth]") {
  for (auto t : {signal::NoiseType::White, signal::NoiseType::Pink, signal::NoiseType::Brown, signal::NoiseType::Hum,
                 signal::NoiseType::Babble, signal::NoiseType::Modulated, signal::NoiseType::Cafeteria,
                 signal::NoiseType::Announcement}) {
    const auto n = signal::synth_noise(t, 9, 0.5);
    CHECK_THAT(n.power(), WithinRel(1.0, 1e-9));
    CHECK(n.samples == signal::synth_noise(t, 9, 0.5).samples);
    CHECK(signal::parse_noise(signal::noise_name(t)) == t);
  }
  CHECK_THROWS_AS(signal::parse_noise("jackhammer"), ContractError);
}

TEST_CASE("scenes satisfy the mixing invariants", "[dataset]") {
  const auto scenes = signal::synthesize_scenes(small_descriptor());
  REQUIRE(scenes.size() == 3 + 1 + 9);
  for (const auto& sc : scenes) {
    CHECK(sc.s.size() == sc.u.size());
    CHECK(sc.s.size() == sc.v.size());
    CHECK(sc.s.size() == sc.x.size());
    CHECK_THAT(signal::snr_db(sc.s, sc.u), WithinAbs(sc.condition.far_snr_db, 0.01));
    CHECK_THAT(signal::snr_db(sc.s, sc.v), WithinAbs(sc.condition.near_snr_db, 0.01));
    for (std::size_t i = 0; i < sc.x.size(); ++i) REQUIRE(sc.x.samples[i] == sc.s.samples[i] + sc.u.samples[i]);
  }
}

TEST_CASE("test grid is unseen in training", "[dataset]") {
  const auto scenes = signal::synthesize_scenes(small_descriptor());
  std::set<double> train_far, train_near;
  std::set<signal::NoiseType> train_noise;
  for (const auto& sc : signal::filter_split(scenes, "train")) {
    train_far.insert(sc.condition.far_snr_db);
    train_near.insert(sc.condition.near_snr_db);
    train_noise.insert(sc.condition.far_noise);
    train_noise.insert(sc.condition.near_noise);
  }
  const auto test = signal::filter_split(scenes, "test");
  REQUIRE(!test.empty());
  for (const auto& sc : test) {
    CHECK(!train_far.count(sc.condition.far_snr_db));
    CHECK(!train_near.count(sc.condition.near_snr_db));
    CHECK(!train_noise.count(sc.condition.far_noise));
    CHECK(!train_noise.count(sc.condition.near_noise));
  }

  auto overlapping = small_descriptor();
  overlapping.test_far_snrs = {4, 10};
  CHECK_THROWS_AS(overlapping.validate(), ContractError);
  overlapping.strict_split = false;
  CHECK_NOTHROW(overlapping.validate());
}

TEST_CASE("zero counts give an empty collection", "[dataset]") {
  auto d = small_descriptor();
  d.train_count = d.val_count = d.test_sentences = 0;
  CHECK(signal::synthesize_scenes(d).empty());
}

TEST_CASE("synthesis is deterministic down to the WAV bytes", "[dataset]") {
  const auto a = signal::synthesize_scenes(small_descriptor());
  const auto b = signal::synthesize_scenes(small_descriptor());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    for (auto enc : {signal::WavEncoding::Float32, signal::WavEncoding::Pcm16}) {
      CHECK(signal::wav_encode(a[i].x, enc) == signal::wav_encode(b[i].x, enc));
      CHECK(signal::wav_encode(a[i].v, enc) == signal::wav_encode(b[i].v, enc));
    }
  }
  auto other = small_descriptor();
  other.seed = 2;
  CHECK(signal::synthesize_scenes(other)[0].x.samples != a[0].x.samples);
}

TEST_CASE("float32 WAV round trip is exact", "[wav]") {
  auto w = white(1, 1000, 0.3);
  for (auto& v : w.samples) v = static_cast<float>(v);
  const auto back = signal::wav_decode(signal::wav_encode(w, signal::WavEncoding::Float32));
  CHECK(back.sample_rate == 16000);
  CHECK(back.samples == w.samples);
}

TEST_CASE("PCM16 WAV round trip is within one LSB", "[wav]") {
  const dsp::Waveform half({0.5, -0.5, 0.25, 0.0}, 16000);
  const auto back = signal::wav_decode(signal::wav_encode(half, signal::WavEncoding::Pcm16));
  for (std::size_t i = 0; i < half.size(); ++i) CHECK(std::abs(back.samples[i] - half.samples[i]) <= std::ldexp(1.0, -15));
  const auto w = white(2, 1000, 0.2);
  const auto back2 = signal::wav_decode(signal::wav_encode(w, signal::WavEncoding::Pcm16));
  CHECK(max_abs_diff(back2.samples, w.samples) <= std::ldexp(1.0, -15));
}

TEST_CASE("WAV reader rejects stereo and malformed files", "[wav]") {
  auto bytes = signal::wav_encode(white(1, 100), signal::WavEncoding::Pcm16);
  auto stereo = bytes;
  stereo[22] = 2;  // channel count in the canonical fmt chunk
  CHECK_THROWS_AS(signal::wav_decode(stereo), IoError);
  CHECK_THROWS_AS(signal::wav_decode(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 30)), IoError);
  auto bad_tag = bytes;
  bad_tag[0] = 'X';
  CHECK_THROWS_AS(signal::wav_decode(bad_tag), IoError);
  auto eight_bit = bytes;
  eight_bit[34] = 8;
  CHECK_THROWS_AS(signal::wav_decode(eight_bit), IoError);
  CHECK_THROWS_AS(signal::wav_read("/nonexistent/file.wav"), IoError);
}

TEST_CASE("dataset files and manifest round trip", "[dataset]") {
  const auto dir = std::filesystem::temp_directory_path() / "fullend_test_dataset";
  std::filesystem::remove_all(dir);
  const auto scenes = signal::synthesize_scenes(small_descriptor());
  const auto manifest = signal::write_dataset(scenes, dir.string());
  const auto loaded = signal::load_scenes(manifest);
  REQUIRE(loaded.size() == scenes.size());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    CHECK(loaded[i].id == scenes[i].id);
    CHECK(loaded[i].split == scenes[i].split);
    CHECK(loaded[i].condition.far_snr_db == scenes[i].condition.far_snr_db);
    CHECK(loaded[i].condition.near_noise == scenes[i].condition.near_noise);
    for (std::size_t k = 0; k < scenes[i].x.size(); ++k)
      REQUIRE(loaded[i].x.samples[k] == static_cast<double>(static_cast<float>(scenes[i].x.samples[k])));
  }
  std::filesystem::remove_all(dir);

  signal::ManifestRecord r;
  r.id = "train_0001";
  r.split = "train";
  r.condition = {8.0, -7.0, signal::NoiseType::Pink, signal::NoiseType::Babble, 42};
  r.s_path = "train/train_0001_s.wav";
  r.u_path = "u.wav";
  r.v_path = "v.wav";
  r.x_path = "x.wav";
  const auto p = signal::parse_manifest_record(signal::format_manifest_record(r));
  CHECK(p.id == r.id);
  CHECK(p.condition.seed == 42);
  CHECK(p.condition.far_noise == signal::NoiseType::Pink);
  CHECK(p.s_path == r.s_path);
  CHECK_THROWS_AS(signal::parse_manifest_record("id=x split"), ContractError);
}
