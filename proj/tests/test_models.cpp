#include <catch_amalgamated.hpp>

#include <filesystem>

#include "fullend/ad/ops.hpp"
#include "fullend/error.hpp"
#include "fullend/models/bundle.hpp"
#include "support.hpp"

using namespace fullend;
using namespace fullend::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using ad::Tensor;

namespace {

double spectral_energy(const Tensor& spec) {
  double e = 0.0;
  for (double v : spec.values()) e += v * v;
  return e;
}

// Copy of x with every frame after t replaced by fresh noise.
Tensor perturb_after(const Tensor& x, std::size_t t, std::uint64_t seed) {
  auto y = x.detach();
  const std::size_t T = x.dim(1), F = x.dim(2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t tt = t + 1; tt < T; ++tt)
      for (std::size_t f = 0; f < F; ++f) y.data()[(c * T + tt) * F + f] = d(rng);
  return y;
}

void require_prefix_equal(const Tensor& a, const Tensor& b, std::size_t frames, std::size_t frame_width,
                          std::size_t planes = 1) {
  const std::size_t T = a.size() / (planes * frame_width);
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t i = 0; i < frames * frame_width; ++i) REQUIRE(a[p * T * frame_width + i] == b[p * T * frame_width + i]);
}

}  // namespace

TEST_CASE("profiles follow the published widths", "[profile]") {
  const auto paper = models::ModelProfile::paper();
  CHECK(paper.crn_encoder_channels == std::vector<std::size_t>{16, 32, 48, 64, 96, 128});
  CHECK(paper.crn_lstm_hidden == 512);
  CHECK(paper.crn_lstm_layers == 2);
  CHECK(paper.token_conv_channels == std::vector<std::size_t>{32, 32, 64, 64, 128, 128});
  CHECK(paper.token_count == 16);
  CHECK(paper.token_dim == 256);
  CHECK(paper.token_heads == 8);
  CHECK(paper.le_layers == 6);
  CHECK(paper.disc_channels.size() == 5);
  CHECK(paper.int_outputs == 3);
  const auto tiny = models::ModelProfile::tiny();
  CHECK(tiny.crn_lstm_hidden == 64);
  CHECK(tiny.int_outputs == 1);
  CHECK(tiny.qua_outputs == 2);
  CHECK(tiny.disc_channels == std::vector<std::size_t>{16, 32, 48, 64, 80});
  CHECK_THROWS_AS(models::ModelProfile::by_name("huge"), ContractError);
}

TEST_CASE("CRN encoder follows the frequency ladder and the decoder restores it", "[crn]") {
  const auto profile = models::ModelProfile::tiny();
  CHECK(profile.encoder_bin_ladder() == std::vector<std::size_t>{257, 128, 63, 31, 15, 7, 3});
  ad::ParamRng rng(1);
  models::Crn crn(profile, rng);
  const auto x = random_tensor({2, 5, 257}, 2, 0.1);
  const auto out = crn.forward(x, nullptr);
  CHECK(crn.last_encoder_bins() == std::vector<std::size_t>{128, 63, 31, 15, 7, 3});
  CHECK(out.mask.shape() == ad::Shape{2, 5, 257});
  CHECK(out.spec.shape() == ad::Shape{2, 5, 257});
  CHECK_THROWS_AS(crn.forward(random_tensor({2, 5, 256}, 3), nullptr), ContractError);
}

TEST_CASE("complex ratio mask algebra", "[crn]") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor({2, 6, 257}, rng());
    const std::size_t n = 6 * 257;
    std::vector<double> one(2 * n, 0.0), zero(2 * n, 0.0), imag(2 * n, 0.0);
    std::fill(one.begin(), one.begin() + n, 1.0);
    std::fill(imag.begin() + n, imag.end(), 1.0);
    const auto y1 = ad::cmul(Tensor::from({2, 6, 257}, one), x);
    const auto y0 = ad::cmul(Tensor::from({2, 6, 257}, zero), x);
    const auto yi = ad::cmul(Tensor::from({2, 6, 257}, imag), x);
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(y1[i] == x[i]);
      REQUIRE(y1[n + i] == x[n + i]);
      REQUIRE(y0[i] == 0.0);
      REQUIRE(y0[n + i] == 0.0);
      REQUIRE_THAT(yi[i], WithinAbs(-x[n + i], 1e-9));
      REQUIRE_THAT(yi[n + i], WithinAbs(x[i], 1e-9));
    }
  }
  // zero mask gives a silent waveform
  const auto cfg = dsp::StftConfig::standard();
  const auto zero_wave = ad::istft(Tensor::zeros({2, 6, 257}), 640, cfg);
  for (double v : zero_wave.values()) CHECK(v == 0.0);
}

TEST_CASE("LE gains span exp(-4) to exp(4)", "[le]") {
  const auto a = models::LeGenerator::gains(Tensor::from({1, 5}, {-1e3, -5.0, 0.0, 5.0, 1e3}));
  CHECK_THAT(a[0], WithinAbs(std::exp(-4.0), 1e-12));
  CHECK_THAT(a[2], WithinAbs(1.0, 1e-15));
  CHECK_THAT(a[4], WithinAbs(std::exp(4.0), 1e-9));
  CHECK_THAT(a[4], WithinAbs(54.598, 1e-3));
  CHECK_THAT(a[0], WithinAbs(0.0183, 1e-4));
  const auto r = models::LeGenerator::gains(random_tensor({50, 20}, 1, 10.0));
  for (double v : r.values()) {
    CHECK(v >= std::exp(-4.0) - 1e-9);
    CHECK(v <= std::exp(4.0) + 1e-9);
  }
}

TEST_CASE("LE output keeps the spectral energy of its input", "[le][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto s = random_tensor({2, 4, 9}, rng(), 0.1);
    const auto alpha = models::LeGenerator::gains(random_tensor({4, 9}, rng(), 3.0));
    const auto y = models::LeGenerator::apply(alpha, s);
    REQUIRE_THAT(spectral_energy(y), WithinRel(spectral_energy(s), 1e-6));
  }
  // u = 0 gives alpha = 1 and y = s
  const auto s = random_tensor({2, 4, 9}, 9, 0.1);
  const auto y = models::LeGenerator::apply(models::LeGenerator::gains(Tensor::zeros({4, 9})), s);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK_THAT(y[i], WithinAbs(s[i], 1e-15));
  // zero-energy input passes through
  const auto z = models::LeGenerator::apply(models::LeGenerator::gains(Tensor::zeros({4, 9})), Tensor::zeros({2, 4, 9}));
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("LE forward keeps phase and equal power", "[le]") {
  const auto profile = models::ModelProfile::tiny();
  ad::ParamRng rng(2);
  models::LeGenerator le(profile, rng);
  std::mt19937_64 g(3);
  std::normal_distribution<double> d(0.0, 0.05);
  for (auto& p : le.params())
    if (p.name == "le.fc.weight")
      for (auto& v : p.tensor.values()) v = d(g);
  const auto s = random_tensor({2, 7, 257}, 4, 0.1);
  const auto psd = random_tensor({7, 257}, 5);
  const auto out = le.forward(s, psd, nullptr);
  CHECK_THAT(spectral_energy(out.spec), WithinRel(spectral_energy(s), 1e-9));
  const std::size_t n = 7 * 257;
  for (std::size_t i = 0; i < n; i += 37) {
    const double phase_in = std::atan2(s[n + i], s[i]);
    const double phase_out = std::atan2(out.spec[n + i], out.spec[i]);
    CHECK_THAT(phase_out, WithinAbs(phase_in, 1e-9));
  }
  CHECK_THROWS_AS(le.forward(s, random_tensor({6, 257}, 6), nullptr), ContractError);
}

TEST_CASE("noise token attention is a convex combination of tokens", "[token]") {
  const auto profile = models::ModelProfile::tiny();
  ad::ParamRng rng(3);
  models::NoiseTokenNet net(profile, rng);
  const auto a = net.forward(random_tensor({2, 8, 257}, 1, 0.1));
  const std::size_t T = 8, N = profile.token_count;
  REQUIRE(a.weights.size() == profile.token_heads * T * N);
  for (std::size_t row = 0; row < profile.token_heads * T; ++row) {
    double s = 0.0;
    for (std::size_t k = 0; k < N; ++k) s += a.weights[row * N + k];
    CHECK_THAT(s, WithinAbs(1.0, 1e-6));
  }
  CHECK(a.embedding.shape() == ad::Shape{T, profile.embedding_dim()});

  // identical tokens make the embedding independent of the input
  for (std::size_t i = 0; i < net.tokens.size(); ++i) net.tokens.data()[i] = 0.01 * static_cast<double>(i % profile.token_dim);
  const auto e1 = net.forward(random_tensor({2, 8, 257}, 2, 0.1)).embedding;
  const auto e2 = net.forward(random_tensor({2, 8, 257}, 3, 1.0)).embedding;
  for (std::size_t i = 0; i < e1.size(); ++i) CHECK_THAT(e1[i], WithinAbs(e2[i], 1e-12));
}

TEST_CASE("discriminator scores lie strictly in (0, 1)", "[disc]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto profile = seed == 3 ? models::ModelProfile::paper() : models::ModelProfile::tiny();
    ad::ParamRng rng(seed);
    models::Discriminator d("d_int", profile, profile.int_outputs, rng);
    for (double amp : {1e-4, 1e-2, 1.0, 30.0}) {
      const auto a = random_tensor({2, 12, 257}, seed + 10, amp), b = random_tensor({2, 12, 257}, seed + 20, amp);
      const auto out = d.forward(models::disc_features(a, b));
      REQUIRE(out.size() == profile.int_outputs);
      for (double v : out.values()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }
}

TEST_CASE("generator-side modules are causal", "[causality][property]") {
  const auto profile = models::ModelProfile::tiny();
  models::ModelBundle bundle(profile, 4);
  std::mt19937_64 g(1);
  std::normal_distribution<double> d(0.0, 0.05);
  for (auto& p : bundle.le_params())
    if (p.name == "le.fc.weight")
      for (auto& v : p.tensor.values()) v = d(g);
  ad::NoGradGuard guard;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t T = 10, t = 2 + static_cast<std::size_t>(trial);
    const auto x = random_tensor({2, T, 257}, g(), 0.1);
    const auto x2 = perturb_after(x, t, g());
    const auto ta = bundle.token.forward(x), tb = bundle.token.forward(x2);
    require_prefix_equal(ta.embedding, tb.embedding, t + 1, profile.embedding_dim());
    require_prefix_equal(bundle.crn.mask(x, &ta.embedding), bundle.crn.mask(x2, &tb.embedding), t + 1, 257, 2);
    const auto psd = random_tensor({T, 257}, 7);
    require_prefix_equal(bundle.le.forward(x, psd, &ta.embedding).alpha, bundle.le.forward(x2, psd, &tb.embedding).alpha,
                         t + 1, 257);
  }
}

TEST_CASE("bundles are reproducible from seed and checkpoint", "[bundle]") {
  const auto profile = models::ModelProfile::tiny();
  models::ModelBundle a(profile, 9), b(profile, 9), c(profile, 10);
  const auto pa = a.all_params(), pb = b.all_params(), pc = c.all_params();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i].name == pb[i].name);
    for (std::size_t k = 0; k < pa[i].tensor.size(); ++k) {
      REQUIRE(pa[i].tensor[k] == pb[i].tensor[k]);
      any_diff |= pa[i].tensor[k] != pc[i].tensor[k];
    }
  }
  CHECK(any_diff);

  const auto path = (std::filesystem::temp_directory_path() / "fullend_bundle.ckpt").string();
  a.save(path, {{"note", "x"}});
  const auto loaded = models::ModelBundle::load(path);
  CHECK(loaded->profile().name == "tiny");
  const auto pl = loaded->all_params();
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (std::size_t k = 0; k < pa[i].tensor.size(); ++k) REQUIRE(pl[i].tensor[k] == pa[i].tensor[k]);
  std::filesystem::remove(path);
}
