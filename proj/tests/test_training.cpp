#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fullend/ad/checkpoint.hpp"
#include "fullend/error.hpp"
#include "fullend/signal/dataset.hpp"
#include "fullend/signal/mixing.hpp"
#include "fullend/train/losses.hpp"
#include "fullend/train/systems.hpp"
#include "fullend/train/targets.hpp"
#include "fullend/train/trainer.hpp"
#include "support.hpp"

using namespace fullend;
using namespace fullend::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using ad::Tensor;

namespace {

std::vector<signal::Scene> tiny_scenes() {
  signal::DatasetDescriptor d;
  d.train_count = 4;
  d.val_count = 2;
  d.test_sentences = 0;
  d.duration_s = 0.75;
  return signal::synthesize_scenes(d);
}

train::TrainConfig tiny_config(const std::string& dir, std::int64_t steps) {
  train::TrainConfig c;
  c.steps = steps;
  c.output_dir = (std::filesystem::temp_directory_path() / dir).string();
  return c;
}

std::vector<double> flatten(const ad::ParamList& params) {
  std::vector<double> v;
  for (const auto& p : params) v.insert(v.end(), p.tensor.values().begin(), p.tensor.values().end());
  return v;
}

}  // namespace

TEST_CASE("joint loss worked examples", "[loss]") {
  const auto si = Tensor::scalar(-12.0);
  train::LossWeights w;
  auto l = train::combine_loss(Tensor::from({1}, {0.5}), Tensor::from({2}, {1.0, 1.0}), si, w);
  CHECK(l.l_int == 0.25);
  CHECK(l.l_qua == 0.0);
  CHECK(l.l_sisnr == 12.0);

  l = train::combine_loss(Tensor::from({1}, {1.0}), Tensor::from({2}, {1.0, 1.0}), si, w);
  CHECK(l.value == w.beta * 12.0);

  train::LossWeights zero;
  zero.alpha = zero.beta = 0.0;
  l = train::combine_loss(Tensor::from({1}, {0.3}), Tensor::from({2}, {0.2, 0.9}), si, zero);
  CHECK(l.value == l.l_int);
  CHECK_THAT(l.l_int, WithinAbs(0.49, 1e-15));

  CHECK_THROWS_AS(train::combine_loss(Tensor::from({1}, {0.5}), Tensor::from({2}, {1.0, 1.0}), Tensor::scalar(std::nan("")), w),
                  NumericError);
  try {
    train::combine_loss(Tensor::from({1}, {0.5}), Tensor::from({2}, {1.0, 1.0}), Tensor::scalar(std::nan("")), w);
  } catch (const NumericError& e) {
    CHECK(e.where() == "L_sisnr");
  }
  train::LossWeights negative;
  negative.alpha = -1.0;
  CHECK_THROWS_AS(negative.validate(), ContractError);
}

TEST_CASE("discriminator loss is a mean squared error", "[loss]") {
  CHECK(train::disc_loss(Tensor::from({1}, {0.7}), {0.7}).item() == 0.0);
  CHECK(train::disc_loss(Tensor::from({1}, {0.0}), {1.0}).item() == 1.0);
  CHECK_THAT(train::disc_loss(Tensor::from({1}, {0.3}), {0.8}).item(), WithinAbs(0.25, 1e-15));
  CHECK_THAT(train::disc_loss(Tensor::from({2}, {0.3, 0.5}), {0.8, 0.5}).item(), WithinAbs(0.125, 1e-15));
  CHECK_THROWS_AS(train::disc_loss(Tensor::from({2}, {0.3, 0.5}), {0.8}), ContractError);
}

TEST_CASE("normalizers fit, serialise and build targets", "[targets]") {
  const auto scenes = tiny_scenes();
  const auto norm = train::fit_normalizers(signal::filter_split(scenes, "train"));
  CHECK(norm.estoi.k > 0.0);
  const auto back = train::MetricNormalizers::from_meta(norm.to_meta());
  CHECK(back.estoi.m == norm.estoi.m);
  CHECK(back.seg_snr.k == norm.seg_snr.k);
  CHECK(back.neg_lsd.m == norm.neg_lsd.m);

  const train::RawScores r{0.4, 5.0, -12.0};
  const auto ti = norm.int_targets(r, 3);
  CHECK(ti.size() == 3);
  CHECK(ti[0] == norm.estoi(0.4));
  CHECK(ti[2] == ti[0]);
  const auto tq = norm.qua_targets(r, 3);
  CHECK(tq[0] == norm.seg_snr(5.0));
  CHECK(tq[1] == norm.neg_lsd(-12.0));
  CHECK(tq[2] == tq[0]);

  const auto& sc = scenes.front();
  const auto raw = train::raw_scores(sc.x, sc.s, sc.v);
  CHECK(raw.estoi == metrics::estoi(signal::observe(sc.x, sc.v), sc.s));
  CHECK(raw.neg_lsd == -metrics::log_spectral_distance(sc.x, sc.s));
}

TEST_CASE("zero training steps keep the initialisation", "[train]") {
  const auto scenes = tiny_scenes();
  const auto norm = train::fit_normalizers(signal::filter_split(scenes, "train"));
  const auto cfg = tiny_config("fullend_train_zero", 0);
  models::ModelBundle bundle(cfg.profile, cfg.seed);
  const auto init = flatten(bundle.all_params());
  const auto r = train::train(bundle, signal::filter_split(scenes, "train"), signal::filter_split(scenes, "val"), norm, cfg);
  CHECK(r.steps.empty());
  const auto saved = models::ModelBundle::load(r.checkpoint);
  CHECK(flatten(saved->all_params()) == init);
  const auto manifest = util::KvConfig::load(r.manifest);
  CHECK(manifest.get_string("run.status", "") == "complete");
  CHECK(manifest.get_string("init.scheme", "") == models::kInitScheme);
  std::filesystem::remove_all(cfg.output_dir);
}

TEST_CASE("training is deterministic and isolates the two updates", "[train]") {
  const auto scenes = tiny_scenes();
  const auto tr = signal::filter_split(scenes, "train"), val = signal::filter_split(scenes, "val");
  const auto norm = train::fit_normalizers(tr);
  auto cfg = tiny_config("fullend_train_det", 5);

  models::ModelBundle a(cfg.profile, cfg.seed);
  std::vector<double> g_before = flatten(a.generator_params()), d_before = flatten(a.disc_params());
  std::vector<double> d_after_disc;
  bool isolated = true;
  const auto ra = train::train(
      a, tr, val, norm, cfg,
      [&](const train::StepRecord&) {
        // generator step: discriminators untouched, generator moved
        isolated &= flatten(a.disc_params()) == d_after_disc;
        isolated &= flatten(a.generator_params()) != g_before;
        g_before = flatten(a.generator_params());
        d_before = d_after_disc;
      },
      [&](std::int64_t) {
        // discriminator step: generator untouched, discriminators moved
        isolated &= flatten(a.generator_params()) == g_before;
        d_after_disc = flatten(a.disc_params());
        isolated &= d_after_disc != d_before;
      });
  CHECK(isolated);
  REQUIRE(ra.steps.size() == 5);

  models::ModelBundle b(cfg.profile, cfg.seed);
  const auto rb = train::train(b, tr, val, norm, cfg);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(train::format_step(ra.steps[i]) == train::format_step(rb.steps[i]));
    const auto& l = ra.steps[i].loss;
    CHECK(l.value == l.l_int + cfg.weights.alpha * l.l_qua + cfg.weights.beta * l.l_sisnr);
  }
  CHECK(flatten(a.all_params()) == flatten(b.all_params()));

  std::ifstream log(cfg.output_dir + "/joint_nt.losses.txt");
  std::string first;
  std::getline(log, first);
  CHECK(first == train::format_step(ra.steps[0]));
  std::filesystem::remove_all(cfg.output_dir);
}

TEST_CASE("single-module modes train only their module", "[train]") {
  const auto scenes = tiny_scenes();
  const auto tr = signal::filter_split(scenes, "train"), val = signal::filter_split(scenes, "val");
  const auto norm = train::fit_normalizers(tr);
  for (auto mode : {train::TrainMode::NrOnly, train::TrainMode::LeOnly}) {
    auto cfg = tiny_config("fullend_train_modes", 2);
    cfg.mode = mode;
    cfg.use_token = false;
    cfg.run_name = train::to_string(mode);
    models::ModelBundle b(cfg.profile, cfg.seed);
    const auto token = flatten(b.token_params()), crn = flatten(b.crn_params()), le = flatten(b.le_params());
    const auto disc = flatten(b.disc_params());
    const auto r = train::train(b, tr, val, norm, cfg);
    CHECK(flatten(b.token_params()) == token);
    if (mode == train::TrainMode::NrOnly) {
      CHECK(flatten(b.crn_params()) != crn);
      CHECK(flatten(b.le_params()) == le);
      CHECK(flatten(b.disc_params()) == disc);
      CHECK(r.steps[0].loss.value == r.steps[0].loss.l_sisnr);
    } else {
      CHECK(flatten(b.crn_params()) == crn);
      CHECK(flatten(b.le_params()) != le);
      CHECK(flatten(b.disc_params()) != disc);
    }
    std::filesystem::remove_all(cfg.output_dir);
  }
  CHECK_THROWS_AS(train::parse_train_mode("everything"), ContractError);
}

TEST_CASE("train config reads its section and validates", "[train]") {
  const auto cfg = util::KvConfig::parse("[train]\nalpha = 0.3\nsteps = 12\nmode = nr_only\n[model]\nprofile = tiny\n");
  const auto c = train::TrainConfig::from_config(cfg);
  CHECK(c.weights.alpha == 0.3);
  CHECK(c.weights.beta == 0.005);
  CHECK(c.steps == 12);
  CHECK(c.mode == train::TrainMode::NrOnly);
  CHECK(c.lr_gen == 2e-4);
  CHECK(c.lr_disc == 1e-4);
  auto bad = c;
  bad.lr_gen = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("system routing", "[systems]") {
  CHECK(train::system_names().size() == 7);
  for (const auto& n : train::system_names()) CHECK(train::to_string(train::parse_system(n)) == n);
  try {
    train::parse_system("joint+everything");
    FAIL("expected an error");
  } catch (const ContractError& e) {
    const std::string msg = e.what();
    for (const auto& n : train::system_names()) CHECK(msg.find(n) != std::string::npos);
  }
  CHECK(train::parse_systems("noisy,joint+nt").size() == 2);

  const auto scenes = tiny_scenes();
  const auto& sc = scenes.front();
  CHECK(train::enhance(sc.x, sc.v, nullptr, train::System::Noisy).samples == sc.x.samples);
  CHECK_THROWS_AS(train::enhance(sc.x, sc.v, nullptr, train::System::Joint), ContractError);

  models::ModelBundle bundle(models::ModelProfile::tiny(), 5);
  std::mt19937_64 g(1);
  std::normal_distribution<double> d(0.0, 0.05);
  for (auto& p : bundle.le_params())
    if (p.name == "le.fc.weight")
      for (auto& v : p.tensor.values()) v = d(g);
  const auto with_token = train::enhance(sc.x, sc.v, &bundle, train::System::JointNt);
  const auto joint = train::enhance(sc.x, sc.v, &bundle, train::System::Joint);
  CHECK(with_token.samples != joint.samples);
  std::fill(bundle.token.tokens.values().begin(), bundle.token.tokens.values().end(), 0.0);
  CHECK(train::enhance(sc.x, sc.v, &bundle, train::System::JointNt).samples == joint.samples);

  const auto le = train::enhance(sc.s, sc.v, &bundle, train::System::NoisyLe);
  CHECK_THAT(le.power(), WithinRel(sc.s.power(), 1e-6));
  CHECK(le.samples != sc.s.samples);

  for (auto s : {train::System::NoisyNr, train::System::NeuralPipe, train::System::DspPipe})
    CHECK(train::enhance(sc.x, sc.v, &bundle, s).size() == sc.x.size());

  try {
    train::load_system_bundle(train::System::Joint, "/nonexistent/joint.ckpt");
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/joint.ckpt") != std::string::npos);
  }
  CHECK(train::load_system_bundle(train::System::Noisy, "/nonexistent") == nullptr);
}
