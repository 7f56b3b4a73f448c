#include "fullend/train/gradcheck_suite.hpp"

#include <cstdio>
#include <functional>
#include <random>

#include "fullend/ad/layers.hpp"
#include "fullend/ad/ops.hpp"
#include "fullend/error.hpp"
#include "fullend/models/bundle.hpp"
#include "fullend/signal/mixing.hpp"
#include "fullend/signal/synth.hpp"
#include "fullend/train/losses.hpp"
#include "fullend/train/pipeline.hpp"

namespace fullend::train {

namespace {

using ad::ParamList;
using ad::Tensor;

constexpr std::size_t kToyLength = 640;  // 6 frames at hop 128
// Noise-token weights reach the composed loss with gradients near 1e-8, where
// central differences bottom out on roundoff; errors under 1e-8 are not judged.
constexpr double kCompositionFloor = 1e-5;
// The composed loss has PReLU kinks and log-spectrum curvature close to many
// entries, so it needs a narrow step.
constexpr double kCompositionStep = 2e-6;

Tensor random_tensor(const ad::Shape& s, std::mt19937_64& rng, bool grad = true) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(ad::shape_size(s));
  for (auto& x : v) x = n(rng);
  return Tensor::from(s, std::move(v), grad);
}

// A fixed random projection turns any output into a scalar.
Tensor project(const Tensor& y) {
  std::mt19937_64 rng(9);
  return ad::sum(ad::mul(y, random_tensor(y.shape(), rng, false)));
}

ParamList params_of(const ad::Layer& l) {
  ParamList p;
  l.collect(p);
  return p;
}

ParamList with(ParamList p, std::initializer_list<ad::NamedTensor> extra) {
  p.insert(p.end(), extra.begin(), extra.end());
  return p;
}

struct Runner {
  std::vector<GradcheckCase>& out;
  void operator()(const std::string& module, const std::string& name, double tol,
                  const std::function<Tensor()>& loss, const ParamList& inputs, std::size_t max_entries = 0,
                  double step = 1e-5, double abs_floor = 0.0, bool richardson = false) {
    ad::GradcheckOptions o;
    o.abs_floor = abs_floor;
    o.richardson = richardson;
    o.tolerance = tol;
    o.step = step;
    o.max_entries = max_entries;
    GradcheckCase c;
    c.module = module;
    c.name = name;
    c.tolerance = tol;
    c.report = ad::gradcheck(loss, inputs, o);
    out.push_back(std::move(c));
  }
};

void check_layers(Runner& run) {
  std::mt19937_64 rng(3);
  ad::ParamRng init(11);
  const double tol = kLayerTolerance;
  {
    ad::Linear l("linear", 7, 3, init);
    auto x = random_tensor({5, 7}, rng);
    run("layers", "Linear", tol, [&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
  }
  {
    ad::Conv2dGeometry g;
    g.stride_f = 2;
    g.pad_t_before = 2;
    ad::Conv2d l("conv2d", 2, 3, 3, 3, g, init);
    auto x = random_tensor({2, 6, 9}, rng);
    run("layers", "Conv2d", tol, [&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
  }
  {
    ad::ConvTranspose2d l("convt", 3, 2, 3, 2, 1, init);
    auto x = random_tensor({3, 4, 5}, rng);
    run("layers", "ConvTranspose2d", tol, [&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
  }
  {
    ad::Conv1dCausal l("conv1d", 4, 3, 3, init);
    auto x = random_tensor({6, 4}, rng);
    run("layers", "Conv1dCausal", tol, [&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
  }
  {
    ad::FrameLayerNorm l("frame_ln", 3);
    auto x = random_tensor({3, 4, 5}, rng);
    run("layers", "FrameLayerNorm", tol, [&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
  }
  {
    ad::CumulativeLayerNorm l("cum_ln", 4);
    auto x = random_tensor({6, 4}, rng);
    run("layers", "CumulativeLayerNorm", tol, [&] { return project(l.forward(x)); },
        with(params_of(l), {{"x", x}}));
  }
  {
    ad::PRelu l("prelu", 3, 0);
    auto x = random_tensor({3, 4, 5}, rng);
    run("layers", "PRelu", tol, [&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
  }
  {
    ad::Lstm l("lstm", 3, 8, init);
    auto x = random_tensor({5, 3}, rng);
    run("layers", "Lstm", tol, [&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
  }
  {
    ad::MultiHeadAttention l("mha", 16, 4, init);
    auto q = random_tensor({4, 16}, rng);
    auto m = random_tensor({5, 16}, rng);
    run("layers", "MultiHeadAttention", tol, [&] { return project(l.forward(q, m)); },
        with(params_of(l), {{"query", q}, {"memory", m}}));
  }
}

void check_ops(Runner& run) {
  std::mt19937_64 rng(5);
  const double tol = kLayerTolerance;
  const auto cfg = dsp::StftConfig::standard(16000);
  {
    auto w = random_tensor({kToyLength}, rng);
    run("ops", "stft", tol, [&] { return project(ad::stft(w, cfg)); }, {{"wave", w}}, 64);
  }
  {
    auto s = random_tensor({2, dsp::frame_count(kToyLength, cfg), cfg.bins()}, rng);
    run("ops", "istft", tol, [&] { return project(ad::istft(s, kToyLength, cfg)); }, {{"spec", s}}, 64);
  }
  {
    auto m = random_tensor({2, 3, 4}, rng);
    auto x = random_tensor({2, 3, 4}, rng);
    run("ops", "cmul", tol, [&] { return project(ad::cmul(m, x)); }, {{"mask", m}, {"spec", x}});
  }
  {
    auto g = random_tensor({3, 4}, rng);
    auto x = random_tensor({2, 3, 4}, rng);
    run("ops", "apply_gain", tol, [&] { return project(ad::apply_gain(g, x)); }, {{"gain", g}, {"spec", x}});
  }
  {
    auto x = random_tensor({2, 3, 4}, rng);
    run("ops", "log_magnitude", tol, [&] { return project(ad::log_magnitude(x)); }, {{"spec", x}});
    run("ops", "log_power", tol, [&] { return project(ad::log_power(x)); }, {{"spec", x}});
  }
  {
    auto a = random_tensor({2, 3, 4}, rng);
    auto b = random_tensor({2, 3, 4}, rng);
    run("ops", "match_energy", tol, [&] { return project(ad::match_energy(a, b)); }, {{"a", a}, {"ref", b}});
  }
  {
    auto a = random_tensor({50}, rng);
    std::vector<double> ref(50);
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = std::sin(0.3 * static_cast<double>(i));
    run("ops", "si_snr", tol, [&] { return ad::si_snr(a, ref); }, {{"est", a}});
  }
  {
    auto u = random_tensor({3, 4}, rng);
    run("ops", "le_gains", tol, [&] { return project(models::LeGenerator::gains(u)); }, {{"u", u}});
  }
}

struct ToyScene {
  dsp::Waveform s, v, x;
};

// 6 frames cut from the middle of a voiced utterance.
ToyScene toy_scene() {
  constexpr std::size_t offset = 8000;
  auto cut = [](dsp::Waveform w) {
    w.samples = std::vector<double>(w.samples.begin() + offset, w.samples.begin() + offset + kToyLength);
    return w;
  };
  ToyScene t;
  t.s = cut(signal::synth_speech(21, 1.0, 16000));
  const auto u = cut(signal::synth_noise(signal::NoiseType::White, 22, 1.0, 16000));
  const auto v = cut(signal::synth_noise(signal::NoiseType::Babble, 23, 1.0, 16000));
  t.x = signal::mix_at_snr(t.s, u, 5.0).mixture;
  t.v = signal::mix_at_snr(t.s, v, -5.0).scaled_noise;
  return t;
}

void check_networks(Runner& run, const std::string& module) {
  const double tol = kEndToEndTolerance;
  constexpr std::size_t sample = 6;
  // Network losses are large sums, so roundoff dominates small steps; the
  // extrapolated difference allows a wider one.
  constexpr double step = 3e-5;
  models::ModelBundle b(models::ModelProfile::tiny(), 17);
  const auto scene = toy_scene();
  const auto in = prepare_inputs(scene.x, scene.v);
  const auto ctx = make_disc_context(scene.s, scene.v);
  std::mt19937_64 rng(7);
  // The LE output layer starts at zero; perturb it so gradients reach the LE conv stack.
  std::normal_distribution<double> n(0.0, 0.05);
  for (auto& p : b.le_params())
    if (p.name == "le.fc.weight")
      for (auto& w : p.tensor.values()) w = n(rng);

  if (module == "token" || module == "all") {
    run("token", "NoiseTokenNet", tol, [&] { return project(b.token.forward(in.x_spec).embedding); },
        b.token_params(), sample, step, 0.0, true);
  }
  if (module == "crn" || module == "all") {
    auto emb = random_tensor({in.x_spec.dim(1), b.profile().embedding_dim()}, rng);
    run("crn", "Crn", tol, [&] { return project(b.crn.forward(in.x_spec, &emb).spec); },
        with(b.crn_params(), {{"embedding", emb}}), sample, step, 0.0, true);
  }
  if (module == "le" || module == "all") {
    auto emb = random_tensor({in.x_spec.dim(1), b.profile().embedding_dim()}, rng);
    run("le", "LeGenerator", tol, [&] { return project(b.le.forward(in.x_spec, in.near_psd, &emb).spec); },
        with(b.le_params(), {{"embedding", emb}}), sample, step, 0.0, true);
  }
  if (module == "disc" || module == "all") {
    auto f = models::disc_features(in.x_spec, ctx.v_spec);
    run("disc", "Discriminator", tol, [&] { return project(b.d_int.forward(f)); }, b.d_int.params(), sample, step,
        0.0, true);
  }
  if (module == "generator" || module == "all") {
    LossWeights w;
    GeneratorOptions opts;
    run("generator", "token->NR->iSTFT->LE->renorm->D", tol,
        [&] {
          const auto g = generator_forward(b, in, opts);
          return joint_loss(b, g.y_wave, g.s_wave, ctx, w).total;
        },
        b.generator_params(), sample, kCompositionStep, kCompositionFloor, true);
  }
}

}  // namespace

const std::vector<std::string>& gradcheck_modules() {
  static const std::vector<std::string> m{"layers", "ops", "token", "crn", "le", "disc", "generator"};
  return m;
}

std::vector<GradcheckCase> run_gradchecks(const std::string& module) {
  bool known = module == "all";
  for (const auto& m : gradcheck_modules()) known = known || m == module;
  if (!known) {
    std::string valid = "all";
    for (const auto& m : gradcheck_modules()) valid += ", " + m;
    throw ContractError("unknown gradcheck module '" + module + "' (valid: " + valid + ")");
  }
  std::vector<GradcheckCase> out;
  Runner run{out};
  if (module == "layers" || module == "all") check_layers(run);
  if (module == "ops" || module == "all") check_ops(run);
  if (module != "layers" && module != "ops") check_networks(run, module);
  return out;
}

std::string format_gradcheck(const GradcheckCase& c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-34s %s  worst rel err %.2e (tol %.0e)", c.module.c_str(), c.name.c_str(),
                c.passed() ? "PASS" : "FAIL", c.report.worst(), c.tolerance);
  return buf;
}

}  // namespace fullend::train
