#include "fullend/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <tuple>
#include <utility>

#include "fullend/ad/adam.hpp"
#include "fullend/ad/ops.hpp"
#include "fullend/error.hpp"
#include "fullend/signal/mixing.hpp"
#include "fullend/signal/synth.hpp"
#include "fullend/train/pipeline.hpp"

namespace fullend::train {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Joint: return "joint";
    case TrainMode::NrOnly: return "nr_only";
    case TrainMode::LeOnly: return "le_only";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& s) {
  if (s == "joint") return TrainMode::Joint;
  if (s == "nr_only") return TrainMode::NrOnly;
  if (s == "le_only") return TrainMode::LeOnly;
  throw ContractError("unknown training mode '" + s + "' (valid: joint, nr_only, le_only)");
}

TrainConfig TrainConfig::from_config(const util::KvConfig& cfg) {
  TrainConfig c;
  c.weights.alpha = cfg.get_double("train.alpha", c.weights.alpha);
  c.weights.beta = cfg.get_double("train.beta", c.weights.beta);
  c.weights.t_int = cfg.get_double("train.t_int", c.weights.t_int);
  c.weights.t_qua = cfg.get_double("train.t_qua", c.weights.t_qua);
  c.lr_gen = cfg.get_double("train.lr_gen", c.lr_gen);
  c.lr_disc = cfg.get_double("train.lr_disc", c.lr_disc);
  c.steps = cfg.get_int("train.steps", c.steps);
  c.seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<std::int64_t>(c.seed)));
  c.mode = parse_train_mode(cfg.get_string("train.mode", to_string(c.mode)));
  c.use_token = cfg.get_bool("train.use_token", c.use_token);
  c.checkpoint_every = cfg.get_int("train.checkpoint_every", c.checkpoint_every);
  c.output_dir = cfg.get_string("train.output_dir", c.output_dir);
  c.run_name = cfg.get_string("train.run_name", c.run_name);
  c.profile = models::ModelProfile::from_config(cfg);
  c.estimator = noise::EstimatorParams::from_config(cfg, "noise");
  c.validate();
  return c;
}

util::KvConfig TrainConfig::snapshot() const {
  using util::format_double;
  util::KvConfig k;
  k.set("train.alpha", format_double(weights.alpha));
  k.set("train.beta", format_double(weights.beta));
  k.set("train.t_int", format_double(weights.t_int));
  k.set("train.t_qua", format_double(weights.t_qua));
  k.set("train.lr_gen", format_double(lr_gen));
  k.set("train.lr_disc", format_double(lr_disc));
  k.set("train.steps", std::to_string(steps));
  k.set("train.seed", std::to_string(seed));
  k.set("train.mode", to_string(mode));
  k.set("train.use_token", use_token ? "true" : "false");
  k.set("train.checkpoint_every", std::to_string(checkpoint_every));
  k.set("train.run_name", run_name);
  k.set("model.profile", profile.name);
  k.set("model.scale", std::to_string(profile.scale));
  k.set("model.int_outputs", std::to_string(profile.int_outputs));
  k.set("model.qua_outputs", std::to_string(profile.qua_outputs));
  k.set("noise.alpha_s", format_double(estimator.alpha_s));
  k.set("noise.min_window", std::to_string(estimator.min_window));
  k.set("noise.bias", format_double(estimator.bias));
  k.set("noise.alpha_d", format_double(estimator.alpha_d));
  k.set("noise.alpha_p", format_double(estimator.alpha_p));
  k.set("noise.delta", format_double(estimator.delta));
  return k;
}

void TrainConfig::validate() const {
  weights.validate();
  if (!(lr_gen > 0.0) || !(lr_disc > 0.0)) throw ContractError("learning rates must be positive");
  if (steps < 0) throw ContractError("train.steps must be non-negative");
  if (checkpoint_every < 0) throw ContractError("train.checkpoint_every must be non-negative");
  if (run_name.empty()) throw ContractError("train.run_name must not be empty");
  profile.validate();
  estimator.validate();
}

std::string format_step(const StepRecord& r) {
  using util::format_double;
  std::ostringstream os;
  os << "step=" << r.step << " scene=" << r.scene << " L=" << format_double(r.loss.value)
     << " L_int=" << format_double(r.loss.l_int) << " L_qua=" << format_double(r.loss.l_qua)
     << " L_sisnr=" << format_double(r.loss.l_sisnr) << " D_int=" << format_double(r.d_int_loss)
     << " D_qua=" << format_double(r.d_qua_loss);
  return os.str();
}

namespace {

void set_trainable(const ad::ParamList& params, bool on) {
  for (const auto& p : params) {
    auto t = p.tensor;
    t.set_requires_grad(on);
  }
}

GeneratorOptions options_for(const TrainConfig& cfg) {
  GeneratorOptions o;
  o.use_token = cfg.mode == TrainMode::Joint && cfg.use_token;
  o.run_nr = cfg.mode != TrainMode::LeOnly;
  o.run_le = cfg.mode != TrainMode::NrOnly;
  return o;
}

ad::ParamList generator_params_for(const models::ModelBundle& b, const TrainConfig& cfg) {
  ad::ParamList out;
  auto append = [&](const ad::ParamList& p) { out.insert(out.end(), p.begin(), p.end()); };
  switch (cfg.mode) {
    case TrainMode::Joint:
      if (cfg.use_token) append(b.token_params());
      append(b.crn_params());
      append(b.le_params());
      break;
    case TrainMode::NrOnly: append(b.crn_params()); break;
    case TrainMode::LeOnly: append(b.le_params()); break;
  }
  return out;
}

// The LE-only recipe feeds clean speech to the LE.
const dsp::Waveform& generator_input(const signal::Scene& sc, const TrainConfig& cfg) {
  return cfg.mode == TrainMode::LeOnly ? sc.s : sc.x;
}

std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

std::map<std::string, std::string> checkpoint_meta(const TrainConfig& cfg, const MetricNormalizers& norm,
                                                   std::int64_t step) {
  auto meta = norm.to_meta();
  meta["train.mode"] = to_string(cfg.mode);
  meta["train.use_token"] = cfg.use_token ? "true" : "false";
  meta["train.step"] = std::to_string(step);
  meta["train.run_name"] = cfg.run_name;
  return meta;
}

void put_report(util::KvConfig& k, const std::string& prefix, const ValidationReport& r) {
  using util::format_double;
  k.set(prefix + ".scenes", std::to_string(r.scenes));
  k.set(prefix + ".si_snr", format_double(r.si_snr));
  k.set(prefix + ".estoi_y", format_double(r.estoi_y));
  k.set(prefix + ".estoi_s", format_double(r.estoi_s));
  k.set(prefix + ".d_int_mse", format_double(r.d_int_mse));
  k.set(prefix + ".constant_mse", format_double(r.constant_mse));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace

ValidationReport validate_bundle(const models::ModelBundle& bundle, const std::vector<signal::Scene>& scenes,
                                 const MetricNormalizers& norm, const TrainConfig& cfg) {
  ad::NoGradGuard no_grad;
  const auto opts = options_for(cfg);
  ValidationReport r;
  std::vector<double> truth, pred;
  for (const auto& sc : scenes) {
    const auto in = prepare_inputs(generator_input(sc, cfg), sc.v, cfg.estimator);
    const auto g = generator_forward(bundle, in, opts);
    const auto s_tilde = to_waveform(g.s_wave, sc.s.sample_rate);
    const auto y = to_waveform(g.y_wave, sc.s.sample_rate);
    r.si_snr += metrics::si_snr(s_tilde, sc.s);
    r.estoi_s += metrics::estoi(signal::observe(s_tilde, sc.v), sc.s);
    const double ey = metrics::estoi(signal::observe(y, sc.v), sc.s);
    r.estoi_y += ey;
    if (opts.run_le) {
      const auto ctx = make_disc_context(sc.s, sc.v);
      const auto p = predict_int(bundle, g.y_wave, ctx);
      for (std::size_t i = 0; i < p.size(); ++i) {
        pred.push_back(p[i]);
        truth.push_back(norm.estoi(ey));
      }
    }
    ++r.scenes;
  }
  if (r.scenes == 0) return r;
  const double n = static_cast<double>(r.scenes);
  r.si_snr /= n;
  r.estoi_s /= n;
  r.estoi_y /= n;
  if (!truth.empty()) {
    double mean = 0.0;
    for (double t : truth) mean += t;
    mean /= static_cast<double>(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      r.d_int_mse += (pred[i] - truth[i]) * (pred[i] - truth[i]);
      r.constant_mse += (mean - truth[i]) * (mean - truth[i]);
    }
    r.d_int_mse /= static_cast<double>(truth.size());
    r.constant_mse /= static_cast<double>(truth.size());
  }
  return r;
}

RunResult train(models::ModelBundle& bundle, const std::vector<signal::Scene>& train_scenes,
                const std::vector<signal::Scene>& val_scenes, const MetricNormalizers& norm,
                const TrainConfig& cfg, const std::function<void(const StepRecord&)>& on_step,
                const std::function<void(std::int64_t)>& after_disc_step) {
  cfg.validate();
  if (train_scenes.empty()) throw ContractError("train: no training scenes");
  const auto start = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.output_dir);

  const auto opts = options_for(cfg);
  const bool adversarial = cfg.mode != TrainMode::NrOnly;
  LossWeights weights = cfg.weights;
  if (cfg.mode == TrainMode::LeOnly) weights.beta = 0.0;

  const auto g_params = generator_params_for(bundle, cfg);
  const auto d_params = bundle.disc_params();
  ad::AdamConfig g_cfg, d_cfg;
  g_cfg.lr = cfg.lr_gen;
  d_cfg.lr = cfg.lr_disc;
  ad::Adam g_opt(g_params, g_cfg);
  ad::Adam d_opt(d_params, d_cfg);

  RunResult result;
  result.checkpoint = join_path(cfg.output_dir, cfg.run_name + ".ckpt");
  result.manifest = join_path(cfg.output_dir, cfg.run_name + ".manifest.txt");
  const std::string loss_path = join_path(cfg.output_dir, cfg.run_name + ".losses.txt");
  result.initial = validate_bundle(bundle, val_scenes, norm, cfg);

  std::ostringstream loss_log;
  std::vector<std::string> periodic;
  auto write_manifest = [&](const std::string& status, std::int64_t last_good) {
    util::KvConfig m = cfg.snapshot();
    m.set("run.status", status);
    m.set("run.last_good_step", std::to_string(last_good));
    m.set("run.bundle_seed", std::to_string(bundle.seed()));
    m.set("run.parameters", std::to_string(models::parameter_count(g_params)));
    m.set("run.loss_log", loss_path);
    m.set("init.scheme", models::kInitScheme);
    for (const auto& [k, v] : norm.to_meta()) m.set(k, v);
    put_report(m, "validation.initial", result.initial);
    if (status == "complete") {
      put_report(m, "validation.final", result.final);
      m.set("checkpoint.final", result.checkpoint);
    }
    for (std::size_t i = 0; i < periodic.size(); ++i) m.set("checkpoint.periodic" + std::to_string(i), periodic[i]);
    write_text(loss_path, loss_log.str());
    write_text(result.manifest, m.serialize());
  };

  std::mt19937_64 order_rng(signal::mix_seed(cfg.seed, 7));
  std::vector<std::size_t> order(train_scenes.size());
  std::vector<std::optional<RawScores>> clean_scores(train_scenes.size());

  // One discriminator update on detached signals: the given generator outputs and s.
  auto disc_step = [&](std::size_t idx, const DiscContext& ctx, const std::vector<dsp::Waveform>& samples) {
    const auto& sc = train_scenes[idx];
    if (!clean_scores[idx]) clean_scores[idx] = raw_scores(sc.s, sc.s, sc.v);
    d_opt.zero_grad();
    ad::Tensor d_int_total, d_qua_total;
    for (std::size_t i = 0; i <= samples.size(); ++i) {
      const bool clean = i == samples.size();
      const dsp::Waveform& w = clean ? sc.s : samples[i];
      const RawScores r = clean ? *clean_scores[idx] : raw_scores(w, sc.s, sc.v);
      const auto wt = ad::Tensor::from({w.size()}, w.samples);
      const auto li = disc_loss(predict_int(bundle, wt, ctx), norm.int_targets(r, bundle.d_int.outputs()));
      const auto lq = disc_loss(predict_qua(bundle, wt, ctx), norm.qua_targets(r, bundle.d_qua.outputs()));
      d_int_total = d_int_total.defined() ? ad::add(d_int_total, li) : li;
      d_qua_total = d_qua_total.defined() ? ad::add(d_qua_total, lq) : lq;
    }
    const double inv = 1.0 / static_cast<double>(samples.size() + 1);
    d_int_total = ad::scale(d_int_total, inv);
    d_qua_total = ad::scale(d_qua_total, inv);
    const double li = d_int_total.item(), lq = d_qua_total.item();
    if (!std::isfinite(li)) throw NumericError("D_int loss", "non-finite");
    if (!std::isfinite(lq)) throw NumericError("D_qua loss", "non-finite");
    ad::add(d_int_total, d_qua_total).backward();
    d_opt.step();
    return std::pair{li, lq};
  };

  std::int64_t last_good = 0;
  try {
    for (std::int64_t step = 1; step <= cfg.steps; ++step) {
      const std::size_t pos = static_cast<std::size_t>(step - 1) % order.size();
      if (pos == 0) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), order_rng);
      }
      const auto& sc = train_scenes[order[pos]];
      const auto in = prepare_inputs(generator_input(sc, cfg), sc.v, cfg.estimator);
      const auto ctx = make_disc_context(sc.s, sc.v);
      StepRecord rec;
      rec.step = step;
      rec.scene = sc.id;

      const auto g = generator_forward(bundle, in, opts);

      if (adversarial) {
        const int sr = sc.s.sample_rate;
        std::vector<dsp::Waveform> samples{to_waveform(g.y_wave, sr)};
        if (opts.run_nr) samples.push_back(to_waveform(g.s_wave, sr));
        std::tie(rec.d_int_loss, rec.d_qua_loss) = disc_step(order[pos], ctx, samples);
        if (after_disc_step) after_disc_step(step);
      }

      // Generator step against the updated, frozen discriminators.
      set_trainable(d_params, false);
      g_opt.zero_grad();
      if (adversarial) {
        rec.loss = joint_loss(bundle, g.y_wave, g.s_wave, ctx, weights);
      } else {
        const auto si = ad::si_snr(g.s_wave, ctx.s);
        rec.loss.l_sisnr = -si.item();
        if (!std::isfinite(rec.loss.l_sisnr)) throw NumericError("L_sisnr", "non-finite loss component");
        rec.loss.total = ad::scale(si, -1.0);
        rec.loss.value = rec.loss.l_sisnr;
      }
      rec.loss.total.backward();
      g_opt.step();
      set_trainable(d_params, true);
      rec.loss.total = ad::Tensor();

      loss_log << format_step(rec) << '\n';
      if (on_step) on_step(rec);
      result.steps.push_back(rec);
      last_good = step;

      if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 && step != cfg.steps) {
        const auto path = join_path(cfg.output_dir, cfg.run_name + ".step" + std::to_string(step) + ".ckpt");
        bundle.save(path, checkpoint_meta(cfg, norm, step));
        periodic.push_back(path);
      }
    }
  } catch (const NumericError&) {
    set_trainable(d_params, true);
    write_manifest("aborted", last_good);
    throw;
  }

  result.final = validate_bundle(bundle, val_scenes, norm, cfg);
  bundle.save(result.checkpoint, checkpoint_meta(cfg, norm, cfg.steps));
  write_manifest("complete", last_good);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

SuiteResult train_suite(const std::vector<signal::Scene>& train_scenes, const std::vector<signal::Scene>& val_scenes,
                        const TrainConfig& base, const std::function<void(const std::string&)>& progress) {
  SuiteResult out;
  out.normalizers = fit_normalizers(train_scenes);
  auto run = [&](TrainMode mode, bool token, const std::string& name, models::ModelBundle& b) {
    TrainConfig c = base;
    c.mode = mode;
    c.use_token = token;
    c.run_name = name;
    if (progress) progress("training " + name);
    auto r = train(b, train_scenes, val_scenes, out.normalizers, c);
    if (progress) progress(name + " done in " + util::format_double(std::round(r.seconds)) + " s");
    return r;
  };

  {
    models::ModelBundle b(base.profile, base.seed);
    out.joint_nt = run(TrainMode::Joint, true, "joint_nt", b);
  }
  {
    models::ModelBundle b(base.profile, base.seed);
    out.joint = run(TrainMode::Joint, false, "joint", b);
  }
  models::ModelBundle nr(base.profile, base.seed);
  out.nr_only = run(TrainMode::NrOnly, false, "nr_only", nr);
  models::ModelBundle le(base.profile, base.seed);
  out.le_only = run(TrainMode::LeOnly, false, "le_only", le);

  models::ModelBundle pipe(base.profile, base.seed);
  models::copy_params(nr.crn_params(), pipe.crn_params());
  models::copy_params(le.le_params(), pipe.le_params());
  models::copy_params(le.disc_params(), pipe.disc_params());
  auto meta = out.normalizers.to_meta();
  meta["train.mode"] = "neuralpipe";
  meta["train.nr_checkpoint"] = out.nr_only.checkpoint;
  meta["train.le_checkpoint"] = out.le_only.checkpoint;
  pipe.save(join_path(base.output_dir, kNeuralPipeCheckpoint), meta);
  return out;
}

}  // namespace fullend::train
