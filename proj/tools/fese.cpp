// Command-line front end: synth, train, enhance, evaluate, gradcheck.
#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fullend/ad/checkpoint.hpp"
#include "fullend/error.hpp"
#include "fullend/signal/dataset.hpp"
#include "fullend/train/evaluate.hpp"
#include "fullend/train/gradcheck_suite.hpp"
#include "fullend/train/trainer.hpp"
#include "fullend/util/kv_config.hpp"
#include "fullend/util/log.hpp"

namespace fs = std::filesystem;
using namespace fullend;

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

// --out flag, then FESE_OUTPUT_DIR, then the config value.
std::string output_dir(const std::string& flag, const std::string& configured) {
  if (!flag.empty()) return flag;
  if (auto e = env("FESE_OUTPUT_DIR")) return *e;
  return configured;
}

unsigned thread_count(unsigned flag) {
  if (flag > 0) return flag;
  if (auto e = env("FESE_THREADS")) {
    const long n = std::strtol(e->c_str(), nullptr, 10);
    if (n <= 0) throw ContractError("FESE_THREADS must be a positive integer");
    return static_cast<unsigned>(n);
  }
  return 1;
}

void write_file(const std::string& path, const std::string& text) {
  if (const auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path + "'");
  f << text;
}

int cmd_synth(const std::string& config, const std::string& out) {
  auto d = signal::DatasetDescriptor::from_config(util::KvConfig::load(config));
  d.output_dir = output_dir(out, d.output_dir);
  d.validate();
  const auto manifest = signal::synthesize_dataset(d);
  std::cout << "wrote " << manifest << '\n';
  return 0;
}

struct TrainArgs {
  std::string config, profile, manifest, out, mode = "suite";
  long steps = -1;
};

int cmd_train(const TrainArgs& a) {
  auto cfg = util::KvConfig::load(a.config);
  if (!a.profile.empty()) cfg.set("model.profile", a.profile);
  if (a.steps >= 0) cfg.set("train.steps", std::to_string(a.steps));
  auto tc = train::TrainConfig::from_config(cfg);
  tc.output_dir = output_dir(a.out, tc.output_dir);

  std::vector<signal::Scene> scenes;
  const std::string manifest = !a.manifest.empty() ? a.manifest : cfg.get_string("train.manifest", "");
  if (!manifest.empty()) {
    scenes = signal::load_scenes(manifest);
  } else {
    auto d = signal::DatasetDescriptor::from_config(cfg);
    d.validate();
    scenes = signal::synthesize_scenes(d);
  }
  const auto train_set = signal::filter_split(scenes, "train");
  const auto val_set = signal::filter_split(scenes, "val");
  std::cerr << "training on " << train_set.size() << " scenes, validating on " << val_set.size() << " ("
            << tc.profile.describe() << ")\n";

  auto report = [](const std::string& name, const train::RunResult& r) {
    std::cout << name << ": val SI-SNR " << util::format_double(r.initial.si_snr) << " -> "
              << util::format_double(r.final.si_snr) << " dB, ESTOI(y+v) " << util::format_double(r.final.estoi_y)
              << ", ESTOI(s~+v) " << util::format_double(r.final.estoi_s) << ", " << r.checkpoint << '\n';
  };
  if (a.mode == "suite") {
    const auto s = train::train_suite(train_set, val_set, tc, [](const std::string& m) { std::cerr << m << '\n'; });
    report("joint+nt", s.joint_nt);
    report("joint", s.joint);
    report("nr_only", s.nr_only);
    report("le_only", s.le_only);
    return 0;
  }
  if (a.mode == "joint_nt") {
    tc.mode = train::TrainMode::Joint;
    tc.use_token = true;
  } else if (a.mode == "joint") {
    tc.mode = train::TrainMode::Joint;
    tc.use_token = false;
  } else {
    tc.mode = train::parse_train_mode(a.mode);
  }
  tc.run_name = a.mode;
  const auto norm = train::fit_normalizers(train_set);
  models::ModelBundle bundle(tc.profile, tc.seed);
  const auto r = train::train(bundle, train_set, val_set, norm, tc, [](const train::StepRecord& s) {
    if (s.step % 100 == 0) std::cerr << train::format_step(s) << '\n';
  });
  report(a.mode, r);
  return 0;
}

struct EnhanceArgs {
  std::string system, in, near, ckpt, run_dir, out;
};

int cmd_enhance(const EnhanceArgs& a) {
  const auto system = train::parse_system(a.system);
  const auto x = signal::wav_read(a.in);
  const auto v = signal::wav_read(a.near);
  std::unique_ptr<models::ModelBundle> bundle;
  if (train::needs_checkpoint(system)) {
    const std::string dir = output_dir(a.run_dir, "runs");
    const std::string path = !a.ckpt.empty() ? a.ckpt : (fs::path(dir) / train::checkpoint_file(system)).string();
    bundle = train::load_system_bundle(system, path);
  }
  const auto y = train::enhance(x, v, bundle.get(), system);
  signal::wav_write(y, a.out);
  return 0;
}

struct EvaluateArgs {
  std::string manifest, systems, ckpt_dir, split = "test", out;
  unsigned threads = 0;
};

train::MetricNormalizers normalizers_for(const std::string& ckpt_dir, const std::vector<signal::Scene>& scenes) {
  for (const char* name : {train::kJointTokenCheckpoint, train::kJointCheckpoint, train::kNeuralPipeCheckpoint}) {
    const auto path = fs::path(ckpt_dir) / name;
    if (fs::exists(path)) return train::MetricNormalizers::from_meta(ad::load_checkpoint(path.string()).meta);
  }
  const auto train_set = signal::filter_split(scenes, "train");
  if (train_set.empty())
    throw ContractError("no checkpoint with logistic parameters in '" + ckpt_dir + "' and no training split to fit them");
  std::cerr << "fitting logistic parameters on " << train_set.size() << " training scenes\n";
  return train::fit_normalizers(train_set);
}

int cmd_evaluate(const EvaluateArgs& a) {
  train::EvalOptions opts;
  opts.systems = train::parse_systems(a.systems);
  opts.checkpoint_dir = output_dir(a.ckpt_dir, "runs");
  opts.threads = thread_count(a.threads);
  const auto scenes = signal::load_scenes(a.manifest);
  const auto test = signal::filter_split(scenes, a.split);
  if (test.empty()) throw ContractError("manifest has no '" + a.split + "' scenes");
  const auto norm = normalizers_for(opts.checkpoint_dir, scenes);
  const auto rows = train::evaluate(test, norm, opts);
  const std::string csv = !a.out.empty() ? a.out : (fs::path(opts.checkpoint_dir) / "eval.csv").string();
  write_file(csv, train::format_csv(rows));
  const auto table = train::format_table(rows);
  write_file((fs::path(csv).parent_path() / "eval_table.txt").string(), table);
  std::cout << table << "wrote " << csv << '\n';
  return 0;
}

int cmd_gradcheck(const std::string& module, bool verbose) {
  bool ok = true;
  for (const auto& c : train::run_gradchecks(module)) {
    std::cout << train::format_gradcheck(c) << '\n';
    if (verbose || !c.passed()) std::cout << c.report.str();
    ok = ok && c.passed();
  }
  std::cout << (ok ? "gradcheck: all passed\n" : "gradcheck: FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full-end speech enhancement toolkit"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");

  std::string synth_config, synth_out;
  auto* synth = app.add_subcommand("synth", "Synthesize the dataset and its manifest");
  synth->add_option("--config", synth_config, "Dataset config")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out, "Output directory (overrides FESE_OUTPUT_DIR and the config)");

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "Train the neural systems");
  trn->add_option("--config", ta.config, "Train config")->required()->check(CLI::ExistingFile);
  trn->add_option("--profile", ta.profile, "Model profile")->check(CLI::IsMember({"tiny", "paper"}));
  trn->add_option("--manifest", ta.manifest, "Dataset manifest (default: synthesize in memory)");
  trn->add_option("--steps", ta.steps, "Override train.steps");
  trn->add_option("--out", ta.out, "Run directory");
  trn->add_option("--mode", ta.mode, "suite (all four runs) or a single run")
      ->check(CLI::IsMember({"suite", "joint_nt", "joint", "nr_only", "le_only"}));

  EnhanceArgs ea;
  auto* enh = app.add_subcommand("enhance", "Process one utterance with a system");
  enh->add_option("--system", ea.system, "System name")->required();
  enh->add_option("--in", ea.in, "Far-end input WAV")->required()->check(CLI::ExistingFile);
  enh->add_option("--near-noise", ea.near, "Near-end noise reference WAV")->required()->check(CLI::ExistingFile);
  enh->add_option("--ckpt", ea.ckpt, "Checkpoint (default: <run dir>/<system checkpoint>)");
  enh->add_option("--run-dir", ea.run_dir, "Run directory holding the checkpoints");
  enh->add_option("--out", ea.out, "Output WAV")->required();

  EvaluateArgs va;
  auto* ev = app.add_subcommand("evaluate", "Score systems on a dataset split");
  ev->add_option("--manifest", va.manifest, "Dataset manifest")->required()->check(CLI::ExistingFile);
  ev->add_option("--systems", va.systems, "Comma-separated system names")->required();
  ev->add_option("--ckpt-dir", va.ckpt_dir, "Run directory holding the checkpoints");
  ev->add_option("--split", va.split, "Split to score");
  ev->add_option("--out", va.out, "CSV path (default: <run dir>/eval.csv)");
  ev->add_option("--threads", va.threads, "Worker threads (default: FESE_THREADS or 1)");

  std::string module = "all";
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  bool gc_verbose = false;
  gc->add_option("--module", module, "Module to check");
  gc->add_flag("-v,--verbose", gc_verbose, "Print every checked tensor");

  CLI11_PARSE(app, argc, argv);
  util::set_quiet(quiet);
  try {
    if (*synth) return cmd_synth(synth_config, synth_out);
    if (*trn) return cmd_train(ta);
    if (*enh) return cmd_enhance(ea);
    if (*ev) return cmd_evaluate(va);
    if (*gc) return cmd_gradcheck(module, gc_verbose);
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
