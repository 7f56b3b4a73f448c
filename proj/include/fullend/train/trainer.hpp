#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fullend/models/bundle.hpp"
#include "fullend/noise/noise_estimator.hpp"
#include "fullend/signal/dataset.hpp"
#include "fullend/train/losses.hpp"
#include "fullend/train/targets.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::train {

/// joint: token (optional) + NR + LE against both discriminators.
/// nr_only: NR alone on -SI-SNR. le_only: LE alone on clean input, L_int + alpha L_qua.
enum class TrainMode { Joint, NrOnly, LeOnly };
std::string to_string(TrainMode m);
TrainMode parse_train_mode(const std::string& s);

struct TrainConfig {
  LossWeights weights;
  double lr_gen = 2e-4;
  double lr_disc = 1e-4;
  std::int64_t steps = 2000;
  std::uint64_t seed = 1;
  models::ModelProfile profile = models::ModelProfile::tiny();
  TrainMode mode = TrainMode::Joint;
  bool use_token = true;
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::string output_dir = "runs";
  std::string run_name = "joint_nt";
  noise::EstimatorParams estimator;

  /// [train] and [model] sections; missing keys keep their defaults.
  static TrainConfig from_config(const util::KvConfig& cfg);
  util::KvConfig snapshot() const;
  void validate() const;
};

struct StepRecord {
  std::int64_t step = 0;
  std::string scene;
  JointLoss loss;  // `total` left undefined once logged
  double d_int_loss = 0.0;
  double d_qua_loss = 0.0;
};
std::string format_step(const StepRecord& r);

/// Validation summary of one model state.
struct ValidationReport {
  double si_snr = 0.0;          // mean SI-SNR(s~, s), dB
  double estoi_y = 0.0;         // mean ESTOI(y + v, s)
  double estoi_s = 0.0;         // mean ESTOI(s~ + v, s)
  double d_int_mse = 0.0;       // D_int(y|v) against normalized ESTOI(y + v)
  double constant_mse = 0.0;    // best constant predictor (held-out mean) on the same targets
  std::size_t scenes = 0;
};

ValidationReport validate_bundle(const models::ModelBundle& bundle, const std::vector<signal::Scene>& scenes,
                                 const MetricNormalizers& norm, const TrainConfig& cfg);

struct RunResult {
  ValidationReport initial;
  ValidationReport final;
  std::vector<StepRecord> steps;
  std::string checkpoint;
  std::string manifest;
  double seconds = 0.0;
};

/// Trains `bundle` in place. Writes <output_dir>/<run_name>.ckpt, the loss log
/// <run_name>.losses.txt and the run manifest <run_name>.manifest.txt. A non-finite
/// loss writes the manifest with the last good step and rethrows.
RunResult train(models::ModelBundle& bundle, const std::vector<signal::Scene>& train_scenes,
                const std::vector<signal::Scene>& val_scenes, const MetricNormalizers& norm,
                const TrainConfig& cfg, const std::function<void(const StepRecord&)>& on_step = {},
                const std::function<void(std::int64_t)>& after_disc_step = {});

/// File names of the trained systems inside a run directory.
inline constexpr const char* kJointCheckpoint = "joint.ckpt";
inline constexpr const char* kJointTokenCheckpoint = "joint_nt.ckpt";
inline constexpr const char* kNeuralPipeCheckpoint = "neuralpipe.ckpt";

struct SuiteResult {
  RunResult joint, joint_nt, nr_only, le_only;
  MetricNormalizers normalizers;
};

/// The four runs behind the neural systems: joint with and without the noise
/// token, and the separately trained NR and LE composed into neuralpipe.ckpt.
SuiteResult train_suite(const std::vector<signal::Scene>& train_scenes, const std::vector<signal::Scene>& val_scenes,
                        const TrainConfig& base, const std::function<void(const std::string&)>& progress = {});

}  // namespace fullend::train
