#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fullend/dsp/waveform.hpp"
#include "fullend/signal/synth.hpp"
#include "fullend/signal/wav.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::signal {

struct SceneCondition {
  double far_snr_db = 0.0;
  double near_snr_db = 0.0;
  NoiseType far_noise = NoiseType::White;
  NoiseType near_noise = NoiseType::White;
  std::uint64_t seed = 0;
};

/// One communication scene: clean speech s, far-end noise u (already scaled to
/// the far-end SNR), near-end noise v (scaled against s to the near-end SNR),
/// and the far-end microphone signal x = s + u.
struct Scene {
  std::string id;
  std::string split;
  SceneCondition condition;
  dsp::Waveform s, u, v, x;
};

/// What to synthesize. Defaults mirror the published grids: training at far
/// {4, 8, 12} dB / near {-11, -7, -3} dB, test at far {6, 10, 14} / near {-9, -5, -1}.
struct DatasetDescriptor {
  std::uint64_t seed = 1;
  std::size_t train_count = 200;
  std::size_t val_count = 20;
  std::size_t test_sentences = 4;  // each expanded over the full test grid
  double duration_s = 1.5;
  int sample_rate = 16000;
  std::vector<double> train_far_snrs{4, 8, 12};
  std::vector<double> train_near_snrs{-11, -7, -3};
  std::vector<double> test_far_snrs{6, 10, 14};
  std::vector<double> test_near_snrs{-9, -5, -1};
  std::vector<NoiseType> train_noises = training_noises();
  std::vector<NoiseType> test_far_noises{NoiseType::Cafeteria};
  std::vector<NoiseType> test_near_noises{NoiseType::Announcement};
  bool strict_split = true;
  std::string output_dir = "dataset";
  WavEncoding encoding = WavEncoding::Float32;

  /// Reads keys from the [dataset] section; missing keys keep their defaults.
  static DatasetDescriptor from_config(const util::KvConfig& cfg);
  /// Throws ContractError when strict_split is set and a test SNR or noise
  /// type also appears in the training grids.
  void validate() const;
};

Scene make_scene(const std::string& id, const std::string& split, const std::uint64_t speech_seed,
                 const SceneCondition& cond, double duration_s, int sample_rate);

/// In-memory synthesis in a fixed order: train, val, test. Deterministic in `seed`.
std::vector<Scene> synthesize_scenes(const DatasetDescriptor& d);
std::vector<Scene> filter_split(const std::vector<Scene>& scenes, const std::string& split);

/// Writes every scene's s/u/v/x WAVs under output_dir/<split>/ plus
/// output_dir/manifest.txt. Returns the manifest path.
std::string write_dataset(const std::vector<Scene>& scenes, const std::string& output_dir,
                          WavEncoding encoding = WavEncoding::Float32);
std::string synthesize_dataset(const DatasetDescriptor& d);

/// Line-delimited manifest record: space separated key=value tokens.
struct ManifestRecord {
  std::string id;
  std::string split;
  SceneCondition condition;
  std::string s_path, u_path, v_path, x_path;  // absolute or relative to the manifest directory
};

std::string format_manifest_record(const ManifestRecord& r);
ManifestRecord parse_manifest_record(const std::string& line);
std::vector<ManifestRecord> read_manifest(const std::string& path);
Scene load_scene(const ManifestRecord& r, const std::string& manifest_dir);
std::vector<Scene> load_scenes(const std::string& manifest_path);

}  // namespace fullend::signal
