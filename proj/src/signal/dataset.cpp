#include "fullend/signal/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "fullend/error.hpp"
#include "fullend/signal/mixing.hpp"

namespace fullend::signal {
namespace fs = std::filesystem;

namespace {

std::vector<NoiseType> parse_noises(const util::KvConfig& cfg, const std::string& key,
                                    const std::vector<NoiseType>& fallback) {
  if (!cfg.has(key)) return fallback;
  std::vector<NoiseType> out;
  for (const auto& name : util::split(cfg.get_string(key), ',')) out.push_back(parse_noise(name));
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::string snr_tag(double v) { return util::format_double(v); }

}  // namespace

DatasetDescriptor DatasetDescriptor::from_config(const util::KvConfig& cfg) {
  DatasetDescriptor d;
  d.seed = static_cast<std::uint64_t>(cfg.get_int("dataset.seed", static_cast<std::int64_t>(d.seed)));
  d.train_count = static_cast<std::size_t>(cfg.get_int("dataset.train_count", static_cast<std::int64_t>(d.train_count)));
  d.val_count = static_cast<std::size_t>(cfg.get_int("dataset.val_count", static_cast<std::int64_t>(d.val_count)));
  d.test_sentences =
      static_cast<std::size_t>(cfg.get_int("dataset.test_sentences", static_cast<std::int64_t>(d.test_sentences)));
  d.duration_s = cfg.get_double("dataset.duration_s", d.duration_s);
  d.sample_rate = static_cast<int>(cfg.get_int("dataset.sample_rate", d.sample_rate));
  d.train_far_snrs = cfg.get_doubles("dataset.train_far_snrs", d.train_far_snrs);
  d.train_near_snrs = cfg.get_doubles("dataset.train_near_snrs", d.train_near_snrs);
  d.test_far_snrs = cfg.get_doubles("dataset.test_far_snrs", d.test_far_snrs);
  d.test_near_snrs = cfg.get_doubles("dataset.test_near_snrs", d.test_near_snrs);
  d.train_noises = parse_noises(cfg, "dataset.train_noises", d.train_noises);
  d.test_far_noises = parse_noises(cfg, "dataset.test_far_noises", d.test_far_noises);
  d.test_near_noises = parse_noises(cfg, "dataset.test_near_noises", d.test_near_noises);
  d.strict_split = cfg.get_bool("dataset.strict_split", d.strict_split);
  d.output_dir = cfg.get_string("dataset.output_dir", d.output_dir);
  const std::string enc = cfg.get_string("dataset.encoding", "float32");
  if (enc == "float32") d.encoding = WavEncoding::Float32;
  else if (enc == "pcm16") d.encoding = WavEncoding::Pcm16;
  else throw ContractError("dataset.encoding must be float32 or pcm16");
  return d;
}

void DatasetDescriptor::validate() const {
  if (duration_s <= 0.0 || sample_rate <= 0) throw ContractError("dataset: invalid duration or sample rate");
  if ((train_count + val_count > 0) &&
      (train_far_snrs.empty() || train_near_snrs.empty() || train_noises.empty()))
    throw ContractError("dataset: empty training grid");
  if (test_sentences > 0 &&
      (test_far_snrs.empty() || test_near_snrs.empty() || test_far_noises.empty() || test_near_noises.empty()))
    throw ContractError("dataset: empty test grid");
  if (!strict_split) return;
  auto overlaps = [](const auto& a, const auto& b) {
    return std::any_of(a.begin(), a.end(), [&](const auto& x) { return std::find(b.begin(), b.end(), x) != b.end(); });
  };
  if (overlaps(test_far_snrs, train_far_snrs) || overlaps(test_near_snrs, train_near_snrs))
    throw ContractError("dataset: test SNR grid overlaps the training grid (strict_split)");
  if (overlaps(test_far_noises, train_noises) || overlaps(test_near_noises, train_noises))
    throw ContractError("dataset: test noise types overlap the training noises (strict_split)");
}

Scene make_scene(const std::string& id, const std::string& split, std::uint64_t speech_seed,
                 const SceneCondition& cond, double duration_s, int sample_rate) {
  Scene scene;
  scene.id = id;
  scene.split = split;
  scene.condition = cond;
  scene.s = synth_speech(speech_seed, duration_s, sample_rate);
  const auto far = synth_noise(cond.far_noise, mix_seed(cond.seed, 1), duration_s, sample_rate);
  const auto near = synth_noise(cond.near_noise, mix_seed(cond.seed, 2), duration_s, sample_rate);
  Mixture m = mix_at_snr(scene.s, far, cond.far_snr_db);
  scene.x = std::move(m.mixture);
  scene.u = std::move(m.scaled_noise);
  scene.v = mix_at_snr(scene.s, near, cond.near_snr_db).scaled_noise;
  return scene;
}

std::vector<Scene> synthesize_scenes(const DatasetDescriptor& d) {
  d.validate();
  std::vector<Scene> scenes;
  char id[64];
  auto random_split = [&](const std::string& split, std::size_t count, std::uint64_t salt) {
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint64_t seed = mix_seed(mix_seed(d.seed, salt), i);
      std::mt19937_64 rng(seed);
      SceneCondition c;
      c.seed = seed;
      c.far_snr_db = pick(d.train_far_snrs, rng);
      c.near_snr_db = pick(d.train_near_snrs, rng);
      c.far_noise = pick(d.train_noises, rng);
      c.near_noise = pick(d.train_noises, rng);
      std::snprintf(id, sizeof(id), "%s_%04zu", split.c_str(), i);
      scenes.push_back(make_scene(id, split, mix_seed(seed, 99), c, d.duration_s, d.sample_rate));
    }
  };
  random_split("train", d.train_count, 11);
  random_split("val", d.val_count, 22);
  for (std::size_t i = 0; i < d.test_sentences; ++i) {
    const std::uint64_t sentence_seed = mix_seed(mix_seed(d.seed, 33), i);
    std::size_t cell = 0;
    for (double far : d.test_far_snrs) {
      for (double near : d.test_near_snrs) {
        const std::uint64_t seed = mix_seed(sentence_seed, cell++);
        std::mt19937_64 rng(seed);
        SceneCondition c;
        c.seed = seed;
        c.far_snr_db = far;
        c.near_snr_db = near;
        c.far_noise = pick(d.test_far_noises, rng);
        c.near_noise = pick(d.test_near_noises, rng);
        std::snprintf(id, sizeof(id), "test_%04zu_f%s_n%s", i, snr_tag(far).c_str(), snr_tag(near).c_str());
        scenes.push_back(make_scene(id, "test", mix_seed(sentence_seed, 99), c, d.duration_s, d.sample_rate));
      }
    }
  }
  return scenes;
}

std::vector<Scene> filter_split(const std::vector<Scene>& scenes, const std::string& split) {
  std::vector<Scene> out;
  for (const auto& s : scenes)
    if (s.split == split) out.push_back(s);
  return out;
}

std::string format_manifest_record(const ManifestRecord& r) {
  std::ostringstream out;
  out << "id=" << r.id << " split=" << r.split << " far_snr=" << util::format_double(r.condition.far_snr_db)
      << " near_snr=" << util::format_double(r.condition.near_snr_db) << " far_noise=" << noise_name(r.condition.far_noise)
      << " near_noise=" << noise_name(r.condition.near_noise) << " seed=" << r.condition.seed << " s=" << r.s_path
      << " u=" << r.u_path << " v=" << r.v_path << " x=" << r.x_path;
  return out.str();
}

ManifestRecord parse_manifest_record(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ContractError("manifest: malformed token '" + token + "'");
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  auto get = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ContractError(std::string("manifest: missing field ") + key);
    return it->second;
  };
  ManifestRecord r;
  r.id = get("id");
  r.split = get("split");
  r.condition.far_snr_db = std::stod(get("far_snr"));
  r.condition.near_snr_db = std::stod(get("near_snr"));
  r.condition.far_noise = parse_noise(get("far_noise"));
  r.condition.near_noise = parse_noise(get("near_noise"));
  r.condition.seed = std::stoull(get("seed"));
  r.s_path = get("s");
  r.u_path = get("u");
  r.v_path = get("v");
  r.x_path = get("x");
  return r;
}

std::string write_dataset(const std::vector<Scene>& scenes, const std::string& output_dir, WavEncoding encoding) {
  fs::create_directories(output_dir);
  const std::string manifest = (fs::path(output_dir) / "manifest.txt").string();
  std::ofstream out(manifest);
  if (!out) throw IoError("cannot write manifest: " + manifest);
  for (const auto& scene : scenes) {
    fs::create_directories(fs::path(output_dir) / scene.split);
    ManifestRecord r;
    r.id = scene.id;
    r.split = scene.split;
    r.condition = scene.condition;
    auto rel = [&](const char* tag) { return scene.split + "/" + scene.id + "_" + tag + ".wav"; };
    r.s_path = rel("s");
    r.u_path = rel("u");
    r.v_path = rel("v");
    r.x_path = rel("x");
    wav_write(scene.s, (fs::path(output_dir) / r.s_path).string(), encoding);
    wav_write(scene.u, (fs::path(output_dir) / r.u_path).string(), encoding);
    wav_write(scene.v, (fs::path(output_dir) / r.v_path).string(), encoding);
    wav_write(scene.x, (fs::path(output_dir) / r.x_path).string(), encoding);
    out << format_manifest_record(r) << '\n';
  }
  return manifest;
}

std::string synthesize_dataset(const DatasetDescriptor& d) {
  return write_dataset(synthesize_scenes(d), d.output_dir, d.encoding);
}

std::vector<ManifestRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::vector<ManifestRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    out.push_back(parse_manifest_record(line));
  }
  return out;
}

Scene load_scene(const ManifestRecord& r, const std::string& manifest_dir) {
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? p : (fs::path(manifest_dir) / path).string();
  };
  Scene scene;
  scene.id = r.id;
  scene.split = r.split;
  scene.condition = r.condition;
  scene.s = wav_read(resolve(r.s_path));
  scene.u = wav_read(resolve(r.u_path));
  scene.v = wav_read(resolve(r.v_path));
  scene.x = wav_read(resolve(r.x_path));
  if (scene.s.size() != scene.x.size() || scene.u.size() != scene.x.size() || scene.v.size() != scene.x.size())
    throw ContractError("scene " + r.id + ": waveform lengths differ");
  return scene;
}

std::vector<Scene> load_scenes(const std::string& manifest_path) {
  const std::string dir = fs::path(manifest_path).parent_path().string();
  std::vector<Scene> out;
  for (const auto& r : read_manifest(manifest_path)) out.push_back(load_scene(r, dir));
  return out;
}

}  // namespace fullend::signal
