#include "fullend/train/systems.hpp"

#include <filesystem>

#include "fullend/ad/tensor.hpp"
#include "fullend/error.hpp"
#include "fullend/train/pipeline.hpp"
#include "fullend/train/trainer.hpp"
#include "fullend/util/kv_config.hpp"

namespace fullend::train {

namespace {

constexpr System kAll[] = {System::Noisy,      System::NoisyNr, System::NoisyLe, System::DspPipe,
                           System::NeuralPipe, System::Joint,   System::JointNt};

}  // namespace

const std::vector<std::string>& system_names() {
  static const std::vector<std::string> names{"noisy",      "noisy+nr", "noisy+le", "dsppipe",
                                              "neuralpipe", "joint",    "joint+nt"};
  return names;
}

std::string to_string(System s) { return system_names()[static_cast<std::size_t>(s)]; }

System parse_system(const std::string& name) {
  for (System s : kAll)
    if (to_string(s) == name) return s;
  std::string valid;
  for (const auto& n : system_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ContractError("unknown system '" + name + "' (valid: " + valid + ")");
}

std::vector<System> parse_systems(const std::string& comma_list) {
  std::vector<System> out;
  for (const auto& part : util::split(comma_list, ',')) {
    const auto name = util::trim(part);
    if (!name.empty()) out.push_back(parse_system(name));
  }
  if (out.empty()) throw ContractError("no systems given");
  return out;
}

bool needs_checkpoint(System s) { return s != System::Noisy && s != System::DspPipe; }

std::string checkpoint_file(System s) {
  switch (s) {
    case System::Noisy:
    case System::DspPipe: return "";
    case System::NoisyNr:
    case System::NoisyLe:
    case System::NeuralPipe: return kNeuralPipeCheckpoint;
    case System::Joint: return kJointCheckpoint;
    case System::JointNt: return kJointTokenCheckpoint;
  }
  return "";
}

dsp::Waveform enhance(const dsp::Waveform& x, const dsp::Waveform& v_ref, const models::ModelBundle* bundle,
                      System system, const EnhanceOptions& options) {
  x.validate();
  if (system == System::Noisy) return x;
  if (system == System::DspPipe) return baseline::dsppipe(x, options.wiener, options.ssdrc);
  if (!bundle) throw ContractError("system '" + to_string(system) + "' needs a trained model");

  GeneratorOptions g;
  g.use_token = system == System::JointNt;
  g.run_nr = system != System::NoisyLe;
  g.run_le = system != System::NoisyNr;
  ad::NoGradGuard no_grad;
  const auto in = prepare_inputs(x, v_ref, options.estimator);
  const auto out = generator_forward(*bundle, in, g);
  return to_waveform(out.y_wave, x.sample_rate);
}

std::unique_ptr<models::ModelBundle> load_system_bundle(System system, const std::string& path) {
  if (!needs_checkpoint(system)) return nullptr;
  if (!std::filesystem::exists(path))
    throw IoError("checkpoint for system '" + to_string(system) + "' not found: " + path);
  return models::ModelBundle::load(path);
}

}  // namespace fullend::train
