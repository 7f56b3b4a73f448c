#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fullend/baseline/ssdrc.hpp"
#include "fullend/baseline/wiener.hpp"
#include "fullend/dsp/waveform.hpp"
#include "fullend/models/bundle.hpp"
#include "fullend/noise/noise_estimator.hpp"

namespace fullend::train {

enum class System { Noisy, NoisyNr, NoisyLe, DspPipe, NeuralPipe, Joint, JointNt };

/// noisy, noisy+nr, noisy+le, dsppipe, neuralpipe, joint, joint+nt
const std::vector<std::string>& system_names();
std::string to_string(System s);
/// Unknown names throw ContractError listing the valid ones.
System parse_system(const std::string& name);
std::vector<System> parse_systems(const std::string& comma_list);

bool needs_checkpoint(System s);
/// Checkpoint file inside a run directory; empty for the non-neural systems.
/// noisy+nr and noisy+le use the separately trained modules of neuralpipe.ckpt.
std::string checkpoint_file(System s);

struct EnhanceOptions {
  baseline::WienerParams wiener;
  baseline::SsdrcParams ssdrc;
  noise::EstimatorParams estimator;
};

/// Routes x through the system's module composition. v_ref is the near-end
/// noise reference used by the LE. `bundle` may be null only for the
/// non-neural systems.
dsp::Waveform enhance(const dsp::Waveform& x, const dsp::Waveform& v_ref, const models::ModelBundle* bundle,
                      System system, const EnhanceOptions& options = {});

/// Loads the bundle for `system` from `path`, naming the path when it is missing.
std::unique_ptr<models::ModelBundle> load_system_bundle(System system, const std::string& path);

}  // namespace fullend::train
