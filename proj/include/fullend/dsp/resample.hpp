#pragma once

#include "fullend/dsp/waveform.hpp"

namespace fullend::dsp {

/// Band-limited rational resampling with a 64-tap Blackman-windowed sinc kernel.
/// Output length is round(len * target / source). Boundary samples are extended
/// by edge replication, so constant signals are reproduced exactly.
Waveform resample(const Waveform& w, int target_rate);

inline constexpr int kResampleTaps = 64;

}  // namespace fullend::dsp
