#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fullend/dsp/waveform.hpp"

namespace fullend::signal {

/// Synthetic stand-ins for real noise recordings. Training/validation draw from
/// the first six; the test set uses cafeteria (far end) and announcement
/// (near end), which never appear in training.
enum class NoiseType { White, Pink, Brown, Hum, Babble, Modulated, Cafeteria, Announcement };

std::string_view noise_name(NoiseType t);
NoiseType parse_noise(std::string_view name);
const std::vector<NoiseType>& training_noises();

/// Speech-like signal: a pitch-contoured harmonic source shaped by moving
/// formant resonances, syllabic (~4 Hz) envelope with pauses, and unvoiced
/// noise bursts. Normalized to an RMS of 0.05. Fully determined by `seed`.
dsp::Waveform synth_speech(std::uint64_t seed, double duration_s, int sample_rate = 16000);

/// Unit-RMS noise of the given type, fully determined by `seed`.
dsp::Waveform synth_noise(NoiseType type, std::uint64_t seed, double duration_s, int sample_rate = 16000);

/// SplitMix64 step; used to derive independent child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace fullend::signal
