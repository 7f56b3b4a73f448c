#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fullend/dsp/waveform.hpp"

namespace fullend::signal {

enum class WavEncoding { Pcm16, Float32 };

/// Reads a mono RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float samples.
/// Anything else (multi-channel, other encodings, truncated chunks) throws IoError.
dsp::Waveform wav_read(const std::string& path);
dsp::Waveform wav_decode(const std::vector<std::uint8_t>& bytes);

/// PCM16 samples are scaled by 32768, rounded, and clipped to [-32768, 32767].
void wav_write(const dsp::Waveform& w, const std::string& path, WavEncoding encoding = WavEncoding::Float32);
std::vector<std::uint8_t> wav_encode(const dsp::Waveform& w, WavEncoding encoding = WavEncoding::Float32);

}  // namespace fullend::signal
