#pragma once

#include <filesystem>

#include "dvqe/signal/waveform.h"

namespace dvqe {

enum class WavFormat { kPcm16, kFloat32 };

// Reads a mono RIFF/WAVE file (16-bit PCM or 32-bit IEEE float). When
// `target_rate_hz` is positive and differs from the file rate, the signal is
// resampled. Throws DataError on malformed or multi-channel files.
Waveform read_wav(const std::filesystem::path& path, int target_rate_hz = kDefaultSampleRate);

// Writes a mono WAV file. PCM16 output is clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& wave,
               WavFormat format = WavFormat::kFloat32);

}  // namespace dvqe
