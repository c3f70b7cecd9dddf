#pragma once

#include <vector>

#include "dvqe/signal/waveform.h"

namespace dvqe {

// Extended short-time objective intelligibility of `degraded` against
// `clean`: resampling to 10 kHz, removal of frames more than 40 dB below the
// loudest clean frame, 15 one-third octave bands from 150 Hz, 30-frame
// (384 ms) segments with row and column normalization. Inputs must have equal
// length and rate. Throws DataError when fewer than 30 frames remain.
double estoi(const Waveform& clean, const Waveform& degraded);

namespace estoi_detail {

// One-third octave band matrix (bands x (nfft/2 + 1)).
std::vector<std::vector<double>> third_octave_matrix(int fs, int nfft, int num_bands,
                                                     double min_freq);

// Silent-frame removal applied to both signals based on the clean one.
std::pair<std::vector<double>, std::vector<double>> remove_silent_frames(
    const std::vector<double>& x, const std::vector<double>& y, double dyn_range,
    std::size_t frame_len, std::size_t hop);

}  // namespace estoi_detail

}  // namespace dvqe
