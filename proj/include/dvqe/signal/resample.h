#pragma once

#include "dvqe/signal/waveform.h"

namespace dvqe {

// Rational-rate polyphase resampling with a Kaiser-windowed sinc lowpass
// (60 dB stopband rejection, transition width 10% of the cutoff). Output
// length is ceil(n * out / in). Deterministic; identity when rates match.
Waveform resample(const Waveform& in, int target_rate_hz);

}  // namespace dvqe
