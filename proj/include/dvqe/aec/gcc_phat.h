#pragma once

#include <cstddef>
#include <utility>

#include "dvqe/signal/waveform.h"

namespace dvqe {

struct GccPhatOptions {
  // 0 correlates the whole files at once; otherwise cross-spectra of
  // half-overlapping segments of this length are accumulated before the
  // phase transform.
  std::size_t segment_length = 0;
};

// Integer lag maximizing the PHAT-weighted cross-correlation over
// [-max_lag, +max_lag]. Positive lag: the reference leads the microphone,
// i.e. mic(n) ~ ref(n - lag). Throws DataError for all-zero input.
long gcc_phat_delay(const Waveform& mic, const Waveform& ref, std::size_t max_lag,
                    const GccPhatOptions& opts = {});

// Shifts the reference by `lag` samples with zero fill so that
// gcc_phat_delay on the result is 0. The microphone is returned unchanged
// and both outputs keep their input lengths. |lag| > max_lag throws.
std::pair<Waveform, Waveform> compensate_delay(const Waveform& mic, const Waveform& ref,
                                               long lag, std::size_t max_lag);

}  // namespace dvqe
