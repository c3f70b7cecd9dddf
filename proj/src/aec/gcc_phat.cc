#include "dvqe/aec/gcc_phat.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dvqe/common/error.h"
#include "dvqe/signal/fft.h"

namespace dvqe {

long gcc_phat_delay(const Waveform& mic, const Waveform& ref, std::size_t max_lag,
                    const GccPhatOptions& opts) {
  validate(mic, "gcc_phat mic");
  validate(ref, "gcc_phat reference");
  if (mic.size() < 2 * max_lag || ref.size() < 2 * max_lag) {
    throw DataError("gcc_phat_delay: signals shorter than 2 * max_lag");
  }
  if (max_abs(mic.samples) == 0.0 || max_abs(ref.samples) == 0.0) {
    throw DataError("gcc_phat_delay: all-zero input has no defined phase");
  }
  const std::size_t longest = std::max(mic.size(), ref.size());
  const std::size_t seg =
      opts.segment_length == 0 ? longest : std::min(opts.segment_length, longest);
  if (seg <= max_lag) throw ConfigError("gcc_phat_delay: segment shorter than max_lag");
  const std::size_t nfft = next_pow2(2 * seg);
  const std::size_t step = opts.segment_length == 0 ? longest : std::max<std::size_t>(1, seg / 2);

  std::vector<cplx> cross(nfft / 2 + 1, cplx(0.0, 0.0));
  std::vector<double> a(nfft), b(nfft);
  for (std::size_t start = 0; start < longest; start += step) {
    std::fill(a.begin(), a.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t i = 0; i < seg; ++i) {
      if (start + i < mic.size()) a[i] = mic.samples[start + i];
      if (start + i < ref.size()) b[i] = ref.samples[start + i];
    }
    const auto fa = rfft(a);
    const auto fb = rfft(b);
    for (std::size_t k = 0; k < cross.size(); ++k) cross[k] += fa[k] * std::conj(fb[k]);
    if (start + seg >= longest) break;
  }
  double peak_mag = 0.0;
  for (const auto& c : cross) peak_mag = std::max(peak_mag, std::abs(c));
  if (peak_mag == 0.0) throw DataError("gcc_phat_delay: signals have no common support");
  const double floor = peak_mag * 1e-12;
  for (auto& c : cross) {
    const double m = std::abs(c);
    c = m > floor ? c / m : cplx(0.0, 0.0);
  }
  const auto r = irfft(cross, nfft);
  long best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  const long ml = static_cast<long>(max_lag);
  for (long lag = -ml; lag <= ml; ++lag) {
    const std::size_t idx =
        lag >= 0 ? static_cast<std::size_t>(lag) : nfft - static_cast<std::size_t>(-lag);
    if (r[idx] > best_val) {
      best_val = r[idx];
      best = lag;
    }
  }
  return best;
}

std::pair<Waveform, Waveform> compensate_delay(const Waveform& mic, const Waveform& ref,
                                               long lag, std::size_t max_lag) {
  if (static_cast<std::size_t>(std::labs(lag)) > max_lag) {
    throw ConfigError("compensate_delay: |lag| " + std::to_string(lag) +
                      " exceeds max_lag " + std::to_string(max_lag));
  }
  Waveform shifted = Waveform::zeros(ref.size(), ref.sample_rate_hz);
  const long n = static_cast<long>(ref.size());
  for (long i = 0; i < n; ++i) {
    const long src = i - lag;
    if (src >= 0 && src < n) shifted.samples[static_cast<std::size_t>(i)] = ref.samples[static_cast<std::size_t>(src)];
  }
  return {mic, shifted};
}

}  // namespace dvqe
