#include "dvqe/signal/waveform.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dvqe/common/error.h"
#include "dvqe/signal/fft.h"

namespace dvqe {

void validate(const Waveform& w, const std::string& what) {
  if (w.sample_rate_hz <= 0) {
    throw DataError(what + ": sample rate must be positive, got " +
                    std::to_string(w.sample_rate_hz));
  }
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    if (!std::isfinite(w.samples[i])) {
      throw DataError(what + ": non-finite sample at index " +
                      std::to_string(i));
    }
  }
}

double mean_square(std::span<const double> x) {
  if (x.empty()) throw DataError("mean_square: empty signal");
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

double power_db(std::span<const double> x) {
  const double p = mean_square(x);
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p);
}

double measure_power_db(const Waveform& w) { return power_db(w.samples); }

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> convolve(std::span<const double> x,
                             std::span<const double> h, std::size_t out_len) {
  if (out_len == 0) out_len = x.size();
  std::vector<double> y(out_len, 0.0);
  if (x.empty() || h.empty()) return y;
  // Direct form for short kernels, FFT otherwise.
  if (h.size() <= 64 || x.size() <= 64) {
    for (std::size_t n = 0; n < out_len; ++n) {
      double acc = 0.0;
      const std::size_t kmax = std::min(h.size() - 1, n);
      for (std::size_t k = 0; k <= kmax; ++k) {
        if (n - k < x.size()) acc += h[k] * x[n - k];
      }
      y[n] = acc;
    }
    return y;
  }
  const std::size_t full = x.size() + h.size() - 1;
  const std::size_t nfft = next_pow2(full);
  std::vector<double> xa(nfft, 0.0), ha(nfft, 0.0);
  std::copy(x.begin(), x.end(), xa.begin());
  std::copy(h.begin(), h.end(), ha.begin());
  auto xs = rfft(xa);
  const auto hs = rfft(ha);
  for (std::size_t k = 0; k < xs.size(); ++k) xs[k] *= hs[k];
  const auto conv = irfft(xs, nfft);
  for (std::size_t n = 0; n < out_len && n < full; ++n) y[n] = conv[n];
  return y;
}

}  // namespace dvqe
