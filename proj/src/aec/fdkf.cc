#include <algorithm>
#include <cmath>
#include <string>

#include "dvqe/aec/adaptive_filter.h"
#include "dvqe/common/error.h"
#include "dvqe/signal/fft.h"

namespace dvqe {

FdkfFilter::FdkfFilter(const FdkfConfig& cfg)
    : cfg_(cfg),
      w_(cfg.block + 1, cplx(0.0, 0.0)),
      p_(cfg.block + 1, cfg.initial_uncertainty),
      psi_ss_(cfg.block + 1, 0.0),
      prev_ref_(cfg.block, 0.0) {
  if (cfg.block < 2) throw ConfigError("fdkf: block must be >= 2");
  if (!(cfg.transition > 0.0 && cfg.transition <= 1.0)) {
    throw ConfigError("fdkf: transition factor must lie in (0, 1]");
  }
  if (!(cfg.noise_smoothing >= 0.0 && cfg.noise_smoothing < 1.0)) {
    throw ConfigError("fdkf: noise_smoothing must lie in [0, 1)");
  }
  if (!(cfg.initial_uncertainty > 0.0)) throw ConfigError("fdkf: initial_uncertainty must be > 0");
}

void FdkfFilter::process_block(std::span<const double> ref, std::span<const double> mic,
                               std::span<double> echo_out) {
  const std::size_t m = cfg_.block;
  const std::size_t n = 2 * m;
  if (ref.size() != m || mic.size() != m || echo_out.size() != m) {
    throw ConfigError("fdkf: block size mismatch");
  }
  std::vector<double> buf(n);
  std::copy(prev_ref_.begin(), prev_ref_.end(), buf.begin());
  std::copy(ref.begin(), ref.end(), buf.begin() + static_cast<long>(m));
  std::copy(ref.begin(), ref.end(), prev_ref_.begin());
  const auto x = rfft(buf);

  // Overlap-save filtering: keep the last M samples of the circular output.
  std::vector<cplx> y_f(m + 1);
  for (std::size_t k = 0; k <= m; ++k) y_f[k] = x[k] * w_[k];
  const auto y_t = irfft(y_f, n);
  std::vector<double> err(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    echo_out[i] = y_t[m + i];
    err[m + i] = mic[i] - echo_out[i];
  }
  const auto e = rfft(err);

  // Correction with the a priori error; the frequency-domain observation has
  // an effective gain of M/N on the filter mismatch.
  const double ratio = static_cast<double>(m) / static_cast<double>(n);
  const double lambda = cfg_.noise_smoothing;
  std::vector<cplx> dw(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const double xp = std::norm(x[k]);
    psi_ss_[k] = lambda * psi_ss_[k] + (1.0 - lambda) * std::norm(e[k]);
    const double denom = ratio * xp * p_[k] + psi_ss_[k] + cfg_.regularization;
    const double gain = p_[k] / denom;
    dw[k] = gain * std::conj(x[k]) * e[k];
    p_[k] = std::max(0.0, (1.0 - ratio * gain * xp) * p_[k]);
  }
  // Gradient constraint: the time-domain update is restricted to M taps.
  auto dw_t = irfft(dw, n);
  std::fill(dw_t.begin() + static_cast<long>(m), dw_t.end(), 0.0);
  const auto dw_c = rfft(dw_t);

  // Prediction for the next block.
  const double a = cfg_.transition;
  for (std::size_t k = 0; k <= m; ++k) {
    w_[k] = a * (w_[k] + dw_c[k]);
    p_[k] = a * a * p_[k] + (1.0 - a * a) * std::norm(w_[k]);
  }
  ++blocks_;
}

EchoCancellerOutput fdkf_cancel(const Waveform& mic, const Waveform& ref,
                                const FdkfConfig& cfg) {
  validate(mic, "fdkf mic");
  validate(ref, "fdkf reference");
  if (mic.size() != ref.size()) throw DataError("fdkf: mic and reference lengths differ");
  FdkfFilter f(cfg);
  const std::size_t m = cfg.block;
  const std::size_t total = mic.size();
  EchoCancellerOutput out{Waveform::zeros(total, mic.sample_rate_hz),
                          Waveform::zeros(total, mic.sample_rate_hz)};
  std::vector<double> xb(m), yb(m), eb(m);
  for (std::size_t start = 0, blk = 0; start < total; start += m, ++blk) {
    const std::size_t len = std::min(m, total - start);
    std::fill(xb.begin(), xb.end(), 0.0);
    std::fill(yb.begin(), yb.end(), 0.0);
    std::copy_n(ref.samples.begin() + static_cast<long>(start), len, xb.begin());
    std::copy_n(mic.samples.begin() + static_cast<long>(start), len, yb.begin());
    f.process_block(xb, yb, eb);
    for (std::size_t i = 0; i < len; ++i) {
      if (!std::isfinite(eb[i])) {
        throw NumericError("fdkf diverged at block " + std::to_string(blk));
      }
      out.echo_estimate.samples[start + i] = eb[i];
      out.residual.samples[start + i] = mic.samples[start + i] - eb[i];
    }
  }
  return out;
}

}  // namespace dvqe
