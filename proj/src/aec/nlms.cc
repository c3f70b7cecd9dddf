#include <cmath>
#include <limits>
#include <string>

#include "dvqe/aec/adaptive_filter.h"
#include "dvqe/common/error.h"

namespace dvqe {

NlmsFilter::NlmsFilter(std::size_t taps, double mu, double eps)
    : w_(taps, 0.0), history_(taps, 0.0), mu_(mu), eps_(eps * static_cast<double>(taps)) {
  if (taps == 0) throw ConfigError("nlms: taps must be >= 1");
  if (!(mu >= 0.0 && mu <= 2.0)) throw ConfigError("nlms: mu must lie in [0, 2]");
  if (!(eps > 0.0)) throw ConfigError("nlms: eps must be > 0");
}

double NlmsFilter::process(double ref, double mic) {
  const std::size_t n = w_.size();
  head_ = (head_ + n - 1) % n;
  energy_ -= history_[head_] * history_[head_];
  history_[head_] = ref;
  energy_ += ref * ref;
  if (energy_ < 0.0) energy_ = 0.0;

  // history_[(head_ + k) % n] is ref(t - k).
  double y = 0.0;
  const std::size_t first = n - head_;
  for (std::size_t k = 0; k < first; ++k) y += w_[k] * history_[head_ + k];
  for (std::size_t k = first; k < n; ++k) y += w_[k] * history_[k - first];

  const double e = mic - y;
  if (mu_ > 0.0) {
    const double g = mu_ * e / (energy_ + eps_);
    for (std::size_t k = 0; k < first; ++k) w_[k] += g * history_[head_ + k];
    for (std::size_t k = first; k < n; ++k) w_[k] += g * history_[k - first];
  }
  ++count_;
  // Periodically recompute the running energy to bound drift.
  if (count_ % 8192 == 0) {
    energy_ = 0.0;
    for (double v : history_) energy_ += v * v;
  }
  return y;
}

EchoCancellerOutput nlms_cancel(const Waveform& mic, const Waveform& ref,
                                std::size_t taps, double mu, double eps) {
  validate(mic, "nlms mic");
  validate(ref, "nlms reference");
  if (mic.size() != ref.size()) throw DataError("nlms: mic and reference lengths differ");
  NlmsFilter f(taps, mu, eps);
  EchoCancellerOutput out{Waveform::zeros(mic.size(), mic.sample_rate_hz),
                          Waveform::zeros(mic.size(), mic.sample_rate_hz)};
  for (std::size_t i = 0; i < mic.size(); ++i) {
    const double y = f.process(ref.samples[i], mic.samples[i]);
    if (!std::isfinite(y)) {
      throw NumericError("nlms diverged at sample " + std::to_string(i));
    }
    out.echo_estimate.samples[i] = y;
    out.residual.samples[i] = mic.samples[i] - y;
  }
  return out;
}

double erle_db(const Waveform& mic_echo_only, const Waveform& residual,
               std::size_t begin, std::size_t end) {
  if (mic_echo_only.size() != residual.size()) {
    throw DataError("erle_db: length mismatch");
  }
  if (end == 0) end = residual.size();
  if (begin >= end || end > residual.size()) throw ConfigError("erle_db: bad region");
  double pm = 0.0, pr = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    pm += mic_echo_only.samples[i] * mic_echo_only.samples[i];
    pr += residual.samples[i] * residual.samples[i];
  }
  if (pr == 0.0) return std::numeric_limits<double>::infinity();
  if (pm == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(pm / pr);
}

}  // namespace dvqe
