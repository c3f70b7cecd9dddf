#include "dvqe/signal/stft.h"

#include <cmath>
#include <numbers>
#include <string>

#include "dvqe/common/error.h"

namespace dvqe {

std::size_t StftConfig::frames_for(std::size_t num_samples) const {
  const std::size_t fill = (hop - num_samples % hop) % hop;
  const std::size_t padded = num_samples + 2 * edge_pad() + fill;
  return (padded - frame_length) / hop + 1;
}

std::size_t StftConfig::samples_for(std::size_t frames) const {
  const std::size_t min_frames = frame_length / hop - 1;
  if (frames < min_frames) {
    throw ConfigError("samples_for: need at least " +
                      std::to_string(min_frames) + " frames");
  }
  return (frames - min_frames) * hop;
}

void StftConfig::validate() const {
  if (frame_length < 2 || hop == 0 || hop > frame_length) {
    throw ConfigError("StftConfig: require 0 < hop <= frame_length, frame >= 2");
  }
  if (frame_length % hop != 0) {
    throw ConfigError("StftConfig: hop must divide frame_length");
  }
  if (frame_length / hop < 2) {
    throw ConfigError("StftConfig: square-root Hann needs at least 50% overlap");
  }
  if (pad_bins_to < num_bins()) {
    throw ConfigError("StftConfig: pad_bins_to must be >= frame_length/2 + 1");
  }
}

std::vector<double> sqrt_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                          static_cast<double>(i) /
                                          static_cast<double>(n));
    w[i] = std::sqrt(std::max(h, 0.0));
  }
  return w;
}

namespace {

double window_energy(const std::vector<double>& w) {
  double e = 0.0;
  for (double v : w) e += v * v;
  return e;
}

}  // namespace

Spectrogram::Spectrogram(StftConfig cfg, std::size_t frames,
                         std::size_t num_samples)
    : cfg_(cfg),
      frames_(frames),
      num_samples_(num_samples),
      data_(cfg.pad_bins_to * frames, cplx(0.0, 0.0)) {}

Spectrogram Spectrogram::zeros_like() const {
  Spectrogram z(cfg_, frames_, num_samples_);
  z.short_input_ = short_input_;
  return z;
}

void Spectrogram::check_shape(const Spectrogram& o, const char* op) const {
  if (!same_shape(o)) {
    throw ConfigError(std::string("Spectrogram ") + op + ": shape mismatch (" +
                      std::to_string(bins()) + "x" + std::to_string(frames()) +
                      " vs " + std::to_string(o.bins()) + "x" +
                      std::to_string(o.frames()) + ")");
  }
}

Spectrogram& Spectrogram::operator+=(const Spectrogram& o) {
  check_shape(o, "+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Spectrogram& Spectrogram::operator-=(const Spectrogram& o) {
  check_shape(o, "-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Spectrogram& Spectrogram::operator*=(double a) {
  for (auto& v : data_) v *= a;
  return *this;
}

void Spectrogram::axpy(double s, const Spectrogram& b) {
  check_shape(b, "axpy");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * b.data_[i];
}

double Spectrogram::squared_norm() const {
  double acc = 0.0;
  for (const auto& v : data_) acc += std::norm(v);
  return acc;
}

bool Spectrogram::all_finite() const {
  for (const auto& v : data_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

Spectrogram stft(const Waveform& wave, const StftConfig& cfg) {
  cfg.validate();
  validate(wave, "stft input");
  const std::size_t n = wave.size();
  const std::size_t frames = cfg.frames_for(n);
  const std::size_t pad = cfg.edge_pad();
  const auto window = sqrt_hann(cfg.frame_length);
  const double norm = 1.0 / std::sqrt(window_energy(window));

  Spectrogram spec(cfg, frames, n);
  spec.set_short_input(n < cfg.frame_length);
  std::vector<double> buf(cfg.frame_length);
  for (std::size_t l = 0; l < frames; ++l) {
    const std::size_t start = l * cfg.hop;  // in padded coordinates
    for (std::size_t i = 0; i < cfg.frame_length; ++i) {
      const std::size_t p = start + i;
      const double x =
          (p >= pad && p - pad < n) ? wave.samples[p - pad] : 0.0;
      buf[i] = x * window[i] * norm;
    }
    const auto bins = rfft(buf);
    auto out = spec.frame(l);
    for (std::size_t k = 0; k < bins.size(); ++k) out[k] = bins[k];
  }
  return spec;
}

Waveform istft(const Spectrogram& spec, int sample_rate_hz) {
  const StftConfig& cfg = spec.config();
  cfg.validate();
  if (spec.frames() != cfg.frames_for(spec.num_samples())) {
    throw ConfigError("istft: " + std::to_string(spec.frames()) +
                      " frames inconsistent with " +
                      std::to_string(spec.num_samples()) + " samples");
  }
  const std::size_t n = spec.num_samples();
  const std::size_t pad = cfg.edge_pad();
  const auto window = sqrt_hann(cfg.frame_length);
  const double denorm = std::sqrt(window_energy(window));
  const std::size_t padded = (spec.frames() - 1) * cfg.hop + cfg.frame_length;
  std::vector<double> acc(padded, 0.0), wss(padded, 0.0);
  std::vector<cplx> bins(cfg.num_bins());
  for (std::size_t l = 0; l < spec.frames(); ++l) {
    const auto f = spec.frame(l);
    for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = f[k];
    // DC and Nyquist must be real for a real inverse.
    bins.front().imag(0.0);
    if (cfg.frame_length % 2 == 0) bins.back().imag(0.0);
    const auto frame = irfft(bins, cfg.frame_length);
    const std::size_t start = l * cfg.hop;
    for (std::size_t i = 0; i < cfg.frame_length; ++i) {
      acc[start + i] += frame[i] * denorm * window[i];
      wss[start + i] += window[i] * window[i];
    }
  }
  Waveform out = Waveform::zeros(n, sample_rate_hz);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = wss[i + pad];
    out.samples[i] = w > 1e-12 ? acc[i + pad] / w : 0.0;
  }
  return out;
}

}  // namespace dvqe
