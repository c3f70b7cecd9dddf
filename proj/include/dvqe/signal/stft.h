#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dvqe/signal/fft.h"
#include "dvqe/signal/waveform.h"

namespace dvqe {

// Analysis parameters. Defaults: 512-sample square-root Hann frames, hop 128,
// bin axis padded from 257 to 260.
struct StftConfig {
  std::size_t frame_length = 512;
  std::size_t hop = 128;
  std::size_t pad_bins_to = 260;

  std::size_t num_bins() const { return frame_length / 2 + 1; }
  // Zero padding prepended before framing (frame_length - hop).
  std::size_t edge_pad() const { return frame_length - hop; }
  // Number of frames produced for a signal of `num_samples` samples.
  std::size_t frames_for(std::size_t num_samples) const;
  // Shortest signal length that yields exactly `frames` frames.
  std::size_t samples_for(std::size_t frames) const;

  // Throws ConfigError on inconsistent parameters.
  void validate() const;
  bool operator==(const StftConfig&) const = default;
};

// Periodic square-root Hann window of length n.
std::vector<double> sqrt_hann(std::size_t n);

// Complex STFT matrix, K_padded bins x L frames, stored frame-major.
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(StftConfig cfg, std::size_t frames, std::size_t num_samples = 0);

  std::size_t bins() const { return cfg_.pad_bins_to; }
  std::size_t frames() const { return frames_; }
  std::size_t size() const { return data_.size(); }
  const StftConfig& config() const { return cfg_; }

  // Length of the signal this spectrogram was computed from (istft output).
  std::size_t num_samples() const { return num_samples_; }
  void set_num_samples(std::size_t n) { num_samples_ = n; }
  // Set when the analysed signal was shorter than one frame.
  bool short_input() const { return short_input_; }
  void set_short_input(bool v) { short_input_ = v; }

  cplx& at(std::size_t k, std::size_t l) { return data_[l * bins() + k]; }
  const cplx& at(std::size_t k, std::size_t l) const {
    return data_[l * bins() + k];
  }
  std::span<cplx> frame(std::size_t l) {
    return {data_.data() + l * bins(), bins()};
  }
  std::span<const cplx> frame(std::size_t l) const {
    return {data_.data() + l * bins(), bins()};
  }
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  bool same_shape(const Spectrogram& o) const {
    return bins() == o.bins() && frames() == o.frames();
  }
  // Zero spectrogram of identical shape and metadata.
  Spectrogram zeros_like() const;

  Spectrogram& operator+=(const Spectrogram& o);
  Spectrogram& operator-=(const Spectrogram& o);
  Spectrogram& operator*=(double a);
  friend Spectrogram operator+(Spectrogram a, const Spectrogram& b) {
    return a += b;
  }
  friend Spectrogram operator-(Spectrogram a, const Spectrogram& b) {
    return a -= b;
  }
  friend Spectrogram operator*(double s, Spectrogram a) { return a *= s; }

  // a += s * b, elementwise.
  void axpy(double s, const Spectrogram& b);

  double squared_norm() const;
  bool all_finite() const;

  bool operator==(const Spectrogram& o) const {
    return cfg_ == o.cfg_ && frames_ == o.frames_ && data_ == o.data_;
  }

 private:
  void check_shape(const Spectrogram& o, const char* op) const;

  StftConfig cfg_;
  std::size_t frames_ = 0;
  std::size_t num_samples_ = 0;
  bool short_input_ = false;
  std::vector<cplx> data_;
};

// Forward STFT. The signal is zero padded by frame_length - hop samples at the
// start and by the same amount plus enough to reach a hop multiple at the end,
// so every input sample is covered by frame_length / hop frames. Each frame is
// scaled by 1/sqrt(sum w^2), making the bins of unit-variance white noise unit
// variance. Bins at index >= frame_length/2 + 1 are zero.
Spectrogram stft(const Waveform& wave, const StftConfig& cfg = {});

// Inverse STFT by weighted overlap-add with window-sum-square compensation.
// Padded bins are ignored. Returns spec.num_samples() samples.
Waveform istft(const Spectrogram& spec, int sample_rate_hz = kDefaultSampleRate);

}  // namespace dvqe
