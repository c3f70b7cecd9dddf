#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dvqe {

inline constexpr int kDefaultSampleRate = 16000;

// Mono time-domain signal.
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kDefaultSampleRate;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate = kDefaultSampleRate)
      : samples(std::move(s)), sample_rate_hz(rate) {}

  static Waveform zeros(std::size_t n, int rate = kDefaultSampleRate) {
    return Waveform(std::vector<double>(n, 0.0), rate);
  }

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  std::span<const double> view() const { return samples; }

  bool operator==(const Waveform&) const = default;
};

// Throws DataError if the rate is not positive or any sample is non-finite.
// `what` names the signal in the diagnostic.
void validate(const Waveform& w, const std::string& what = "waveform");

double mean_square(std::span<const double> x);

// 10*log10(mean square). Silence yields -infinity; empty input throws.
double measure_power_db(const Waveform& w);
double power_db(std::span<const double> x);

double max_abs(std::span<const double> x);

// Full linear convolution truncated to `out_len` samples (0 = x.size()).
std::vector<double> convolve(std::span<const double> x,
                             std::span<const double> h, std::size_t out_len = 0);

}  // namespace dvqe
