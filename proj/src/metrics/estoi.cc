#include "dvqe/metrics/estoi.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "dvqe/common/error.h"
#include "dvqe/signal/fft.h"
#include "dvqe/signal/resample.h"

namespace dvqe {

namespace {

constexpr int kFs = 10000;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kHop = 128;
constexpr int kNfft = 512;
constexpr int kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;
constexpr double kDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann without the zero end points.
std::vector<double> hanning_inner(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i + 1) /
                                static_cast<double>(n + 1));
  }
  return w;
}

// Frame starts 0, hop, ... strictly below len - frame.
std::size_t frame_count(std::size_t len, std::size_t frame, std::size_t hop) {
  if (len <= frame) return 0;
  return (len - frame - 1) / hop + 1;
}

// Mean removal then unit-norm scaling of one vector (left at zero if silent).
void normalize(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double norm = 0.0;
  for (double& x : v) {
    x -= mean;
    norm += x * x;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

}  // namespace

namespace estoi_detail {

std::vector<std::vector<double>> third_octave_matrix(int fs, int nfft, int num_bands,
                                                     double min_freq) {
  const int n_bins = nfft / 2 + 1;
  std::vector<double> f(n_bins);
  for (int i = 0; i < n_bins; ++i) f[i] = static_cast<double>(fs) * i / nfft;
  auto nearest = [&](double target) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_bins; ++i) {
      const double d = (f[i] - target) * (f[i] - target);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return best;
  };
  std::vector<std::vector<double>> obm(num_bands, std::vector<double>(n_bins, 0.0));
  for (int k = 0; k < num_bands; ++k) {
    const double lo = min_freq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = min_freq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    const int a = nearest(lo);
    const int b = nearest(hi);
    for (int i = a; i < b; ++i) obm[k][i] = 1.0;
  }
  return obm;
}

std::pair<std::vector<double>, std::vector<double>> remove_silent_frames(
    const std::vector<double>& x, const std::vector<double>& y, double dyn_range,
    std::size_t frame_len, std::size_t hop) {
  const auto w = hanning_inner(frame_len);
  const std::size_t n = frame_count(x.size(), frame_len, hop);
  std::vector<double> energy(n);
  for (std::size_t j = 0; j < n; ++j) {
    double e = 0.0;
    for (std::size_t i = 0; i < frame_len; ++i) {
      const double v = w[i] * x[j * hop + i];
      e += v * v;
    }
    energy[j] = 20.0 * std::log10(std::sqrt(e) + kEps);
  }
  std::vector<std::size_t> keep;
  if (n > 0) {
    const double top = *std::max_element(energy.begin(), energy.end());
    for (std::size_t j = 0; j < n; ++j) {
      if (top - dyn_range - energy[j] < 0.0) keep.push_back(j);
    }
  }
  if (keep.empty()) return {};
  const std::size_t out_len = (keep.size() - 1) * hop + frame_len;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t m = 0; m < keep.size(); ++m) {
    const std::size_t src = keep[m] * hop;
    const std::size_t dst = m * hop;
    for (std::size_t i = 0; i < frame_len; ++i) {
      xs[dst + i] += w[i] * x[src + i];
      ys[dst + i] += w[i] * y[src + i];
    }
  }
  return {std::move(xs), std::move(ys)};
}

}  // namespace estoi_detail

namespace {

// Band envelopes [band][frame] of the analysis used by the measure.
std::vector<std::vector<double>> band_envelopes(const std::vector<double>& x,
                                                const std::vector<std::vector<double>>& obm) {
  const auto w = hanning_inner(kFrame);
  const std::size_t n = frame_count(x.size(), kFrame, kHop);
  std::vector<std::vector<double>> env(obm.size(), std::vector<double>(n, 0.0));
  std::vector<double> buf(kNfft, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kFrame; ++i) buf[i] = w[i] * x[j * kHop + i];
    const auto spec = rfft(buf);
    for (std::size_t b = 0; b < obm.size(); ++b) {
      double acc = 0.0;
      for (std::size_t k = 0; k < spec.size(); ++k) {
        if (obm[b][k] != 0.0) acc += obm[b][k] * std::norm(spec[k]);
      }
      env[b][j] = std::sqrt(acc);
    }
  }
  return env;
}

}  // namespace

double estoi(const Waveform& clean, const Waveform& degraded) {
  validate(clean, "clean");
  validate(degraded, "degraded");
  if (clean.size() != degraded.size()) {
    throw DataError("estoi: length mismatch (" + std::to_string(clean.size()) + " vs " +
                    std::to_string(degraded.size()) + ")");
  }
  if (clean.sample_rate_hz != degraded.sample_rate_hz) {
    throw DataError("estoi: sample rate mismatch");
  }
  const Waveform x10 = resample(clean, kFs);
  const Waveform y10 = resample(degraded, kFs);
  const auto [x, y] =
      estoi_detail::remove_silent_frames(x10.samples, y10.samples, kDynRange, kFrame, kHop);
  const std::size_t frames = frame_count(x.size(), kFrame, kHop);
  if (frames < kSegment) {
    throw DataError("estoi: only " + std::to_string(frames) +
                    " frames remain after silence removal; at least " +
                    std::to_string(kSegment) + " are required");
  }
  static const auto obm = estoi_detail::third_octave_matrix(kFs, kNfft, kBands, kMinFreq);
  const auto xe = band_envelopes(x, obm);
  const auto ye = band_envelopes(y, obm);

  const std::size_t segments = frames - kSegment + 1;
  double total = 0.0;
  std::vector<std::vector<double>> xs(kBands, std::vector<double>(kSegment));
  std::vector<std::vector<double>> ys = xs;
  std::vector<double> col_x(kBands), col_y(kBands);
  for (std::size_t m = 0; m < segments; ++m) {
    for (int b = 0; b < kBands; ++b) {
      std::copy_n(xe[b].begin() + static_cast<std::ptrdiff_t>(m), kSegment, xs[b].begin());
      std::copy_n(ye[b].begin() + static_cast<std::ptrdiff_t>(m), kSegment, ys[b].begin());
      normalize(xs[b]);
      normalize(ys[b]);
    }
    double seg = 0.0;
    for (std::size_t t = 0; t < kSegment; ++t) {
      for (int b = 0; b < kBands; ++b) {
        col_x[b] = xs[b][t];
        col_y[b] = ys[b][t];
      }
      normalize(col_x);
      normalize(col_y);
      for (int b = 0; b < kBands; ++b) seg += col_x[b] * col_y[b];
    }
    total += seg / static_cast<double>(kSegment);
  }
  return total / static_cast<double>(segments);
}

}  // namespace dvqe
