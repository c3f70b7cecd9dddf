#include "dvqe/signal/resample.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "dvqe/common/error.h"

namespace dvqe {
namespace {

double bessel_i0(double x) {
  // Power series; converges quickly for the beta values used here.
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

// Lowpass prototype for upsampling by p and downsampling by q, normalized to
// unit DC gain per polyphase branch.
std::vector<double> design_filter(long p, long q) {
  constexpr double kRejectionDb = 60.0;
  const double cutoff = 1.0 / (2.0 * static_cast<double>(std::max(p, q)));
  const double roll_off = cutoff / 10.0;
  const long half = static_cast<long>(
      std::ceil((kRejectionDb - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (kRejectionDb - 8.7);
  const long len = 2 * half + 1;
  std::vector<double> h(static_cast<std::size_t>(len));
  const double i0b = bessel_i0(beta);
  double total = 0.0;
  for (long i = 0; i < len; ++i) {
    const double t = static_cast<double>(i - half);
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(len - 1) - 1.0;
    const double kaiser = bessel_i0(beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0b;
    h[static_cast<std::size_t>(i)] = kaiser * 2.0 * p * cutoff * sinc(2.0 * cutoff * t);
    total += h[static_cast<std::size_t>(i)];
  }
  for (double& v : h) v *= static_cast<double>(p) / total;
  return h;
}

}  // namespace

Waveform resample(const Waveform& in, int target_rate_hz) {
  if (target_rate_hz <= 0) throw ConfigError("resample: target rate must be > 0");
  validate(in, "resample input");
  if (in.sample_rate_hz == target_rate_hz) return in;
  const long g = std::gcd(in.sample_rate_hz, target_rate_hz);
  const long p = target_rate_hz / g;  // up
  const long q = in.sample_rate_hz / g;  // down
  const auto h = design_filter(p, q);
  const long half = static_cast<long>(h.size() - 1) / 2;
  const long n = static_cast<long>(in.size());
  const long n_out = (n * p + q - 1) / q;
  Waveform out = Waveform::zeros(static_cast<std::size_t>(n_out), target_rate_hz);
  const long hlen = static_cast<long>(h.size());
  for (long j = 0; j < n_out; ++j) {
    // y[j] = sum_i x[i] h[j q - i p + half]
    const long base = j * q + half;
    long i_lo = (base - (hlen - 1) + p - 1) / p;
    if (base - (hlen - 1) < 0) i_lo = 0;
    const long i_hi = std::min(n - 1, base / p);
    double acc = 0.0;
    for (long i = std::max(0L, i_lo); i <= i_hi; ++i) {
      acc += in.samples[static_cast<std::size_t>(i)] *
             h[static_cast<std::size_t>(base - i * p)];
    }
    out.samples[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

}  // namespace dvqe
