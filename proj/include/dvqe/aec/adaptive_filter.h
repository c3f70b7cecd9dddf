#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "dvqe/signal/waveform.h"

namespace dvqe {

struct EchoCancellerOutput {
  Waveform echo_estimate;
  Waveform residual;  // mic - echo_estimate
};

// Sample-wise normalized LMS with a time-domain FIR of `taps` coefficients.
// The step is normalized by ||x||^2 + taps * eps, so eps acts as a per-sample
// reference power floor that keeps far-end onsets after silence stable.
class NlmsFilter {
 public:
  NlmsFilter(std::size_t taps, double mu, double eps = 1e-4);

  // Consumes one reference and one microphone sample, returns the echo
  // estimate used for that sample (computed before the update).
  double process(double ref, double mic);

  std::span<const double> coefficients() const { return w_; }
  std::size_t samples_processed() const { return count_; }

 private:
  std::vector<double> w_;
  std::vector<double> history_;  // circular reference buffer, newest at head_
  std::size_t head_ = 0;
  double energy_ = 0.0;
  double mu_;
  double eps_;
  std::size_t count_ = 0;
};

// Requires 0 <= mu <= 2 and taps >= 1 (mu = 0 freezes the filter at zero).
// Throws NumericError naming the sample index if the output turns non-finite.
EchoCancellerOutput nlms_cancel(const Waveform& mic, const Waveform& ref,
                                std::size_t taps = 512, double mu = 0.5,
                                double eps = 1e-4);

// Overlap-save frequency-domain adaptive Kalman filter with a first-order
// Markov echo path model W+ = A W.
struct FdkfConfig {
  std::size_t block = 512;         // M; FFT length is 2M
  double transition = 0.999;       // A
  double noise_smoothing = 0.5;    // recursive weight of the observation PSD
  double initial_uncertainty = 1.0;
  double regularization = 1e-10;
};

class FdkfFilter {
 public:
  explicit FdkfFilter(const FdkfConfig& cfg = {});

  // Processes one block of cfg.block samples; writes the echo estimate.
  void process_block(std::span<const double> ref, std::span<const double> mic,
                     std::span<double> echo_out);

  const FdkfConfig& config() const { return cfg_; }
  std::span<const std::complex<double>> weights() const { return w_; }
  std::span<const double> state_covariance() const { return p_; }
  std::size_t blocks_processed() const { return blocks_; }

 private:
  FdkfConfig cfg_;
  std::vector<std::complex<double>> w_;
  std::vector<double> p_;
  std::vector<double> psi_ss_;
  std::vector<double> prev_ref_;
  std::size_t blocks_ = 0;
};

// Runs the FDKF over whole signals; the tail that does not fill a block is
// processed with zero padding. Throws NumericError naming the block index if
// the state diverges.
EchoCancellerOutput fdkf_cancel(const Waveform& mic, const Waveform& ref,
                                const FdkfConfig& cfg = {});

// 10 log10(P(mic_echo_only) / P(residual)) over [begin, end) (end = 0: to the
// end). A silent residual returns +infinity; a silent reference -infinity.
double erle_db(const Waveform& mic_echo_only, const Waveform& residual,
               std::size_t begin = 0, std::size_t end = 0);

}  // namespace dvqe
