#pragma once

#include <functional>
#include <span>

#include "dvqe/diffusion/sampler.h"

namespace dvqe {

inline constexpr double kDefaultSigmaData = 0.5;

// Input/output/skip scalings that keep the raw network near unit variance.
struct EdmScalings {
  double c_skip;
  double c_out;
  double c_in;
  double c_noise;
};

EdmScalings edm_scalings(double sigma, double sigma_data);

// Raw network F(c_in * S_t, c_noise, C). Output must have the shape of S_t.
using RawNet = std::function<Spectrogram(const Spectrogram& scaled_input, double c_noise,
                                         const Conditioning& c)>;

// Wraps a raw network into a denoiser D = c_skip S_t + c_out F(c_in S_t) and
// the matching score (D - S_t) / sigma^2.
class Preconditioner {
 public:
  explicit Preconditioner(RawNet raw, double sigma_data = kDefaultSigmaData);

  double sigma_data() const { return sigma_data_; }

  Spectrogram denoise(const Spectrogram& s_t, double sigma, const Conditioning& c) const;
  Spectrogram score(const Spectrogram& s_t, double sigma, const Conditioning& c) const;
  ScoreFn as_score_fn() const;

 private:
  RawNet raw_;
  double sigma_data_;
};

// Empirical RMS of the complex elements over the interior bins of `clean`.
// Throws DataError if the input is empty or silent.
double estimate_sigma_data(std::span<const Spectrogram> clean);

}  // namespace dvqe
