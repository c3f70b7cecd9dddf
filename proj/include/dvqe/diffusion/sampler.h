#pragma once

#include <functional>
#include <span>

#include "dvqe/common/rng.h"
#include "dvqe/common/tensor.h"
#include "dvqe/diffusion/schedule.h"
#include "dvqe/signal/stft.h"

namespace dvqe {

// Conditioning features handed to the score model (may be empty).
using Conditioning = Tensor3;

// Score estimate S_theta(S_t | sigma, C); output has the shape of S_t.
using ScoreFn =
    std::function<Spectrogram(const Spectrogram& s_t, double sigma, const Conditioning& c)>;

// Gaussian noise spectrogram shaped like `like`: white N(0, 1) noise in the
// time domain passed through stft() with like's configuration. Interior bins
// have unit variance; padded bins stay zero.
Spectrogram draw_noise(const Spectrogram& like, Rng& rng);

struct Perturbed {
  Spectrogram s_t;
  Spectrogram z;
};

// S_t = S + sigma(t) Z with a fresh Z.
Perturbed forward_perturb(const Spectrogram& s, double t, const NoiseSchedule& sched,
                          Rng& rng);

// Exact score of S_t when the clean prior is zero-mean Gaussian with variance
// sigma_s^2 per element: -S_t / (sigma_s^2 + sigma(t)^2).
Spectrogram analytic_gaussian_score(const Spectrogram& s_t, double t, double sigma_s,
                                    const NoiseSchedule& sched);
// Per-bin (size == bins) or per-element (size == bins * frames, frame-major)
// prior variances.
Spectrogram analytic_gaussian_score(const Spectrogram& s_t, double t,
                                    std::span<const double> prior_variance,
                                    const NoiseSchedule& sched);

// ||score_fn(S + sigma Z | sigma, C) + Z / sigma||^2 for one draw of Z (sum
// over elements). Throws NumericError if the score is non-finite.
double score_matching_loss(const ScoreFn& score_fn, const Spectrogram& s,
                           const Conditioning& c, double t, const NoiseSchedule& sched,
                           Rng& rng);
// Same with a caller-supplied Z.
double score_matching_loss(const ScoreFn& score_fn, const Spectrogram& s,
                           const Spectrogram& z, const Conditioning& c, double t,
                           const NoiseSchedule& sched);

// One noise-consistent Langevin step from grid time t:
//   S_{t-dt} = S_t + eta sigma_t^2 score(S_t) + beta sigma_{t-dt} Z.
// No Z is drawn when beta == 0. Throws ConfigError if t is off the grid.
Spectrogram langevin_step(const Spectrogram& s_t, double t, const ScoreFn& score_fn,
                          const Conditioning& c, const SamplerConfig& cfg,
                          const NoiseSchedule& sched, Rng& rng);

enum class SamplerInit {
  kNoise,       // S_T = sigma_T Z; N Langevin steps to t = 0, correction at sigma(0)
  kSingleStep,  // S_T = S_cond + sigma_T Z; N-1 steps to t = dt, correction at sigma(dt)
};

// Reverse sampler followed by the one-shot correction
// S_hat = S + sigma^2 score(S | sigma). In kNoise mode `init` only provides
// the shape; in kSingleStep mode it is the conditional estimate S_cond. With
// N = 1 the single-step mode performs exactly single_step_enhance().
Spectrogram reverse_sample(const ScoreFn& score_fn, const Conditioning& c,
                           const SamplerConfig& cfg, const NoiseSchedule& sched,
                           Rng& rng, const Spectrogram& init,
                           SamplerInit mode = SamplerInit::kNoise);

// Single-step inference: S_T = S_cond + sigma_T Z, S_hat = S_T + sigma_T^2 score(S_T).
Spectrogram single_step_enhance(const Spectrogram& s_cond_hat, const ScoreFn& score_fn,
                                const Conditioning& c, const NoiseSchedule& sched,
                                Rng& rng);

// Tweedie-style correction S + sigma^2 score(S | sigma).
Spectrogram denoise_correction(const Spectrogram& s, double sigma, const ScoreFn& score_fn,
                               const Conditioning& c);

}  // namespace dvqe
