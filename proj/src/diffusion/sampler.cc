#include "dvqe/diffusion/sampler.h"

#include <cmath>
#include <random>
#include <string>

#include "dvqe/common/error.h"

namespace dvqe {

Spectrogram draw_noise(const Spectrogram& like, Rng& rng) {
  const StftConfig& cfg = like.config();
  const std::size_t n = cfg.samples_for(like.frames());
  Waveform z = Waveform::zeros(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& v : z.samples) v = gauss(rng);
  Spectrogram out = stft(z, cfg);
  if (out.frames() != like.frames()) {
    throw ConfigError("draw_noise: frame count mismatch");
  }
  out.set_num_samples(like.num_samples());
  out.set_short_input(like.short_input());
  return out;
}

Perturbed forward_perturb(const Spectrogram& s, double t, const NoiseSchedule& sched,
                          Rng& rng) {
  const double sigma = sigma_at(sched, t);
  Perturbed p{s, draw_noise(s, rng)};
  p.s_t.axpy(sigma, p.z);
  return p;
}

Spectrogram analytic_gaussian_score(const Spectrogram& s_t, double t, double sigma_s,
                                    const NoiseSchedule& sched) {
  if (!(sigma_s >= 0.0)) throw ConfigError("analytic_gaussian_score: sigma_s must be >= 0");
  const double sigma = sigma_at(sched, t);
  Spectrogram out = s_t;
  out *= -1.0 / (sigma_s * sigma_s + sigma * sigma);
  return out;
}

Spectrogram analytic_gaussian_score(const Spectrogram& s_t, double t,
                                    std::span<const double> prior_variance,
                                    const NoiseSchedule& sched) {
  const double s2 = std::pow(sigma_at(sched, t), 2);
  const bool per_bin = prior_variance.size() == s_t.bins();
  if (!per_bin && prior_variance.size() != s_t.size()) {
    throw ConfigError("analytic_gaussian_score: prior variance size matches neither bins nor elements");
  }
  for (double v : prior_variance) {
    if (!(v >= 0.0)) throw ConfigError("analytic_gaussian_score: negative prior variance");
  }
  Spectrogram out = s_t;
  for (std::size_t l = 0; l < s_t.frames(); ++l) {
    for (std::size_t k = 0; k < s_t.bins(); ++k) {
      const double v = per_bin ? prior_variance[k] : prior_variance[l * s_t.bins() + k];
      out.at(k, l) *= -1.0 / (v + s2);
    }
  }
  return out;
}

namespace {

Spectrogram checked_score(const ScoreFn& fn, const Spectrogram& s, double sigma,
                          const Conditioning& c) {
  Spectrogram out = fn(s, sigma, c);
  if (!out.same_shape(s)) throw ConfigError("score function changed the spectrogram shape");
  if (!out.all_finite()) {
    throw NumericError("score function returned non-finite values at sigma=" +
                       std::to_string(sigma));
  }
  return out;
}

}  // namespace

double score_matching_loss(const ScoreFn& score_fn, const Spectrogram& s,
                           const Spectrogram& z, const Conditioning& c, double t,
                           const NoiseSchedule& sched) {
  const double sigma = sigma_at(sched, t);
  Spectrogram s_t = s;
  s_t.axpy(sigma, z);
  Spectrogram r = checked_score(score_fn, s_t, sigma, c);
  r.axpy(1.0 / sigma, z);
  return r.squared_norm();
}

double score_matching_loss(const ScoreFn& score_fn, const Spectrogram& s,
                           const Conditioning& c, double t, const NoiseSchedule& sched,
                           Rng& rng) {
  const Spectrogram z = draw_noise(s, rng);
  return score_matching_loss(score_fn, s, z, c, t, sched);
}

namespace {

// Index i with t == T - i dt, or throws.
std::size_t grid_index(double t, const NoiseSchedule& sched, std::size_t n_steps) {
  const double dt = sched.t_max / static_cast<double>(n_steps);
  const double pos = (sched.t_max - t) / dt;
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) > 1e-9 || rounded < 0.0 ||
      rounded > static_cast<double>(n_steps - 1)) {
    throw ConfigError("langevin_step: t=" + std::to_string(t) +
                      " is not on the grid {T, T-dt, ..., dt}");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

Spectrogram langevin_step(const Spectrogram& s_t, double t, const ScoreFn& score_fn,
                          const Conditioning& c, const SamplerConfig& cfg,
                          const NoiseSchedule& sched, Rng& rng) {
  const auto co = sampler_coefficients(sched, cfg);
  const std::size_t i = grid_index(t, sched, cfg.n_steps);
  const double t_now = sched.t_max - static_cast<double>(i) * co.dt;
  const double t_next = sched.t_max - static_cast<double>(i + 1) * co.dt;
  const double sigma = sigma_at(sched, t_now);
  const double sigma_next = sigma_at(sched, std::max(t_next, 0.0));
  Spectrogram next = s_t;
  next.axpy(co.eta * sigma * sigma, checked_score(score_fn, s_t, sigma, c));
  if (co.beta != 0.0) next.axpy(co.beta * sigma_next, draw_noise(s_t, rng));
  return next;
}

Spectrogram denoise_correction(const Spectrogram& s, double sigma, const ScoreFn& score_fn,
                               const Conditioning& c) {
  Spectrogram out = s;
  out.axpy(sigma * sigma, checked_score(score_fn, s, sigma, c));
  return out;
}

namespace {

Spectrogram single_step_start(const Spectrogram& s_cond_hat, double sigma_t, Rng& rng) {
  Spectrogram s_t = s_cond_hat;
  s_t.axpy(sigma_t, draw_noise(s_cond_hat, rng));
  return s_t;
}

}  // namespace

Spectrogram single_step_enhance(const Spectrogram& s_cond_hat, const ScoreFn& score_fn,
                                const Conditioning& c, const NoiseSchedule& sched,
                                Rng& rng) {
  const double sigma_t = sigma_at(sched, sched.t_max);
  const Spectrogram s_t = single_step_start(s_cond_hat, sigma_t, rng);
  return denoise_correction(s_t, sigma_t, score_fn, c);
}

Spectrogram reverse_sample(const ScoreFn& score_fn, const Conditioning& c,
                           const SamplerConfig& cfg, const NoiseSchedule& sched,
                           Rng& rng, const Spectrogram& init, SamplerInit mode) {
  cfg.validate();
  const auto co = sampler_coefficients(sched, cfg);
  const double sigma_t = sigma_at(sched, sched.t_max);
  Spectrogram s;
  std::size_t steps;
  if (mode == SamplerInit::kNoise) {
    s = draw_noise(init, rng);
    s *= sigma_t;
    steps = cfg.n_steps;
  } else {
    s = single_step_start(init, sigma_t, rng);
    steps = cfg.n_steps - 1;
  }
  const auto grid = time_grid(sched, cfg.n_steps);
  for (std::size_t i = 0; i < steps; ++i) {
    s = langevin_step(s, grid[i], score_fn, c, cfg, sched, rng);
  }
  const double t_end = sched.t_max - static_cast<double>(steps) * co.dt;
  const double sigma_end = sigma_at(sched, std::max(t_end, 0.0));
  return denoise_correction(s, sigma_end, score_fn, c);
}

}  // namespace dvqe
