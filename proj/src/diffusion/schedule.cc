#include "dvqe/diffusion/schedule.h"

#include <cmath>
#include <string>

#include "dvqe/common/error.h"

namespace dvqe {

void NoiseSchedule::validate() const {
  if (!(sigma_min > 0.0 && sigma_min < sigma_max) || !std::isfinite(sigma_max)) {
    throw ConfigError("NoiseSchedule: require 0 < sigma_min < sigma_max");
  }
  if (!(t_max > 0.0 && t_max <= 1.0)) {
    throw ConfigError("NoiseSchedule: require 0 < T <= 1");
  }
}

void SamplerConfig::validate() const {
  if (n_steps < 1) throw ConfigError("SamplerConfig: n_steps must be >= 1");
  if (!(epsilon >= 1.0) || !std::isfinite(epsilon)) {
    throw ConfigError("SamplerConfig: epsilon must be >= 1 (beta is imaginary below 1), got " +
                      std::to_string(epsilon));
  }
}

double sigma_at(const NoiseSchedule& sched, double t) {
  sched.validate();
  if (!(t >= 0.0 && t <= 1.0)) {
    throw ConfigError("sigma_at: t must lie in [0, 1], got " + std::to_string(t));
  }
  return sched.sigma_min * std::pow(sched.ratio(), t);
}

SamplerCoefficients sampler_coefficients(const NoiseSchedule& sched,
                                         const SamplerConfig& cfg) {
  sched.validate();
  cfg.validate();
  SamplerCoefficients c;
  c.dt = sched.t_max / static_cast<double>(cfg.n_steps);
  c.gamma = std::pow(sched.ratio(), -c.dt);
  c.eta = 1.0 - std::pow(c.gamma, cfg.epsilon);
  const double e2 = 2.0 * (cfg.epsilon - 1.0);
  // gamma^0 is exactly 1, so epsilon == 1 gives an exact zero.
  c.beta = e2 == 0.0 ? 0.0 : std::sqrt(1.0 - std::pow(c.gamma, e2));
  return c;
}

std::vector<double> time_grid(const NoiseSchedule& sched, std::size_t n_steps) {
  if (n_steps < 1) throw ConfigError("time_grid: n_steps must be >= 1");
  const double dt = sched.t_max / static_cast<double>(n_steps);
  std::vector<double> g(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    g[i] = sched.t_max - static_cast<double>(i) * dt;
  }
  return g;
}

void to_json(nlohmann::json& j, const NoiseSchedule& s) {
  j = {{"sigma_min", s.sigma_min}, {"sigma_max", s.sigma_max}, {"t_max", s.t_max}};
}

void from_json(const nlohmann::json& j, NoiseSchedule& s) {
  s.sigma_min = j.value("sigma_min", s.sigma_min);
  s.sigma_max = j.value("sigma_max", s.sigma_max);
  s.t_max = j.value("t_max", s.t_max);
  s.validate();
}

void to_json(nlohmann::json& j, const SamplerConfig& s) {
  j = {{"n_steps", s.n_steps}, {"epsilon", s.epsilon}, {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, SamplerConfig& s) {
  s.n_steps = j.value("n_steps", s.n_steps);
  s.epsilon = j.value("epsilon", s.epsilon);
  s.seed = j.value("seed", s.seed);
  s.validate();
}

}  // namespace dvqe
