#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace dvqe {

// Variance-exploding schedule sigma(t) = sigma_min (sigma_max/sigma_min)^t.
struct NoiseSchedule {
  double sigma_min = 0.01;
  double sigma_max = 5.0;
  double t_max = 0.3;  // T; also the matched-condition training time

  void validate() const;
  double ratio() const { return sigma_max / sigma_min; }
};

// Noise-consistent Langevin sampler settings. epsilon must be >= 1 so that
// beta is real; epsilon == 1 gives beta == 0 (deterministic steps).
struct SamplerConfig {
  std::size_t n_steps = 1;
  double epsilon = 1.1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-step constants derived from (schedule, sampler).
struct SamplerCoefficients {
  double dt;     // T / N
  double gamma;  // (sigma_max / sigma_min)^(-dt)
  double eta;    // 1 - gamma^epsilon
  double beta;   // sqrt(1 - gamma^(2 (epsilon - 1)))
};

// sigma at diffusion time t in [0, 1]; throws ConfigError outside.
double sigma_at(const NoiseSchedule& sched, double t);

SamplerCoefficients sampler_coefficients(const NoiseSchedule& sched,
                                         const SamplerConfig& cfg);

// Reverse-time grid {T, T - dt, ..., dt}.
std::vector<double> time_grid(const NoiseSchedule& sched, std::size_t n_steps);

void to_json(nlohmann::json& j, const NoiseSchedule& s);
void from_json(const nlohmann::json& j, NoiseSchedule& s);
void to_json(nlohmann::json& j, const SamplerConfig& s);
void from_json(const nlohmann::json& j, SamplerConfig& s);

}  // namespace dvqe
