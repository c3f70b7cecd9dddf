#include "dvqe/model/toy_scorer.h"

#include <cmath>
#include <numbers>
#include <string>

#include "dvqe/common/error.h"

namespace dvqe {

StftConfig toy_stft_config() { return StftConfig{126, 42, 64}; }

ToyScorer::ToyScorer(std::size_t bins, bool use_bias)
    : gain(bins, 0.0), bias(bins, 0.0), use_bias_(use_bias) {}

Spectrogram ToyScorer::score(const Spectrogram& s_t) const {
  if (s_t.bins() != bins()) {
    throw ConfigError("ToyScorer: spectrogram has " + std::to_string(s_t.bins()) +
                      " bins, scorer has " + std::to_string(bins()));
  }
  Spectrogram out = s_t.zeros_like();
  for (std::size_t l = 0; l < s_t.frames(); ++l) {
    for (std::size_t k = 0; k < bins(); ++k) {
      out.at(k, l) = gain[k] * s_t.at(k, l) + (use_bias_ ? bias[k] : cplx{});
    }
  }
  return out;
}

ScoreFn ToyScorer::as_score_fn() const {
  return [self = *this](const Spectrogram& s_t, double, const Conditioning&) {
    return self.score(s_t);
  };
}

std::vector<double> ToyScorer::params() const {
  std::vector<double> p;
  for (const auto& g : gain) p.push_back(g.real());
  for (const auto& g : gain) p.push_back(g.imag());
  if (use_bias_) {
    for (const auto& b : bias) p.push_back(b.real());
    for (const auto& b : bias) p.push_back(b.imag());
  }
  return p;
}

void ToyScorer::set_params(std::span<const double> p) {
  const std::size_t k = bins();
  if (p.size() != (use_bias_ ? 4 : 2) * k) throw ConfigError("ToyScorer: parameter size mismatch");
  for (std::size_t i = 0; i < k; ++i) gain[i] = {p[i], p[k + i]};
  if (use_bias_) {
    for (std::size_t i = 0; i < k; ++i) bias[i] = {p[2 * k + i], p[3 * k + i]};
  }
}

double toy_sm_loss(const ToyScorer& scorer, const Spectrogram& s_t, const Spectrogram& z,
                   double sigma, ToyGrad* grad) {
  if (!s_t.same_shape(z) || s_t.bins() != scorer.bins()) {
    throw ConfigError("toy_sm_loss: shape mismatch");
  }
  const double n = static_cast<double>(s_t.size());
  if (grad) {
    grad->gain.assign(scorer.bins(), 0.0);
    grad->bias.assign(scorer.bins(), 0.0);
  }
  double loss = 0.0;
  for (std::size_t l = 0; l < s_t.frames(); ++l) {
    for (std::size_t k = 0; k < s_t.bins(); ++k) {
      const cplx x = s_t.at(k, l);
      const cplx r = scorer.gain[k] * x + (scorer.use_bias() ? scorer.bias[k] : cplx{}) +
                     z.at(k, l) / sigma;
      loss += std::norm(r);
      if (grad) {
        grad->gain[k] += 2.0 * r * std::conj(x) / n;
        if (scorer.use_bias()) grad->bias[k] += 2.0 * r / n;
      }
    }
  }
  return loss / n;
}

ToyTrainResult toy_train(ToyScorer scorer, double prior_sigma_s, const NoiseSchedule& sched,
                         const ToyTrainConfig& cfg, Rng& rng) {
  sched.validate();
  if (!(prior_sigma_s >= 0.0)) throw ConfigError("toy_train: prior sigma must be >= 0");
  if (cfg.frames == 0) throw ConfigError("toy_train: frames must be > 0");
  if (!(cfg.lr >= 0.0)) throw ConfigError("toy_train: lr must be >= 0");
  const double sigma = sigma_at(sched, cfg.t < 0.0 ? sched.t_max : cfg.t);
  const Spectrogram shape(toy_stft_config(), cfg.frames);
  if (scorer.bins() != shape.bins()) {
    throw ConfigError("toy_train: scorer must have " + std::to_string(shape.bins()) + " bins");
  }
  ToyTrainResult result;
  double trace_sum = 0.0;
  std::size_t trace_n = 0;
  ToyGrad grad;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Spectrogram s = draw_noise(shape, rng);
    s *= prior_sigma_s;
    const Spectrogram z = draw_noise(shape, rng);
    Spectrogram s_t = s;
    s_t.axpy(sigma, z);
    const double loss = toy_sm_loss(scorer, s_t, z, sigma, &grad);
    if (!std::isfinite(loss)) {
      throw NumericError("toy_train: non-finite loss at step " + std::to_string(step));
    }
    const double progress = static_cast<double>(step) / static_cast<double>(cfg.steps);
    const double decay = cfg.final_lr_fraction +
                         (1.0 - cfg.final_lr_fraction) * 0.5 *
                             (1.0 + std::cos(std::numbers::pi * progress));
    const double lr = cfg.lr * decay;
    for (std::size_t k = 0; k < scorer.bins(); ++k) {
      scorer.gain[k] -= lr * grad.gain[k];
      if (scorer.use_bias()) scorer.bias[k] -= lr * grad.bias[k];
    }
    trace_sum += loss;
    if (++trace_n == std::max<std::size_t>(cfg.trace_every, 1)) {
      result.loss_trace.push_back(trace_sum / static_cast<double>(trace_n));
      trace_sum = 0.0;
      trace_n = 0;
    }
  }
  if (trace_n > 0) result.loss_trace.push_back(trace_sum / static_cast<double>(trace_n));
  result.scorer = std::move(scorer);
  return result;
}

}  // namespace dvqe
