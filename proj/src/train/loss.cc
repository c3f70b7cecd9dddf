#include "dvqe/train/loss.h"

#include <cmath>

#include "dvqe/common/error.h"

namespace dvqe {

void LossConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("LossConfig: alpha must be >= 0");
  if (!(c > 0.0 && c <= 1.0)) throw ConfigError("LossConfig: c must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("LossConfig: lambda must lie in [0, 1]");
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  j = {{"alpha", c.alpha}, {"c", c.c}, {"lambda", c.lambda}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  c.alpha = j.value("alpha", c.alpha);
  c.c = j.value("c", c.c);
  c.lambda = j.value("lambda", c.lambda);
  c.validate();
}

cplx compress(cplx z, double c) {
  const double r = std::abs(z);
  if (r == 0.0) return 0.0;
  return std::pow(r, c - 1.0) * z;
}

namespace {

void check(const Spectrogram& a, const Spectrogram& b, const LossConfig& cfg) {
  cfg.validate();
  if (!a.same_shape(b)) throw ConfigError("cc_mse: shape mismatch");
}

double element_count(const Spectrogram& s) {
  return static_cast<double>(std::min(s.config().num_bins(), s.bins()) * s.frames());
}

}  // namespace

double cc_mse(const Spectrogram& s_hat, const Spectrogram& s, const LossConfig& cfg) {
  check(s_hat, s, cfg);
  const std::size_t k_max = std::min(s.config().num_bins(), s.bins());
  double acc = 0.0;
  for (std::size_t l = 0; l < s.frames(); ++l) {
    for (std::size_t k = 0; k < k_max; ++k) {
      const cplx a = compress(s.at(k, l), cfg.c);
      const cplx b = compress(s_hat.at(k, l), cfg.c);
      const double dm = std::abs(a) - std::abs(b);
      acc += cfg.lambda * std::norm(a - b) + (1.0 - cfg.lambda) * dm * dm;
    }
  }
  return s.frames() == 0 ? 0.0 : acc / element_count(s);
}

double cc_mse_grad(const Spectrogram& s_hat, const Spectrogram& s, const LossConfig& cfg,
                   Spectrogram& grad) {
  check(s_hat, s, cfg);
  grad = s_hat.zeros_like();
  if (s.frames() == 0) return 0.0;
  const double n = element_count(s);
  const std::size_t k_max = std::min(s.config().num_bins(), s.bins());
  const double c = cfg.c;
  double acc = 0.0;
  for (std::size_t l = 0; l < s.frames(); ++l) {
    for (std::size_t k = 0; k < k_max; ++k) {
      const cplx a = compress(s.at(k, l), c);
      const cplx z = s_hat.at(k, l);
      const cplx w = compress(z, c);
      const double rho = std::abs(z);
      const cplx d = w - a;
      const double m = std::abs(w) - std::abs(a);
      acc += cfg.lambda * std::norm(d) + (1.0 - cfg.lambda) * m * m;
      if (rho == 0.0) continue;
      // Partial derivatives of w = rho^(c-1) z with respect to Re z and Im z.
      const double rc1 = std::pow(rho, c - 1.0);
      const cplx dw_da = rc1 * (1.0 + (c - 1.0) * z.real() * z / (rho * rho));
      const cplx dw_db = rc1 * (cplx(0.0, 1.0) + (c - 1.0) * z.imag() * z / (rho * rho));
      double ga = 2.0 * cfg.lambda * std::real(std::conj(d) * dw_da);
      double gb = 2.0 * cfg.lambda * std::real(std::conj(d) * dw_db);
      const double dmag = 2.0 * (1.0 - cfg.lambda) * m * c * std::pow(rho, c - 2.0);
      ga += dmag * z.real();
      gb += dmag * z.imag();
      grad.at(k, l) = cplx(ga, gb) / n;
    }
  }
  return acc / n;
}

double total_loss(const Spectrogram& s_cond_hat, const Spectrogram& s_hat, const Spectrogram& s,
                  double sm_loss, const LossConfig& cfg) {
  if (!std::isfinite(sm_loss)) throw NumericError("total_loss: non-finite score-matching loss");
  return cc_mse(s_cond_hat, s, cfg) + cc_mse(s_hat, s, cfg) + cfg.alpha * sm_loss;
}

}  // namespace dvqe
