#include "dvqe/diffusion/precondition.h"

#include <cmath>
#include <string>

#include "dvqe/common/error.h"

namespace dvqe {

EdmScalings edm_scalings(double sigma, double sigma_data) {
  if (!(sigma > 0.0) || !(sigma_data > 0.0)) {
    throw ConfigError("edm_scalings: sigma and sigma_data must be > 0");
  }
  const double s2 = sigma * sigma;
  const double d2 = sigma_data * sigma_data;
  const double total = std::sqrt(s2 + d2);
  return {d2 / (s2 + d2), sigma * sigma_data / total, 1.0 / total, std::log(sigma) / 4.0};
}

Preconditioner::Preconditioner(RawNet raw, double sigma_data)
    : raw_(std::move(raw)), sigma_data_(sigma_data) {
  if (!(sigma_data > 0.0)) throw ConfigError("Preconditioner: sigma_data must be > 0");
  if (!raw_) throw ConfigError("Preconditioner: empty raw network");
}

Spectrogram Preconditioner::denoise(const Spectrogram& s_t, double sigma,
                                    const Conditioning& c) const {
  const EdmScalings k = edm_scalings(sigma, sigma_data_);
  const Spectrogram f = raw_(k.c_in * s_t, k.c_noise, c);
  if (!f.same_shape(s_t)) throw ConfigError("Preconditioner: raw network changed the shape");
  Spectrogram d = s_t;
  d *= k.c_skip;
  d.axpy(k.c_out, f);
  return d;
}

Spectrogram Preconditioner::score(const Spectrogram& s_t, double sigma,
                                  const Conditioning& c) const {
  Spectrogram d = denoise(s_t, sigma, c);
  d -= s_t;
  d *= 1.0 / (sigma * sigma);
  return d;
}

ScoreFn Preconditioner::as_score_fn() const {
  return [self = *this](const Spectrogram& s_t, double sigma, const Conditioning& c) {
    return self.score(s_t, sigma, c);
  };
}

double estimate_sigma_data(std::span<const Spectrogram> clean) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const Spectrogram& s : clean) {
    const std::size_t k_max = s.config().num_bins();
    for (std::size_t l = 0; l < s.frames(); ++l) {
      for (std::size_t k = 0; k < k_max; ++k) sum += std::norm(s.at(k, l));
      count += k_max;
    }
  }
  if (count == 0) throw DataError("estimate_sigma_data: no spectrogram data");
  if (!(sum > 0.0)) throw DataError("estimate_sigma_data: clean spectrograms are silent");
  return std::sqrt(sum / static_cast<double>(count));
}

}  // namespace dvqe
