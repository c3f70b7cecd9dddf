#include "dvqe/model/diffvqe.h"

#include "dvqe/common/error.h"
#include "dvqe/model/layers.h"

namespace dvqe {

Tensor3 spectrogram_channels(std::initializer_list<const Spectrogram*> specs) {
  const Spectrogram& first = **specs.begin();
  Tensor3 out(2 * specs.size(), first.frames(), first.bins());
  std::size_t c = 0;
  for (const Spectrogram* s : specs) {
    if (!s->same_shape(first)) throw ConfigError("spectrogram_channels: shape mismatch");
    for (std::size_t l = 0; l < s->frames(); ++l) {
      for (std::size_t k = 0; k < s->bins(); ++k) {
        out(c, l, k) = static_cast<float>(s->at(k, l).real());
        out(c + 1, l, k) = static_cast<float>(s->at(k, l).imag());
      }
    }
    c += 2;
  }
  return out;
}

Spectrogram channels_to_spectrogram(const Tensor3& t, const Spectrogram& like) {
  if (t.channels() < 2 || t.time() != like.frames() || t.freq() != like.bins()) {
    throw ConfigError("channels_to_spectrogram: tensor " + t.shape_string() +
                      " does not match spectrogram");
  }
  Spectrogram out = like.zeros_like();
  const std::size_t k_max = like.config().num_bins();
  for (std::size_t l = 0; l < like.frames(); ++l) {
    for (std::size_t k = 0; k < k_max; ++k) out.at(k, l) = {t(0, l, k), t(1, l, k)};
  }
  return out;
}

namespace {

UNetSpec spec_from(const WeightContainer& w) {
  if (w.unet_spec.is_null() || w.unet_spec.empty()) {
    throw DataError("weight container carries no unet_spec");
  }
  return w.unet_spec.get<UNetSpec>();
}

}  // namespace

DiffVqeModel::DiffVqeModel(const WeightContainer& weights)
    : spec_(spec_from(weights)),
      cond_(spec_, weights, NetRole::kCond, "cond"),
      score_(spec_, weights, NetRole::kScore, "score") {}

CondResult DiffVqeModel::condition(const Spectrogram& mic, const Spectrogram& farend) const {
  if (mic.bins() != spec_.input_bins) {
    throw ConfigError("spectrogram has " + std::to_string(mic.bins()) + " bins, network expects " +
                      std::to_string(spec_.input_bins));
  }
  UNetOutput o = cond_.forward(spectrogram_channels({&mic, &farend}));
  return {channels_to_spectrogram(o.output, mic), std::move(o.features)};
}

Spectrogram DiffVqeModel::raw_score(const Spectrogram& scaled, double c_noise,
                                    const Conditioning& c) const {
  Tensor3 head = spectrogram_channels({&scaled});
  Tensor3 noise(1, scaled.frames(), scaled.bins(), static_cast<float>(c_noise));
  Tensor3 in = concat_channels(concat_channels(head, noise), c);
  return channels_to_spectrogram(score_.forward(in).output, scaled);
}

ScoreFn DiffVqeModel::score_fn(double sigma_data) const {
  Preconditioner pre(
      [this](const Spectrogram& s, double c_noise, const Conditioning& c) {
        return raw_score(s, c_noise, c);
      },
      sigma_data);
  return pre.as_score_fn();
}

Spectrogram enhance_spectrogram(const Spectrogram& s_cond, const ScoreFn& score,
                                const Conditioning& c, const EnhanceOptions& opts, Rng& rng) {
  const SamplerInit init =
      opts.mode == EnhanceMode::kSingle ? SamplerInit::kSingleStep : SamplerInit::kNoise;
  return reverse_sample(score, c, opts.sampler, opts.schedule, rng, s_cond, init);
}

Waveform enhance_waveform(const DiffVqeModel& model, const Waveform& mic,
                          const Waveform& farend, const EnhanceOptions& opts, Rng& rng) {
  if (mic.size() != farend.size()) {
    throw DataError("mic and far-end lengths differ (" + std::to_string(mic.size()) + " vs " +
                    std::to_string(farend.size()) + ")");
  }
  const Spectrogram y = stft(mic, opts.stft);
  const Spectrogram x = stft(farend, opts.stft);
  const CondResult cond = model.condition(y, x);
  const Spectrogram s_hat =
      enhance_spectrogram(cond.s_cond, model.score_fn(opts.sigma_data), cond.features, opts, rng);
  return istft(s_hat, mic.sample_rate_hz);
}

}  // namespace dvqe
