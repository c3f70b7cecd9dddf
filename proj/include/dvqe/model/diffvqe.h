#pragma once

#include "dvqe/common/rng.h"
#include "dvqe/diffusion/precondition.h"
#include "dvqe/diffusion/sampler.h"
#include "dvqe/diffusion/schedule.h"
#include "dvqe/model/unet.h"
#include "dvqe/signal/stft.h"

namespace dvqe {

// Real/imaginary planes of each spectrogram stacked as channels.
Tensor3 spectrogram_channels(std::initializer_list<const Spectrogram*> specs);
// Channels 0/1 of `t` as a spectrogram shaped like `like`; bins beyond the
// analysis range are zeroed.
Spectrogram channels_to_spectrogram(const Tensor3& t, const Spectrogram& like);

struct CondResult {
  Spectrogram s_cond;
  Conditioning features;
};

// Cond and Score networks loaded from one weight container.
class DiffVqeModel {
 public:
  explicit DiffVqeModel(const WeightContainer& weights);

  const UNetSpec& spec() const { return spec_; }

  CondResult condition(const Spectrogram& mic, const Spectrogram& farend) const;
  // Raw Score network F(c_in S_t, c_noise, C).
  Spectrogram raw_score(const Spectrogram& scaled, double c_noise, const Conditioning& c) const;
  // The returned callable refers to this model, which must outlive it.
  ScoreFn score_fn(double sigma_data = kDefaultSigmaData) const;

 private:
  UNetSpec spec_;
  UNet cond_;
  UNet score_;
};

enum class EnhanceMode { kSingle, kMulti };

struct EnhanceOptions {
  EnhanceMode mode = EnhanceMode::kSingle;
  SamplerConfig sampler;
  NoiseSchedule schedule;
  double sigma_data = kDefaultSigmaData;
  StftConfig stft;
};

// Runs the diffusion stage given a conditional estimate and a score.
Spectrogram enhance_spectrogram(const Spectrogram& s_cond, const ScoreFn& score,
                                const Conditioning& c, const EnhanceOptions& opts, Rng& rng);

// Full pipeline: STFT, Cond, diffusion stage, inverse STFT. Output has the
// length of `mic`.
Waveform enhance_waveform(const DiffVqeModel& model, const Waveform& mic,
                          const Waveform& farend, const EnhanceOptions& opts, Rng& rng);

}  // namespace dvqe
