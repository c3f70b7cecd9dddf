#include "dvqe/scene/scene.h"

#include <cmath>
#include <random>

#include "dvqe/common/error.h"
#include "dvqe/common/rng.h"

namespace dvqe {

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::kNone: return "none";
    case Augmentation::kDropNearend: return "drop_nearend";
    case Augmentation::kDropFarend: return "drop_farend";
    case Augmentation::kDryNearend: return "dry_nearend";
  }
  return "none";
}

Augmentation augmentation_from_string(const std::string& s) {
  for (auto a : {Augmentation::kNone, Augmentation::kDropNearend,
                 Augmentation::kDropFarend, Augmentation::kDryNearend}) {
    if (to_string(a) == s) return a;
  }
  throw ConfigError("unknown augmentation '" + s + "'");
}

namespace {

Waveform crop(const Waveform& w, std::size_t n, Rng& rng, const char* what) {
  if (w.size() < n) {
    throw DataError(std::string("mix_scene: ") + what + " shorter than duration");
  }
  std::uniform_int_distribution<std::size_t> pick(0, w.size() - n);
  const std::size_t off = pick(rng);
  return Waveform(std::vector<double>(w.samples.begin() + off,
                                      w.samples.begin() + off + n),
                  w.sample_rate_hz);
}

}  // namespace

SceneBundle mix_scene(const Waveform& speech, const Waveform& farend,
                      const Waveform& noise, const SceneConfig& cfg) {
  if (!(cfg.duration_s > 0.0)) throw ConfigError("mix_scene: duration must be > 0");
  cfg.room.validate();
  cfg.nonlinearity.validate();
  const int fs = cfg.room.sample_rate_hz;
  for (const Waveform* w : {&speech, &farend, &noise}) {
    validate(*w, "mix_scene input");
    if (w->sample_rate_hz != fs) {
      throw DataError("mix_scene: input rate differs from room sample rate");
    }
  }
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * fs));
  Rng rng(cfg.seed);
  const Waveform s = crop(speech, n, rng, "near-end speech");
  const Waveform x = crop(farend, n, rng, "far-end speech");
  const Waveform v = crop(noise, n, rng, "noise");

  const auto [h1, h2] = generate_rir_pair(cfg.room);
  const Waveform x_nl = apply_nonlinearity(x, cfg.nonlinearity);
  Waveform d(convolve(x_nl.samples, h1.samples, n), fs);
  Waveform s_rev(convolve(s.samples, h2.samples, n), fs);

  const bool dry = cfg.augmentation == Augmentation::kDryNearend;
  const Waveform& near_ref = dry ? s : s_rev;
  const double p_ref = mean_square(near_ref.samples);
  const double p_echo = mean_square(d.samples);
  const double p_noise = mean_square(v.samples);
  if (p_ref <= 0.0) throw DataError("mix_scene: near-end component is silent");
  if (p_echo <= 0.0) throw DataError("mix_scene: echo component is silent");
  if (p_noise <= 0.0) throw DataError("mix_scene: noise component is silent");

  const double g_echo = std::sqrt(p_ref / (p_echo * std::pow(10.0, cfg.ser_db / 10.0)));
  const double g_noise = std::sqrt(p_ref / (p_noise * std::pow(10.0, cfg.snr_db / 10.0)));
  for (double& e : d.samples) e *= g_echo;
  Waveform nz = v;
  for (double& e : nz.samples) e *= g_noise;

  SceneBundle b;
  b.config = cfg;
  b.achieved_ser_db = 10.0 * std::log10(p_ref / mean_square(d.samples));
  b.achieved_snr_db = 10.0 * std::log10(p_ref / mean_square(nz.samples));
  b.near_dry = s;
  b.near_reverb = s_rev;
  b.farend = x;
  b.target = near_ref;
  switch (cfg.augmentation) {
    case Augmentation::kDropNearend:
      b.target = Waveform::zeros(n, fs);
      break;
    case Augmentation::kDropFarend:
      d = Waveform::zeros(n, fs);
      b.farend = Waveform::zeros(n, fs);
      break;
    case Augmentation::kNone:
    case Augmentation::kDryNearend:
      break;
  }
  b.echo = d;
  b.noise = nz;
  b.mic = Waveform::zeros(n, fs);
  for (std::size_t i = 0; i < n; ++i) {
    b.mic.samples[i] = b.target.samples[i] + b.echo.samples[i] + b.noise.samples[i];
  }
  return b;
}

}  // namespace dvqe
