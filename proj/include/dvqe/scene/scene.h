#pragma once

#include <cstdint>
#include <string>

#include "dvqe/scene/nonlinearity.h"
#include "dvqe/scene/rir.h"
#include "dvqe/signal/waveform.h"

namespace dvqe {

enum class Augmentation { kNone, kDropNearend, kDropFarend, kDryNearend };

std::string to_string(Augmentation a);
Augmentation augmentation_from_string(const std::string& s);

struct SceneConfig {
  double ser_db = 0.0;
  double snr_db = 20.0;
  RoomSpec room;
  NonlinearitySpec nonlinearity = NonlinearitySpec::loudspeaker_default();
  double duration_s = 30.0;
  Augmentation augmentation = Augmentation::kNone;
  std::uint64_t seed = 0;
};

// One synthetic hands-free scene. mic == target + echo + noise exactly, where
// target is the near-end component actually present in the microphone
// (reverberant, dry, or zero depending on the augmentation).
struct SceneBundle {
  Waveform mic;
  Waveform farend;
  Waveform echo;
  Waveform near_reverb;
  Waveform near_dry;
  Waveform noise;
  Waveform target;
  // Ratios realised by the level scaling, measured before any component is
  // dropped by augmentation.
  double achieved_ser_db = 0.0;
  double achieved_snr_db = 0.0;
  SceneConfig config;
};

// Crops the three sources to duration_s at seed-determined offsets, forms
// d = h1 * f_NL(x) and s' = h2 * s, scales echo and noise to the requested
// SER/SNR against the near-end reference (s', or s for dry_nearend) using
// full-utterance power, then applies the augmentation. drop_farend also
// silences the far-end reference. Throws DataError when a component is silent
// or too short.
SceneBundle mix_scene(const Waveform& speech, const Waveform& farend,
                      const Waveform& noise, const SceneConfig& cfg);

}  // namespace dvqe
