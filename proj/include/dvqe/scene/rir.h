#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "dvqe/signal/waveform.h"

namespace dvqe {

using Vec3 = std::array<double, 3>;

inline constexpr double kSpeedOfSound = 343.0;  // m/s

double distance(const Vec3& a, const Vec3& b);

// Shoebox room for image-source simulation. All walls share one
// frequency-independent reflection coefficient derived from rt60 (Eyring).
struct RoomSpec {
  Vec3 dimensions{5.0, 4.0, 3.0};
  double rt60_s = 0.4;
  // -1: every image whose delay falls inside the RIR length.
  int max_reflection_order = -1;
  Vec3 source_pos{1.0, 1.0, 1.5};   // loudspeaker (far-end playback)
  Vec3 mic_pos{2.5, 2.0, 1.2};
  Vec3 nearend_pos{3.5, 2.5, 1.6};  // near-end talker
  std::uint64_t seed = 0;
  int sample_rate_hz = kDefaultSampleRate;

  // Throws ConfigError for non-positive dimensions/rt60 or positions on or
  // outside the walls.
  void validate() const;
  // Energy absorption coefficient in (0, 1].
  double absorption() const;
  // Eyring reflection coefficient sqrt(1 - absorption).
  double reflection() const;
  // min(1.5 * rt60, 1 s) in samples.
  std::size_t rir_length() const;
};

// Image-source RIR between `src` and `mic`, fractional delays realized with a
// Hann-windowed sinc. Unless the order is limited to 0, image gains receive an
// extra attenuation proportional to their delay beyond the direct path, fitted
// on the image energy histogram so that the Schroeder decay matches rt60, and
// the response is high-passed at 100 Hz (Allen-Berkley) to remove the DC
// build-up of the all-positive image lattice.
// Deterministic; `room.seed` is not consulted.
Waveform generate_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic);

// (h1, h2): loudspeaker->mic and near-end talker->mic in the same room.
// Rejects either source closer than 5 cm to the microphone.
std::pair<Waveform, Waveform> generate_rir_pair(const RoomSpec& room);

// Reverberation time from Schroeder backward integration with a least-squares
// line fitted to the -5..-25 dB span of the decay curve, extrapolated to 60 dB.
double schroeder_t60(const Waveform& rir);

}  // namespace dvqe
