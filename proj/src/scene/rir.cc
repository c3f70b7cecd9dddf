#include "dvqe/scene/rir.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "dvqe/common/error.h"

namespace dvqe {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

void check_inside(const RoomSpec& r, const Vec3& p, const char* what) {
  for (int i = 0; i < 3; ++i) {
    if (!(p[i] > 0.0 && p[i] < r.dimensions[i])) {
      throw ConfigError(std::string("RoomSpec: ") + what +
                        " position is not strictly inside the room");
    }
  }
}

}  // namespace

void RoomSpec::validate() const {
  for (double d : dimensions) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw ConfigError("RoomSpec: dimensions must be positive");
    }
  }
  if (!(rt60_s > 0.0) || !std::isfinite(rt60_s)) {
    throw ConfigError("RoomSpec: rt60 must be positive");
  }
  if (sample_rate_hz <= 0) throw ConfigError("RoomSpec: bad sample rate");
  check_inside(*this, source_pos, "source");
  check_inside(*this, mic_pos, "mic");
  check_inside(*this, nearend_pos, "near-end");
  const double a = absorption();
  if (!(a > 0.0 && a <= 1.0)) {
    throw ConfigError("RoomSpec: rt60 implies absorption outside (0, 1]");
  }
}

double RoomSpec::absorption() const {
  const auto& d = dimensions;
  const double volume = d[0] * d[1] * d[2];
  const double surface = 2.0 * (d[0] * d[1] + d[0] * d[2] + d[1] * d[2]);
  // Eyring: rt60 = 24 ln(10) V / (-c S ln(1 - a))
  return 1.0 - std::exp(-24.0 * std::numbers::ln10 * volume /
                        (kSpeedOfSound * surface * rt60_s));
}

double RoomSpec::reflection() const { return std::sqrt(1.0 - absorption()); }

std::size_t RoomSpec::rir_length() const {
  const double seconds = std::min(1.5 * rt60_s, 1.0);
  // The small slack keeps products such as 1.5 * 0.4 * 16000 from rounding up.
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(seconds * sample_rate_hz - 1e-6)));
}

namespace {

struct Image {
  double delay;  // samples
  double gain;
};

// Least-squares slope of the -5..-25 dB span of a Schroeder curve built from
// per-sample energies, as a reverberation time in seconds (0 if not reached).
double decay_fit_t60(const std::vector<double>& energy, int fs) {
  std::vector<double> edc(energy.size());
  double acc = 0.0;
  for (std::size_t i = energy.size(); i-- > 0;) {
    acc += energy[i];
    edc[i] = acc;
  }
  if (acc <= 0.0) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    const double db = 10.0 * std::log10(edc[i] / acc);
    if (db > -5.0) continue;
    if (db < -25.0) break;
    const double t = static_cast<double>(i) / fs;
    sx += t;
    sy += db;
    sxx += t * t;
    sxy += t * db;
    ++count;
  }
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return slope < 0.0 ? -60.0 / slope : 0.0;
}

// A shoebox image lattice with uniform absorption decays more slowly than
// the diffuse-field Eyring estimate, since late energy arrives along the
// longest axis with few reflections. Extra attenuation proportional to the
// excess delay over the direct path restores the requested decay rate.
void calibrate_decay(std::vector<Image>& images, std::size_t n_samples, double rt60_s, int fs) {
  if (images.size() < 2) return;
  double direct = images.front().delay;
  for (const auto& im : images) direct = std::min(direct, im.delay);
  std::vector<double> energy(n_samples);
  for (int iter = 0; iter < 3; ++iter) {
    std::fill(energy.begin(), energy.end(), 0.0);
    for (const auto& im : images) {
      energy[static_cast<std::size_t>(im.delay)] += im.gain * im.gain;
    }
    const double measured = decay_fit_t60(energy, fs);
    if (!(measured > 0.0)) return;
    // Energy decay rates in dB per sample.
    const double extra_db = 60.0 / (rt60_s * fs) - 60.0 / (measured * fs);
    if (std::abs(extra_db) * fs < 1e-3) return;
    for (auto& im : images) {
      im.gain *= std::pow(10.0, -extra_db * (im.delay - direct) / 20.0);
    }
  }
}

// Allen-Berkley 100 Hz high-pass. All image gains are positive, so without it
// the dense late lattice builds up coherently at DC.
void highpass_100hz(std::vector<double>& h, int fs) {
  const double w = 2.0 * std::numbers::pi * 100.0 / fs;
  const double r1 = std::exp(-w);
  const double b1 = 2.0 * r1 * std::cos(w);
  const double b2 = -r1 * r1;
  const double a1 = -(1.0 + r1);
  double y0 = 0.0, y1 = 0.0, y2 = 0.0;
  for (double& v : h) {
    y2 = y1;
    y1 = y0;
    y0 = b1 * y1 + b2 * y2 + v;
    v = y0 + a1 * y1 + r1 * y2;
  }
}

}  // namespace

Waveform generate_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic) {
  room.validate();
  check_inside(room, src, "source");
  check_inside(room, mic, "mic");
  const int fs = room.sample_rate_hz;
  const std::size_t n_samples = room.rir_length();
  const double beta = room.reflection();
  const double samples_per_meter = fs / kSpeedOfSound;
  const int order = room.max_reflection_order;

  const auto& L = room.dimensions;
  int n_range[3];
  for (int i = 0; i < 3; ++i) {
    n_range[i] = static_cast<int>(std::ceil(
        static_cast<double>(n_samples) / (2.0 * L[i] * samples_per_meter)));
  }
  std::vector<Image> images;
  for (int mx = -n_range[0]; mx <= n_range[0]; ++mx) {
    for (int my = -n_range[1]; my <= n_range[1]; ++my) {
      for (int mz = -n_range[2]; mz <= n_range[2]; ++mz) {
        for (int q = 0; q < 8; ++q) {
          const int qx = q & 1, qy = (q >> 1) & 1, qz = (q >> 2) & 1;
          const int reflections =
              std::abs(2 * mx - qx) + std::abs(2 * my - qy) + std::abs(2 * mz - qz);
          if (order >= 0 && reflections > order) continue;
          const double dx = (1 - 2 * qx) * src[0] - mic[0] + 2.0 * mx * L[0];
          const double dy = (1 - 2 * qy) * src[1] - mic[1] + 2.0 * my * L[1];
          const double dz = (1 - 2 * qz) * src[2] - mic[2] + 2.0 * mz * L[2];
          const double dist_m = std::sqrt(dx * dx + dy * dy + dz * dz);
          const double delay = dist_m * samples_per_meter;
          if (std::floor(delay) >= static_cast<double>(n_samples)) continue;
          images.push_back(
              {delay, std::pow(beta, reflections) / (4.0 * std::numbers::pi * dist_m)});
        }
      }
    }
  }
  if (order != 0) calibrate_decay(images, n_samples, room.rt60_s, fs);

  // Windowed-sinc interpolation kernel, 8 ms wide.
  const int tw = 2 * static_cast<int>(std::lround(0.004 * fs));
  std::vector<double> cos_tab(tw), sin_tab(tw);
  for (int i = 0; i < tw; ++i) {
    const double m = i - 0.5 * tw + 1.0;
    cos_tab[i] = std::cos(2.0 * std::numbers::pi * m / tw);
    sin_tab[i] = std::sin(2.0 * std::numbers::pi * m / tw);
  }
  std::vector<double> h(n_samples, 0.0);
  std::vector<double> kernel(tw);
  for (const auto& im : images) {
    const double fdelay = std::floor(im.delay);
    const double frac = im.delay - fdelay;
    // t = m - frac with integer m; sin(pi t) = (-1)^(m+1) sin(pi frac).
    const double sin_pf = std::sin(std::numbers::pi * frac);
    const double cw = std::cos(2.0 * std::numbers::pi * frac / tw);
    const double sw = std::sin(2.0 * std::numbers::pi * frac / tw);
    for (int i = 0; i < tw; ++i) {
      const int m = i - tw / 2 + 1;
      const double t = m - frac;
      double s;
      if (std::abs(t) < 1e-12) {
        s = 1.0;
      } else {
        const double sign = (m % 2 == 0) ? -1.0 : 1.0;
        s = sign * sin_pf / (std::numbers::pi * t);
      }
      // cos(2 pi (m - frac) / tw)
      const double hann = 0.5 * (1.0 + cos_tab[i] * cw + sin_tab[i] * sw);
      kernel[i] = hann * s;
    }
    const long start = static_cast<long>(fdelay) - tw / 2 + 1;
    for (int i = 0; i < tw; ++i) {
      const long pos = start + i;
      if (pos >= 0 && pos < static_cast<long>(n_samples)) {
        h[static_cast<std::size_t>(pos)] += im.gain * kernel[i];
      }
    }
  }
  if (order != 0) highpass_100hz(h, fs);
  return Waveform(std::move(h), fs);
}

std::pair<Waveform, Waveform> generate_rir_pair(const RoomSpec& room) {
  room.validate();
  constexpr double kMinSeparation = 0.05;
  if (distance(room.source_pos, room.mic_pos) < kMinSeparation) {
    throw ConfigError("generate_rir_pair: loudspeaker within 5 cm of the mic");
  }
  if (distance(room.nearend_pos, room.mic_pos) < kMinSeparation) {
    throw ConfigError("generate_rir_pair: near-end talker within 5 cm of the mic");
  }
  return {generate_rir(room, room.source_pos, room.mic_pos),
          generate_rir(room, room.nearend_pos, room.mic_pos)};
}

double schroeder_t60(const Waveform& rir) {
  const auto& h = rir.samples;
  if (h.empty()) throw DataError("schroeder_t60: empty impulse response");
  std::vector<double> energy(h.size());
  double total = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    energy[i] = h[i] * h[i];
    total += energy[i];
  }
  if (total <= 0.0) throw DataError("schroeder_t60: silent impulse response");
  const double t60 = decay_fit_t60(energy, rir.sample_rate_hz);
  if (!(t60 > 0.0)) throw DataError("schroeder_t60: no decay over the -5..-25 dB span");
  return t60;
}

}  // namespace dvqe
