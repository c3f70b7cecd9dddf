#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dvqe/signal/waveform.h"

namespace dvqe {

enum class NonlinearityKind {
  kIdentity,
  kHardClip,          // clamp to +/-threshold (relative to max|x| if `relative`)
  kSoftClipArctan,    // (2L/pi) atan(pi x / (2L)); unit slope at 0, |out| < L
  kMemorylessSigmoid, // s (2 / (1 + exp(-a x)) - 1); odd, monotone, |out| < s
  kPolynomial,        // sum_i coeffs[i] x^i
};

struct NonlinearityStage {
  NonlinearityKind kind = NonlinearityKind::kIdentity;
  double threshold = 0.8;
  bool relative = true;
  double limit = 1.0;
  double saturation = 1.0;
  double slope = 1.0;
  std::vector<double> coeffs;

  bool operator==(const NonlinearityStage&) const = default;
};

// Loudspeaker distortion model: stages applied in order.
struct NonlinearitySpec {
  std::vector<NonlinearityStage> stages;

  static NonlinearitySpec identity() { return {}; }
  static NonlinearitySpec hard_clip(double threshold, bool relative = true);
  static NonlinearitySpec sigmoid(double saturation, double slope);
  // Hard clip at 0.8 max|x| followed by b(v) = 1.5 v - 0.3 v^2.
  static NonlinearitySpec loudspeaker_default();

  // Throws ConfigError for out-of-range parameters.
  void validate() const;
  bool operator==(const NonlinearitySpec&) const = default;
};

std::string to_string(NonlinearityKind kind);
NonlinearityKind nonlinearity_kind_from_string(const std::string& s);

// Memoryless pointwise map; an identity spec returns the input bit-exact.
Waveform apply_nonlinearity(const Waveform& x, const NonlinearitySpec& spec);

void to_json(nlohmann::json& j, const NonlinearitySpec& spec);
void from_json(const nlohmann::json& j, NonlinearitySpec& spec);

}  // namespace dvqe
