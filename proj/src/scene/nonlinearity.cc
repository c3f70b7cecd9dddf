#include "dvqe/scene/nonlinearity.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dvqe/common/error.h"

namespace dvqe {

NonlinearitySpec NonlinearitySpec::hard_clip(double threshold, bool relative) {
  NonlinearityStage s;
  s.kind = NonlinearityKind::kHardClip;
  s.threshold = threshold;
  s.relative = relative;
  return {{s}};
}

NonlinearitySpec NonlinearitySpec::sigmoid(double saturation, double slope) {
  NonlinearityStage s;
  s.kind = NonlinearityKind::kMemorylessSigmoid;
  s.saturation = saturation;
  s.slope = slope;
  return {{s}};
}

NonlinearitySpec NonlinearitySpec::loudspeaker_default() {
  NonlinearitySpec spec = hard_clip(0.8, true);
  NonlinearityStage poly;
  poly.kind = NonlinearityKind::kPolynomial;
  poly.coeffs = {0.0, 1.5, -0.3};
  spec.stages.push_back(poly);
  return spec;
}

void NonlinearitySpec::validate() const {
  for (const auto& s : stages) {
    switch (s.kind) {
      case NonlinearityKind::kIdentity:
        break;
      case NonlinearityKind::kHardClip:
        if (!(s.threshold > 0.0) || !std::isfinite(s.threshold) ||
            (s.relative && s.threshold > 1.0)) {
          throw ConfigError("hard_clip: threshold must be in (0, 1] (relative) or > 0");
        }
        break;
      case NonlinearityKind::kSoftClipArctan:
        if (!(s.limit > 0.0) || !std::isfinite(s.limit)) {
          throw ConfigError("soft_clip_arctan: limit must be > 0");
        }
        break;
      case NonlinearityKind::kMemorylessSigmoid:
        if (!(s.saturation > 0.0) || !(s.slope > 0.0) ||
            !std::isfinite(s.saturation) || !std::isfinite(s.slope)) {
          throw ConfigError("memoryless_sigmoid: saturation and slope must be > 0");
        }
        break;
      case NonlinearityKind::kPolynomial:
        if (s.coeffs.empty()) throw ConfigError("polynomial: no coefficients");
        for (double c : s.coeffs) {
          if (!std::isfinite(c)) throw ConfigError("polynomial: non-finite coefficient");
        }
        break;
    }
  }
}

std::string to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::kIdentity: return "identity";
    case NonlinearityKind::kHardClip: return "hard_clip";
    case NonlinearityKind::kSoftClipArctan: return "soft_clip_arctan";
    case NonlinearityKind::kMemorylessSigmoid: return "memoryless_sigmoid";
    case NonlinearityKind::kPolynomial: return "polynomial";
  }
  return "identity";
}

NonlinearityKind nonlinearity_kind_from_string(const std::string& s) {
  for (auto k : {NonlinearityKind::kIdentity, NonlinearityKind::kHardClip,
                 NonlinearityKind::kSoftClipArctan,
                 NonlinearityKind::kMemorylessSigmoid,
                 NonlinearityKind::kPolynomial}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown nonlinearity kind '" + s + "'");
}

Waveform apply_nonlinearity(const Waveform& x, const NonlinearitySpec& spec) {
  spec.validate();
  validate(x, "nonlinearity input");
  Waveform y = x;
  for (const auto& s : spec.stages) {
    auto& v = y.samples;
    switch (s.kind) {
      case NonlinearityKind::kIdentity:
        break;
      case NonlinearityKind::kHardClip: {
        const double level = s.relative ? s.threshold * max_abs(v) : s.threshold;
        for (double& e : v) e = std::clamp(e, -level, level);
        break;
      }
      case NonlinearityKind::kSoftClipArctan: {
        const double k = std::numbers::pi / (2.0 * s.limit);
        for (double& e : v) e = std::atan(k * e) / k;
        break;
      }
      case NonlinearityKind::kMemorylessSigmoid:
        for (double& e : v) e = s.saturation * std::tanh(0.5 * s.slope * e);
        break;
      case NonlinearityKind::kPolynomial:
        for (double& e : v) {
          double acc = 0.0;
          for (std::size_t i = s.coeffs.size(); i-- > 0;) acc = acc * e + s.coeffs[i];
          e = acc;
        }
        break;
    }
  }
  return y;
}

void to_json(nlohmann::json& j, const NonlinearitySpec& spec) {
  j = nlohmann::json::array();
  for (const auto& s : spec.stages) {
    nlohmann::json st{{"kind", to_string(s.kind)}};
    switch (s.kind) {
      case NonlinearityKind::kHardClip:
        st["threshold"] = s.threshold;
        st["relative"] = s.relative;
        break;
      case NonlinearityKind::kSoftClipArctan:
        st["limit"] = s.limit;
        break;
      case NonlinearityKind::kMemorylessSigmoid:
        st["saturation"] = s.saturation;
        st["slope"] = s.slope;
        break;
      case NonlinearityKind::kPolynomial:
        st["coeffs"] = s.coeffs;
        break;
      case NonlinearityKind::kIdentity:
        break;
    }
    j.push_back(st);
  }
}

void from_json(const nlohmann::json& j, NonlinearitySpec& spec) {
  spec.stages.clear();
  if (!j.is_array()) throw ConfigError("nonlinearity: expected an array of stages");
  for (const auto& st : j) {
    NonlinearityStage s;
    s.kind = nonlinearity_kind_from_string(st.at("kind").get<std::string>());
    s.threshold = st.value("threshold", s.threshold);
    s.relative = st.value("relative", s.relative);
    s.limit = st.value("limit", s.limit);
    s.saturation = st.value("saturation", s.saturation);
    s.slope = st.value("slope", s.slope);
    if (st.contains("coeffs")) s.coeffs = st.at("coeffs").get<std::vector<double>>();
    spec.stages.push_back(s);
  }
  spec.validate();
}

}  // namespace dvqe
