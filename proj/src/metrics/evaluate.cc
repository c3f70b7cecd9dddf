#include "dvqe/metrics/evaluate.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dvqe/common/error.h"
#include "dvqe/metrics/estoi.h"

namespace dvqe {

namespace {

constexpr double kActivityRangeDb = 40.0;

bool active(const Waveform& w) { return max_abs(w.samples) > 0.0; }

std::vector<double> frame_powers(const Waveform& w, std::size_t frame) {
  std::vector<double> p((w.size() + frame - 1) / frame, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) p[i / frame] += w.samples[i] * w.samples[i];
  return p;
}

double ratio_db(double num, double den) {
  if (den == 0.0) return num == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                    : std::numeric_limits<double>::infinity();
  if (num == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / den);
}

}  // namespace

std::string to_string(TalkCondition c) {
  switch (c) {
    case TalkCondition::kDoubleTalk: return "DT";
    case TalkCondition::kFarendSingleTalk: return "STFE";
    case TalkCondition::kNearendSingleTalk: return "STNE";
    case TalkCondition::kSilent: return "silent";
  }
  return "silent";
}

TalkCondition talk_condition(const SceneBundle& b) {
  const bool near = active(b.target);
  const bool far = active(b.echo);
  if (near && far) return TalkCondition::kDoubleTalk;
  if (far) return TalkCondition::kFarendSingleTalk;
  if (near) return TalkCondition::kNearendSingleTalk;
  return TalkCondition::kSilent;
}

std::vector<bool> echo_only_mask(const SceneBundle& b) {
  const std::size_t frame = static_cast<std::size_t>(b.mic.sample_rate_hz / 50);
  const auto pe = frame_powers(b.echo, frame);
  const auto pt = frame_powers(b.target, frame);
  const double max_e = pe.empty() ? 0.0 : *std::max_element(pe.begin(), pe.end());
  const double max_t = pt.empty() ? 0.0 : *std::max_element(pt.begin(), pt.end());
  const double floor = std::pow(10.0, -kActivityRangeDb / 10.0);
  std::vector<bool> mask(b.mic.size(), false);
  for (std::size_t j = 0; j < pe.size(); ++j) {
    const bool echo_on = max_e > 0.0 && pe[j] > max_e * floor;
    const bool near_on = max_t > 0.0 && pt[j] > max_t * floor;
    if (!echo_on || near_on) continue;
    const std::size_t end = std::min(b.mic.size(), (j + 1) * frame);
    for (std::size_t i = j * frame; i < end; ++i) mask[i] = true;
  }
  return mask;
}

const std::vector<std::string>& core_metric_names() {
  static const std::vector<std::string> names{"estoi", "output_snr_db", "erle_db",
                                              "residual_echo_db"};
  return names;
}

bool higher_is_better(const std::string& metric) { return metric != "residual_echo_db"; }

std::optional<double> MetricRow::get(const std::string& metric) const {
  if (metric == "estoi") return estoi;
  if (metric == "output_snr_db") return output_snr_db;
  if (metric == "erle_db") return erle_db;
  if (metric == "residual_echo_db") return residual_echo_db;
  auto it = external.find(metric);
  if (it == external.end()) return std::nullopt;
  return it->second;
}

MetricRow evaluate_scene(const SceneBundle& b, const Waveform& enhanced,
                         const std::string& scene_id, const std::string& method) {
  const std::size_t n = b.mic.size();
  for (const auto* w : {&b.target, &b.echo}) {
    if (w->size() != n) {
      throw DataError("evaluate_scene " + scene_id + ": ground-truth components are missing or misaligned");
    }
  }
  if (enhanced.size() != n || enhanced.sample_rate_hz != b.mic.sample_rate_hz) {
    throw DataError("evaluate_scene " + scene_id + ": enhanced signal has " +
                    std::to_string(enhanced.size()) + " samples, expected " + std::to_string(n));
  }
  validate(enhanced, "enhanced");
  MetricRow row;
  row.scene_id = scene_id;
  row.method = method;
  row.condition = talk_condition(b);

  if (active(b.target)) {
    row.estoi = estoi(b.target, enhanced);
    double p_t = 0.0, p_err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = enhanced.samples[i] - b.target.samples[i];
      p_t += b.target.samples[i] * b.target.samples[i];
      p_err += e * e;
    }
    row.output_snr_db = ratio_db(p_t, p_err);
  }

  const auto mask = echo_only_mask(b);
  double p_mic = 0.0, p_out = 0.0, p_res = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    ++count;
    const double r = enhanced.samples[i] - b.target.samples[i];
    p_mic += b.mic.samples[i] * b.mic.samples[i];
    p_out += enhanced.samples[i] * enhanced.samples[i];
    p_res += r * r;
  }
  if (count > 0) {
    row.erle_db = ratio_db(p_mic, p_out);
    row.residual_echo_db = p_res == 0.0 ? -std::numeric_limits<double>::infinity()
                                        : 10.0 * std::log10(p_res / static_cast<double>(count));
  }
  return row;
}

}  // namespace dvqe
