#pragma once

#include <map>
#include <optional>
#include <string>

#include "dvqe/scene/scene.h"

namespace dvqe {

// Talk condition of a scene: double talk, far-end single talk, near-end
// single talk, or neither talker active.
enum class TalkCondition { kDoubleTalk, kFarendSingleTalk, kNearendSingleTalk, kSilent };

std::string to_string(TalkCondition c);

// Derived from which ground-truth components are active in the microphone.
TalkCondition talk_condition(const SceneBundle& b);

// Samples where the echo is active and the near-end target is not, judged on
// 20 ms frames against a 40 dB range below the loudest frame of each.
std::vector<bool> echo_only_mask(const SceneBundle& b);

struct MetricRow {
  std::string scene_id;
  std::string method;
  TalkCondition condition = TalkCondition::kSilent;
  std::optional<double> estoi;             // absent when the target is silent
  std::optional<double> output_snr_db;     // target vs. (enhanced - target)
  std::optional<double> erle_db;           // mic vs. enhanced power on the echo-only region
  std::optional<double> residual_echo_db;  // power of (enhanced - target) on that region
  // Values computed by external tools (PESQ, AECMOS, DNSMOS, ...).
  std::map<std::string, double> external;

  // Value by metric name, external slots included.
  std::optional<double> get(const std::string& metric) const;
};

// Core metric names in column order.
const std::vector<std::string>& core_metric_names();
// False for metrics where lower is better.
bool higher_is_better(const std::string& metric);

// Requires enhanced to match the microphone length and rate.
MetricRow evaluate_scene(const SceneBundle& bundle, const Waveform& enhanced,
                         const std::string& scene_id = "", const std::string& method = "");

}  // namespace dvqe
