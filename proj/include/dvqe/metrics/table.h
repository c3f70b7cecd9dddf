#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvqe/metrics/evaluate.h"
#include "dvqe/metrics/rank.h"

namespace dvqe {

// Merges externally computed metrics given as a JSON array of
// {scene_id, metric_name, value[, method]}. Entries without a method apply to
// every row of the scene. Unknown scenes or methods and names that shadow a
// core metric throw DataError.
void merge_external(std::vector<MetricRow>& rows, const nlohmann::json& external);

struct SummaryCell {
  double mean = 0.0;
  std::size_t count = 0;  // finite values averaged
};

// method -> condition ("all", "DT", "STFE", "STNE", ...) -> metric -> mean.
using MetricSummary =
    std::map<std::string, std::map<std::string, std::map<std::string, SummaryCell>>>;

// Means over finite values only; rows with a missing or infinite value do not
// contribute to that cell.
MetricSummary summarize(const std::vector<MetricRow>& rows);

// Per-method means over all scenes, restricted to metrics that are finite for
// every method. Throws ConfigError when methods cover different scene sets.
std::vector<MethodScores> method_scores(const std::vector<MetricRow>& rows);

RankResult rank_rows(const std::vector<MetricRow>& rows);

// All metric names present in the rows, core metrics first.
std::vector<std::string> metric_columns(const std::vector<MetricRow>& rows);

std::string format_metric(double v);

std::string rows_to_csv(const std::vector<MetricRow>& rows);
std::string summary_to_csv(const MetricSummary& summary);
nlohmann::json report_json(const std::vector<MetricRow>& rows, const MetricSummary& summary,
                           const RankResult* ranks);

}  // namespace dvqe
