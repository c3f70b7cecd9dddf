#pragma once

#include <map>
#include <string>
#include <vector>

namespace dvqe {

// Aggregate score of one method on each metric.
struct MethodScores {
  std::string method;
  std::map<std::string, double> metrics;
};

struct RankResult {
  std::vector<std::string> metrics;  // metrics that entered the ranking
  std::map<std::string, std::map<std::string, double>> per_metric;  // method -> metric -> rank
  std::map<std::string, double> average;                            // method -> mean rank
};

// Ranks the methods on every metric (1 = best, ties share the mean of their
// positions) and averages the ranks per method. Metrics default to
// higher-is-better; list exceptions in `lower_is_better`. Every method must
// report the same metric set. Throws ConfigError for fewer than two methods.
RankResult rank_methods(const std::vector<MethodScores>& methods,
                        const std::vector<std::string>& lower_is_better = {});

// Ranks of `values` (1 = largest when higher_better), ties averaged.
std::vector<double> rank_values(const std::vector<double>& values, bool higher_better);

}  // namespace dvqe
