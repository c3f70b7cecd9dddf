#include "dvqe/metrics/rank.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dvqe/common/error.h"

namespace dvqe {

std::vector<double> rank_values(const std::vector<double>& values, bool higher_better) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_better ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = shared;
    i = j + 1;
  }
  return ranks;
}

RankResult rank_methods(const std::vector<MethodScores>& methods,
                        const std::vector<std::string>& lower_is_better) {
  if (methods.size() < 2) throw ConfigError("rank_methods: at least two methods are required");
  RankResult r;
  for (const auto& [name, v] : methods.front().metrics) r.metrics.push_back(name);
  if (r.metrics.empty()) throw ConfigError("rank_methods: no metrics to rank");
  for (const auto& m : methods) {
    if (m.metrics.size() != r.metrics.size()) {
      throw ConfigError("rank_methods: method '" + m.method + "' reports a different metric set");
    }
    for (const auto& name : r.metrics) {
      auto it = m.metrics.find(name);
      if (it == m.metrics.end()) {
        throw ConfigError("rank_methods: method '" + m.method + "' lacks metric '" + name + "'");
      }
      if (std::isnan(it->second)) {
        throw ConfigError("rank_methods: method '" + m.method + "' has NaN for '" + name + "'");
      }
    }
    if (r.average.count(m.method)) throw ConfigError("rank_methods: duplicate method '" + m.method + "'");
    r.average[m.method] = 0.0;
  }
  for (const auto& name : r.metrics) {
    const bool higher =
        std::find(lower_is_better.begin(), lower_is_better.end(), name) == lower_is_better.end();
    std::vector<double> values;
    for (const auto& m : methods) values.push_back(m.metrics.at(name));
    const auto ranks = rank_values(values, higher);
    for (std::size_t i = 0; i < methods.size(); ++i) {
      r.per_metric[methods[i].method][name] = ranks[i];
      r.average[methods[i].method] += ranks[i];
    }
  }
  for (auto& [method, sum] : r.average) sum /= static_cast<double>(r.metrics.size());
  return r;
}

}  // namespace dvqe
