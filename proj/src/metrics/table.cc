#include "dvqe/metrics/table.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "dvqe/common/error.h"

namespace dvqe {

void merge_external(std::vector<MetricRow>& rows, const nlohmann::json& external) {
  if (!external.is_array()) throw DataError("external metrics: expected a JSON array");
  const auto& core = core_metric_names();
  for (const auto& e : external) {
    std::string scene, metric, method;
    double value;
    try {
      scene = e.at("scene_id").get<std::string>();
      metric = e.at("metric_name").get<std::string>();
      value = e.at("value").get<double>();
      method = e.value("method", std::string());
    } catch (const nlohmann::json::exception& err) {
      throw DataError(std::string("external metrics: malformed entry: ") + err.what());
    }
    if (std::find(core.begin(), core.end(), metric) != core.end()) {
      throw DataError("external metrics: '" + metric + "' shadows a built-in metric");
    }
    bool matched = false;
    for (auto& r : rows) {
      if (r.scene_id == scene && (method.empty() || r.method == method)) {
        r.external[metric] = value;
        matched = true;
      }
    }
    if (!matched) {
      throw DataError("external metrics: no row for scene '" + scene + "'" +
                      (method.empty() ? "" : " and method '" + method + "'"));
    }
  }
}

std::vector<std::string> metric_columns(const std::vector<MetricRow>& rows) {
  std::vector<std::string> cols = core_metric_names();
  std::set<std::string> ext;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.external) ext.insert(k);
  }
  cols.insert(cols.end(), ext.begin(), ext.end());
  return cols;
}

MetricSummary summarize(const std::vector<MetricRow>& rows) {
  MetricSummary s;
  const auto cols = metric_columns(rows);
  for (const auto& r : rows) {
    for (const std::string& cond : {std::string("all"), to_string(r.condition)}) {
      auto& cells = s[r.method][cond];
      for (const auto& m : cols) {
        auto& cell = cells[m];
        const auto v = r.get(m);
        if (v && std::isfinite(*v)) {
          cell.mean += *v;
          ++cell.count;
        }
      }
    }
  }
  for (auto& [method, conds] : s) {
    for (auto& [cond, cells] : conds) {
      for (auto& [m, cell] : cells) {
        cell.mean = cell.count ? cell.mean / static_cast<double>(cell.count)
                               : std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return s;
}

std::vector<MethodScores> method_scores(const std::vector<MetricRow>& rows) {
  std::map<std::string, std::set<std::string>> scenes;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!scenes.count(r.method)) order.push_back(r.method);
    scenes[r.method].insert(r.scene_id);
  }
  for (const auto& [m, set] : scenes) {
    if (set != scenes.begin()->second) {
      throw ConfigError("method '" + m + "' was evaluated on a different scene set");
    }
  }
  const MetricSummary s = summarize(rows);
  std::vector<MethodScores> out;
  for (const auto& m : order) out.push_back({m, {}});
  for (const auto& metric : metric_columns(rows)) {
    bool usable = true;
    for (const auto& m : order) {
      const auto& cell = s.at(m).at("all").at(metric);
      // A metric only enters the ranking if every scene has a finite value
      // for every method.
      usable = usable && cell.count == scenes.at(m).size() && cell.count > 0;
    }
    if (!usable) continue;
    for (auto& ms : out) ms.metrics[metric] = s.at(ms.method).at("all").at(metric).mean;
  }
  return out;
}

RankResult rank_rows(const std::vector<MetricRow>& rows) {
  const auto scores = method_scores(rows);
  std::vector<std::string> lower;
  for (const auto& m : metric_columns(rows)) {
    if (!higher_is_better(m)) lower.push_back(m);
  }
  return rank_methods(scores, lower);
}

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

nlohmann::json metric_json(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (!std::isfinite(*v)) return format_metric(*v);
  return *v;
}

}  // namespace

std::string rows_to_csv(const std::vector<MetricRow>& rows) {
  const auto cols = metric_columns(rows);
  std::ostringstream out;
  out << "scene_id,method,condition";
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (const auto& r : rows) {
    out << r.scene_id << ',' << r.method << ',' << to_string(r.condition);
    for (const auto& c : cols) {
      out << ',';
      if (const auto v = r.get(c)) out << format_metric(*v);
    }
    out << '\n';
  }
  return out.str();
}

std::string summary_to_csv(const MetricSummary& summary) {
  std::set<std::string> cols;
  for (const auto& [m, conds] : summary) {
    for (const auto& [c, cells] : conds) {
      for (const auto& [k, v] : cells) cols.insert(k);
    }
  }
  std::vector<std::string> ordered = core_metric_names();
  for (const auto& c : cols) {
    if (std::find(ordered.begin(), ordered.end(), c) == ordered.end()) ordered.push_back(c);
  }
  std::ostringstream out;
  out << "method,condition";
  for (const auto& c : ordered) out << ',' << c;
  out << '\n';
  for (const auto& [m, conds] : summary) {
    for (const auto& [cond, cells] : conds) {
      out << m << ',' << cond;
      for (const auto& c : ordered) {
        out << ',';
        auto it = cells.find(c);
        if (it != cells.end() && it->second.count > 0) out << format_metric(it->second.mean);
      }
      out << '\n';
    }
  }
  return out.str();
}

nlohmann::json report_json(const std::vector<MetricRow>& rows, const MetricSummary& summary,
                           const RankResult* ranks) {
  nlohmann::json j;
  const auto cols = metric_columns(rows);
  nlohmann::json jr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"scene_id", r.scene_id},
                          {"method", r.method},
                          {"condition", to_string(r.condition)}};
    for (const auto& c : cols) row[c] = metric_json(r.get(c));
    jr.push_back(std::move(row));
  }
  j["rows"] = std::move(jr);
  nlohmann::json js = nlohmann::json::object();
  for (const auto& [m, conds] : summary) {
    for (const auto& [cond, cells] : conds) {
      for (const auto& [k, cell] : cells) {
        js[m][cond][k] = cell.count ? metric_json(cell.mean) : nlohmann::json(nullptr);
      }
    }
  }
  j["summary"] = std::move(js);
  if (ranks) {
    j["ranks"] = {{"metrics", ranks->metrics},
                  {"average", ranks->average},
                  {"per_metric", ranks->per_metric}};
  }
  return j;
}

}  // namespace dvqe
