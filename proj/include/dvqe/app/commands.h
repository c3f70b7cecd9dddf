#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvqe/diffusion/schedule.h"
#include "dvqe/model/diffvqe.h"
#include "dvqe/model/unet.h"

namespace dvqe::app {

// Loads a JSON document; parse failures are ConfigErrors naming the file.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

struct SynthArgs {
  std::optional<std::filesystem::path> config;  // DatasetConfig JSON
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::size_t scenes = 8;
  std::optional<double> duration_s;  // overrides the config file
  std::optional<std::size_t> jobs;
};
nlohmann::json run_synth(const SynthArgs& a);

struct InitWeightsArgs {
  std::string spec = "base";  // base | small | path to a UNetSpec JSON
  std::uint64_t seed = 0;
  std::filesystem::path out;
};
nlohmann::json run_init_weights(const InitWeightsArgs& a);

struct EnhanceArgs {
  std::filesystem::path manifest;
  std::filesystem::path weights;
  std::optional<std::filesystem::path> out;  // default: <manifest dir>/enhanced
  EnhanceMode mode = EnhanceMode::kSingle;
  std::size_t steps = 1;
  double epsilon = 1.1;
  std::uint64_t seed = 0;
  NoiseSchedule schedule;
  double sigma_data = kDefaultSigmaData;
  std::optional<std::size_t> jobs;
};
// Writes <out>/<scene_id>.wav per scene and <out>/run.json.
nlohmann::json run_enhance(const EnhanceArgs& a);

struct BaselineArgs {
  std::string method = "nlms";  // nlms | fdkf
  std::filesystem::path manifest;
  std::optional<std::filesystem::path> out;  // default: <manifest dir>/<method>
  bool align = false;
  std::size_t max_lag = 4000;
  std::size_t nlms_taps = 512;
  double nlms_mu = 0.5;
  std::optional<std::size_t> jobs;
};
nlohmann::json run_baseline(const BaselineArgs& a);

struct EvalArgs {
  std::filesystem::path manifest;
  // "name=dir" or "dir" (method named after the directory).
  std::vector<std::string> enhanced;
  std::optional<std::filesystem::path> merge_external;
  std::optional<std::filesystem::path> out;  // default: <manifest dir>/eval
  bool include_unprocessed = true;
  std::optional<std::size_t> jobs;
};
// Writes metrics.csv, summary.csv and metrics.json; returns the JSON report.
nlohmann::json run_eval(const EvalArgs& a);

struct ScheduleArgs {
  NoiseSchedule schedule;
  SamplerConfig sampler;
};
nlohmann::json schedule_report(const ScheduleArgs& a);
std::string schedule_table(const ScheduleArgs& a);

struct TrainToyArgs {
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
};
nlohmann::json run_train_toy(const TrainToyArgs& a);

struct BenchArgs {
  std::filesystem::path weights;
  double seconds = 4.0;
  EnhanceMode mode = EnhanceMode::kSingle;
  std::size_t steps = 1;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
};
nlohmann::json run_bench(const BenchArgs& a);

EnhanceMode parse_mode(const std::string& s);

}  // namespace dvqe::app
