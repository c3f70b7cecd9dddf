#include "dvqe/app/commands.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "dvqe/aec/adaptive_filter.h"
#include "dvqe/aec/gcc_phat.h"
#include "dvqe/common/error.h"
#include "dvqe/common/parallel.h"
#include "dvqe/common/rng.h"
#include "dvqe/metrics/table.h"
#include "dvqe/model/weights.h"
#include "dvqe/scene/dataset.h"
#include "dvqe/signal/wav_io.h"
#include "dvqe/train/toy_pipeline.h"

namespace dvqe::app {

namespace fs = std::filesystem;
using nlohmann::json;

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

std::size_t jobs_or_default(const std::optional<std::size_t>& j) {
  return j ? std::max<std::size_t>(*j, 1) : default_jobs();
}

const char* mode_name(EnhanceMode m) { return m == EnhanceMode::kSingle ? "single" : "multi"; }

}  // namespace

EnhanceMode parse_mode(const std::string& s) {
  if (s == "single") return EnhanceMode::kSingle;
  if (s == "multi") return EnhanceMode::kMulti;
  throw ConfigError("unknown mode '" + s + "' (expected single or multi)");
}

json run_synth(const SynthArgs& a) {
  DatasetConfig cfg;
  if (a.config) cfg = read_json_file(*a.config).get<DatasetConfig>();
  if (a.duration_s) cfg.duration_s = *a.duration_s;
  if (a.jobs) cfg.jobs = std::max<std::size_t>(*a.jobs, 1);
  if (!(cfg.duration_s > 0.0)) throw ConfigError("synth: duration must be > 0");
  const Manifest m = generate_dataset(a.scenes, cfg, a.out, a.seed);
  json augment = json::object();
  for (const auto& e : m.entries) augment[to_string(e.augmentation)] = augment.value(to_string(e.augmentation), 0) + 1;
  return {{"manifest", m.path.string()}, {"scenes", m.entries.size()}, {"augmentations", augment}};
}

json run_init_weights(const InitWeightsArgs& a) {
  UNetSpec spec;
  if (a.spec == "base") spec = UNetSpec::base();
  else if (a.spec == "small") spec = UNetSpec::small();
  else spec = read_json_file(a.spec).get<UNetSpec>();
  const WeightContainer w = init_weights(spec, a.seed);
  save_weights(w, a.out);
  return {{"weights", a.out.string()},
          {"parameters", w.parameter_count()},
          {"cond_parameters", unet_parameter_count(spec, NetRole::kCond)},
          {"score_parameters", unet_parameter_count(spec, NetRole::kScore)},
          {"unet_spec", spec}};
}

json run_enhance(const EnhanceArgs& a) {
  SamplerConfig sampler;
  sampler.n_steps = a.steps;
  sampler.epsilon = a.epsilon;
  sampler.seed = a.seed;
  sampler.validate();
  a.schedule.validate();
  const Manifest m = read_manifest(a.manifest);
  const WeightContainer weights = load_weights(a.weights);
  const DiffVqeModel model(weights);
  EnhanceOptions opts;
  opts.mode = a.mode;
  opts.sampler = sampler;
  opts.schedule = a.schedule;
  opts.sigma_data = a.sigma_data;
  opts.stft.pad_bins_to = model.spec().input_bins;
  const fs::path out = a.out ? *a.out : m.path.parent_path() / "enhanced";
  ensure_dir(out);

  json outputs = json::array();
  std::vector<json> per_scene(m.entries.size());
  parallel_for(m.entries.size(), jobs_or_default(a.jobs), [&](std::size_t i) {
    const ManifestEntry& e = m.entries[i];
    const SceneBundle b = load_scene(m, e);
    Rng rng = derive_rng(a.seed, i);
    const Waveform y = enhance_waveform(model, b.mic, b.farend, opts, rng);
    const std::string rel = e.id + ".wav";
    write_wav(out / rel, y, WavFormat::kFloat32);
    per_scene[i] = {{"scene_id", e.id}, {"path", rel}, {"samples", y.size()}};
  });
  for (auto& p : per_scene) outputs.push_back(std::move(p));
  json run = {{"command", "enhance"},
              {"manifest", a.manifest.string()},
              {"weights", a.weights.string()},
              {"mode", mode_name(a.mode)},
              {"sampler", sampler},
              {"schedule", a.schedule},
              {"sigma_data", a.sigma_data},
              {"unet_spec", model.spec()},
              {"outputs", std::move(outputs)}};
  write_text_file(out / "run.json", run.dump(2) + "\n");
  return run;
}

json run_baseline(const BaselineArgs& a) {
  if (a.method != "nlms" && a.method != "fdkf") {
    throw ConfigError("unknown baseline method '" + a.method + "' (expected nlms or fdkf)");
  }
  const Manifest m = read_manifest(a.manifest);
  const fs::path out = a.out ? *a.out : m.path.parent_path() / a.method;
  ensure_dir(out);
  std::vector<json> per_scene(m.entries.size());
  parallel_for(m.entries.size(), jobs_or_default(a.jobs), [&](std::size_t i) {
    const ManifestEntry& e = m.entries[i];
    const SceneBundle b = load_scene(m, e);
    Waveform ref = b.farend;
    json info = {{"scene_id", e.id}, {"path", e.id + ".wav"}};
    if (a.align) {
      long lag = 0;
      if (max_abs(b.farend.samples) > 0.0 && max_abs(b.mic.samples) > 0.0) {
        lag = gcc_phat_delay(b.mic, b.farend, a.max_lag);
      }
      ref = compensate_delay(b.mic, b.farend, lag, a.max_lag).second;
      info["lag"] = lag;
    }
    const EchoCancellerOutput r = a.method == "nlms"
                                      ? nlms_cancel(b.mic, ref, a.nlms_taps, a.nlms_mu)
                                      : fdkf_cancel(b.mic, ref);
    write_wav(out / (e.id + ".wav"), r.residual, WavFormat::kFloat32);
    per_scene[i] = std::move(info);
  });
  json run = {{"command", "baseline"},
              {"method", a.method},
              {"manifest", a.manifest.string()},
              {"align", a.align},
              {"max_lag", a.max_lag},
              {"outputs", per_scene}};
  write_text_file(out / "run.json", run.dump(2) + "\n");
  return run;
}

json run_eval(const EvalArgs& a) {
  const Manifest m = read_manifest(a.manifest);
  struct Source {
    std::string name;
    std::optional<fs::path> dir;
  };
  std::vector<Source> sources;
  if (a.include_unprocessed) sources.push_back({"unprocessed", std::nullopt});
  for (const auto& spec : a.enhanced) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      fs::path dir(spec);
      const std::string name = dir.filename().empty() ? dir.parent_path().filename().string()
                                                      : dir.filename().string();
      sources.push_back({name, dir});
    } else {
      sources.push_back({spec.substr(0, eq), fs::path(spec.substr(eq + 1))});
    }
  }
  if (sources.empty()) throw ConfigError("eval: nothing to evaluate");

  const std::size_t n = m.entries.size();
  std::vector<MetricRow> rows(n * sources.size());
  parallel_for(n, jobs_or_default(a.jobs), [&](std::size_t i) {
    const ManifestEntry& e = m.entries[i];
    const SceneBundle b = load_scene(m, e);
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const Waveform y =
          sources[s].dir ? read_wav(*sources[s].dir / (e.id + ".wav")) : b.mic;
      rows[s * n + i] = evaluate_scene(b, y, e.id, sources[s].name);
    }
  });
  if (a.merge_external) merge_external(rows, read_json_file(*a.merge_external));

  const MetricSummary summary = summarize(rows);
  std::optional<RankResult> ranks;
  if (sources.size() >= 2) {
    const auto scores = method_scores(rows);
    if (!scores.empty() && !scores.front().metrics.empty()) ranks = rank_rows(rows);
  }
  const fs::path out = a.out ? *a.out : m.path.parent_path() / "eval";
  ensure_dir(out);
  json report = report_json(rows, summary, ranks ? &*ranks : nullptr);
  write_text_file(out / "metrics.csv", rows_to_csv(rows));
  write_text_file(out / "summary.csv", summary_to_csv(summary));
  write_text_file(out / "metrics.json", report.dump(2) + "\n");
  return report;
}

json schedule_report(const ScheduleArgs& a) {
  a.schedule.validate();
  a.sampler.validate();
  const auto co = sampler_coefficients(a.schedule, a.sampler);
  json grid = json::array();
  const auto ts = time_grid(a.schedule, a.sampler.n_steps);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double next = std::max(ts[i] - co.dt, 0.0);
    grid.push_back({{"step", i}, {"t", ts[i]}, {"sigma", sigma_at(a.schedule, ts[i])},
                    {"sigma_next", sigma_at(a.schedule, next)}});
  }
  return {{"schedule", a.schedule},
          {"sampler", a.sampler},
          {"sigma_min", sigma_at(a.schedule, 0.0)},
          {"sigma_T", sigma_at(a.schedule, a.schedule.t_max)},
          {"coefficients", {{"dt", co.dt}, {"gamma", co.gamma}, {"eta", co.eta}, {"beta", co.beta}}},
          {"grid", std::move(grid)}};
}

std::string schedule_table(const ScheduleArgs& a) {
  const json r = schedule_report(a);
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "sigma_min = %.9g  sigma_max = %.9g  T = %.9g\n",
                a.schedule.sigma_min, a.schedule.sigma_max, a.schedule.t_max);
  out << line;
  std::snprintf(line, sizeof(line), "sigma_T = %.9f\n", r["sigma_T"].get<double>());
  out << line;
  const auto& c = r["coefficients"];
  std::snprintf(line, sizeof(line), "N = %zu  epsilon = %.9g  dt = %.9f  gamma = %.9f  eta = %.9f  beta = %.9f\n",
                a.sampler.n_steps, a.sampler.epsilon, c["dt"].get<double>(),
                c["gamma"].get<double>(), c["eta"].get<double>(), c["beta"].get<double>());
  out << line;
  out << "step          t        sigma   sigma_next\n";
  for (const auto& g : r["grid"]) {
    std::snprintf(line, sizeof(line), "%4zu %10.6f %12.9f %12.9f\n", g["step"].get<std::size_t>(),
                  g["t"].get<double>(), g["sigma"].get<double>(), g["sigma_next"].get<double>());
    out << line;
  }
  return out.str();
}

json run_train_toy(const TrainToyArgs& a) {
  json cfg_json = a.config ? read_json_file(*a.config) : json::object();
  if (a.seed) cfg_json["seed"] = *a.seed;
  if (a.steps) cfg_json["steps"] = *a.steps;
  const ToyPipelineConfig cfg = cfg_json.get<ToyPipelineConfig>();
  const json report = run_toy_pipeline(cfg).to_json();
  if (a.out) write_text_file(*a.out, report.dump(2) + "\n");
  return report;
}

json run_bench(const BenchArgs& a) {
  if (!(a.seconds > 0.0)) throw ConfigError("bench: seconds must be > 0");
  const WeightContainer weights = load_weights(a.weights);
  const DiffVqeModel model(weights);
  EnhanceOptions opts;
  opts.mode = a.mode;
  opts.sampler.n_steps = a.steps;
  opts.sampler.seed = a.seed;
  opts.stft.pad_bins_to = model.spec().input_bins;
  Rng gen = derive_rng(a.seed, 0);
  std::normal_distribution<double> g(0.0, 0.1);
  const auto n = static_cast<std::size_t>(a.seconds * kDefaultSampleRate);
  Waveform mic = Waveform::zeros(n), far = Waveform::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    mic.samples[i] = g(gen);
    far.samples[i] = g(gen);
  }
  std::vector<double> times;
  for (std::size_t r = 0; r < std::max<std::size_t>(a.repeats, 1); ++r) {
    Rng rng = derive_rng(a.seed, r + 1);
    const auto t0 = std::chrono::steady_clock::now();
    const Waveform y = enhance_waveform(model, mic, far, opts, rng);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  const double best = *std::min_element(times.begin(), times.end());
  return {{"audio_seconds", a.seconds},
          {"mode", mode_name(a.mode)},
          {"steps", a.steps},
          {"repeats", times.size()},
          {"wall_seconds", times},
          {"best_wall_seconds", best},
          {"real_time_factor", best / a.seconds},
          {"parameters", weights.parameter_count()},
          {"threads", 1}};
}

}  // namespace dvqe::app
