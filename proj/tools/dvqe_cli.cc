#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dvqe/app/commands.h"
#include "dvqe/common/error.h"

namespace {

using nlohmann::json;
namespace app = dvqe::app;

const char* kind_name(dvqe::ErrorKind k) {
  switch (k) {
    case dvqe::ErrorKind::kConfig: return "config";
    case dvqe::ErrorKind::kData: return "data";
    case dvqe::ErrorKind::kNumeric: return "numeric";
  }
  return "unknown";
}

int report_error(bool as_json, const char* kind, int code, const std::string& msg) {
  if (as_json) {
    std::cerr << json{{"error", kind}, {"exit_code", code}, {"message", msg}}.dump() << '\n';
  } else {
    std::cerr << "error (" << kind << "): " << msg << '\n';
  }
  return code;
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Diffusion-based echo and noise suppression toolkit"};
  cli.require_subcommand(1);
  bool as_json = false;
  std::size_t jobs = 0;
  cli.add_flag("--json", as_json, "Print errors as JSON on stderr");
  cli.add_option("--jobs", jobs, "Worker threads over scenes (default: host parallelism)");

  // synth
  app::SynthArgs synth;
  std::string synth_config, synth_out;
  double synth_duration = 0.0;
  auto* c_synth = cli.add_subcommand("synth", "Synthesize a dataset of echo scenes");
  c_synth->add_option("--config", synth_config, "DatasetConfig JSON");
  c_synth->add_option("--out", synth_out, "Output directory")->required();
  c_synth->add_option("--seed", synth.seed, "Dataset seed");
  c_synth->add_option("--scenes", synth.scenes, "Number of scenes");
  auto* o_duration = c_synth->add_option("--duration", synth_duration,
                                         "Scene length in seconds (overrides the config)");

  // init-weights
  app::InitWeightsArgs initw;
  std::string initw_out;
  auto* c_init = cli.add_subcommand("init-weights", "Write randomly initialized network weights");
  c_init->add_option("--spec", initw.spec, "base, small, or a UNetSpec JSON file");
  c_init->add_option("--seed", initw.seed, "Initialization seed");
  c_init->add_option("--out", initw_out, "Weight file")->required();

  // enhance
  app::EnhanceArgs enh;
  std::string enh_manifest, enh_weights, enh_out, enh_mode = "single", enh_config;
  auto* c_enh = cli.add_subcommand("enhance", "Enhance every scene of a manifest");
  c_enh->add_option("--manifest", enh_manifest, "manifest.jsonl")->required();
  c_enh->add_option("--weights", enh_weights, "Weight file")->required();
  c_enh->add_option("--config", enh_config,
                    "JSON with mode, steps, epsilon, seed, sigma_data, schedule; flags take precedence");
  auto* o_mode = c_enh->add_option("--mode", enh_mode, "single or multi (default single)");
  auto* o_steps = c_enh->add_option("--steps", enh.steps, "Reverse steps N (default 1)");
  auto* o_eps = c_enh->add_option("--epsilon", enh.epsilon, "Langevin epsilon >= 1 (default 1.1)");
  auto* o_seed = c_enh->add_option("--seed", enh.seed, "Sampling seed (default 0)");
  auto* o_smin = c_enh->add_option("--sigma-min", enh.schedule.sigma_min, "Default 0.01");
  auto* o_smax = c_enh->add_option("--sigma-max", enh.schedule.sigma_max, "Default 5");
  auto* o_tmax = c_enh->add_option("--t-max", enh.schedule.t_max, "Default 0.3");
  c_enh->add_option("--out", enh_out, "Output directory (default <manifest dir>/enhanced)");

  // baseline
  app::BaselineArgs base;
  std::string base_manifest, base_out;
  auto* c_base = cli.add_subcommand("baseline", "Run a classical echo canceller over a manifest");
  c_base->add_option("--method", base.method, "nlms or fdkf")->required();
  c_base->add_option("--manifest", base_manifest, "manifest.jsonl")->required();
  c_base->add_flag("--align", base.align, "Pre-align the reference with GCC-PHAT");
  c_base->add_option("--max-lag", base.max_lag, "Largest lag searched by --align (samples)");
  c_base->add_option("--out", base_out, "Output directory (default <manifest dir>/<method>)");

  // eval
  app::EvalArgs ev;
  std::string ev_manifest, ev_external, ev_out;
  auto* c_eval = cli.add_subcommand("eval", "Compute metric tables and average ranks");
  c_eval->add_option("--manifest", ev_manifest, "manifest.jsonl")->required();
  c_eval->add_option("--enhanced", ev.enhanced, "[name=]dir with <scene_id>.wav files; repeatable");
  c_eval->add_option("--merge-external", ev_external, "JSON array of {scene_id, metric_name, value}");
  c_eval->add_option("--out", ev_out, "Output directory (default <manifest dir>/eval)");
  bool ev_no_unprocessed = false;
  c_eval->add_flag("--no-unprocessed", ev_no_unprocessed, "Do not add the unprocessed microphone row");

  // schedule
  app::ScheduleArgs sch;
  sch.sampler.epsilon = 1.1;
  bool sch_json = false;
  auto* c_sch = cli.add_subcommand("schedule", "Print the noise grid and sampler coefficients");
  c_sch->add_option("--sigma-min", sch.schedule.sigma_min, "Default 0.01");
  c_sch->add_option("--sigma-max", sch.schedule.sigma_max, "Default 5");
  c_sch->add_option("--t-max", sch.schedule.t_max, "Default 0.3");
  c_sch->add_option("--steps", sch.sampler.n_steps, "Default 1");
  c_sch->add_option("--epsilon", sch.sampler.epsilon, "Default 1.1");
  c_sch->add_flag("--as-json", sch_json, "Emit JSON instead of a table");

  // train-toy
  app::TrainToyArgs toy;
  std::string toy_config, toy_out;
  std::uint64_t toy_seed = 0;
  std::size_t toy_steps = 0;
  auto* c_toy = cli.add_subcommand("train-toy", "Desk-scale training run of the toy pipeline");
  c_toy->add_option("--config", toy_config, "Training config JSON");
  c_toy->add_option("--out", toy_out, "Report path (default: stdout)");
  auto* o_toy_seed = c_toy->add_option("--seed", toy_seed, "Overrides the config seed");
  auto* o_toy_steps = c_toy->add_option("--steps", toy_steps, "Overrides the config step count");

  // bench
  app::BenchArgs bench;
  std::string bench_weights, bench_mode = "single";
  auto* c_bench = cli.add_subcommand("bench", "Measure throughput and real-time factor");
  c_bench->add_option("--weights", bench_weights, "Weight file")->required();
  c_bench->add_option("--seconds", bench.seconds, "Audio length in seconds");
  c_bench->add_option("--mode", bench_mode, "single or multi");
  c_bench->add_option("--steps", bench.steps, "Reverse steps N");
  c_bench->add_option("--repeats", bench.repeats, "Timed repetitions");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(as_json, "config", 2, e.what());
  }

  const std::optional<std::size_t> job_opt =
      jobs > 0 ? std::optional<std::size_t>(jobs) : std::nullopt;
  try {
    if (*c_synth) {
      if (!synth_config.empty()) synth.config = synth_config;
      synth.out = synth_out;
      if (o_duration->count()) synth.duration_s = synth_duration;
      synth.jobs = job_opt;
      print(app::run_synth(synth));
    } else if (*c_init) {
      initw.out = initw_out;
      print(app::run_init_weights(initw));
    } else if (*c_enh) {
      // Precedence: flag > config file > built-in default.
      if (!enh_config.empty()) {
        const json c = app::read_json_file(enh_config);
        try {
          if (!o_mode->count() && c.contains("mode")) enh_mode = c.at("mode").get<std::string>();
          if (!o_steps->count() && c.contains("steps")) enh.steps = c.at("steps").get<std::size_t>();
          if (!o_eps->count() && c.contains("epsilon")) enh.epsilon = c.at("epsilon").get<double>();
          if (!o_seed->count() && c.contains("seed")) enh.seed = c.at("seed").get<std::uint64_t>();
          if (c.contains("sigma_data")) enh.sigma_data = c.at("sigma_data").get<double>();
          if (c.contains("schedule")) {
            const auto s = c.at("schedule").get<dvqe::NoiseSchedule>();
            if (!o_smin->count()) enh.schedule.sigma_min = s.sigma_min;
            if (!o_smax->count()) enh.schedule.sigma_max = s.sigma_max;
            if (!o_tmax->count()) enh.schedule.t_max = s.t_max;
          }
        } catch (const json::exception& e) {
          throw dvqe::ConfigError(std::string("enhance config: ") + e.what());
        }
      }
      enh.mode = app::parse_mode(enh_mode);
      enh.manifest = enh_manifest;
      enh.weights = enh_weights;
      if (!enh_out.empty()) enh.out = enh_out;
      enh.jobs = job_opt;
      const json run = app::run_enhance(enh);
      print({{"outputs", run["outputs"].size()}, {"mode", run["mode"]}});
    } else if (*c_base) {
      base.manifest = base_manifest;
      if (!base_out.empty()) base.out = base_out;
      base.jobs = job_opt;
      const json run = app::run_baseline(base);
      print({{"method", base.method}, {"outputs", run["outputs"].size()}});
    } else if (*c_eval) {
      ev.manifest = ev_manifest;
      if (!ev_external.empty()) ev.merge_external = ev_external;
      if (!ev_out.empty()) ev.out = ev_out;
      ev.include_unprocessed = !ev_no_unprocessed;
      ev.jobs = job_opt;
      const json report = app::run_eval(ev);
      json brief = {{"summary", report["summary"]}};
      if (report.contains("ranks")) brief["average_rank"] = report["ranks"]["average"];
      print(brief);
    } else if (*c_sch) {
      if (sch_json) print(app::schedule_report(sch));
      else std::cout << app::schedule_table(sch);
    } else if (*c_toy) {
      if (!toy_config.empty()) toy.config = toy_config;
      if (!toy_out.empty()) toy.out = toy_out;
      if (o_toy_seed->count()) toy.seed = toy_seed;
      if (o_toy_steps->count()) toy.steps = toy_steps;
      const json report = app::run_train_toy(toy);
      if (toy.out) {
        print({{"report", *toy.out}, {"initial_holdout", report["initial_holdout"]},
               {"final_holdout", report["final_holdout"]}});
      } else {
        print(report);
      }
    } else if (*c_bench) {
      bench.weights = bench_weights;
      bench.mode = app::parse_mode(bench_mode);
      print(app::run_bench(bench));
    }
  } catch (const dvqe::Error& e) {
    return report_error(as_json, kind_name(e.kind()), static_cast<int>(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error(as_json, "internal", 1, e.what());
  }
  return 0;
}
