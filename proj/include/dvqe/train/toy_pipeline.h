#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "dvqe/diffusion/schedule.h"
#include "dvqe/model/toy_scorer.h"
#include "dvqe/scene/dataset.h"
#include "dvqe/train/loss.h"

namespace dvqe {

// Desk-scale training of a per-bin Cond gain and a ToyScorer with
// matched-condition perturbation S_T = S_cond + sigma_T Z.
struct ToyPipelineConfig {
  DatasetConfig dataset;  // used when scenes are synthesized from the config
  std::size_t train_scenes = 6;
  std::size_t holdout_scenes = 2;
  std::size_t steps = 2000;
  double lr = 0.01;  // Adam peak learning rate
  // Warmup over the first warmup_fraction of steps, constant until
  // decay_start, then cosine decay to lr * final_lr_fraction.
  double warmup_fraction = 0.015;
  double decay_start = 0.5;
  double final_lr_fraction = 0.002;
  std::size_t crop_frames = 64;
  std::size_t trace_every = 50;
  bool train_cond = true;
  std::uint64_t seed = 0;
  LossConfig loss;
  NoiseSchedule schedule;
  StftConfig stft;

  ToyPipelineConfig() { dataset.duration_s = 4.0; }
  void validate() const;
};

void to_json(nlohmann::json& j, const ToyPipelineConfig& c);
void from_json(const nlohmann::json& j, ToyPipelineConfig& c);

double learning_rate_at(const ToyPipelineConfig& cfg, std::size_t step);

// Cond stage: S_cond = decompress(v_k compress(Y)) per bin k.
struct ToyPipelineModel {
  std::vector<cplx> cond_gain;
  ToyScorer scorer;

  Spectrogram condition(const Spectrogram& mic, double c) const;
};

struct LossBreakdown {
  double cc_cond = 0.0;
  double cc_score = 0.0;
  double sm = 0.0;
  double total = 0.0;
};

struct ToyPipelineReport {
  nlohmann::json config;
  struct TracePoint {
    std::size_t step;
    double loss;
    double lr;
  };
  std::vector<TracePoint> trace;
  LossBreakdown initial_holdout;
  LossBreakdown final_holdout;
  ToyPipelineModel model;

  nlohmann::json to_json() const;
};

// Loss of `model` on fixed noise draws over whole scenes.
LossBreakdown evaluate_toy_pipeline(const ToyPipelineModel& model,
                                    const std::vector<SceneBundle>& scenes,
                                    const ToyPipelineConfig& cfg);

ToyPipelineReport toy_pipeline_train(const std::vector<SceneBundle>& train,
                                     const std::vector<SceneBundle>& holdout,
                                     const ToyPipelineConfig& cfg);

// Synthesizes train and holdout scenes from cfg.dataset, then trains.
ToyPipelineReport run_toy_pipeline(const ToyPipelineConfig& cfg);

}  // namespace dvqe
