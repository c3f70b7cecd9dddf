#include "dvqe/train/toy_pipeline.h"

#include <cmath>
#include <numbers>
#include <random>

#include "dvqe/common/error.h"
#include "dvqe/common/rng.h"
#include "dvqe/diffusion/sampler.h"

namespace dvqe {

namespace {

constexpr std::uint64_t kHoldoutStream = 0x401D0000;
constexpr std::uint64_t kTrainStream = 0x7A1E0000;

cplx decompress(cplx w, double c) {
  const double r = std::abs(w);
  if (r == 0.0) return 0.0;
  return std::pow(r, 1.0 / c - 1.0) * w;
}

Spectrogram crop(const Spectrogram& s, std::size_t first, std::size_t frames) {
  Spectrogram out(s.config(), frames, s.config().samples_for(frames));
  for (std::size_t l = 0; l < frames; ++l) {
    std::copy(s.frame(first + l).begin(), s.frame(first + l).end(), out.frame(l).begin());
  }
  return out;
}

// Minimal Adam over a flat parameter vector.
class Adam {
 public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}
  void step(std::vector<double>& p, const std::vector<double>& g, double lr) {
    ++t_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[i] = b1 * m_[i] + (1.0 - b1) * g[i];
      v_[i] = b2 * v_[i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
    }
  }

 private:
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

struct Example {
  Spectrogram mic;
  Spectrogram clean;
};

struct StepResult {
  LossBreakdown loss;
  std::vector<cplx> grad_cond;
  ToyGrad grad_score;
};

// Loss and gradients for one (Y, S, Z) triple.
StepResult forward_backward(const ToyPipelineModel& model, const Example& ex,
                            const Spectrogram& z, const ToyPipelineConfig& cfg, bool want_grad) {
  const double c = cfg.loss.c;
  const double lam = cfg.loss.lambda;
  const double sigma = sigma_at(cfg.schedule, cfg.schedule.t_max);
  const std::size_t bins = ex.mic.bins();
  const std::size_t k_max = std::min(ex.mic.config().num_bins(), bins);
  StepResult r;

  const Spectrogram s_cond = model.condition(ex.mic, c);
  r.loss.cc_cond = cc_mse(s_cond, ex.clean, cfg.loss);
  if (want_grad) {
    // Closed form in the compressed domain, where S_cond_c = v Y_c.
    r.grad_cond.assign(bins, 0.0);
    const double n = static_cast<double>(k_max * ex.mic.frames());
    for (std::size_t l = 0; l < ex.mic.frames(); ++l) {
      for (std::size_t k = 0; k < k_max; ++k) {
        const cplx a = compress(ex.clean.at(k, l), c);
        const cplx b = compress(ex.mic.at(k, l), c);
        const cplx v = model.cond_gain[k];
        cplx g = -2.0 * lam * (a - v * b) * std::conj(b);
        const double av = std::abs(v);
        if (av > 0.0) {
          const double m = av * std::abs(b) - std::abs(a);
          g += 2.0 * (1.0 - lam) * m * std::abs(b) * v / av;
        }
        r.grad_cond[k] += g / n;
      }
    }
  }

  Spectrogram s_t = s_cond;
  s_t.axpy(sigma, z);
  r.loss.sm = toy_sm_loss(model.scorer, s_t, z, sigma, want_grad ? &r.grad_score : nullptr);
  Spectrogram s_hat = s_t;
  s_hat.axpy(sigma * sigma, model.scorer.score(s_t));
  if (want_grad) {
    for (auto& g : r.grad_score.gain) g *= cfg.loss.alpha;
    for (auto& g : r.grad_score.bias) g *= cfg.loss.alpha;
    Spectrogram g_hat;
    r.loss.cc_score = cc_mse_grad(s_hat, ex.clean, cfg.loss, g_hat);
    const double s2 = sigma * sigma;
    for (std::size_t l = 0; l < s_t.frames(); ++l) {
      for (std::size_t k = 0; k < bins; ++k) {
        r.grad_score.gain[k] += s2 * g_hat.at(k, l) * std::conj(s_t.at(k, l));
        if (model.scorer.use_bias()) r.grad_score.bias[k] += s2 * g_hat.at(k, l);
      }
    }
  } else {
    r.loss.cc_score = cc_mse(s_hat, ex.clean, cfg.loss);
  }
  r.loss.total = r.loss.cc_cond + r.loss.cc_score + cfg.loss.alpha * r.loss.sm;
  return r;
}

std::vector<Example> prepare(const std::vector<SceneBundle>& scenes, const StftConfig& stft_cfg) {
  std::vector<Example> out;
  for (const auto& b : scenes) out.push_back({stft(b.mic, stft_cfg), stft(b.target, stft_cfg)});
  return out;
}

nlohmann::json breakdown_json(const LossBreakdown& b) {
  return {{"cc_cond", b.cc_cond}, {"cc_score", b.cc_score}, {"sm", b.sm}, {"total", b.total}};
}

nlohmann::json complex_json(const std::vector<cplx>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& z : v) j.push_back({z.real(), z.imag()});
  return j;
}

}  // namespace

void ToyPipelineConfig::validate() const {
  loss.validate();
  schedule.validate();
  stft.validate();
  if (train_scenes == 0) throw ConfigError("train-toy: train_scenes must be > 0");
  if (holdout_scenes == 0) throw ConfigError("train-toy: holdout_scenes must be > 0");
  if (!(lr >= 0.0)) throw ConfigError("train-toy: lr must be >= 0");
  if (crop_frames == 0) throw ConfigError("train-toy: crop_frames must be > 0");
  if (!(warmup_fraction >= 0.0 && warmup_fraction <= decay_start && decay_start <= 1.0)) {
    throw ConfigError("train-toy: need 0 <= warmup_fraction <= decay_start <= 1");
  }
  if (!(final_lr_fraction >= 0.0 && final_lr_fraction <= 1.0)) {
    throw ConfigError("train-toy: final_lr_fraction must lie in [0, 1]");
  }
}

void to_json(nlohmann::json& j, const ToyPipelineConfig& c) {
  j = {{"train_scenes", c.train_scenes},
       {"holdout_scenes", c.holdout_scenes},
       {"steps", c.steps},
       {"lr", c.lr},
       {"warmup_fraction", c.warmup_fraction},
       {"decay_start", c.decay_start},
       {"final_lr_fraction", c.final_lr_fraction},
       {"crop_frames", c.crop_frames},
       {"trace_every", c.trace_every},
       {"train_cond", c.train_cond},
       {"seed", c.seed},
       {"loss", c.loss},
       {"schedule", c.schedule},
       {"stft", {{"frame_length", c.stft.frame_length}, {"hop", c.stft.hop}, {"pad_bins_to", c.stft.pad_bins_to}}}};
  to_json(j["dataset"], c.dataset);
}

void from_json(const nlohmann::json& j, ToyPipelineConfig& c) {
  c = ToyPipelineConfig{};
  try {
    if (j.contains("dataset")) {
      const double default_duration = c.dataset.duration_s;
      c.dataset = j.at("dataset").get<DatasetConfig>();
      if (!j.at("dataset").contains("duration_s")) c.dataset.duration_s = default_duration;
    }
    c.train_scenes = j.value("train_scenes", c.train_scenes);
    c.holdout_scenes = j.value("holdout_scenes", c.holdout_scenes);
    c.steps = j.value("steps", c.steps);
    c.lr = j.value("lr", c.lr);
    c.warmup_fraction = j.value("warmup_fraction", c.warmup_fraction);
    c.decay_start = j.value("decay_start", c.decay_start);
    c.final_lr_fraction = j.value("final_lr_fraction", c.final_lr_fraction);
    c.crop_frames = j.value("crop_frames", c.crop_frames);
    c.trace_every = j.value("trace_every", c.trace_every);
    c.train_cond = j.value("train_cond", c.train_cond);
    c.seed = j.value("seed", c.seed);
    if (j.contains("loss")) c.loss = j.at("loss").get<LossConfig>();
    if (j.contains("schedule")) c.schedule = j.at("schedule").get<NoiseSchedule>();
    if (j.contains("stft")) {
      const auto& s = j.at("stft");
      c.stft.frame_length = s.value("frame_length", c.stft.frame_length);
      c.stft.hop = s.value("hop", c.stft.hop);
      c.stft.pad_bins_to = s.value("pad_bins_to", c.stft.pad_bins_to);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train-toy config: ") + e.what());
  }
  c.validate();
}

double learning_rate_at(const ToyPipelineConfig& cfg, std::size_t step) {
  if (cfg.steps == 0) return cfg.lr;
  const double n = static_cast<double>(cfg.steps);
  const double x = static_cast<double>(step);
  const double warm = cfg.warmup_fraction * n;
  if (x < warm) return cfg.lr * (x + 1.0) / std::ceil(warm);
  const double start = cfg.decay_start * n;
  if (x < start) return cfg.lr;
  const double p = (x - start) / std::max(n - start, 1.0);
  const double lo = cfg.final_lr_fraction;
  return cfg.lr * (lo + (1.0 - lo) * 0.5 * (1.0 + std::cos(std::numbers::pi * p)));
}

Spectrogram ToyPipelineModel::condition(const Spectrogram& mic, double c) const {
  if (cond_gain.size() != mic.bins()) throw ConfigError("toy Cond: bin count mismatch");
  Spectrogram out = mic.zeros_like();
  for (std::size_t l = 0; l < mic.frames(); ++l) {
    for (std::size_t k = 0; k < mic.bins(); ++k) {
      out.at(k, l) = decompress(cond_gain[k] * compress(mic.at(k, l), c), c);
    }
  }
  return out;
}

nlohmann::json ToyPipelineReport::to_json() const {
  nlohmann::json j;
  j["config"] = config;
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& p : trace) tr.push_back({{"step", p.step}, {"loss", p.loss}, {"lr", p.lr}});
  j["loss_trace"] = std::move(tr);
  j["initial_holdout"] = breakdown_json(initial_holdout);
  j["final_holdout"] = breakdown_json(final_holdout);
  j["holdout_improved"] = final_holdout.total < initial_holdout.total;
  j["model"] = {{"cond_gain", complex_json(model.cond_gain)},
                {"score_gain", complex_json(model.scorer.gain)},
                {"score_bias", complex_json(model.scorer.bias)}};
  return j;
}

LossBreakdown evaluate_toy_pipeline(const ToyPipelineModel& model,
                                    const std::vector<SceneBundle>& scenes,
                                    const ToyPipelineConfig& cfg) {
  const auto examples = prepare(scenes, cfg.stft);
  LossBreakdown sum;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    Rng rng = derive_rng(cfg.seed, kHoldoutStream + i);
    const Spectrogram z = draw_noise(examples[i].mic, rng);
    const LossBreakdown b = forward_backward(model, examples[i], z, cfg, false).loss;
    sum.cc_cond += b.cc_cond;
    sum.cc_score += b.cc_score;
    sum.sm += b.sm;
    sum.total += b.total;
  }
  const double n = static_cast<double>(std::max<std::size_t>(examples.size(), 1));
  return {sum.cc_cond / n, sum.cc_score / n, sum.sm / n, sum.total / n};
}

ToyPipelineReport toy_pipeline_train(const std::vector<SceneBundle>& train,
                                     const std::vector<SceneBundle>& holdout,
                                     const ToyPipelineConfig& cfg) {
  cfg.validate();
  if (train.empty() || holdout.empty()) throw ConfigError("train-toy: empty scene set");
  const std::size_t bins = cfg.stft.pad_bins_to;
  const double sigma = sigma_at(cfg.schedule, cfg.schedule.t_max);
  const double s2 = sigma * sigma;

  ToyPipelineModel model;
  model.cond_gain.assign(bins, 1.0);
  model.scorer = ToyScorer(bins);

  ToyPipelineReport report;
  report.config = cfg;
  report.initial_holdout = evaluate_toy_pipeline(model, holdout, cfg);

  const auto examples = prepare(train, cfg.stft);
  // Score parameters are optimized in units of sigma_T^2 times the score so
  // that their natural range is O(1).
  std::vector<double> theta = model.scorer.params();
  for (double& v : theta) v *= s2;
  std::vector<double> cond(2 * bins);
  for (std::size_t k = 0; k < bins; ++k) {
    cond[k] = model.cond_gain[k].real();
    cond[bins + k] = model.cond_gain[k].imag();
  }
  Adam adam_score(theta.size());
  Adam adam_cond(cond.size());
  Rng rng = derive_rng(cfg.seed, kTrainStream);
  double trace_sum = 0.0;
  std::size_t trace_n = 0;
  std::vector<double> g_theta(theta.size()), g_cond(cond.size());

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, examples.size() - 1)(rng);
    const Example& full = examples[idx];
    const std::size_t frames = std::min(cfg.crop_frames, full.mic.frames());
    const std::size_t first =
        std::uniform_int_distribution<std::size_t>(0, full.mic.frames() - frames)(rng);
    const Example ex{crop(full.mic, first, frames), crop(full.clean, first, frames)};
    const Spectrogram z = draw_noise(ex.mic, rng);
    const StepResult r = forward_backward(model, ex, z, cfg, true);
    if (!std::isfinite(r.loss.total)) {
      throw NumericError("train-toy: non-finite loss at step " + std::to_string(step));
    }
    const double lr = learning_rate_at(cfg, step);

    const std::size_t k = bins;
    for (std::size_t i = 0; i < k; ++i) {
      g_theta[i] = r.grad_score.gain[i].real() / s2;
      g_theta[k + i] = r.grad_score.gain[i].imag() / s2;
      g_theta[2 * k + i] = r.grad_score.bias[i].real() / s2;
      g_theta[3 * k + i] = r.grad_score.bias[i].imag() / s2;
    }
    adam_score.step(theta, g_theta, lr);
    std::vector<double> p = theta;
    for (double& v : p) v /= s2;
    model.scorer.set_params(p);

    if (cfg.train_cond) {
      for (std::size_t i = 0; i < k; ++i) {
        g_cond[i] = r.grad_cond[i].real();
        g_cond[k + i] = r.grad_cond[i].imag();
      }
      adam_cond.step(cond, g_cond, lr);
      for (std::size_t i = 0; i < k; ++i) model.cond_gain[i] = {cond[i], cond[k + i]};
    }

    trace_sum += r.loss.total;
    if (++trace_n == std::max<std::size_t>(cfg.trace_every, 1) || step + 1 == cfg.steps) {
      report.trace.push_back({step + 1, trace_sum / static_cast<double>(trace_n), lr});
      trace_sum = 0.0;
      trace_n = 0;
    }
  }
  report.final_holdout = evaluate_toy_pipeline(model, holdout, cfg);
  report.model = std::move(model);
  return report;
}

ToyPipelineReport run_toy_pipeline(const ToyPipelineConfig& cfg) {
  cfg.validate();
  const SourcePools pools = load_pools(cfg.dataset, cfg.seed);
  auto all = synthesize_scenes(cfg.train_scenes + cfg.holdout_scenes, cfg.dataset, cfg.seed, &pools);
  std::vector<SceneBundle> train(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(cfg.train_scenes));
  std::vector<SceneBundle> holdout(all.begin() + static_cast<std::ptrdiff_t>(cfg.train_scenes), all.end());
  return toy_pipeline_train(train, holdout, cfg);
}

}  // namespace dvqe
