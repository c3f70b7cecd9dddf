#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dvqe/common/rng.h"
#include "dvqe/diffusion/sampler.h"
#include "dvqe/diffusion/schedule.h"
#include "dvqe/signal/stft.h"

namespace dvqe {

// 64-bin analysis used by the toy problem (frame 126, hop 42, no bin padding).
StftConfig toy_stft_config();

// Per-bin complex linear score: score(S_t)[k, l] = g_k S_t[k, l] + b_k.
class ToyScorer {
 public:
  ToyScorer() = default;
  explicit ToyScorer(std::size_t bins, bool use_bias = true);

  std::size_t bins() const { return gain.size(); }
  bool use_bias() const { return use_bias_; }

  Spectrogram score(const Spectrogram& s_t) const;
  ScoreFn as_score_fn() const;

  // Flat real parameter vector: Re g, Im g, then Re b, Im b when biased.
  std::vector<double> params() const;
  void set_params(std::span<const double> p);

  std::vector<cplx> gain;
  std::vector<cplx> bias;

 private:
  bool use_bias_ = true;
};

// Gradients with respect to the complex parameters, dL/dRe + i dL/dIm.
struct ToyGrad {
  std::vector<cplx> gain;
  std::vector<cplx> bias;
};

// Mean over bins and frames of |g S_t + b + Z / sigma|^2, where
// S_t = S + sigma Z. Fills `grad` when non-null.
double toy_sm_loss(const ToyScorer& scorer, const Spectrogram& s_t, const Spectrogram& z,
                   double sigma, ToyGrad* grad = nullptr);

struct ToyTrainConfig {
  std::size_t steps = 20000;
  double lr = 10.0;
  // The step size decays along a cosine from lr to lr * final_lr_fraction.
  double final_lr_fraction = 0.01;
  std::size_t frames = 16;  // frames per training draw
  double t = -1.0;          // diffusion time; negative selects T
  std::size_t trace_every = 100;
};

struct ToyTrainResult {
  ToyScorer scorer;
  std::vector<double> loss_trace;  // one entry per trace_every steps
};

// SGD on the single-draw score-matching loss for a clean prior of i.i.d.
// zero-mean Gaussian samples with standard deviation prior_sigma_s (drawn in
// the time domain, like Z). Throws NumericError on a non-finite loss.
ToyTrainResult toy_train(ToyScorer scorer, double prior_sigma_s, const NoiseSchedule& sched,
                         const ToyTrainConfig& cfg, Rng& rng);

}  // namespace dvqe
