#pragma once

#include <json.hpp>

#include "dvqe/signal/stft.h"

namespace dvqe {

struct LossConfig {
  double alpha = 0.005;   // weight of the score-matching term
  double c = 0.3;         // magnitude compression exponent
  double lambda = 0.3;    // complex / magnitude blend

  void validate() const;
};

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

// |z|^c e^{j arg z}; zero maps to zero.
cplx compress(cplx z, double c);

// Compressed complex MSE over the analysis bins (padded bins excluded):
//   lambda |S_c - S_hat_c|^2 + (1 - lambda) (|S|^c - |S_hat|^c)^2,
// averaged over bins x frames.
double cc_mse(const Spectrogram& s_hat, const Spectrogram& s, const LossConfig& cfg);

// cc_mse plus its gradient with respect to S_hat, dL/dRe + i dL/dIm per
// element (zero at S_hat == 0 and in padded bins).
double cc_mse_grad(const Spectrogram& s_hat, const Spectrogram& s, const LossConfig& cfg,
                   Spectrogram& grad);

// J = J_cc(S_cond_hat, S) + J_cc(S_hat, S) + alpha J_sm.
double total_loss(const Spectrogram& s_cond_hat, const Spectrogram& s_hat, const Spectrogram& s,
                  double sm_loss, const LossConfig& cfg);

}  // namespace dvqe
