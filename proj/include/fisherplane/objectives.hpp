#pragma once

#include <utility>
#include <vector>

#include "fisherplane/info_geometry.hpp"
#include "fisherplane/vae.hpp"

namespace fisherplane {

// Lagrangian weights and Fisher-information targets. Targets are in
// per-dimension units: the encoder penalty reads |trJ_z/d - f_z| and the
// decoder penalty |trJ_x/D - f_x|, so scalar targets carry over unchanged to
// any latent or data dimension.
struct FaeConfig {
    double lambda_z = 0.0;
    double lambda_x = 0.0;
    double f_z = 0.0;
    double f_x = 0.0;
    Likelihood likelihood = Likelihood::kBernoulli;

    void validate() const;
};

// Mutual-information constraint plus the recognition net r_omega(z|x) used
// by the Gibbs bound. aux maps x to [mu_r, s_r] (width 2d).
struct MaeConfig {
    double c = 0.0;
    double m = 0.0;
    Mlp aux;

    void validate(std::size_t data_dim, std::size_t latent_dim) const;
};

// All terms are batch means in nats per example.
struct LossReport {
    double elbo = 0.0;
    double recon = 0.0;
    double kl = 0.0;
    double fi_term_z = 0.0;
    double fi_term_x = 0.0;
    double mi_term = 0.0;
    double total = 0.0;
};

struct LossResult {
    Tensor objective;      // scalar to minimize w.r.t. model parameters
    Tensor aux_objective;  // MAE only: scalar to minimize w.r.t. omega
    LossReport report;
};

// Per-example KL(q(z|x) || N(0, I)) = sum_d 1/2 (mu^2 + sigma^2 - 1 - log sigma^2).
Tensor kl_to_standard_normal(Tape& tape, const GaussianPosterior& post);

// total = -(recon - kl) + lambda_z |trJ_z/d - f_z| + lambda_x |trJ_x/D - f_x|.
LossResult fae_loss(Tape& tape, const VaeModel& model, const Tensor& x, const FaeConfig& cfg,
                    Rng& rng);

// total = -(recon - kl) + c |I_hat - m| with I_hat = H_hat(z) + mean log r_omega(z|x).
// H_hat(z) is the minibatch pairwise-mixture entropy estimate. omega is
// trained to maximize log r_omega via the separate aux_objective (detached z),
// while the penalty path sees a frozen copy of omega, so a single joint
// backward updates both sides correctly.
LossResult mae_loss(Tape& tape, const VaeModel& model, const Tensor& x, const MaeConfig& cfg,
                    Rng& rng);

// Minibatch pairwise-mixture entropy estimate of the aggregate code
// distribution: -mean_i log((1/B) sum_j N(z_i; mu_j, sigma_j)).
Tensor minibatch_mixture_entropy(Tape& tape, const Tensor& z, const GaussianPosterior& post);

// (log(mean trJ/d), -2 mean H(z|x)/d + log(2 pi e)); identical when every
// sigma entry in the batch is the same, otherwise they differ by a Jensen gap.
std::pair<double, double> fi_entropy_tradeoff_report(const std::vector<DiagGaussian>& batch);

}  // namespace fisherplane
