#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fisherplane/nn.hpp"
#include "fisherplane/rng.hpp"
#include "fisherplane/tensor.hpp"

namespace fisherplane {

enum class Likelihood { kBernoulli, kDiagGaussian };

std::string likelihood_name(Likelihood lik);
Likelihood likelihood_from_name(const std::string& name);

// Raw sigma-head outputs are clamped to [kLogSigmaMin, kLogSigmaMax] before
// exp, so posterior sigmas live in [e^-6, e^3] and 1/sigma^2 cannot overflow.
constexpr double kLogSigmaMin = -6.0;
constexpr double kLogSigmaMax = 3.0;
// Floor on the diag-gaussian decoder's per-pixel sigma.
constexpr double kDecoderSigmaFloor = 1e-3;

struct GaussianPosterior {
    Tensor mu;     // [batch, d]
    Tensor sigma;  // [batch, d], positive by construction
};

struct VaeModel {
    Mlp encoder;  // data_dim -> hidden -> 2*latent_dim
    Mlp decoder;  // latent_dim -> hidden -> data_dim (bernoulli) or 2*data_dim
    std::size_t latent_dim = 0;
    std::size_t data_dim = 0;
    Likelihood likelihood = Likelihood::kBernoulli;

    // hidden lists the hidden widths, used for both nets (decoder mirrored).
    static VaeModel create(std::size_t data_dim, const std::vector<std::size_t>& hidden,
                           std::size_t latent_dim, Likelihood likelihood, std::uint64_t seed);

    std::vector<Tensor> parameters() const;
    std::vector<std::string> parameter_names() const;
    void validate() const;
};

// mu = head1(x), sigma = exp(clamp(head2(x))); both heads are column slices
// of the encoder output.
GaussianPosterior encode(Tape& tape, const VaeModel& model, const Tensor& x);

// z = mu + sigma * eps with eps ~ N(0, I); gradient flows to mu and sigma.
Tensor reparameterize(Tape& tape, const GaussianPosterior& post, Rng& rng);

// Per-example log p(x|z), shape [batch].
Tensor log_likelihood(Tape& tape, const VaeModel& model, const Tensor& x, const Tensor& z);

// Decoder per-pixel sigma (diag-gaussian likelihood only), [batch, data_dim].
Tensor decoder_sigma(Tape& tape, const VaeModel& model, const Tensor& z);

// Batch mean of sum_D 1/sigma_x(z)^2; diag-gaussian only, differentiable.
Tensor decoder_fisher_trace(Tape& tape, const VaeModel& model, const Tensor& z);

// Batch mean of sum_d 1/sigma_d^2 of the posterior (Gaussian closed form).
Tensor posterior_fisher_trace(Tape& tape, const GaussianPosterior& post);

}  // namespace fisherplane
