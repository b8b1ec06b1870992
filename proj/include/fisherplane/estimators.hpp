#pragma once

#include <cstdint>
#include <vector>

#include "fisherplane/data_io.hpp"
#include "fisherplane/info_geometry.hpp"
#include "fisherplane/vae.hpp"

namespace fisherplane {

struct NllEstimate {
    double nll = 0.0;  // nats per example
    std::size_t num_importance_samples = 0;
    double std_err = 0.0;  // nonparametric bootstrap over examples
};

struct FsTraceEntry {
    std::size_t epoch = 0;
    InfoPoint point;
    double elbo = 0.0;
};

using FsTrace = std::vector<FsTraceEntry>;

// Importance-sampled marginal log-likelihood per example:
// log p(x) ~= logsumexp_k [log p(x|z_k) + log p(z_k) - log q(z_k|x)] - log K,
// stabilized by max subtraction. Deterministic in seed.
std::vector<double> iwae_per_example_logp(const VaeModel& model, const Dataset& data,
                                          std::size_t K, std::uint64_t seed);

// Dataset mean of -log p(x) with a 200-resample bootstrap standard error.
NllEstimate iwae_nll(const VaeModel& model, const Dataset& data, std::size_t K,
                     std::uint64_t seed);

// Single-sample ELBO estimate mean_i [log p(x|z) + log p(z) - log q(z|x)];
// equals the K=1 importance estimate for the same seed.
double sampled_elbo_estimate(const VaeModel& model, const Dataset& data, std::uint64_t seed);

// ELBO with the closed-form Gaussian KL and one reconstruction sample.
double dataset_elbo(const VaeModel& model, const Dataset& data, std::uint64_t seed);

// Encode every example (no gradients) into per-example posteriors.
std::vector<DiagGaussian> encode_posteriors(const VaeModel& model, const Dataset& data);

// One FS-plane trace entry for a model snapshot at the given epoch.
FsTraceEntry fs_trace_record(const VaeModel& model, std::size_t epoch, const Dataset& eval_set,
                             std::uint64_t seed);

}  // namespace fisherplane
