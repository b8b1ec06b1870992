#include "fisherplane/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "fisherplane/objectives.hpp"
#include "fisherplane/rng.hpp"

namespace fisherplane {

namespace {

constexpr std::size_t kEvalChunk = 256;
constexpr double kLogTwoPi = 1.8378770664093453;

Tensor chunk_tensor(const Dataset& data, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    std::vector<double> v(data.images.begin() + static_cast<long>(begin * data.dim),
                          data.images.begin() + static_cast<long>(end * data.dim));
    return Tensor::from_vector({n, data.dim}, std::move(v));
}

// Streaming mean/variance merge (Chan et al.); keeps shard merging
// order-independent to rounding.
struct RunningMoments {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t count = 0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }
};

}  // namespace

std::vector<double> iwae_per_example_logp(const VaeModel& model, const Dataset& data,
                                          std::size_t K, std::uint64_t seed) {
    if (K < 1) throw ContractError("iwae requires K >= 1");
    data.validate();
    if (data.dim != model.data_dim) {
        throw ContractError("iwae: dataset dimension does not match the model");
    }
    Rng rng(derive_seed(seed, 0x13ae));
    const std::size_t n = data.size();
    std::vector<double> logp(n);
    const std::size_t d = model.latent_dim;

    for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
        const std::size_t end = std::min(begin + kEvalChunk, n);
        const std::size_t b = end - begin;
        Tape tape(false);
        const Tensor x = chunk_tensor(data, begin, end);
        const GaussianPosterior post = encode(tape, model, x);
        const auto mu = post.mu.data();
        const auto sigma = post.sigma.data();

        std::vector<double> logw(b * K);
        std::vector<double> z(b * d);
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < b; ++i) {
                for (std::size_t j = 0; j < d; ++j) {
                    const std::size_t idx = i * d + j;
                    z[idx] = mu[idx] + sigma[idx] * rng.normal();
                }
            }
            Tape inner(false);
            const Tensor zt = Tensor::from_vector({b, d}, z);
            const Tensor ll = log_likelihood(inner, model, x, zt);
            const auto llv = ll.data();
            for (std::size_t i = 0; i < b; ++i) {
                double log_prior = 0.0;
                double log_q = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const std::size_t idx = i * d + j;
                    log_prior += -0.5 * z[idx] * z[idx] - 0.5 * kLogTwoPi;
                    const double zs = (z[idx] - mu[idx]) / sigma[idx];
                    log_q += -0.5 * zs * zs - std::log(sigma[idx]) - 0.5 * kLogTwoPi;
                }
                const double w = llv[i] + log_prior - log_q;
                if (!std::isfinite(w)) {
                    throw NumericError("non-finite importance weight for example " +
                                       std::to_string(begin + i));
                }
                logw[i * K + k] = w;
            }
        }
        for (std::size_t i = 0; i < b; ++i) {
            const double* row = logw.data() + i * K;
            double m = row[0];
            for (std::size_t k = 1; k < K; ++k) m = std::max(m, row[k]);
            double s = 0.0;
            for (std::size_t k = 0; k < K; ++k) s += std::exp(row[k] - m);
            logp[begin + i] = m + std::log(s) - std::log(static_cast<double>(K));
        }
    }
    return logp;
}

NllEstimate iwae_nll(const VaeModel& model, const Dataset& data, std::size_t K,
                     std::uint64_t seed) {
    const std::vector<double> logp = iwae_per_example_logp(model, data, K, seed);
    RunningMoments mom;
    for (double v : logp) mom.add(-v);

    // 200-resample nonparametric bootstrap of the mean.
    constexpr std::size_t kResamples = 200;
    Rng boot(derive_seed(seed, 0xb007));
    const std::size_t n = logp.size();
    RunningMoments boot_mom;
    for (std::size_t r = 0; r < kResamples; ++r) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += -logp[boot.next_u64() % n];
        }
        boot_mom.add(acc / static_cast<double>(n));
    }
    NllEstimate est;
    est.nll = mom.mean;
    est.num_importance_samples = K;
    est.std_err = std::sqrt(boot_mom.m2 / static_cast<double>(kResamples));
    if (!std::isfinite(est.nll)) throw NumericError("iwae_nll produced a non-finite estimate");
    return est;
}

double sampled_elbo_estimate(const VaeModel& model, const Dataset& data, std::uint64_t seed) {
    // Same stream layout as iwae_per_example_logp with K = 1, computed through
    // an explicit one-sample average rather than the logsumexp path.
    Rng rng(derive_seed(seed, 0x13ae));
    data.validate();
    const std::size_t n = data.size();
    const std::size_t d = model.latent_dim;
    RunningMoments mom;
    for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
        const std::size_t end = std::min(begin + kEvalChunk, n);
        const std::size_t b = end - begin;
        Tape tape(false);
        const Tensor x = chunk_tensor(data, begin, end);
        const GaussianPosterior post = encode(tape, model, x);
        const auto mu = post.mu.data();
        const auto sigma = post.sigma.data();
        std::vector<double> z(b * d);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                const std::size_t idx = i * d + j;
                z[idx] = mu[idx] + sigma[idx] * rng.normal();
            }
        }
        Tape inner(false);
        const Tensor zt = Tensor::from_vector({b, d}, z);
        const Tensor ll = log_likelihood(inner, model, x, zt);
        for (std::size_t i = 0; i < b; ++i) {
            double log_prior = 0.0;
            double log_q = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const std::size_t idx = i * d + j;
                log_prior += -0.5 * z[idx] * z[idx] - 0.5 * kLogTwoPi;
                const double zs = (z[idx] - mu[idx]) / sigma[idx];
                log_q += -0.5 * zs * zs - std::log(sigma[idx]) - 0.5 * kLogTwoPi;
            }
            mom.add(ll.data()[i] + log_prior - log_q);
        }
    }
    return mom.mean;
}

double dataset_elbo(const VaeModel& model, const Dataset& data, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xe1b0));
    data.validate();
    const std::size_t n = data.size();
    RunningMoments mom;
    for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
        const std::size_t end = std::min(begin + kEvalChunk, n);
        Tape tape(false);
        const Tensor x = chunk_tensor(data, begin, end);
        const GaussianPosterior post = encode(tape, model, x);
        const Tensor z = reparameterize(tape, post, rng);
        const Tensor ll = log_likelihood(tape, model, x, z);
        const Tensor kl = kl_to_standard_normal(tape, post);
        for (std::size_t i = 0; i < end - begin; ++i) {
            mom.add(ll.data()[i] - kl.data()[i]);
        }
    }
    return mom.mean;
}

std::vector<DiagGaussian> encode_posteriors(const VaeModel& model, const Dataset& data) {
    data.validate();
    const std::size_t n = data.size();
    const std::size_t d = model.latent_dim;
    std::vector<DiagGaussian> out;
    out.reserve(n);
    for (std::size_t begin = 0; begin < n; begin += kEvalChunk) {
        const std::size_t end = std::min(begin + kEvalChunk, n);
        Tape tape(false);
        const Tensor x = chunk_tensor(data, begin, end);
        const GaussianPosterior post = encode(tape, model, x);
        const auto mu = post.mu.data();
        const auto sigma = post.sigma.data();
        for (std::size_t i = 0; i < end - begin; ++i) {
            DiagGaussian g;
            g.mu.assign(mu.begin() + static_cast<long>(i * d), mu.begin() + static_cast<long>((i + 1) * d));
            g.sigma.assign(sigma.begin() + static_cast<long>(i * d),
                           sigma.begin() + static_cast<long>((i + 1) * d));
            out.push_back(std::move(g));
        }
    }
    return out;
}

FsTraceEntry fs_trace_record(const VaeModel& model, std::size_t epoch, const Dataset& eval_set,
                             std::uint64_t seed) {
    if (eval_set.size() == 0) throw ContractError("fs_trace_record: empty eval set");
    FsTraceEntry e;
    e.epoch = epoch;
    e.point = fs_point_of_posterior(encode_posteriors(model, eval_set));
    e.elbo = dataset_elbo(model, eval_set, derive_seed(seed, epoch));
    return e;
}

}  // namespace fisherplane
