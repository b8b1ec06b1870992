#include "fisherplane/objectives.hpp"

#include <cmath>
#include <numbers>

namespace fisherplane {

namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2 pi)

// Copy of an Mlp whose parameters are plain constants (no grad tracking);
// used to freeze omega along the MAE penalty path.
Mlp clone_frozen(const Mlp& net) {
    Mlp out;
    out.activation = net.activation;
    for (const LinearLayer& l : net.layers) {
        LinearLayer c;
        c.weight = Tensor::from_vector(l.weight.shape(),
                                       {l.weight.data().begin(), l.weight.data().end()});
        c.bias = Tensor::from_vector(l.bias.shape(), {l.bias.data().begin(), l.bias.data().end()});
        out.layers.push_back(std::move(c));
    }
    return out;
}

// Per-example log r(z|x) for a Gaussian recognition net mapping x -> [mu, s].
Tensor gaussian_recognition_logprob(Tape& tape, const Mlp& net, const Tensor& x, const Tensor& z,
                                    std::size_t latent_dim) {
    const Tensor h = net.forward(tape, x);
    const Tensor mu = tape.slice_cols(h, 0, latent_dim);
    const Tensor raw = tape.slice_cols(h, latent_dim, latent_dim);
    const Tensor sigma = tape.exp(tape.clamp(raw, kLogSigmaMin, kLogSigmaMax));
    const Tensor zscore = tape.div(tape.sub(z, mu), sigma);
    const Tensor elem = tape.add(tape.scale(tape.square(zscore), 0.5), tape.log(sigma));
    const double c = 0.5 * kLogTwoPi * static_cast<double>(latent_dim);
    return tape.neg(tape.add_scalar(tape.sum_cols(elem), c));
}

struct ElboParts {
    GaussianPosterior post;
    Tensor z;
    Tensor recon;     // scalar, mean log p(x|z)
    Tensor kl;        // scalar, mean KL
    Tensor neg_elbo;  // scalar
};

ElboParts build_elbo(Tape& tape, const VaeModel& model, const Tensor& x, Rng& rng) {
    if (x.rank() != 2 || x.shape()[0] == 0) {
        throw ContractError("loss expects a nonempty [batch, D] input");
    }
    ElboParts p;
    p.post = encode(tape, model, x);
    p.z = reparameterize(tape, p.post, rng);
    p.recon = tape.mean(log_likelihood(tape, model, x, p.z));
    p.kl = tape.mean(kl_to_standard_normal(tape, p.post));
    p.neg_elbo = tape.sub(p.kl, p.recon);
    return p;
}

}  // namespace

void FaeConfig::validate() const {
    if (lambda_z < 0.0 || lambda_x < 0.0 || f_z < 0.0 || f_x < 0.0) {
        throw ContractError("FaeConfig: weights and targets must be nonnegative");
    }
    if (lambda_x > 0.0 && likelihood != Likelihood::kDiagGaussian) {
        throw ContractError(
            "FaeConfig: the decoder Fisher-information penalty (lambda_x > 0) requires the "
            "diag-gaussian likelihood; it is undefined for bernoulli data");
    }
}

void MaeConfig::validate(std::size_t data_dim, std::size_t latent_dim) const {
    if (c < 0.0 || m < 0.0) throw ContractError("MaeConfig: c and m must be nonnegative");
    if (aux.layers.empty() || aux.in_dim() != data_dim || aux.out_dim() != 2 * latent_dim) {
        throw ContractError("MaeConfig: aux net must map data_dim to 2*latent_dim");
    }
}

Tensor kl_to_standard_normal(Tape& tape, const GaussianPosterior& post) {
    const Tensor mu_sq = tape.square(post.mu);
    const Tensor var = tape.square(post.sigma);
    const Tensor log_var = tape.log(var);
    const Tensor elem = tape.sub(tape.add(mu_sq, var), tape.add_scalar(log_var, 1.0));
    return tape.scale(tape.sum_cols(elem), 0.5);
}

LossResult fae_loss(Tape& tape, const VaeModel& model, const Tensor& x, const FaeConfig& cfg,
                    Rng& rng) {
    cfg.validate();
    if (cfg.likelihood != model.likelihood) {
        throw ContractError("FaeConfig likelihood does not match the model");
    }
    ElboParts p = build_elbo(tape, model, x, rng);

    LossResult r;
    r.objective = p.neg_elbo;
    if (cfg.lambda_z > 0.0) {
        const Tensor trj = posterior_fisher_trace(tape, p.post);
        const Tensor per_dim = tape.scale(trj, 1.0 / static_cast<double>(model.latent_dim));
        const Tensor term = tape.scale(tape.abs(tape.add_scalar(per_dim, -cfg.f_z)), cfg.lambda_z);
        r.objective = tape.add(r.objective, term);
        r.report.fi_term_z = term.item();
    }
    if (cfg.lambda_x > 0.0) {
        const Tensor trj = decoder_fisher_trace(tape, model, p.z);
        const Tensor per_dim = tape.scale(trj, 1.0 / static_cast<double>(model.data_dim));
        const Tensor term = tape.scale(tape.abs(tape.add_scalar(per_dim, -cfg.f_x)), cfg.lambda_x);
        r.objective = tape.add(r.objective, term);
        r.report.fi_term_x = term.item();
    }
    r.report.recon = p.recon.item();
    r.report.kl = p.kl.item();
    r.report.elbo = r.report.recon - r.report.kl;
    r.report.total = r.objective.item();
    return r;
}

Tensor minibatch_mixture_entropy(Tape& tape, const Tensor& z, const GaussianPosterior& post) {
    const std::size_t batch = z.shape()[0];
    const std::size_t d = z.shape()[1];
    // log N(z_i; mu_j, sigma_j) expanded so the cross terms become matmuls:
    // sum_d (z_id - mu_jd)^2 / sigma_jd^2
    //   = sum_d z_id^2 a_jd - 2 sum_d z_id (mu_jd a_jd) + sum_d mu_jd^2 a_jd,
    // with a = 1/sigma^2.
    const Tensor a = tape.div(Tensor::constant(post.sigma.shape(), 1.0), tape.square(post.sigma));
    const Tensor term1 = tape.matmul_nt(tape.square(z), a);
    const Tensor term2 = tape.matmul_nt(z, tape.mul(post.mu, a));
    const Tensor term3 = tape.broadcast(tape.sum_cols(tape.mul(tape.square(post.mu), a)),
                                        {batch, batch});
    const Tensor log_det = tape.broadcast(tape.sum_cols(tape.log(post.sigma)), {batch, batch});
    const Tensor quad = tape.add(tape.sub(term1, tape.scale(term2, 2.0)), term3);
    const double c = 0.5 * kLogTwoPi * static_cast<double>(d);
    const Tensor log_n = tape.add_scalar(tape.sub(tape.scale(quad, -0.5), log_det), -c);
    const Tensor lse = tape.logsumexp_rows(log_n);
    const Tensor mean_log_mix = tape.add_scalar(tape.mean(lse), -std::log(static_cast<double>(batch)));
    return tape.neg(mean_log_mix);
}

LossResult mae_loss(Tape& tape, const VaeModel& model, const Tensor& x, const MaeConfig& cfg,
                    Rng& rng) {
    cfg.validate(model.data_dim, model.latent_dim);
    ElboParts p = build_elbo(tape, model, x, rng);

    LossResult r;
    r.objective = p.neg_elbo;
    if (cfg.c > 0.0) {
        const Tensor hz = minibatch_mixture_entropy(tape, p.z, p.post);
        // Penalty path sees a frozen omega so its gradient reaches the encoder
        // only; omega itself learns from aux_objective below.
        const Mlp frozen = clone_frozen(cfg.aux);
        const Tensor log_r = gaussian_recognition_logprob(tape, frozen, x, p.z, model.latent_dim);
        const Tensor mi_hat = tape.add(hz, tape.mean(log_r));
        const Tensor term = tape.scale(tape.abs(tape.add_scalar(mi_hat, -cfg.m)), cfg.c);
        r.objective = tape.add(r.objective, term);
        r.report.mi_term = term.item();
    }
    // omega maximizes mean log r_omega(z|x) on detached codes.
    const Tensor z_const = Tensor::from_vector(p.z.shape(), {p.z.data().begin(), p.z.data().end()});
    const Tensor log_r_aux = gaussian_recognition_logprob(tape, cfg.aux, x, z_const,
                                                          model.latent_dim);
    r.aux_objective = tape.neg(tape.mean(log_r_aux));

    r.report.recon = p.recon.item();
    r.report.kl = p.kl.item();
    r.report.elbo = r.report.recon - r.report.kl;
    r.report.total = r.objective.item();
    return r;
}

std::pair<double, double> fi_entropy_tradeoff_report(const std::vector<DiagGaussian>& batch) {
    if (batch.empty()) throw ContractError("fi_entropy_tradeoff_report: empty batch");
    const double d = static_cast<double>(batch.front().dim());
    double trj_acc = 0.0;
    double h_acc = 0.0;
    for (const DiagGaussian& g : batch) {
        trj_acc += gaussian_fisher_trace(g);
        h_acc += gaussian_entropy(g);
    }
    const double n = static_cast<double>(batch.size());
    const double left = std::log(trj_acc / n / d);
    const double right = -2.0 * (h_acc / n) / d + std::log(2.0 * std::numbers::pi * std::numbers::e);
    return {left, right};
}

}  // namespace fisherplane
