#include "fisherplane/vae.hpp"

#include <cmath>
#include <numbers>

namespace fisherplane {

std::string likelihood_name(Likelihood lik) {
    return lik == Likelihood::kBernoulli ? "bernoulli" : "diag-gaussian";
}

Likelihood likelihood_from_name(const std::string& name) {
    if (name == "bernoulli") return Likelihood::kBernoulli;
    if (name == "diag-gaussian" || name == "gaussian") return Likelihood::kDiagGaussian;
    throw ContractError("unknown likelihood '" + name + "'");
}

VaeModel VaeModel::create(std::size_t data_dim, const std::vector<std::size_t>& hidden,
                          std::size_t latent_dim, Likelihood likelihood, std::uint64_t seed) {
    if (data_dim == 0 || latent_dim == 0) {
        throw ContractError("VaeModel: data_dim and latent_dim must be positive");
    }
    VaeModel m;
    m.data_dim = data_dim;
    m.latent_dim = latent_dim;
    m.likelihood = likelihood;

    std::vector<std::size_t> enc_dims;
    enc_dims.push_back(data_dim);
    enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
    enc_dims.push_back(2 * latent_dim);
    m.encoder = init_mlp(enc_dims, Activation::kTanh, derive_seed(seed, 0xe0c));

    std::vector<std::size_t> dec_dims;
    dec_dims.push_back(latent_dim);
    dec_dims.insert(dec_dims.end(), hidden.rbegin(), hidden.rend());
    dec_dims.push_back(likelihood == Likelihood::kBernoulli ? data_dim : 2 * data_dim);
    m.decoder = init_mlp(dec_dims, Activation::kTanh, derive_seed(seed, 0xdec));
    m.validate();
    return m;
}

void VaeModel::validate() const {
    if (encoder.out_dim() != 2 * latent_dim) {
        throw ContractError("encoder output width must be 2*latent_dim");
    }
    if (decoder.in_dim() != latent_dim) {
        throw ContractError("decoder input width must equal latent_dim");
    }
    const std::size_t want = likelihood == Likelihood::kBernoulli ? data_dim : 2 * data_dim;
    if (decoder.out_dim() != want) {
        throw ContractError("decoder output width does not match likelihood");
    }
}

std::vector<Tensor> VaeModel::parameters() const {
    std::vector<Tensor> out = encoder.parameters();
    const std::vector<Tensor> dec = decoder.parameters();
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

std::vector<std::string> VaeModel::parameter_names() const {
    std::vector<std::string> out = encoder.parameter_names("encoder");
    const std::vector<std::string> dec = decoder.parameter_names("decoder");
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

GaussianPosterior encode(Tape& tape, const VaeModel& model, const Tensor& x) {
    if (x.rank() != 2 || x.shape()[1] != model.data_dim) {
        throw ContractError("encode expects x of shape [batch," + std::to_string(model.data_dim) +
                            "], got " + shape_str(x.shape()));
    }
    const Tensor h = model.encoder.forward(tape, x);
    GaussianPosterior post;
    post.mu = tape.slice_cols(h, 0, model.latent_dim);
    const Tensor raw = tape.slice_cols(h, model.latent_dim, model.latent_dim);
    post.sigma = tape.exp(tape.clamp(raw, kLogSigmaMin, kLogSigmaMax));
    return post;
}

Tensor reparameterize(Tape& tape, const GaussianPosterior& post, Rng& rng) {
    const std::size_t n = post.mu.size();
    std::vector<double> eps(n);
    for (double& e : eps) e = rng.normal();
    const Tensor noise = Tensor::from_vector(post.mu.shape(), std::move(eps));
    return tape.add(post.mu, tape.mul(post.sigma, noise));
}

namespace {

struct DecoderOut {
    Tensor logits;   // bernoulli
    Tensor mean;     // diag-gaussian
    Tensor sigma_x;  // diag-gaussian, floored
};

DecoderOut run_decoder(Tape& tape, const VaeModel& model, const Tensor& z) {
    if (z.rank() != 2 || z.shape()[1] != model.latent_dim) {
        throw ContractError("decoder expects z of shape [batch," +
                            std::to_string(model.latent_dim) + "], got " + shape_str(z.shape()));
    }
    const Tensor raw = model.decoder.forward(tape, z);
    DecoderOut out;
    if (model.likelihood == Likelihood::kBernoulli) {
        out.logits = raw;
    } else {
        out.mean = tape.slice_cols(raw, 0, model.data_dim);
        const Tensor s = tape.slice_cols(raw, model.data_dim, model.data_dim);
        out.sigma_x = tape.add_scalar(tape.softplus(s), kDecoderSigmaFloor);
    }
    return out;
}

Tensor log_likelihood_from(Tape& tape, const VaeModel& model, const Tensor& x,
                           const DecoderOut& dec) {
    if (x.rank() != 2 || x.shape()[1] != model.data_dim) {
        throw ContractError("log_likelihood expects x of shape [batch," +
                            std::to_string(model.data_dim) + "], got " + shape_str(x.shape()));
    }
    if (model.likelihood == Likelihood::kBernoulli) {
        for (double v : x.data()) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ContractError("bernoulli likelihood requires x in [0,1]");
            }
        }
        // x log p + (1-x) log(1-p) = -(x softplus(-l) + (1-x) softplus(l))
        const Tensor l = dec.logits;
        const Tensor sp_neg = tape.softplus(tape.neg(l));
        const Tensor sp_pos = tape.softplus(l);
        const Tensor one_minus_x = tape.add_scalar(tape.neg(x), 1.0);
        const Tensor loss_elem = tape.add(tape.mul(x, sp_neg), tape.mul(one_minus_x, sp_pos));
        return tape.neg(tape.sum_cols(loss_elem));
    }
    // Diag-gaussian: sum_D -1/2 ((x-m)/s)^2 - log s - 1/2 log(2 pi).
    const Tensor resid = tape.sub(x, dec.mean);
    const Tensor zscore = tape.div(resid, dec.sigma_x);
    const Tensor elem = tape.add(tape.scale(tape.square(zscore), 0.5), tape.log(dec.sigma_x));
    const Tensor row = tape.sum_cols(elem);
    const double c = 0.5 * std::log(2.0 * std::numbers::pi) * static_cast<double>(model.data_dim);
    return tape.neg(tape.add_scalar(row, c));
}

Tensor fisher_trace_from(Tape& tape, const DecoderOut& dec) {
    const Tensor inv_var = tape.div(Tensor::constant(dec.sigma_x.shape(), 1.0),
                                    tape.square(dec.sigma_x));
    return tape.mean(tape.sum_cols(inv_var));
}

}  // namespace

Tensor log_likelihood(Tape& tape, const VaeModel& model, const Tensor& x, const Tensor& z) {
    return log_likelihood_from(tape, model, x, run_decoder(tape, model, z));
}

Tensor decoder_sigma(Tape& tape, const VaeModel& model, const Tensor& z) {
    if (model.likelihood != Likelihood::kDiagGaussian) {
        throw ContractError("decoder_sigma requires the diag-gaussian likelihood");
    }
    return run_decoder(tape, model, z).sigma_x;
}

Tensor decoder_fisher_trace(Tape& tape, const VaeModel& model, const Tensor& z) {
    if (model.likelihood != Likelihood::kDiagGaussian) {
        throw ContractError(
            "decoder Fisher information is defined only for the diag-gaussian likelihood");
    }
    return fisher_trace_from(tape, run_decoder(tape, model, z));
}

Tensor posterior_fisher_trace(Tape& tape, const GaussianPosterior& post) {
    const Tensor inv_var = tape.div(Tensor::constant(post.sigma.shape(), 1.0),
                                    tape.square(post.sigma));
    return tape.mean(tape.sum_cols(inv_var));
}

}  // namespace fisherplane
