#include "fisherplane/nn.hpp"

#include <cmath>
#include <unordered_set>

#include "fisherplane/rng.hpp"

namespace fisherplane {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::kTanh: return "tanh";
        case Activation::kRelu: return "relu";
        case Activation::kSoftplus: return "softplus";
    }
    return "tanh";
}

Activation activation_from_name(const std::string& name) {
    if (name == "tanh") return Activation::kTanh;
    if (name == "relu") return Activation::kRelu;
    if (name == "softplus") return Activation::kSoftplus;
    throw ContractError("unknown activation '" + name + "'");
}

std::size_t Mlp::in_dim() const {
    if (layers.empty()) throw ContractError("empty Mlp");
    return layers.front().weight.shape()[1];
}

std::size_t Mlp::out_dim() const {
    if (layers.empty()) throw ContractError("empty Mlp");
    return layers.back().weight.shape()[0];
}

Tensor Mlp::forward(Tape& tape, const Tensor& x) const {
    if (x.rank() != 2 || x.shape()[1] != in_dim()) {
        throw ShapeError("Mlp::forward expects [batch," + std::to_string(in_dim()) + "], got " +
                         shape_str(x.shape()));
    }
    Tensor h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LinearLayer& l = layers[i];
        Tensor z = tape.matmul_nt(h, l.weight);
        z = tape.add(z, tape.broadcast(l.bias, z.shape()));
        if (i + 1 < layers.size()) {
            switch (activation) {
                case Activation::kTanh: z = tape.tanh(z); break;
                case Activation::kRelu: z = tape.relu(z); break;
                case Activation::kSoftplus: z = tape.softplus(z); break;
            }
        }
        h = z;
    }
    return h;
}

std::vector<Tensor> Mlp::parameters() const {
    std::vector<Tensor> out;
    out.reserve(layers.size() * 2);
    for (const LinearLayer& l : layers) {
        out.push_back(l.weight);
        out.push_back(l.bias);
    }
    return out;
}

std::vector<std::string> Mlp::parameter_names(const std::string& prefix) const {
    std::vector<std::string> out;
    out.reserve(layers.size() * 2);
    for (std::size_t i = 0; i < layers.size(); ++i) {
        out.push_back(prefix + ".l" + std::to_string(i) + ".weight");
        out.push_back(prefix + ".l" + std::to_string(i) + ".bias");
    }
    return out;
}

Mlp init_mlp(const std::vector<std::size_t>& dims, Activation activation, std::uint64_t seed) {
    if (dims.size() < 2) {
        throw ContractError("init_mlp needs at least [in, out] dims, got " +
                            std::to_string(dims.size()) + " entries");
    }
    for (std::size_t d : dims) {
        if (d == 0) throw ContractError("init_mlp dims must be positive");
    }
    Rng rng(seed);
    Mlp mlp;
    mlp.activation = activation;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const std::size_t fan_in = dims[i], fan_out = dims[i + 1];
        const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::vector<double> w(fan_out * fan_in);
        for (double& x : w) x = rng.uniform(-a, a);
        LinearLayer layer;
        layer.weight = Tensor::from_vector({fan_out, fan_in}, std::move(w)).track_grad();
        layer.bias = Tensor::zeros({fan_out}).track_grad();
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

void Adam::register_parameters(const std::vector<Tensor>& params,
                               const std::vector<std::string>& names) {
    if (params.size() != names.size()) {
        throw ContractError("Adam: parameter/name count mismatch");
    }
    std::unordered_set<const double*> seen;
    for (const Tensor& p : params_) seen.insert(p.data().data());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!seen.insert(params[i].data().data()).second) {
            throw ContractError("Adam: parameter '" + names[i] + "' registered twice");
        }
        if (!params[i].tracks_grad()) {
            throw ContractError("Adam: parameter '" + names[i] + "' does not track gradients");
        }
        params_.push_back(params[i]);
        names_.push_back(names[i]);
        m_.emplace_back(params[i].size(), 0.0);
        v_.emplace_back(params[i].size(), 0.0);
    }
}

void Adam::step() {
    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(config_.beta1, t);
    const double bc2 = 1.0 - std::pow(config_.beta2, t);
    for (std::size_t p = 0; p < params_.size(); ++p) {
        auto grad = params_[p].grad();
        for (double g : grad) {
            if (!std::isfinite(g)) {
                throw NumericError("non-finite gradient for parameter '" + names_[p] + "'");
            }
        }
        auto value = params_[p].data_mut();
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

bool clip_global_norm(std::vector<Tensor>& params, double max_norm) {
    double sq = 0.0;
    for (Tensor& p : params) {
        for (double g : p.grad()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return false;
    const double s = max_norm / norm;
    for (Tensor& p : params) {
        for (double& g : p.grad_mut()) g *= s;
    }
    return true;
}

}  // namespace fisherplane
