#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fisherplane/tensor.hpp"

namespace fisherplane {

enum class Activation { kTanh, kRelu, kSoftplus };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct LinearLayer {
    Tensor weight;  // [out, in]
    Tensor bias;    // [out]
};

// Plain fully connected stack; the activation sits between layers, the last
// layer output is raw.
struct Mlp {
    std::vector<LinearLayer> layers;
    Activation activation = Activation::kTanh;

    std::size_t depth() const { return layers.size(); }
    std::size_t in_dim() const;
    std::size_t out_dim() const;

    // x: [batch, in_dim] -> [batch, out_dim]
    Tensor forward(Tape& tape, const Tensor& x) const;

    std::vector<Tensor> parameters() const;
    std::vector<std::string> parameter_names(const std::string& prefix) const;
};

// Glorot-uniform weights, zero biases, deterministic in seed.
// dims lists layer widths input-first, e.g. {784, 300, 300, 40}.
Mlp init_mlp(const std::vector<std::size_t>& dims, Activation activation, std::uint64_t seed);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction over a fixed set of named parameters. Parameters
// may be registered exactly once; gradients are read from each tensor's grad
// buffer.
class Adam {
public:
    Adam() = default;
    explicit Adam(AdamConfig config) : config_(config) {}

    void register_parameters(const std::vector<Tensor>& params,
                             const std::vector<std::string>& names);
    // One update from the parameters' current gradients; increments the step
    // count. Throws NumericError naming the parameter on a non-finite grad.
    void step();

    std::size_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }
    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    const std::vector<std::string>& names() const { return names_; }
    // Serialization access (checkpointing).
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<std::vector<double>>& first_moments() const { return m_; }
    const std::vector<std::vector<double>>& second_moments() const { return v_; }
    void set_step_count(std::size_t t) { step_count_ = t; }

    void zero_grad();

private:
    AdamConfig config_;
    std::vector<Tensor> params_;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    std::size_t step_count_ = 0;
};

// Rescales gradients in place when their global L2 norm exceeds max_norm.
// Returns true when clipping fired.
bool clip_global_norm(std::vector<Tensor>& params, double max_norm);

}  // namespace fisherplane
