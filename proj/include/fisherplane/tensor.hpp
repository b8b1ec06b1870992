#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fisherplane/errors.hpp"

namespace fisherplane {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty unless grad-tracked
    bool track_grad = false;
};
}  // namespace detail

// Dense row-major tensor of 64-bit floats. A Tensor is a cheap handle onto
// shared storage; leaves created with track_grad accumulate gradients across
// backward passes until zero_grad().
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor constant(Shape shape, double fill);
    static Tensor scalar(double v);
    static Tensor from_vector(Shape shape, std::vector<double> data);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t size() const;
    std::size_t rank() const { return shape().size(); }
    // Extent helpers for the rank-2 case used throughout the models.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const;
    std::span<double> data_mut();
    bool tracks_grad() const;
    Tensor& track_grad();
    std::span<const double> grad() const;
    std::span<double> grad_mut();
    void zero_grad();

    double item() const;          // requires size() == 1
    double at(std::size_t i) const;
    double at(std::size_t r, std::size_t c) const;

    bool same_storage(const Tensor& other) const { return node_ == other.node_; }

private:
    std::shared_ptr<detail::TensorNode> node_;
    friend class Tape;
};

// Define-by-run gradient tape. Ops validate shapes, reject non-finite values
// at their boundaries, and record a backward rule; backward() replays the
// rules in reverse recording order. log and div clamp their argument /
// denominator at kClampEps instead of failing, and count every clamped
// element (exposed for run diagnostics).
class Tape {
public:
    static constexpr double kClampEps = 1e-12;

    Tape() = default;
    explicit Tape(bool recording) : recording_(recording) {}

    bool recording() const { return recording_; }
    std::size_t clamp_count() const { return clamp_count_; }

    // --- elementwise, shapes must match ---
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor div(const Tensor& a, const Tensor& b);

    // --- elementwise, unary ---
    Tensor neg(const Tensor& a);
    Tensor exp(const Tensor& a);
    Tensor log(const Tensor& a);
    Tensor square(const Tensor& a);
    Tensor sqrt(const Tensor& a);
    Tensor abs(const Tensor& a);  // subgradient at 0 is 0
    Tensor tanh(const Tensor& a);
    Tensor sigmoid(const Tensor& a);
    Tensor softplus(const Tensor& a);
    Tensor relu(const Tensor& a);
    Tensor clamp(const Tensor& a, double lo, double hi);
    Tensor scale(const Tensor& a, double c);
    Tensor add_scalar(const Tensor& a, double c);

    // --- structure ---
    // matmul: [m,k] x [k,n] -> [m,n].
    Tensor matmul(const Tensor& a, const Tensor& b);
    // matmul_nt: [m,k] x [n,k]^T -> [m,n]; the layout linear layers want.
    Tensor matmul_nt(const Tensor& a, const Tensor& b);
    Tensor reshape(const Tensor& a, Shape shape);
    // broadcast with numpy-style right alignment, ranks <= 2.
    Tensor broadcast(const Tensor& a, const Shape& target);
    Tensor concat_cols(const Tensor& a, const Tensor& b);
    Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);

    // --- reductions ---
    Tensor sum(const Tensor& a);       // -> scalar
    Tensor mean(const Tensor& a);      // -> scalar
    Tensor sum_cols(const Tensor& a);  // [n,c] -> [n]
    // [n,c] -> [n]: log sum_j exp(a[i,j]), stabilized by row-max subtraction.
    Tensor logsumexp_rows(const Tensor& a);

    // Seeds d(root)/d(root) = 1 and replays backward rules in reverse
    // recording order. Gradients of tensors produced by this tape are reset
    // first; leaf gradients accumulate.
    void backward(const Tensor& root);

private:
    struct Node {
        std::shared_ptr<detail::TensorNode> out;
        std::function<void()> backward;
    };

    Tensor make_output(Shape shape, std::vector<double> value, const char* op);
    void record(const Tensor& out, std::function<void()> backward_fn);

    std::vector<Node> nodes_;
    bool recording_ = true;
    std::size_t clamp_count_ = 0;
};

}  // namespace fisherplane
