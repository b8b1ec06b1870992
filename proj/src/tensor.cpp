#include "fisherplane/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fisherplane {

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

namespace {

using detail::TensorNode;

void validate_shape(const Shape& shape) {
    for (std::size_t e : shape) {
        if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    }
}

void check_finite(std::span<const double> v, const char* op, const char* role) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string("non-finite ") + role + " value in op '" + op + "'");
        }
    }
}

void check_input(const Tensor& t, const char* op) {
    if (!t.defined()) throw ContractError(std::string("undefined tensor passed to op '") + op + "'");
    check_finite(t.data(), op, "input");
}

// Accumulate into a node's grad buffer if it has one (tracked leaf or tape output).
void accum(TensorNode* n, std::span<const double> g) {
    if (n->grad.empty()) return;
    for (std::size_t i = 0; i < g.size(); ++i) n->grad[i] += g[i];
}

}  // namespace

// ---------------------------------------------------------------- Tensor ---

Tensor Tensor::zeros(Shape shape) { return constant(std::move(shape), 0.0); }

Tensor Tensor::constant(Shape shape, double fill) {
    validate_shape(shape);
    Tensor t;
    t.node_ = std::make_shared<TensorNode>();
    t.node_->value.assign(shape_numel(shape), fill);
    t.node_->shape = std::move(shape);
    return t;
}

Tensor Tensor::scalar(double v) { return from_vector({}, {v}); }

Tensor Tensor::from_vector(Shape shape, std::vector<double> data) {
    validate_shape(shape);
    if (shape_numel(shape) != data.size()) {
        throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                         shape_str(shape));
    }
    check_finite(data, "from_vector", "input");
    Tensor t;
    t.node_ = std::make_shared<TensorNode>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(data);
    return t;
}

const Shape& Tensor::shape() const {
    if (!node_) throw ContractError("shape() on undefined tensor");
    return node_->shape;
}

std::size_t Tensor::size() const { return node_ ? node_->value.size() : 0; }

std::size_t Tensor::rows() const {
    const Shape& s = shape();
    if (s.empty()) throw ShapeError("rows() on rank-0 tensor");
    return s[0];
}

std::size_t Tensor::cols() const {
    const Shape& s = shape();
    if (s.size() != 2) throw ShapeError("cols() expects rank-2 tensor, got " + shape_str(s));
    return s[1];
}

std::span<const double> Tensor::data() const {
    if (!node_) throw ContractError("data() on undefined tensor");
    return node_->value;
}

std::span<double> Tensor::data_mut() {
    if (!node_) throw ContractError("data_mut() on undefined tensor");
    return node_->value;
}

bool Tensor::tracks_grad() const { return node_ && node_->track_grad; }

Tensor& Tensor::track_grad() {
    if (!node_) throw ContractError("track_grad() on undefined tensor");
    node_->track_grad = true;
    if (node_->grad.size() != node_->value.size()) node_->grad.assign(node_->value.size(), 0.0);
    return *this;
}

std::span<const double> Tensor::grad() const {
    if (!node_ || node_->grad.empty()) throw ContractError("grad() on tensor without gradient");
    return node_->grad;
}

std::span<double> Tensor::grad_mut() {
    if (!node_ || node_->grad.empty()) throw ContractError("grad_mut() on tensor without gradient");
    return node_->grad;
}

void Tensor::zero_grad() {
    if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() requires a scalar, got shape " + shape_str(shape()));
    return node_->value[0];
}

double Tensor::at(std::size_t i) const {
    if (i >= size()) throw ShapeError("index out of range");
    return node_->value[i];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    const Shape& s = shape();
    if (s.size() != 2 || r >= s[0] || c >= s[1]) throw ShapeError("index out of range");
    return node_->value[r * s[1] + c];
}

// ------------------------------------------------------------------ Tape ---

Tensor Tape::make_output(Shape shape, std::vector<double> value, const char* op) {
    validate_shape(shape);
    check_finite(value, op, "output");
    Tensor t;
    t.node_ = std::make_shared<TensorNode>();
    t.node_->shape = std::move(shape);
    t.node_->value = std::move(value);
    if (recording_) t.node_->grad.assign(t.node_->value.size(), 0.0);
    return t;
}

void Tape::record(const Tensor& out, std::function<void()> backward_fn) {
    if (!recording_) return;
    nodes_.push_back(Node{out.node_, std::move(backward_fn)});
}

void Tape::backward(const Tensor& root) {
    if (!root.defined() || root.size() != 1) {
        throw ContractError("backward() root must be a scalar");
    }
    const bool on_tape = std::any_of(nodes_.begin(), nodes_.end(),
                                     [&](const Node& n) { return n.out == root.node_; });
    if (!on_tape) throw ContractError("backward() root was not produced on this tape");

    for (Node& n : nodes_) std::fill(n.out->grad.begin(), n.out->grad.end(), 0.0);
    root.node_->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

// --- elementwise binary ---

namespace {
void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string("op '") + op + "': shape mismatch " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
    }
}
}  // namespace

Tensor Tape::add(const Tensor& a, const Tensor& b) {
    check_input(a, "add");
    check_input(b, "add");
    require_same_shape(a, b, "add");
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    Tensor o = make_output(a.shape(), std::move(out), "add");
    record(o, [an = a.node_, bn = b.node_, on = o.node_] {
        accum(an.get(), on->grad);
        accum(bn.get(), on->grad);
    });
    return o;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
    check_input(a, "sub");
    check_input(b, "sub");
    require_same_shape(a, b, "sub");
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    Tensor o = make_output(a.shape(), std::move(out), "sub");
    record(o, [an = a.node_, bn = b.node_, on = o.node_] {
        accum(an.get(), on->grad);
        if (!bn->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] -= on->grad[i];
        }
    });
    return o;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
    check_input(a, "mul");
    check_input(b, "mul");
    require_same_shape(a, b, "mul");
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    Tensor o = make_output(a.shape(), std::move(out), "mul");
    record(o, [an = a.node_, bn = b.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += bn->value[i] * on->grad[i];
        }
        if (!bn->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) bn->grad[i] += an->value[i] * on->grad[i];
        }
    });
    return o;
}

Tensor Tape::div(const Tensor& a, const Tensor& b) {
    check_input(a, "div");
    check_input(b, "div");
    require_same_shape(a, b, "div");
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double d = bv[i];
        if (std::fabs(d) < kClampEps) {
            d = (d < 0.0) ? -kClampEps : kClampEps;
            ++clamp_count_;
        }
        out[i] = av[i] / d;
    }
    Tensor o = make_output(a.shape(), std::move(out), "div");
    record(o, [an = a.node_, bn = b.node_, on = o.node_] {
        for (std::size_t i = 0; i < on->grad.size(); ++i) {
            double d = bn->value[i];
            if (std::fabs(d) < kClampEps) d = (d < 0.0) ? -kClampEps : kClampEps;
            const double g = on->grad[i];
            if (!an->grad.empty()) an->grad[i] += g / d;
            if (!bn->grad.empty()) bn->grad[i] += -an->value[i] / (d * d) * g;
        }
    });
    return o;
}

// --- elementwise unary ---

Tensor Tape::neg(const Tensor& a) {
    check_input(a, "neg");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -av[i];
    Tensor o = make_output(a.shape(), std::move(out), "neg");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) an->grad[i] -= on->grad[i];
        }
    });
    return o;
}

Tensor Tape::exp(const Tensor& a) {
    check_input(a, "exp");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
    Tensor o = make_output(a.shape(), std::move(out), "exp");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += on->value[i] * on->grad[i];
        }
    });
    return o;
}

Tensor Tape::log(const Tensor& a) {
    check_input(a, "log");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double x = av[i];
        if (x < kClampEps) {
            x = kClampEps;
            ++clamp_count_;
        }
        out[i] = std::log(x);
    }
    Tensor o = make_output(a.shape(), std::move(out), "log");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                const double x = std::max(an->value[i], kClampEps);
                an->grad[i] += on->grad[i] / x;
            }
        }
    });
    return o;
}

Tensor Tape::square(const Tensor& a) {
    check_input(a, "square");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * av[i];
    Tensor o = make_output(a.shape(), std::move(out), "square");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i)
                an->grad[i] += 2.0 * an->value[i] * on->grad[i];
        }
    });
    return o;
}

Tensor Tape::sqrt(const Tensor& a) {
    check_input(a, "sqrt");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(av[i]);
    Tensor o = make_output(a.shape(), std::move(out), "sqrt");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i)
                an->grad[i] += 0.5 / on->value[i] * on->grad[i];
        }
    });
    return o;
}

Tensor Tape::abs(const Tensor& a) {
    check_input(a, "abs");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(av[i]);
    Tensor o = make_output(a.shape(), std::move(out), "abs");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                const double x = an->value[i];
                const double s = (x > 0.0) ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                an->grad[i] += s * on->grad[i];
            }
        }
    });
    return o;
}

Tensor Tape::tanh(const Tensor& a) {
    check_input(a, "tanh");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(av[i]);
    Tensor o = make_output(a.shape(), std::move(out), "tanh");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                const double t = on->value[i];
                an->grad[i] += (1.0 - t * t) * on->grad[i];
            }
        }
    });
    return o;
}

Tensor Tape::sigmoid(const Tensor& a) {
    check_input(a, "sigmoid");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = av[i];
        if (x >= 0.0) {
            out[i] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            out[i] = e / (1.0 + e);
        }
    }
    Tensor o = make_output(a.shape(), std::move(out), "sigmoid");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                const double s = on->value[i];
                an->grad[i] += s * (1.0 - s) * on->grad[i];
            }
        }
    });
    return o;
}

Tensor Tape::softplus(const Tensor& a) {
    check_input(a, "softplus");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = av[i];
        out[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    }
    Tensor o = make_output(a.shape(), std::move(out), "softplus");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                const double x = an->value[i];
                const double s = (x >= 0.0) ? 1.0 / (1.0 + std::exp(-x))
                                            : std::exp(x) / (1.0 + std::exp(x));
                an->grad[i] += s * on->grad[i];
            }
        }
    });
    return o;
}

Tensor Tape::relu(const Tensor& a) {
    check_input(a, "relu");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(av[i], 0.0);
    Tensor o = make_output(a.shape(), std::move(out), "relu");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                if (an->value[i] > 0.0) an->grad[i] += on->grad[i];
            }
        }
    });
    return o;
}

Tensor Tape::clamp(const Tensor& a, double lo, double hi) {
    check_input(a, "clamp");
    if (!(lo <= hi)) throw ContractError("clamp requires lo <= hi");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(av[i], lo), hi);
    Tensor o = make_output(a.shape(), std::move(out), "clamp");
    record(o, [an = a.node_, on = o.node_, lo, hi] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) {
                const double x = an->value[i];
                if (x >= lo && x <= hi) an->grad[i] += on->grad[i];
            }
        }
    });
    return o;
}

Tensor Tape::scale(const Tensor& a, double c) {
    check_input(a, "scale");
    if (!std::isfinite(c)) throw NumericError("non-finite input value in op 'scale'");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * av[i];
    Tensor o = make_output(a.shape(), std::move(out), "scale");
    record(o, [an = a.node_, on = o.node_, c] {
        if (!an->grad.empty()) {
            for (std::size_t i = 0; i < on->grad.size(); ++i) an->grad[i] += c * on->grad[i];
        }
    });
    return o;
}

Tensor Tape::add_scalar(const Tensor& a, double c) {
    check_input(a, "add_scalar");
    if (!std::isfinite(c)) throw NumericError("non-finite input value in op 'add_scalar'");
    const auto av = a.data();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + c;
    Tensor o = make_output(a.shape(), std::move(out), "add_scalar");
    record(o, [an = a.node_, on = o.node_] { accum(an.get(), on->grad); });
    return o;
}

// --- structure ---

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
    check_input(a, "matmul");
    check_input(b, "matmul");
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double* orow = out.data() + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double av = ad[i * k + kk];
            const double* brow = bd + kk * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    Tensor o = make_output({m, n}, std::move(out), "matmul");
    record(o, [an = a.node_, bn = b.node_, on = o.node_, m, k, n] {
        const double* gd = on->grad.data();
        if (!an->grad.empty()) {
            // dA[i,kk] = sum_j G[i,j] * B[kk,j]
            const double* bd2 = bn->value.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = gd + i * n;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double* brow = bd2 + kk * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                    an->grad[i * k + kk] += s;
                }
            }
        }
        if (!bn->grad.empty()) {
            // dB[kk,j] = sum_i A[i,kk] * G[i,j]
            const double* ad2 = an->value.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = gd + i * n;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double av = ad2[i * k + kk];
                    double* brow = bn->grad.data() + kk * n;
                    for (std::size_t j = 0; j < n; ++j) brow[j] += av * grow[j];
                }
            }
        }
    });
    return o;
}

Tensor Tape::matmul_nt(const Tensor& a, const Tensor& b) {
    check_input(a, "matmul_nt");
    check_input(b, "matmul_nt");
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[1]) {
        throw ShapeError("matmul_nt: incompatible shapes " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()) + "^T");
    }
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = ad + i * k;
        for (std::size_t j = 0; j < n; ++j) {
            const double* brow = bd + j * k;
            double s = 0.0;
            for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
            out[i * n + j] = s;
        }
    }
    Tensor o = make_output({m, n}, std::move(out), "matmul_nt");
    record(o, [an = a.node_, bn = b.node_, on = o.node_, m, k, n] {
        const double* gd = on->grad.data();
        if (!an->grad.empty()) {
            // dA = G * B : [m,n] x [n,k]
            const double* bd2 = bn->value.data();
            for (std::size_t i = 0; i < m; ++i) {
                double* arow = an->grad.data() + i * k;
                const double* grow = gd + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = grow[j];
                    const double* brow = bd2 + j * k;
                    for (std::size_t kk = 0; kk < k; ++kk) arow[kk] += g * brow[kk];
                }
            }
        }
        if (!bn->grad.empty()) {
            // dB[j,:] = sum_i G[i,j] * A[i,:]
            const double* ad2 = an->value.data();
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = ad2 + i * k;
                const double* grow = gd + i * n;
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = grow[j];
                    double* brow = bn->grad.data() + j * k;
                    for (std::size_t kk = 0; kk < k; ++kk) brow[kk] += g * arow[kk];
                }
            }
        }
    });
    return o;
}

Tensor Tape::reshape(const Tensor& a, Shape shape) {
    check_input(a, "reshape");
    if (shape_numel(shape) != a.size()) {
        throw ShapeError("reshape: size mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    Tensor o = make_output(std::move(shape), std::move(out), "reshape");
    record(o, [an = a.node_, on = o.node_] { accum(an.get(), on->grad); });
    return o;
}

namespace {
// Right-aligned 2-D normalization: pad leading extents with 1.
void norm2d(const Shape& s, std::size_t& r, std::size_t& c) {
    if (s.size() > 2) throw ShapeError("broadcast supports ranks <= 2, got " + shape_str(s));
    r = (s.size() == 2) ? s[0] : 1;
    c = s.empty() ? 1 : s.back();
}
}  // namespace

Tensor Tape::broadcast(const Tensor& a, const Shape& target) {
    check_input(a, "broadcast");
    std::size_t ar, ac, tr, tc;
    norm2d(a.shape(), ar, ac);
    norm2d(target, tr, tc);
    if (!((ar == tr || ar == 1) && (ac == tc || ac == 1))) {
        throw ShapeError("broadcast: cannot expand " + shape_str(a.shape()) + " to " +
                         shape_str(target));
    }
    const auto av = a.data();
    std::vector<double> out(tr * tc);
    for (std::size_t i = 0; i < tr; ++i) {
        const std::size_t si = (ar == 1) ? 0 : i;
        for (std::size_t j = 0; j < tc; ++j) {
            const std::size_t sj = (ac == 1) ? 0 : j;
            out[i * tc + j] = av[si * ac + sj];
        }
    }
    Tensor o = make_output(target, std::move(out), "broadcast");
    record(o, [an = a.node_, on = o.node_, ar, ac, tr, tc] {
        if (an->grad.empty()) return;
        for (std::size_t i = 0; i < tr; ++i) {
            const std::size_t si = (ar == 1) ? 0 : i;
            for (std::size_t j = 0; j < tc; ++j) {
                const std::size_t sj = (ac == 1) ? 0 : j;
                an->grad[si * ac + sj] += on->grad[i * tc + j];
            }
        }
    });
    return o;
}

Tensor Tape::concat_cols(const Tensor& a, const Tensor& b) {
    check_input(a, "concat");
    check_input(b, "concat");
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[0] != b.shape()[0]) {
        throw ShapeError("concat: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    const std::size_t n = a.shape()[0], ca = a.shape()[1], cb = b.shape()[1];
    const auto av = a.data();
    const auto bv = b.data();
    std::vector<double> out(n * (ca + cb));
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(av.data() + i * ca, ca, out.data() + i * (ca + cb));
        std::copy_n(bv.data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
    }
    Tensor o = make_output({n, ca + cb}, std::move(out), "concat");
    record(o, [an = a.node_, bn = b.node_, on = o.node_, n, ca, cb] {
        for (std::size_t i = 0; i < n; ++i) {
            const double* grow = on->grad.data() + i * (ca + cb);
            if (!an->grad.empty()) {
                for (std::size_t j = 0; j < ca; ++j) an->grad[i * ca + j] += grow[j];
            }
            if (!bn->grad.empty()) {
                for (std::size_t j = 0; j < cb; ++j) bn->grad[i * cb + j] += grow[ca + j];
            }
        }
    });
    return o;
}

Tensor Tape::slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
    check_input(a, "slice_cols");
    if (a.rank() != 2 || start + len > a.shape()[1] || len == 0) {
        throw ShapeError("slice_cols: bad range [" + std::to_string(start) + "," +
                         std::to_string(start + len) + ") for shape " + shape_str(a.shape()));
    }
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    const auto av = a.data();
    std::vector<double> out(n * len);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(av.data() + i * c + start, len, out.data() + i * len);
    }
    Tensor o = make_output({n, len}, std::move(out), "slice_cols");
    record(o, [an = a.node_, on = o.node_, n, c, start, len] {
        if (an->grad.empty()) return;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < len; ++j) an->grad[i * c + start + j] += on->grad[i * len + j];
        }
    });
    return o;
}

// --- reductions ---

Tensor Tape::sum(const Tensor& a) {
    check_input(a, "sum");
    double s = 0.0;
    for (double v : a.data()) s += v;
    Tensor o = make_output({}, {s}, "sum");
    record(o, [an = a.node_, on = o.node_] {
        if (!an->grad.empty()) {
            const double g = on->grad[0];
            for (double& gi : an->grad) gi += g;
        }
    });
    return o;
}

Tensor Tape::mean(const Tensor& a) {
    check_input(a, "mean");
    double s = 0.0;
    for (double v : a.data()) s += v;
    const double inv = 1.0 / static_cast<double>(a.size());
    Tensor o = make_output({}, {s * inv}, "mean");
    record(o, [an = a.node_, on = o.node_, inv] {
        if (!an->grad.empty()) {
            const double g = on->grad[0] * inv;
            for (double& gi : an->grad) gi += g;
        }
    });
    return o;
}

Tensor Tape::sum_cols(const Tensor& a) {
    check_input(a, "sum_cols");
    if (a.rank() != 2) throw ShapeError("sum_cols expects rank-2 tensor, got " + shape_str(a.shape()));
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    const auto av = a.data();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = av.data() + i * c;
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += row[j];
        out[i] = s;
    }
    Tensor o = make_output({n}, std::move(out), "sum_cols");
    record(o, [an = a.node_, on = o.node_, n, c] {
        if (an->grad.empty()) return;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = on->grad[i];
            double* row = an->grad.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) row[j] += g;
        }
    });
    return o;
}

Tensor Tape::logsumexp_rows(const Tensor& a) {
    check_input(a, "logsumexp_rows");
    if (a.rank() != 2) {
        throw ShapeError("logsumexp_rows expects rank-2 tensor, got " + shape_str(a.shape()));
    }
    const std::size_t n = a.shape()[0], c = a.shape()[1];
    const auto av = a.data();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = av.data() + i * c;
        double m = row[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, row[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - m);
        out[i] = m + std::log(s);
    }
    Tensor o = make_output({n}, std::move(out), "logsumexp_rows");
    record(o, [an = a.node_, on = o.node_, n, c] {
        if (an->grad.empty()) return;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = on->grad[i];
            const double lse = on->value[i];
            const double* row = an->value.data() + i * c;
            double* grow = an->grad.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) grow[j] += g * std::exp(row[j] - lse);
        }
    });
    return o;
}

}  // namespace fisherplane
