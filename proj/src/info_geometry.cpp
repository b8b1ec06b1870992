#include "fisherplane/info_geometry.hpp"

#include <cmath>
#include <numbers>

namespace fisherplane {

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

// Composite trapezoid of g over [lo, hi] with approximately the given step.
template <class G>
double trapezoid(G&& g, double lo, double hi, double step) {
    if (!(step > 0.0)) throw ContractError("grid_step must be positive");
    if (!(hi > lo)) throw ContractError("empty integration support");
    const std::size_t n = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround((hi - lo) / step)));
    const double h = (hi - lo) / static_cast<double>(n);
    double acc = 0.5 * (g(lo) + g(hi));
    for (std::size_t i = 1; i < n; ++i) acc += g(lo + h * static_cast<double>(i));
    return acc * h;
}

double pdf_checked(const Density1D& f, double x) {
    const double v = f.pdf(x);
    if (v < -1e-12) {
        throw ContractError("density '" + f.name + "' evaluated negative at x=" + std::to_string(x));
    }
    return std::max(v, 0.0);
}

}  // namespace

void DiagGaussian::validate() const {
    if (mu.size() != sigma.size() || mu.empty()) {
        throw ContractError("DiagGaussian: mu/sigma dims disagree or empty");
    }
    for (double s : sigma) {
        if (!(s > 0.0) || !std::isfinite(s)) throw ContractError("DiagGaussian: sigma must be > 0");
    }
}

double gaussian_fisher_trace(const DiagGaussian& g) {
    g.validate();
    double tr = 0.0;
    for (double s : g.sigma) tr += 1.0 / (s * s);
    return tr;
}

double gaussian_entropy_power(const DiagGaussian& g) {
    g.validate();
    // (prod sigma^2)^(1/d) via logs to avoid under/overflow at large d.
    double log_acc = 0.0;
    for (double s : g.sigma) log_acc += 2.0 * std::log(s);
    return std::exp(log_acc / static_cast<double>(g.dim()));
}

double gaussian_entropy(const DiagGaussian& g) {
    g.validate();
    double acc = 0.0;
    for (double s : g.sigma) acc += std::log(s);
    return 0.5 * static_cast<double>(g.dim()) * std::log(kTwoPiE) + acc;
}

double numeric_fisher_1d(const Density1D& f, double grid_step) {
    const double h = grid_step;
    auto integrand = [&](double x) {
        const double fx = pdf_checked(f, x);
        if (fx < 1e-300) return 0.0;
        const double d = (pdf_checked(f, x + h) - pdf_checked(f, x - h)) / (2.0 * h);
        return d * d / fx;
    };
    return trapezoid(integrand, f.support_lo, f.support_hi, grid_step);
}

double numeric_entropy_1d(const Density1D& f, double grid_step) {
    auto integrand = [&](double x) {
        const double fx = pdf_checked(f, x);
        if (fx <= 0.0) return 0.0;  // 0 log 0 := 0
        return -fx * std::log(fx);
    };
    return trapezoid(integrand, f.support_lo, f.support_hi, grid_step);
}

double numeric_entropy_power_1d(const Density1D& f, double grid_step) {
    return std::exp(2.0 * numeric_entropy_1d(f, grid_step)) / kTwoPiE;
}

double uncertainty_product(const Density1D& f, double grid_step) {
    return numeric_entropy_power_1d(f, grid_step) * numeric_fisher_1d(f, grid_step);
}

double numeric_variance_1d(const Density1D& f, double grid_step) {
    const double mean = trapezoid([&](double x) { return x * pdf_checked(f, x); },
                                  f.support_lo, f.support_hi, grid_step);
    const double m2 = trapezoid([&](double x) { return x * x * pdf_checked(f, x); },
                                f.support_lo, f.support_hi, grid_step);
    return m2 - mean * mean;
}

InfoPoint fs_point_of_posterior(const std::vector<DiagGaussian>& batch) {
    if (batch.empty()) throw ContractError("fs_point_of_posterior: empty batch");
    const std::size_t d = batch.front().dim();
    double n_acc = 0.0;
    double j_acc = 0.0;
    for (const DiagGaussian& g : batch) {
        if (g.dim() != d) throw ContractError("fs_point_of_posterior: mixed dimensions in batch");
        n_acc += gaussian_entropy_power(g);
        j_acc += gaussian_fisher_trace(g);
    }
    InfoPoint p;
    p.dim = d;
    p.entropy_power = n_acc / static_cast<double>(batch.size());
    p.fisher_trace = j_acc / static_cast<double>(batch.size());
    p.product = p.entropy_power * p.fisher_trace / static_cast<double>(d);
    return p;
}

std::pair<double, double> conditional_entropy_fi_duality(const DiagGaussian& g) {
    g.validate();
    if (g.dim() != 1) {
        throw ContractError("conditional_entropy_fi_duality is stated per scalar dimension (d=1)");
    }
    const double log_j = std::log(gaussian_fisher_trace(g));
    const double rhs = -2.0 * gaussian_entropy(g) + std::log(kTwoPiE);
    return {log_j, rhs};
}

std::pair<double, double> parametric_nonparametric_check(double sigma, double grid_step) {
    if (!(sigma > 0.0)) throw ContractError("sigma must be positive");
    // Scale grid and difference step with sigma so accuracy is uniform in sigma.
    const double step = grid_step * sigma;
    const double h = step;
    Density1D f = gaussian_density(0.0, sigma);

    const double non_parametric = numeric_fisher_1d(f, step);

    // Parametric route: J_theta = int (d/dtheta p_theta(x))^2 / p_theta(x) dx
    // with p_theta(x) = N(x; theta, sigma^2), evaluated at theta = 0.
    auto p_theta = [&](double x, double theta) { return f.pdf(x - theta); };
    auto integrand = [&](double x) {
        const double px = p_theta(x, 0.0);
        if (px < 1e-300) return 0.0;
        const double d = (p_theta(x, h) - p_theta(x, -h)) / (2.0 * h);
        return d * d / px;
    };
    const double parametric = trapezoid(integrand, f.support_lo, f.support_hi, step);
    return {non_parametric, parametric};
}

Density1D gaussian_density(double mu, double sigma) {
    if (!(sigma > 0.0)) throw ContractError("gaussian_density: sigma must be > 0");
    Density1D d;
    const double inv = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    d.pdf = [mu, sigma, inv](double x) {
        const double z = (x - mu) / sigma;
        return inv * std::exp(-0.5 * z * z);
    };
    d.support_lo = mu - 10.0 * sigma;
    d.support_hi = mu + 10.0 * sigma;
    d.name = "gaussian(mu=" + std::to_string(mu) + ",sigma=" + std::to_string(sigma) + ")";
    return d;
}

Density1D laplace_density(double b, double smoothing) {
    if (!(b > 0.0)) throw ContractError("laplace_density: scale must be > 0");
    Density1D d;
    const double delta = smoothing;
    auto unnormalized = [b, delta](double x) {
        const double ax = std::sqrt(x * x + delta * delta);
        return std::exp(-ax / b) / (2.0 * b);
    };
    // The smoothing removes a sliver of mass near the origin; renormalize once
    // so the density invariant (mass 1 within 1e-6) holds.
    const double z = trapezoid(unnormalized, -15.0 * b, 15.0 * b, 1e-4 * b);
    d.pdf = [unnormalized, z](double x) { return unnormalized(x) / z; };
    d.support_lo = -15.0 * b;
    d.support_hi = 15.0 * b;
    d.name = "laplace(b=" + std::to_string(b) + ")";
    return d;
}

Density1D uniform_density(double lo, double hi) {
    if (!(hi > lo)) throw ContractError("uniform_density: hi must exceed lo");
    Density1D d;
    const double v = 1.0 / (hi - lo);
    d.pdf = [lo, hi, v](double x) { return (x >= lo && x <= hi) ? v : 0.0; };
    d.support_lo = lo;
    d.support_hi = hi;
    d.name = "uniform(" + std::to_string(lo) + "," + std::to_string(hi) + ")";
    return d;
}

Density1D logistic_density(double s) {
    if (!(s > 0.0)) throw ContractError("logistic_density: scale must be > 0");
    Density1D d;
    d.pdf = [s](double x) {
        const double e = std::exp(-std::fabs(x) / s);
        const double denom = (1.0 + e);
        return e / (s * denom * denom);
    };
    d.support_lo = -15.0 * s;
    d.support_hi = 15.0 * s;
    d.name = "logistic(s=" + std::to_string(s) + ")";
    return d;
}

Density1D gaussian_mixture_density(double mu1, double s1, double mu2, double s2, double w1) {
    if (!(w1 >= 0.0 && w1 <= 1.0)) throw ContractError("mixture weight must be in [0,1]");
    Density1D g1 = gaussian_density(mu1, s1);
    Density1D g2 = gaussian_density(mu2, s2);
    Density1D d;
    d.pdf = [g1, g2, w1](double x) { return w1 * g1.pdf(x) + (1.0 - w1) * g2.pdf(x); };
    d.support_lo = std::min(g1.support_lo, g2.support_lo);
    d.support_hi = std::max(g1.support_hi, g2.support_hi);
    d.name = "mixture";
    return d;
}

}  // namespace fisherplane
