#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fisherplane/errors.hpp"

namespace fisherplane {

// Diagonal Gaussian over d dimensions; sigma entries are standard deviations
// and must be strictly positive.
struct DiagGaussian {
    std::vector<double> mu;
    std::vector<double> sigma;

    std::size_t dim() const { return mu.size(); }
    void validate() const;
};

// One point in the Fisher-Shannon plane. product is normalized per dimension
// (N * trJ / d) so the Gaussian equality case reads 1 for every d.
struct InfoPoint {
    double entropy_power = 0.0;
    double fisher_trace = 0.0;
    double product = 0.0;
    std::size_t dim = 0;
};

// A 1-D density with explicit support for the quadrature estimators.
struct Density1D {
    std::function<double(double)> pdf;
    double support_lo = 0.0;
    double support_hi = 0.0;
    std::string name;
};

// Closed forms for diagonal Gaussians. Both are location invariant.
double gaussian_fisher_trace(const DiagGaussian& g);   // sum_d 1/sigma_d^2
double gaussian_entropy_power(const DiagGaussian& g);  // (prod sigma_d^2)^(1/d)
double gaussian_entropy(const DiagGaussian& g);        // 1/2 log((2 pi e)^d prod sigma_d^2)

// Composite-trapezoid estimate of int (f')^2 / f dx with a central-difference
// derivative. grid_step controls both the grid and the difference step.
double numeric_fisher_1d(const Density1D& f, double grid_step);
// Composite-trapezoid estimate of -int f log f dx, with 0 log 0 := 0.
double numeric_entropy_1d(const Density1D& f, double grid_step);
// Entropy power from the numeric entropy (d = 1).
double numeric_entropy_power_1d(const Density1D& f, double grid_step);
// N(f) * J(f) from the two numeric estimators; >= 1 up to quadrature error,
// with equality exactly for Gaussians.
double uncertainty_product(const Density1D& f, double grid_step);
// Mean and variance of the density by quadrature (Cramer-Rao checks).
double numeric_variance_1d(const Density1D& f, double grid_step);

// Averages per-example conditional quantities over a batch of posteriors:
// entropy_power = mean_i N(q_i), fisher_trace = mean_i trJ(q_i),
// product = entropy_power * fisher_trace / d.
InfoPoint fs_point_of_posterior(const std::vector<DiagGaussian>& batch);

// For a scalar Gaussian, (log trJ, -2H + log(2 pi e)); the two sides agree
// identically.
std::pair<double, double> conditional_entropy_fi_duality(const DiagGaussian& g);

// Fisher information of N(mu, sigma^2) computed two ways: non-parametric
// (differentiating the density in x) and parametric with respect to the
// location parameter. Returns (non_parametric, parametric).
std::pair<double, double> parametric_nonparametric_check(double sigma, double grid_step = 1e-3);

// Ready-made densities for the oracle suites.
Density1D gaussian_density(double mu, double sigma);
// Laplace with |x| smoothed as sqrt(x^2 + delta^2) so the FI integrand is
// differentiable at the origin.
Density1D laplace_density(double b, double smoothing = 1e-3);
Density1D uniform_density(double lo, double hi);
Density1D logistic_density(double s);
Density1D gaussian_mixture_density(double mu1, double s1, double mu2, double s2, double w1);

}  // namespace fisherplane
