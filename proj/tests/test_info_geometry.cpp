#include <cmath>
#include <numbers>

#include <doctest.h>

#include "fisherplane/info_geometry.hpp"
#include "fisherplane/rng.hpp"
#include "test_util.hpp"

using namespace fisherplane;

namespace {

constexpr double kTwoPiE = 2.0 * std::numbers::pi * std::numbers::e;

// Monte-Carlo differential entropy: mean of -log f over samples from f.
double mc_gaussian_entropy(double mu, double sigma, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    const Density1D f = gaussian_density(mu, sigma);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += -std::log(f.pdf(mu + sigma * rng.normal()));
    return acc / static_cast<double>(n);
}

}  // namespace

TEST_CASE("gaussian_fisher_trace closed form vs quadrature oracle") {
    CHECK(gaussian_fisher_trace({{0.0}, {1.0}}) == 1.0);

    // sigma = 0.5: quadrature of the defining integral gives the same 4.0
    const double closed = gaussian_fisher_trace({{0.0}, {0.5}});
    const double quad = numeric_fisher_1d(gaussian_density(0.0, 0.5), 1e-3 * 0.5);
    CHECK(closed == doctest::Approx(4.0));
    CHECK(quad == doctest::Approx(closed).epsilon(1e-4));

    // d = 2: trace is the sum of per-dimension quadratures
    const double closed2 = gaussian_fisher_trace({{0.0, 0.0}, {1.0, 0.5}});
    const double quad2 = numeric_fisher_1d(gaussian_density(0.0, 1.0), 1e-3) +
                         numeric_fisher_1d(gaussian_density(0.0, 0.5), 5e-4);
    CHECK(closed2 == doctest::Approx(5.0));
    CHECK(quad2 == doctest::Approx(closed2).epsilon(1e-4));
}

TEST_CASE("gaussian_entropy_power closed form vs Monte-Carlo entropy oracle") {
    CHECK(gaussian_entropy_power({{0.0}, {1.0}}) == doctest::Approx(1.0));

    // sigma = 2: 10^6 samples of -log f, then N = exp(2H)/(2 pi e)
    const double h = mc_gaussian_entropy(0.3, 2.0, 1000000, 99);
    const double n_mc = std::exp(2.0 * h) / kTwoPiE;
    CHECK(gaussian_entropy_power({{0.3}, {2.0}}) == doctest::Approx(4.0));
    CHECK(n_mc == doctest::Approx(4.0).epsilon(5e-3));

    // d = 2, sigma = [1,4]: product formula vs per-dimension MC entropies
    const double h1 = mc_gaussian_entropy(0.0, 1.0, 1000000, 7);
    const double h2 = mc_gaussian_entropy(0.0, 4.0, 1000000, 8);
    const double n2_mc = std::exp(h1 + h2) / kTwoPiE;  // exp(2 * (h1+h2)/2) / 2 pi e
    CHECK(gaussian_entropy_power({{0.0, 0.0}, {1.0, 4.0}}) == doctest::Approx(4.0));
    CHECK(n2_mc == doctest::Approx(4.0).epsilon(5e-3));
}

TEST_CASE("numeric_fisher_1d examples") {
    CHECK(numeric_fisher_1d(gaussian_density(0.0, 1.0), 1e-3) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(numeric_fisher_1d(gaussian_density(0.0, 0.5), 5e-4) == doctest::Approx(4.0).epsilon(2.5e-3));
    // Laplace b=1 smoothed at the origin: analytic FI of the true density is 1/b^2
    CHECK(numeric_fisher_1d(laplace_density(1.0), 1e-3) == doctest::Approx(1.0).epsilon(5e-2));
}

TEST_CASE("numeric_fisher_1d rejects negative densities") {
    Density1D bad;
    bad.pdf = [](double x) { return x; };
    bad.support_lo = -1.0;
    bad.support_hi = 1.0;
    bad.name = "bad";
    CHECK_THROWS_AS(numeric_fisher_1d(bad, 1e-2), ContractError);
}

TEST_CASE("numeric_entropy_1d examples") {
    const double gauss_h = 0.5 * std::log(kTwoPiE);
    CHECK(numeric_entropy_1d(gaussian_density(0.0, 1.0), 1e-3) ==
          doctest::Approx(gauss_h).epsilon(1e-3));
    CHECK(numeric_entropy_1d(uniform_density(0.0, 1.0), 1e-3) == doctest::Approx(0.0).epsilon(1e-6));
    // exact (unsmoothed) Laplace entropy is 1 + log 2; the default smoothing
    // only perturbs a +-1e-3 neighborhood of the origin
    CHECK(numeric_entropy_1d(laplace_density(1.0), 1e-3) ==
          doctest::Approx(1.0 + std::log(2.0)).epsilon(1e-3));
}

TEST_CASE("uncertainty_product: gaussian equality, laplace 2e/pi, mixtures above 1") {
    CHECK(uncertainty_product(gaussian_density(0.0, 1.0), 1e-3) ==
          doctest::Approx(1.0).epsilon(1e-2));
    CHECK(uncertainty_product(gaussian_density(-1.0, 0.7), 7e-4) ==
          doctest::Approx(1.0).epsilon(1e-2));
    const double want = 2.0 * std::numbers::e / std::numbers::pi;
    CHECK(uncertainty_product(laplace_density(1.0), 1e-3) == doctest::Approx(want).epsilon(3e-2));
    CHECK(uncertainty_product(gaussian_mixture_density(-2.0, 1.0, 2.0, 1.0, 0.5), 1e-3) > 1.0);
}

TEST_CASE("fs_point_of_posterior examples") {
    {
        const DiagGaussian g{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
        const InfoPoint p = fs_point_of_posterior({g, g});
        CHECK(p.entropy_power == doctest::Approx(1.0));
        CHECK(p.fisher_trace == doctest::Approx(3.0));
        CHECK(p.product == doctest::Approx(1.0));
        CHECK(p.dim == 3);
    }
    {
        const InfoPoint p = fs_point_of_posterior({{{0.0}, {0.5}}, {{0.0}, {2.0}}});
        CHECK(p.entropy_power == doctest::Approx((0.25 + 4.0) / 2.0));
        CHECK(p.fisher_trace == doctest::Approx((4.0 + 0.25) / 2.0));
    }
    {
        const InfoPoint p = fs_point_of_posterior({{{1.0, -1.0}, {1.0, 1.0}}});
        CHECK(p.product == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(fs_point_of_posterior({}), ContractError);
}

TEST_CASE("conditional entropy / Fisher information duality") {
    {
        const auto [lhs, rhs] = conditional_entropy_fi_duality({{0.0}, {1.0}});
        CHECK(lhs == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(rhs == doctest::Approx(0.0).epsilon(1e-12));
    }
    {
        const auto [lhs, rhs] = conditional_entropy_fi_duality({{0.5}, {2.0}});
        CHECK(lhs == doctest::Approx(-std::log(4.0)));
        CHECK(rhs == doctest::Approx(-std::log(4.0)));
        CHECK(std::fabs(lhs - rhs) < 1e-9);
    }
    {
        const auto [lhs, rhs] = conditional_entropy_fi_duality({{0.0}, {0.1}});
        CHECK(lhs == doctest::Approx(std::log(100.0)));
        CHECK(std::fabs(lhs - rhs) < 1e-9);
    }
    CHECK_THROWS_AS(conditional_entropy_fi_duality({{0.0, 0.0}, {1.0, 1.0}}), ContractError);
}

TEST_CASE("parametric and non-parametric Fisher information agree") {
    {
        const auto [np, par] = parametric_nonparametric_check(1.0);
        CHECK(np == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(par == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(std::fabs(np - par) / np < 1e-6);
    }
    {
        const auto [np, par] = parametric_nonparametric_check(3.0);
        CHECK(std::fabs(np - 1.0 / 9.0) < 1e-6);
        CHECK(std::fabs(par - 1.0 / 9.0) < 1e-6);
    }
    {
        const auto [np, par] = parametric_nonparametric_check(0.2);
        CHECK(std::fabs(np - 25.0) < 1e-4);
        CHECK(std::fabs(par - 25.0) < 1e-4);
    }
}

TEST_CASE("product >= 1 - 1e-9 over random posteriors, equality iff isotropic") {
    Rng rng(2024);
    for (int i = 0; i < 500; ++i) {
        const std::size_t d = 1 + rng.next_u64() % 8;
        DiagGaussian g;
        g.mu.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) g.mu[j] = rng.uniform(-3.0, 3.0);
        g.sigma.assign(d, rng.uniform(0.05, 20.0));
        const double k_iso = fs_point_of_posterior({g}).product;
        CHECK(std::fabs(k_iso - 1.0) <= 1e-9);  // AM-GM equality case

        if (d >= 2) {
            for (std::size_t j = 0; j < d; ++j) g.sigma[j] = rng.uniform(0.05, 20.0);
            // force a material spread so the AM-GM gap is visible
            g.sigma[0] = 0.05;
            g.sigma[1] = 5.0;
            const double k_gen = fs_point_of_posterior({g}).product;
            CHECK(k_gen >= 1.0 - 1e-9);
            CHECK(k_gen - 1.0 > 1e-9);
        }
    }
}

TEST_CASE("cramer-rao: variance * FI >= 1 over the 1-D family, equality for gaussians") {
    const std::vector<Density1D> family = {
        gaussian_density(0.0, 0.5), gaussian_density(1.0, 1.0), gaussian_density(0.0, 2.0),
        laplace_density(1.0), logistic_density(1.0),
        gaussian_mixture_density(-2.0, 1.0, 2.0, 1.0, 0.5)};
    for (const Density1D& f : family) {
        const double prod = numeric_variance_1d(f, 1e-3) * numeric_fisher_1d(f, 1e-3);
        INFO(f.name);
        CHECK(prod >= 1.0 - 1e-2);
    }
    for (double s : {0.5, 1.0, 2.0}) {
        const double prod = numeric_variance_1d(gaussian_density(0.0, s), 1e-3 * s) *
                            numeric_fisher_1d(gaussian_density(0.0, s), 1e-3 * s);
        CHECK(prod == doctest::Approx(1.0).epsilon(1e-2));
    }
    // the logistic case sits just above the bound: var*J = pi^2/9
    const double logi = numeric_variance_1d(logistic_density(1.0), 1e-3) *
                        numeric_fisher_1d(logistic_density(1.0), 1e-3);
    CHECK(logi == doctest::Approx(std::numbers::pi * std::numbers::pi / 9.0).epsilon(1e-2));
}

TEST_CASE("halving the grid step improves the numeric estimators by at least 2x") {
    for (double s : {1.0, 0.5}) {
        const Density1D g = gaussian_density(0.0, s);
        const double closed_j = 1.0 / (s * s);
        const double ej1 = std::fabs(numeric_fisher_1d(g, 0.2 * s) - closed_j);
        const double ej2 = std::fabs(numeric_fisher_1d(g, 0.1 * s) - closed_j);
        CHECK(ej1 / ej2 >= 2.0);

        const double closed_h = 0.5 * std::log(kTwoPiE * s * s);
        const double eh1 = std::fabs(numeric_entropy_1d(g, 1.0 * s) - closed_h);
        const double eh2 = std::fabs(numeric_entropy_1d(g, 0.5 * s) - closed_h);
        CHECK(eh1 / eh2 >= 2.0);
    }
}

TEST_CASE("closed forms are invariant to the location parameter") {
    const DiagGaussian a{{0.0, 0.0}, {0.7, 1.3}};
    const DiagGaussian b{{5.0, -3.0}, {0.7, 1.3}};
    CHECK(gaussian_fisher_trace(a) == gaussian_fisher_trace(b));
    CHECK(gaussian_entropy_power(a) == gaussian_entropy_power(b));
    // the numeric route agrees: shift the density, not the answer
    const double j0 = numeric_fisher_1d(gaussian_density(0.0, 0.7), 7e-4);
    const double j5 = numeric_fisher_1d(gaussian_density(5.0, 0.7), 7e-4);
    CHECK(j0 == doctest::Approx(j5).epsilon(1e-6));
}

TEST_CASE("density validation") {
    CHECK_THROWS_AS(gaussian_density(0.0, -1.0), ContractError);
    DiagGaussian bad{{0.0}, {0.0}};
    CHECK_THROWS_AS(gaussian_fisher_trace(bad), ContractError);
    DiagGaussian mismatched{{0.0, 1.0}, {1.0}};
    CHECK_THROWS_AS(gaussian_entropy_power(mismatched), ContractError);
    // test densities integrate to 1
    for (const Density1D& f :
         {gaussian_density(0.0, 1.0), laplace_density(1.0), logistic_density(1.0),
          gaussian_mixture_density(-2.0, 1.0, 2.0, 1.0, 0.5), uniform_density(0.0, 1.0)}) {
        double mass = 0.0;
        const double step = 1e-3;
        const std::size_t n = static_cast<std::size_t>((f.support_hi - f.support_lo) / step);
        for (std::size_t i = 0; i <= n; ++i) {
            const double x = f.support_lo + (f.support_hi - f.support_lo) *
                                                static_cast<double>(i) / static_cast<double>(n);
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            mass += w * f.pdf(x);
        }
        mass *= (f.support_hi - f.support_lo) / static_cast<double>(n);
        INFO(f.name);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}
