#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fisherplane/rng.hpp"
#include "fisherplane/tensor.hpp"

namespace fisherplane::testutil {

// Central-difference gradient check: build must produce a scalar root from
// the given leaves on the provided tape. Returns the worst relative error
// across all leaf elements.
inline double gradient_check(std::vector<Tensor> leaves,
                             const std::function<Tensor(Tape&, std::vector<Tensor>&)>& build,
                             double h = 1e-5) {
    for (Tensor& l : leaves) {
        l.track_grad();
        l.zero_grad();
    }
    Tape tape;
    Tensor root = build(tape, leaves);
    tape.backward(root);

    double worst = 0.0;
    for (Tensor& leaf : leaves) {
        const auto analytic = leaf.grad();
        for (std::size_t i = 0; i < leaf.size(); ++i) {
            const double saved = leaf.data()[i];
            leaf.data_mut()[i] = saved + h;
            Tape tp(false);
            const double up = build(tp, leaves).item();
            leaf.data_mut()[i] = saved - h;
            Tape tm(false);
            const double down = build(tm, leaves).item();
            leaf.data_mut()[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({1.0, std::fabs(fd), std::fabs(analytic[i])});
            worst = std::max(worst, std::fabs(fd - analytic[i]) / denom);
        }
    }
    return worst;
}

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_vector(std::move(shape), std::move(v));
}

// Spearman rank correlation (average ranks on ties).
inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    auto ranks = [n](const std::vector<double>& v) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const std::vector<double> rx = ranks(xs), ry = ranks(ys);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    return num / std::sqrt(dx * dy);
}

// Fresh scratch directory under the system temp dir.
inline std::string scratch_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("fisherplane-" + tag + "-" + std::to_string(++counter) + "-" +
                      std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

// softplus^-1: the raw decoder head value whose softplus(+floor) equals y.
inline double inverse_softplus(double y) { return std::log(std::expm1(y)); }

}  // namespace fisherplane::testutil
