#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fisherplane {

// Deterministic RNG wrapper. The uniform/normal transforms are written out
// explicitly (instead of std::*_distribution) so a given seed produces the
// same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0, 1).
    double uniform();
    // Uniform on (lo, hi).
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller; the spare value is cached.
    double normal();

    // Fisher-Yates index permutation of {0, ..., n-1}.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Mixes (seed, stream) into an independent sub-seed, splitmix64 style.
// Used for per-epoch shuffles and per-purpose streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fisherplane
