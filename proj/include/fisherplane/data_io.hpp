#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fisherplane/errors.hpp"

namespace fisherplane {

struct Dataset {
    std::vector<double> images;  // [n * dim] row-major, values in [0,1]
    std::vector<int> labels;     // [n]
    std::size_t dim = 0;
    std::string split = "train";

    // Ground-truth parameters when the set was drawn from a known mixture.
    struct MixtureMeta {
        std::vector<std::vector<double>> means;
        double sigma = 0.0;
    };
    std::optional<MixtureMeta> mixture;

    std::size_t size() const { return dim == 0 ? 0 : images.size() / dim; }
    const double* row(std::size_t i) const { return images.data() + i * dim; }
    Dataset take(std::size_t n) const;                       // first n examples
    Dataset subset(const std::vector<std::size_t>& idx) const;
    void validate() const;
};

// IDX container (big-endian headers, magic 0x803 for images, 0x801 for
// labels). Pixels are scaled to [0,1] by /255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const std::string& images_path, const std::string& labels_path, const Dataset& ds,
              std::size_t rows, std::size_t cols);

enum class BinarizeMode { kThreshold, kStochastic };

// Threshold mode rounds ties up (pixel >= 0.5 -> 1). Stochastic mode draws
// Bernoulli(pixel), deterministic in seed.
Dataset binarize(const Dataset& ds, BinarizeMode mode, std::uint64_t seed = 0);

// The skewed training set: exactly 5800 samples of label 0 plus 100 samples
// of each other label, deterministically shuffled.
Dataset build_skewed_split(const Dataset& train, std::uint64_t seed);

// Gaussian mixture fixture with known parameters recorded in metadata.
Dataset synthetic_gaussian_set(std::size_t n, std::size_t dim, std::size_t components,
                               std::uint64_t seed);

// Procedural 28x28 digit glyphs (D = 784) with position/intensity jitter;
// labels are the rendered digit. class_counts, when given, fixes how many
// examples of each digit to emit (size 10); otherwise classes are drawn
// uniformly.
Dataset synthetic_digits(std::size_t n, std::uint64_t seed,
                         const std::vector<std::size_t>& class_counts = {});

// Deterministic 50k/10k split of the 60k MNIST training set.
std::pair<Dataset, Dataset> repartition_mnist_train(const Dataset& train60k);

struct Checkpoint {
    int version = 1;
    std::vector<std::size_t> encoder_dims;
    std::vector<std::size_t> decoder_dims;
    std::vector<std::size_t> aux_dims;  // MAE recognition net; empty otherwise
    std::string activation = "tanh";
    std::string likelihood = "bernoulli";
    std::size_t latent_dim = 0;
    std::uint64_t rng_seed = 0;
    std::size_t epoch = 0;
    std::size_t adam_step = 0;
    double adam_lr = 1e-3, adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
    std::vector<std::pair<std::string, std::vector<double>>> arrays;
};

// Self-describing header (text + one JSON metadata line) followed by named
// little-endian float64 arrays. Writes are atomic (temp file + rename);
// load(save(c)) round-trips bit-exactly.
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fisherplane
