#include "fisherplane/data_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "fisherplane/rng.hpp"

namespace fisherplane {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;
constexpr const char* kCheckpointHeader = "fisherplane-checkpoint v1";

std::uint32_t read_be32(std::istream& in, const std::string& what) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    if (!in) throw ParseError("truncated IDX file while reading " + what);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    const std::array<unsigned char, 4> b{static_cast<unsigned char>(v >> 24),
                                         static_cast<unsigned char>(v >> 16),
                                         static_cast<unsigned char>(v >> 8),
                                         static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b.data()), 4);
}

void write_le_doubles(std::ostream& out, const std::vector<double>& v) {
    std::vector<unsigned char> buf(v.size() * 8);
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &v[i], 8);
        for (int k = 0; k < 8; ++k) buf[i * 8 + k] = static_cast<unsigned char>(bits >> (8 * k));
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

std::vector<double> read_le_doubles(std::istream& in, std::size_t n, const std::string& name) {
    std::vector<unsigned char> buf(n * 8);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
        throw ParseError("checkpoint array '" + name + "' is truncated");
    }
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= std::uint64_t(buf[i * 8 + k]) << (8 * k);
        std::memcpy(&v[i], &bits, 8);
    }
    return v;
}

}  // namespace

Dataset Dataset::take(std::size_t n) const {
    if (n > size()) throw ContractError("Dataset::take beyond dataset size");
    Dataset out;
    out.dim = dim;
    out.split = split;
    out.mixture = mixture;
    out.images.assign(images.begin(), images.begin() + static_cast<long>(n * dim));
    out.labels.assign(labels.begin(), labels.begin() + static_cast<long>(n));
    return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.dim = dim;
    out.split = split;
    out.mixture = mixture;
    out.images.reserve(idx.size() * dim);
    out.labels.reserve(idx.size());
    for (std::size_t i : idx) {
        if (i >= size()) throw ContractError("Dataset::subset index out of range");
        out.images.insert(out.images.end(), row(i), row(i) + dim);
        out.labels.push_back(labels[i]);
    }
    return out;
}

void Dataset::validate() const {
    if (dim == 0 || images.size() % dim != 0) throw ContractError("Dataset: bad image extent");
    if (labels.size() != size()) throw ContractError("Dataset: image/label count mismatch");
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("cannot open images file '" + images_path + "'");
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("cannot open labels file '" + labels_path + "'");

    const std::uint32_t img_magic = read_be32(img, "images magic");
    if (img_magic != kImagesMagic) {
        throw ParseError("bad IDX images magic in '" + images_path + "'");
    }
    const std::uint32_t n_img = read_be32(img, "image count");
    const std::uint32_t rows = read_be32(img, "rows");
    const std::uint32_t cols = read_be32(img, "cols");

    const std::uint32_t lab_magic = read_be32(lab, "labels magic");
    if (lab_magic != kLabelsMagic) {
        throw ParseError("bad IDX labels magic in '" + labels_path + "'");
    }
    const std::uint32_t n_lab = read_be32(lab, "label count");
    if (n_img != n_lab) {
        throw ParseError("IDX count mismatch: " + std::to_string(n_img) + " images vs " +
                         std::to_string(n_lab) + " labels");
    }

    Dataset ds;
    ds.dim = static_cast<std::size_t>(rows) * cols;
    const std::size_t total = static_cast<std::size_t>(n_img) * ds.dim;
    std::vector<unsigned char> raw(total);
    img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(total));
    if (static_cast<std::size_t>(img.gcount()) != total) {
        throw ParseError("truncated IDX image payload in '" + images_path + "'");
    }
    ds.images.resize(total);
    for (std::size_t i = 0; i < total; ++i) ds.images[i] = static_cast<double>(raw[i]) / 255.0;

    std::vector<unsigned char> lraw(n_lab);
    lab.read(reinterpret_cast<char*>(lraw.data()), static_cast<std::streamsize>(n_lab));
    if (static_cast<std::size_t>(lab.gcount()) != n_lab) {
        throw ParseError("truncated IDX label payload in '" + labels_path + "'");
    }
    ds.labels.assign(lraw.begin(), lraw.end());
    ds.validate();
    return ds;
}

void save_idx(const std::string& images_path, const std::string& labels_path, const Dataset& ds,
              std::size_t rows, std::size_t cols) {
    ds.validate();
    if (rows * cols != ds.dim) throw ContractError("save_idx: rows*cols must equal dataset dim");
    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    if (!img) throw IoError("cannot open '" + images_path + "' for writing");
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(ds.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> raw(ds.images.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw[i] = static_cast<unsigned char>(std::lround(std::clamp(ds.images[i], 0.0, 1.0) * 255.0));
    }
    img.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!lab) throw IoError("cannot open '" + labels_path + "' for writing");
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(ds.size()));
    std::vector<unsigned char> lraw(ds.labels.begin(), ds.labels.end());
    lab.write(reinterpret_cast<const char*>(lraw.data()), static_cast<std::streamsize>(lraw.size()));
}

Dataset binarize(const Dataset& ds, BinarizeMode mode, std::uint64_t seed) {
    ds.validate();
    for (double v : ds.images) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ContractError("binarize: pixel outside [0,1]: " + std::to_string(v));
        }
    }
    Dataset out = ds;
    if (mode == BinarizeMode::kThreshold) {
        for (double& v : out.images) v = (v >= 0.5) ? 1.0 : 0.0;  // ties round up
    } else {
        Rng rng(derive_seed(seed, 0xb1a2));
        for (double& v : out.images) v = (rng.uniform() < v) ? 1.0 : 0.0;
    }
    return out;
}

Dataset build_skewed_split(const Dataset& train, std::uint64_t seed) {
    train.validate();
    std::array<std::vector<std::size_t>, 10> by_class;
    for (std::size_t i = 0; i < train.size(); ++i) {
        const int c = train.labels[i];
        if (c < 0 || c > 9) throw ContractError("build_skewed_split: label outside 0..9");
        by_class[static_cast<std::size_t>(c)].push_back(i);
    }
    const std::size_t want0 = 5800, want_other = 100;
    for (int c = 0; c <= 9; ++c) {
        const std::size_t need = (c == 0) ? want0 : want_other;
        if (by_class[static_cast<std::size_t>(c)].size() < need) {
            throw ContractError("build_skewed_split: class " + std::to_string(c) + " has only " +
                                std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                                " samples, need " + std::to_string(need));
        }
    }
    std::vector<std::size_t> chosen;
    chosen.reserve(want0 + 9 * want_other);
    chosen.insert(chosen.end(), by_class[0].begin(), by_class[0].begin() + want0);
    for (int c = 1; c <= 9; ++c) {
        const auto& v = by_class[static_cast<std::size_t>(c)];
        chosen.insert(chosen.end(), v.begin(), v.begin() + want_other);
    }
    Rng rng(derive_seed(seed, 0x5e3d));
    const std::vector<std::size_t> order = rng.permutation(chosen.size());
    std::vector<std::size_t> shuffled(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) shuffled[i] = chosen[order[i]];
    Dataset out = train.subset(shuffled);
    out.split = "train-skewed";
    return out;
}

Dataset synthetic_gaussian_set(std::size_t n, std::size_t dim, std::size_t components,
                               std::uint64_t seed) {
    if (components < 1) throw ContractError("synthetic_gaussian_set: components must be >= 1");
    if (n == 0 || dim == 0) throw ContractError("synthetic_gaussian_set: n and dim must be positive");
    Rng rng(derive_seed(seed, 0x6a05));
    Dataset ds;
    ds.dim = dim;
    ds.split = "synthetic";
    Dataset::MixtureMeta meta;
    meta.sigma = 0.1;
    for (std::size_t c = 0; c < components; ++c) {
        std::vector<double> mean(dim);
        for (double& m : mean) m = rng.uniform(0.2, 0.8);
        meta.means.push_back(std::move(mean));
    }
    ds.images.resize(n * dim);
    ds.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = static_cast<std::size_t>(rng.next_u64() % components);
        ds.labels[i] = static_cast<int>(c);
        for (std::size_t j = 0; j < dim; ++j) {
            ds.images[i * dim + j] = std::clamp(meta.means[c][j] + meta.sigma * rng.normal(), 0.0, 1.0);
        }
    }
    ds.mixture = std::move(meta);
    return ds;
}

namespace {

// 7x5 glyphs; '#' marks ink.
const std::array<std::array<const char*, 7>, 10> kDigitFont = {{
    {"#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"},  // 0
    {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."},  // 1
    {"#####", "....#", "....#", "#####", "#....", "#....", "#####"},  // 2
    {"#####", "....#", "....#", ".####", "....#", "....#", "#####"},  // 3
    {"#...#", "#...#", "#...#", "#####", "....#", "....#", "....#"},  // 4
    {"#####", "#....", "#....", "#####", "....#", "....#", "#####"},  // 5
    {"#####", "#....", "#....", "#####", "#...#", "#...#", "#####"},  // 6
    {"#####", "....#", "...#.", "..#..", "..#..", ".#...", ".#..."},  // 7
    {"#####", "#...#", "#...#", "#####", "#...#", "#...#", "#####"},  // 8
    {"#####", "#...#", "#...#", "#####", "....#", "....#", "#####"},  // 9
}};

void render_digit(double* out, int digit, Rng& rng) {
    // 7x5 font scaled 3x onto a 28x28 canvas, jittered in position and ink
    // intensity, with light background noise.
    std::fill(out, out + 784, 0.0);
    const int ox = 4 + static_cast<int>(rng.next_u64() % 9);  // glyph is 15 wide
    const int oy = 2 + static_cast<int>(rng.next_u64() % 6);  // glyph is 21 tall
    const double ink = rng.uniform(0.72, 1.0);
    for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 5; ++c) {
            if (kDigitFont[static_cast<std::size_t>(digit)][static_cast<std::size_t>(r)][c] != '#') continue;
            for (int dy = 0; dy < 3; ++dy) {
                for (int dx = 0; dx < 3; ++dx) {
                    const int y = oy + r * 3 + dy;
                    const int x = ox + c * 3 + dx;
                    out[y * 28 + x] = std::clamp(ink + 0.15 * (rng.uniform() - 0.5), 0.0, 1.0);
                }
            }
        }
    }
    for (int i = 0; i < 784; ++i) {
        if (out[i] == 0.0) out[i] = 0.08 * rng.uniform();
    }
}

}  // namespace

Dataset synthetic_digits(std::size_t n, std::uint64_t seed,
                         const std::vector<std::size_t>& class_counts) {
    Rng rng(derive_seed(seed, 0xd161));
    std::vector<int> labels;
    if (!class_counts.empty()) {
        if (class_counts.size() != 10) {
            throw ContractError("synthetic_digits: class_counts must have 10 entries");
        }
        for (int c = 0; c < 10; ++c) {
            labels.insert(labels.end(), class_counts[static_cast<std::size_t>(c)], c);
        }
        if (n != labels.size()) {
            throw ContractError("synthetic_digits: n must equal sum of class_counts");
        }
        const std::vector<std::size_t> order = rng.permutation(labels.size());
        std::vector<int> shuffled(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) shuffled[i] = labels[order[i]];
        labels = std::move(shuffled);
    } else {
        labels.resize(n);
        for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.next_u64() % 10);
    }
    Dataset ds;
    ds.dim = 784;
    ds.split = "synthetic-digits";
    ds.images.resize(n * 784);
    ds.labels = std::move(labels);
    for (std::size_t i = 0; i < n; ++i) {
        render_digit(ds.images.data() + i * 784, ds.labels[i], rng);
    }
    return ds;
}

std::pair<Dataset, Dataset> repartition_mnist_train(const Dataset& train60k) {
    train60k.validate();
    if (train60k.size() < 60000) {
        throw ContractError("repartition_mnist_train expects the 60k MNIST training set");
    }
    Dataset train = train60k.take(50000);
    train.split = "train";
    std::vector<std::size_t> idx(10000);
    for (std::size_t i = 0; i < 10000; ++i) idx[i] = 50000 + i;
    Dataset valid = train60k.subset(idx);
    valid.split = "valid";
    return {std::move(train), std::move(valid)};
}

void save_checkpoint(const std::string& path, const Checkpoint& c) {
    nlohmann::json meta;
    meta["version"] = c.version;
    meta["encoder_dims"] = c.encoder_dims;
    meta["decoder_dims"] = c.decoder_dims;
    meta["aux_dims"] = c.aux_dims;
    meta["activation"] = c.activation;
    meta["likelihood"] = c.likelihood;
    meta["latent_dim"] = c.latent_dim;
    meta["rng_seed"] = c.rng_seed;
    meta["epoch"] = c.epoch;
    meta["adam"] = {{"step", c.adam_step},
                    {"lr", c.adam_lr},
                    {"beta1", c.adam_beta1},
                    {"beta2", c.adam_beta2},
                    {"eps", c.adam_eps}};
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& [name, data] : c.arrays) {
        arrays.push_back({{"name", name}, {"len", data.size()}});
    }
    meta["arrays"] = arrays;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out << kCheckpointHeader << "\n" << meta.dump() << "\n";
        for (const auto& [name, data] : c.arrays) write_le_doubles(out, data);
        if (!out) throw IoError("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    std::string header;
    std::getline(in, header);
    if (header != kCheckpointHeader) {
        throw ParseError("unrecognized checkpoint header in '" + path + "'");
    }
    std::string meta_line;
    std::getline(in, meta_line);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(meta_line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad checkpoint metadata: ") + e.what());
    }
    Checkpoint c;
    try {
        c.version = meta.at("version").get<int>();
        if (c.version != 1) {
            throw ParseError("unsupported checkpoint version " + std::to_string(c.version));
        }
        c.encoder_dims = meta.at("encoder_dims").get<std::vector<std::size_t>>();
        c.decoder_dims = meta.at("decoder_dims").get<std::vector<std::size_t>>();
        c.aux_dims = meta.at("aux_dims").get<std::vector<std::size_t>>();
        c.activation = meta.at("activation").get<std::string>();
        c.likelihood = meta.at("likelihood").get<std::string>();
        c.latent_dim = meta.at("latent_dim").get<std::size_t>();
        c.rng_seed = meta.at("rng_seed").get<std::uint64_t>();
        c.epoch = meta.at("epoch").get<std::size_t>();
        c.adam_step = meta.at("adam").at("step").get<std::size_t>();
        c.adam_lr = meta.at("adam").at("lr").get<double>();
        c.adam_beta1 = meta.at("adam").at("beta1").get<double>();
        c.adam_beta2 = meta.at("adam").at("beta2").get<double>();
        c.adam_eps = meta.at("adam").at("eps").get<double>();
        for (const auto& a : meta.at("arrays")) {
            const std::string name = a.at("name").get<std::string>();
            const std::size_t len = a.at("len").get<std::size_t>();
            c.arrays.emplace_back(name, read_le_doubles(in, len, name));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad checkpoint metadata: ") + e.what());
    }
    return c;
}

}  // namespace fisherplane
