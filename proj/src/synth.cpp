#include "crossmap/synth.hpp"

#include "crossmap/errors.hpp"
#include "crossmap/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <utility>

namespace crossmap {

CrossMap parse_cross_map(std::string_view name) {
    if (name == "linear") {
        return CrossMap::linear;
    }
    if (name == "tanh_mlp") {
        return CrossMap::tanh_mlp;
    }
    throw ValidationError("unknown cross map '" + std::string(name) + "'");
}

std::string_view to_string(CrossMap m) { return m == CrossMap::linear ? "linear" : "tanh_mlp"; }

void SynthSpec::validate() const {
    if (n_classes == 0 || items_per_class == 0 || d_x == 0 || d_y == 0) {
        throw ValidationError("synthetic dataset: counts and dimensions must be positive");
    }
    if (!(noise_x >= 0.0) || !(noise_y >= 0.0) || !std::isfinite(noise_x) || !std::isfinite(noise_y)) {
        throw ValidationError("synthetic dataset: noise levels must be finite and non-negative");
    }
}

namespace {

// Stream tags: one independent generator per kind of draw.
enum Stream : std::uint64_t { kCentres = 1, kMap = 2, kNoiseX = 3, kNoiseY = 4, kPairs = 5, kNoise = 6 };

Matrix uniform_matrix(std::size_t rows, std::size_t cols, double scale, Rng& rng) {
    Matrix m(rows, cols);
    for (double& v : m.values()) {
        v = scale * rng.uniform(-1.0, 1.0);
    }
    return m;
}

std::vector<double> matvec(const Matrix& w, std::span<const double> x) {
    std::vector<double> out(w.rows());
    for (std::size_t o = 0; o < w.rows(); ++o) {
        out[o] = dot(w.row(o), x);
    }
    return out;
}

std::string padded(std::size_t v, std::size_t width) {
    std::string s = std::to_string(v);
    return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

}  // namespace

PairedDataset generate_synthetic_paired(const SynthSpec& spec) {
    spec.validate();
    Rng centre_rng(derive_seed(spec.seed, kCentres));
    Rng map_rng(derive_seed(spec.seed, kMap));
    Rng x_rng(derive_seed(spec.seed, kNoiseX));
    Rng y_rng(derive_seed(spec.seed, kNoiseY));

    Matrix centres(spec.n_classes, spec.d_x);
    for (double& v : centres.values()) {
        v = centre_rng.normal();
    }

    // U[-1, 1] entries have variance 1/3, hence the sqrt(3 / fan_in) scaling.
    Matrix mapped(spec.n_classes, spec.d_y);
    if (spec.cross_map == CrossMap::linear) {
        const Matrix a = uniform_matrix(spec.d_y, spec.d_x, std::sqrt(3.0 / static_cast<double>(spec.d_x)), map_rng);
        for (std::size_t k = 0; k < spec.n_classes; ++k) {
            const auto t = matvec(a, centres.row(k));
            std::copy(t.begin(), t.end(), mapped.row(k).begin());
        }
    } else {
        const std::size_t hidden = std::max(spec.d_x, spec.d_y);
        const Matrix w0 = uniform_matrix(hidden, spec.d_x, std::sqrt(3.0 / static_cast<double>(spec.d_x)), map_rng);
        const Matrix w1 = uniform_matrix(spec.d_y, hidden, std::sqrt(3.0 / static_cast<double>(hidden)), map_rng);
        for (std::size_t k = 0; k < spec.n_classes; ++k) {
            auto h = matvec(w0, centres.row(k));
            for (double& v : h) {
                v = std::tanh(v);
            }
            const auto t = matvec(w1, h);
            std::copy(t.begin(), t.end(), mapped.row(k).begin());
        }
    }

    const std::size_t n = spec.n_classes * spec.items_per_class;
    const std::size_t class_width = std::to_string(spec.n_classes - 1).size();
    const std::size_t item_width = std::to_string(spec.items_per_class - 1).size();
    std::vector<std::string> keys;
    std::vector<std::string> labels;
    Matrix xs(n, spec.d_x);
    Matrix ys(n, spec.d_y);
    std::size_t i = 0;
    for (std::size_t k = 0; k < spec.n_classes; ++k) {
        const std::string label = "c" + padded(k, class_width);
        for (std::size_t j = 0; j < spec.items_per_class; ++j, ++i) {
            keys.push_back(label + "_" + padded(j, item_width));
            labels.push_back(label);
            auto x = xs.row(i);
            for (std::size_t d = 0; d < spec.d_x; ++d) {
                x[d] = centres(k, d) + spec.noise_x * x_rng.normal();
            }
            auto y = ys.row(i);
            for (std::size_t d = 0; d < spec.d_y; ++d) {
                y[d] = mapped(k, d) + spec.noise_y * y_rng.normal();
            }
        }
    }
    return {VectorSet(keys, std::move(xs)), VectorSet(keys, std::move(ys)), std::move(labels)};
}

void PlantedSpec::validate() const {
    if (n_items < 2 || dim == 0 || n_clusters == 0 || n_pairs == 0) {
        throw ValidationError("planted data: need at least 2 items and positive sizes");
    }
    if (n_pairs > n_items * (n_items - 1) / 2) {
        throw ValidationError("planted data: more pairs requested than distinct item pairs exist");
    }
    if (!(noise >= 0.0) || !(cluster_spread >= 0.0)) {
        throw ValidationError("planted data: noise levels must be non-negative");
    }
}

PlantedData generate_planted_similarity(const PlantedSpec& spec) {
    spec.validate();
    Rng centre_rng(derive_seed(spec.seed, kCentres));
    Rng noise_rng(derive_seed(spec.seed, kNoise));
    Rng pair_rng(derive_seed(spec.seed, kPairs));

    Matrix centres(spec.n_clusters, spec.dim);
    for (double& v : centres.values()) {
        v = centre_rng.normal();
    }
    Matrix hidden(spec.n_items, spec.dim);
    Matrix observed(spec.n_items, spec.dim);
    std::vector<std::string> keys;
    const std::size_t width = std::to_string(spec.n_items - 1).size();
    for (std::size_t i = 0; i < spec.n_items; ++i) {
        keys.push_back("w" + padded(i, width));
        const std::size_t k = i % spec.n_clusters;
        for (std::size_t d = 0; d < spec.dim; ++d) {
            hidden(i, d) = centres(k, d) + spec.cluster_spread * centre_rng.normal();
            observed(i, d) = hidden(i, d) + spec.noise * noise_rng.normal();
        }
    }

    BenchmarkPairs bench{"planted", {}};
    std::set<std::pair<std::size_t, std::size_t>> used;
    while (bench.pairs.size() < spec.n_pairs) {
        std::size_t a = pair_rng.below(spec.n_items);
        std::size_t b = pair_rng.below(spec.n_items);
        if (a == b) {
            continue;
        }
        if (a > b) {
            std::swap(a, b);
        }
        if (!used.emplace(a, b).second) {
            continue;
        }
        bench.pairs.push_back({keys[a], keys[b], similarity(hidden.row(a), hidden.row(b), Measure::cosine)});
    }
    return {VectorSet(std::move(keys), std::move(observed)), std::move(bench)};
}

}  // namespace crossmap
