#ifndef CROSSMAP_SYNTH_HPP
#define CROSSMAP_SYNTH_HPP

#include "crossmap/evaluation.hpp"
#include "crossmap/vectors.hpp"

#include <cstdint>
#include <string_view>

namespace crossmap {

enum class CrossMap { linear, tanh_mlp };

CrossMap parse_cross_map(std::string_view name);
std::string_view to_string(CrossMap m);

/**
 * Gaussian class-centre model of two paired modalities.
 *
 * Centres c_k ~ N(0, I) in d_x dimensions. Item i of class k gets
 * x_i = c_k + noise_x * e_x and y_i = T(c_k) + noise_y * e_y, where T is a
 * fixed random map with U[-1, 1] parameters scaled so that T(c) has roughly
 * unit variance per coordinate. Centres, T, the x noise and the y noise are
 * drawn from separate streams, so changing one noise level leaves every other
 * draw untouched.
 */
struct SynthSpec {
    std::size_t n_classes = 20;
    std::size_t items_per_class = 25;
    std::size_t d_x = 32;
    std::size_t d_y = 32;
    CrossMap cross_map = CrossMap::linear;
    double noise_x = 0.5;
    double noise_y = 2.5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Labelled paired data; keys `c<class>_<item>` sort in generation order.
PairedDataset generate_synthetic_paired(const SynthSpec& spec);

/**
 * Embeddings with a known similarity structure plus a word-pair benchmark
 * whose ratings are the cosine similarities of the hidden (noise-free) points.
 */
struct PlantedSpec {
    std::size_t n_items = 200;
    std::size_t dim = 64;
    std::size_t n_clusters = 10;
    double cluster_spread = 0.6;  ///< within-cluster std relative to unit centre scale
    double noise = 0.3;           ///< observation noise added to the embeddings
    std::size_t n_pairs = 600;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PlantedData {
    VectorSet embeddings;
    BenchmarkPairs benchmark;
};

PlantedData generate_planted_similarity(const PlantedSpec& spec);

}  // namespace crossmap

#endif
