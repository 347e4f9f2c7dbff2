// Per-row bodies shared by the serial and OpenMP kernels. Keeping one body per
// row is what makes the two variants bit-identical.
#ifndef CROSSMAP_SRC_KERNEL_ROWS_HPP
#define CROSSMAP_SRC_KERNEL_ROWS_HPP

#include "crossmap/matrix.hpp"
#include "crossmap/vectors.hpp"

#include <algorithm>
#include <span>
#include <utility>
#include <vector>

namespace crossmap::kernels::detail {

struct Candidate {
    double score;  // larger is more similar
    std::size_t index;
};

inline bool better(const Candidate& a, const Candidate& b) {
    return a.score > b.score || (a.score == b.score && a.index < b.index);
}

/// Neighbours of row i. Euclidean ranks by negated squared distance, which orders
/// exactly like 1 / (1 + distance) without the rounding of the transform. Cosine
/// divides by the norm product so collinear rows score exactly +-1 and tie.
inline void top_k_row(const Matrix& v, std::span<const double> norms, std::size_t i, std::size_t k_eff,
                      Measure measure, std::vector<Candidate>& scratch, std::span<std::size_t> out_row) {
    const std::size_t n = v.rows();
    scratch.clear();
    const auto vi = v.row(i);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) {
            continue;
        }
        double score;
        if (measure == Measure::cosine) {
            score = dot(vi, v.row(j)) / (norms[i] * norms[j]);
        } else {
            score = -squared_distance(vi, v.row(j));
        }
        scratch.push_back({score, j});
    }
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k_eff), scratch.end(), better);
    for (std::size_t r = 0; r < k_eff; ++r) {
        out_row[r] = scratch[r].index;
    }
}

inline void affine_row(const Matrix& in, const Matrix& weights, std::span<const double> bias, std::size_t i,
                       Matrix& out) {
    const auto x = in.row(i);
    auto y = out.row(i);
    for (std::size_t o = 0; o < weights.rows(); ++o) {
        y[o] = dot(weights.row(o), x) + bias[o];
    }
}

inline void transpose_product_row(const Matrix& delta, const Matrix& weights, std::size_t i, Matrix& out) {
    const auto d = delta.row(i);
    auto y = out.row(i);
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t o = 0; o < weights.rows(); ++o) {
        const double g = d[o];
        if (g == 0.0) {
            continue;
        }
        const auto w = weights.row(o);
        for (std::size_t j = 0; j < y.size(); ++j) {
            y[j] += g * w[j];
        }
    }
}

inline void outer_unit(const Matrix& delta, const Matrix& act, double scale, std::size_t o, Matrix& grad_w) {
    auto g = grad_w.row(o);
    for (std::size_t i = 0; i < delta.rows(); ++i) {
        const double d = scale * delta(i, o);
        if (d == 0.0) {
            continue;
        }
        const auto a = act.row(i);
        for (std::size_t j = 0; j < g.size(); ++j) {
            g[j] += d * a[j];
        }
    }
}

}  // namespace crossmap::kernels::detail

#endif
