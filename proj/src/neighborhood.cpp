#include "crossmap/neighborhood.hpp"

#include "crossmap/errors.hpp"
#include "crossmap/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>

namespace crossmap {

NeighborIndex::NeighborIndex(std::size_t n, std::size_t k_requested, Measure measure, std::vector<std::size_t> flat)
    : n_(n), k_requested_(k_requested), k_eff_(kernels::effective_k(k_requested, n)), measure_(measure),
      flat_(std::move(flat)) {
    if (flat_.size() != n_ * k_eff_) {
        throw ValidationError("neighbor index: expected " + std::to_string(n_ * k_eff_) + " entries, got " +
                              std::to_string(flat_.size()));
    }
}

void NeighborIndex::write_tsv(std::ostream& out) const {
    for (std::size_t i = 0; i < n_; ++i) {
        out << i << '\t';
        const auto r = row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j > 0) {
                out << ',';
            }
            out << r[j];
        }
        out << '\n';
    }
}

namespace {

// Index of the first zero row, if any.
std::optional<std::size_t> row_norms(const Matrix& v, std::vector<double>& norms) {
    norms.resize(v.rows());
    for (std::size_t i = 0; i < v.rows(); ++i) {
        norms[i] = std::sqrt(squared_norm(v.row(i)));
        if (norms[i] == 0.0) {
            return i;
        }
    }
    return std::nullopt;
}

NeighborIndex search(const Matrix& v, std::size_t k, Measure measure, KernelPath path, const VectorSet* named) {
    if (v.rows() < 2) {
        throw ValidationError("nearest neighbours need at least 2 items, got " + std::to_string(v.rows()));
    }
    if (k == 0) {
        throw ValidationError("nearest neighbours: k must be at least 1");
    }
    std::vector<double> norms;
    if (measure == Measure::cosine) {
        if (auto zero = row_norms(v, norms)) {
            const std::string who = named ? "'" + named->keys()[*zero] + "'" : "row " + std::to_string(*zero);
            throw ValidationError("cosine neighbours undefined: item " + who + " is the zero vector");
        }
    }
    std::vector<std::size_t> flat(v.rows() * kernels::effective_k(k, v.rows()));
    if (path == KernelPath::serial) {
        kernels::serial::top_k_neighbors(v, norms, k, measure, flat);
    } else {
        kernels::top_k_neighbors(v, norms, k, measure, flat);
    }
    return {v.rows(), k, measure, std::move(flat)};
}

}  // namespace

NeighborIndex top_k_neighbors(const VectorSet& v, std::size_t k, Measure measure, KernelPath path) {
    return search(v.values(), k, measure, path, &v);
}

NeighborIndex top_k_neighbors(const Matrix& v, std::size_t k, Measure measure, KernelPath path) {
    return search(v, k, measure, path, nullptr);
}

std::size_t nn_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    std::vector<std::size_t> sa(a.begin(), a.end());
    std::vector<std::size_t> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
    std::sort(sb.begin(), sb.end());
    sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
    std::size_t count = 0;
    auto ia = sa.begin();
    auto ib = sb.begin();
    while (ia != sa.end() && ib != sb.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

std::vector<std::size_t> per_item_overlap(const NeighborIndex& nv, const NeighborIndex& nz) {
    if (nv.size() != nz.size()) {
        throw ValidationError("mNNO: paired sets differ in size (" + std::to_string(nv.size()) + " vs " +
                              std::to_string(nz.size()) + ")");
    }
    std::vector<std::size_t> out(nv.size());
    for (std::size_t i = 0; i < nv.size(); ++i) {
        out[i] = nn_overlap(nv.row(i), nz.row(i));
    }
    return out;
}

double mean_nn_overlap(const NeighborIndex& nv, const NeighborIndex& nz) {
    const auto overlaps = per_item_overlap(nv, nz);
    std::size_t total = 0;
    for (auto c : overlaps) {
        total += c;
    }
    const std::size_t k_eff = std::max(nv.k_effective(), nz.k_effective());
    return static_cast<double>(total) / static_cast<double>(k_eff * nv.size());
}

double mean_nn_overlap(const Matrix& v, const Matrix& z, std::size_t k, Measure measure) {
    if (v.rows() != z.rows()) {
        throw ValidationError("mNNO: paired sets differ in size (" + std::to_string(v.rows()) + " vs " +
                              std::to_string(z.rows()) + ")");
    }
    return mean_nn_overlap(top_k_neighbors(v, k, measure), top_k_neighbors(z, k, measure));
}

double mean_nn_overlap(const VectorSet& v, const VectorSet& z, std::size_t k, Measure measure) {
    if (v.size() != z.size()) {
        throw ValidationError("mNNO: paired sets differ in size (" + std::to_string(v.size()) + " vs " +
                              std::to_string(z.size()) + ")");
    }
    if (v.keys() != z.keys()) {
        throw ValidationError("mNNO: the two sets are not key-aligned");
    }
    return mean_nn_overlap(top_k_neighbors(v, k, measure), top_k_neighbors(z, k, measure));
}

double mean_nn_overlap_over(const Matrix& v, const Matrix& z, std::span<const std::size_t> queries, std::size_t k,
                            Measure measure) {
    if (v.rows() != z.rows()) {
        throw ValidationError("mNNO: paired sets differ in size");
    }
    if (queries.empty()) {
        throw ValidationError("mNNO: no query items");
    }
    const auto nv = top_k_neighbors(v, k, measure);
    const auto nz = top_k_neighbors(z, k, measure);
    std::size_t total = 0;
    for (auto q : queries) {
        total += nn_overlap(nv.row(q), nz.row(q));
    }
    return static_cast<double>(total) / static_cast<double>(nv.k_effective() * queries.size());
}

}  // namespace crossmap
