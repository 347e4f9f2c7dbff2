#ifndef CROSSMAP_NEIGHBORHOOD_HPP
#define CROSSMAP_NEIGHBORHOOD_HPP

#include "crossmap/matrix.hpp"
#include "crossmap/vectors.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace crossmap {

/**
 * Exact K-nearest-neighbour lists for every item of one set.
 *
 * Row i never contains i, holds min(K, N - 1) indices, and is ordered by
 * decreasing similarity with ties going to the smaller index.
 */
class NeighborIndex {
public:
    NeighborIndex(std::size_t n, std::size_t k_requested, Measure measure, std::vector<std::size_t> flat);

    std::size_t size() const { return n_; }
    std::size_t k() const { return k_requested_; }
    std::size_t k_effective() const { return k_eff_; }
    Measure measure() const { return measure_; }
    std::span<const std::size_t> row(std::size_t i) const { return {flat_.data() + i * k_eff_, k_eff_}; }

    /// `item TAB n1,n2,...` per line, 0-based indices.
    void write_tsv(std::ostream& out) const;

    friend bool operator==(const NeighborIndex&, const NeighborIndex&) = default;

private:
    std::size_t n_;
    std::size_t k_requested_;
    std::size_t k_eff_;
    Measure measure_;
    std::vector<std::size_t> flat_;
};

enum class KernelPath { parallel, serial };

/// Brute-force search. Throws ValidationError when N < 2, k == 0, or (cosine)
/// a row is the zero vector; the VectorSet overload names the offending key.
NeighborIndex top_k_neighbors(const VectorSet& v, std::size_t k, Measure measure,
                              KernelPath path = KernelPath::parallel);
NeighborIndex top_k_neighbors(const Matrix& v, std::size_t k, Measure measure,
                              KernelPath path = KernelPath::parallel);

/// Size of the set intersection of two neighbour lists.
std::size_t nn_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// NNO of every item: |NN_v(i) ∩ NN_z(i)|.
std::vector<std::size_t> per_item_overlap(const NeighborIndex& nv, const NeighborIndex& nz);

/// Mean fraction of shared neighbours, normalised by the effective K.
double mean_nn_overlap(const NeighborIndex& nv, const NeighborIndex& nz);
double mean_nn_overlap(const Matrix& v, const Matrix& z, std::size_t k, Measure measure);
double mean_nn_overlap(const VectorSet& v, const VectorSet& z, std::size_t k, Measure measure);

/// Neighbourhoods searched over all rows, overlap averaged over `queries` only.
/// Used when test items may have training items as neighbours.
double mean_nn_overlap_over(const Matrix& v, const Matrix& z, std::span<const std::size_t> queries, std::size_t k,
                            Measure measure);

}  // namespace crossmap

#endif
