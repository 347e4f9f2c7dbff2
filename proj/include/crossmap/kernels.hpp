#ifndef CROSSMAP_KERNELS_HPP
#define CROSSMAP_KERNELS_HPP

#include "crossmap/matrix.hpp"
#include "crossmap/vectors.hpp"

#include <cstddef>
#include <span>

/**
 * Row-parallel inner loops.
 *
 * Each kernel exists twice: `serial::` is the plain reference loop and `omp::`
 * distributes independent rows (or output units) across OpenMP threads. Every
 * output element is produced by one thread with the same operation order as the
 * serial loop, so the two variants are bit-identical. The unqualified names in
 * `kernels::` pick the OpenMP variant when it was compiled in.
 */
namespace crossmap::kernels {

/// Number of neighbours kept per row: min(k, n - 1).
inline std::size_t effective_k(std::size_t k, std::size_t n) { return n == 0 ? 0 : (k < n - 1 ? k : n - 1); }

namespace serial {

/// For each row i, the indices of its `effective_k(k, n)` most similar other
/// rows, best first, ties broken by ascending index. `out` is row-major n x k_eff.
/// `norms` holds ||v_i|| (cosine only; ignored for euclidean).
void top_k_neighbors(const Matrix& v, std::span<const double> norms, std::size_t k, Measure measure,
                     std::span<std::size_t> out);

/// out_i = W in_i + b for every row i.
void affine_rows(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out);

/// out_i = W^T delta_i for every row i.
void transpose_product_rows(const Matrix& delta, const Matrix& weights, Matrix& out);

/// grad_W += scale * sum_i delta_i act_i^T, summed in ascending i.
void accumulate_outer(const Matrix& delta, const Matrix& act, double scale, Matrix& grad_w);

}  // namespace serial

namespace omp {

void top_k_neighbors(const Matrix& v, std::span<const double> norms, std::size_t k, Measure measure,
                     std::span<std::size_t> out);
void affine_rows(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out);
void transpose_product_rows(const Matrix& delta, const Matrix& weights, Matrix& out);
void accumulate_outer(const Matrix& delta, const Matrix& act, double scale, Matrix& grad_w);

/// Threads OpenMP would use for a parallel region here (1 without OpenMP).
int max_threads();

}  // namespace omp

#ifdef CROSSMAP_HAVE_OPENMP
using omp::accumulate_outer;
using omp::affine_rows;
using omp::top_k_neighbors;
using omp::transpose_product_rows;
#else
using serial::accumulate_outer;
using serial::affine_rows;
using serial::top_k_neighbors;
using serial::transpose_product_rows;
#endif

}  // namespace crossmap::kernels

#endif
