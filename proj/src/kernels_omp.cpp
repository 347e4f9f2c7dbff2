#include "crossmap/kernels.hpp"

#include "kernel_rows.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace crossmap::kernels::omp {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 15;

bool worth_parallel(std::size_t work) { return work >= kMinParallelWork; }

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void top_k_neighbors(const Matrix& v, std::span<const double> norms, std::size_t k, Measure measure,
                     std::span<std::size_t> out) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(v.rows());
    const std::size_t k_eff = effective_k(k, v.rows());
#pragma omp parallel if (worth_parallel(v.rows() * v.rows() * v.cols()))
    {
        std::vector<detail::Candidate> scratch;
        scratch.reserve(v.rows());
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto row = static_cast<std::size_t>(i);
            detail::top_k_row(v, norms, row, k_eff, measure, scratch, out.subspan(row * k_eff, k_eff));
        }
    }
}

void affine_rows(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(in.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(in.rows() * weights.size()))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        detail::affine_row(in, weights, bias, static_cast<std::size_t>(i), out);
    }
}

void transpose_product_rows(const Matrix& delta, const Matrix& weights, Matrix& out) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(delta.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(delta.rows() * weights.size()))
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        detail::transpose_product_row(delta, weights, static_cast<std::size_t>(i), out);
    }
}

void accumulate_outer(const Matrix& delta, const Matrix& act, double scale, Matrix& grad_w) {
    const std::ptrdiff_t units = static_cast<std::ptrdiff_t>(grad_w.rows());
#pragma omp parallel for schedule(static) if (worth_parallel(delta.rows() * grad_w.size()))
    for (std::ptrdiff_t o = 0; o < units; ++o) {
        detail::outer_unit(delta, act, scale, static_cast<std::size_t>(o), grad_w);
    }
}

}  // namespace crossmap::kernels::omp
