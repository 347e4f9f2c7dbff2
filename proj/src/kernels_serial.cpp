#include "crossmap/kernels.hpp"

#include "kernel_rows.hpp"

namespace crossmap::kernels::serial {

void top_k_neighbors(const Matrix& v, std::span<const double> norms, std::size_t k, Measure measure,
                     std::span<std::size_t> out) {
    const std::size_t n = v.rows();
    const std::size_t k_eff = effective_k(k, n);
    std::vector<detail::Candidate> scratch;
    scratch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        detail::top_k_row(v, norms, i, k_eff, measure, scratch, out.subspan(i * k_eff, k_eff));
    }
}

void affine_rows(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out) {
    for (std::size_t i = 0; i < in.rows(); ++i) {
        detail::affine_row(in, weights, bias, i, out);
    }
}

void transpose_product_rows(const Matrix& delta, const Matrix& weights, Matrix& out) {
    for (std::size_t i = 0; i < delta.rows(); ++i) {
        detail::transpose_product_row(delta, weights, i, out);
    }
}

void accumulate_outer(const Matrix& delta, const Matrix& act, double scale, Matrix& grad_w) {
    for (std::size_t o = 0; o < grad_w.rows(); ++o) {
        detail::outer_unit(delta, act, scale, o, grad_w);
    }
}

}  // namespace crossmap::kernels::serial
