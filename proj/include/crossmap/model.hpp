#ifndef CROSSMAP_MODEL_HPP
#define CROSSMAP_MODEL_HPP

#include "crossmap/matrix.hpp"
#include "crossmap/rng.hpp"
#include "crossmap/vectors.hpp"

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace crossmap {

enum class Activation { relu, tanh, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

/// One affine map: out = weights * in + bias, weights is d_out x d_in.
struct Layer {
    Matrix weights;
    std::vector<double> bias;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }

    friend bool operator==(const Layer&, const Layer&) = default;
};

/**
 * Linear map (one layer) or feed-forward net (L + 1 layers, L hidden).
 *
 * The hidden activation is applied after every layer except the last; the
 * output layer is affine. A model with hidden sizes {128} is
 * f(x) = W1 act(W0 x + b0) + b1.
 */
class MappingModel {
public:
    MappingModel(std::vector<Layer> layers, Activation hidden_activation);

    std::size_t input_dim() const { return layers_.front().in_dim(); }
    std::size_t output_dim() const { return layers_.back().out_dim(); }
    std::size_t hidden_layers() const { return layers_.size() - 1; }
    std::vector<std::size_t> hidden_dims() const;
    Activation activation() const { return activation_; }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& mutable_layers() { return layers_; }

    std::size_t parameter_count() const;

    friend bool operator==(const MappingModel&, const MappingModel&) = default;

private:
    std::vector<Layer> layers_;
    Activation activation_;
};

struct InitScheme {
    enum class Kind { uniform, fan_in_scaled };

    Kind kind = Kind::fan_in_scaled;
    double lo = -1.0;
    double hi = 1.0;

    /// Weights ~ U[lo, hi], biases zero.
    static InitScheme uniform(double lo, double hi);
    /// Weights ~ U[-a, a] with a = sqrt(6 / (d_in + d_out)), biases zero.
    static InitScheme fan_in_scaled() { return {}; }
};

MappingModel init_model(std::size_t d_x, std::size_t d_y, const std::vector<std::size_t>& hidden_dims,
                        Activation activation, const InitScheme& scheme, std::uint64_t seed);

/// Parameter-shaped gradient (or accumulator) storage.
struct Gradients {
    std::vector<Layer> layers;

    static Gradients zeros_like(const MappingModel& model);
    friend bool operator==(const Gradients&, const Gradients&) = default;
};

Matrix forward(const MappingModel& model, const Matrix& x);
VectorSet forward(const MappingModel& model, const VectorSet& x);

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
    std::vector<Matrix> inputs;       ///< input of layer l (post-activation, post-dropout)
    std::vector<Matrix> pre_hidden;   ///< pre-activation of hidden layer l
    std::vector<Matrix> dropout_mask; ///< empty when dropout is off
    Matrix output;
};

/// Forward pass that records what backprop needs. With dropout > 0 and a
/// generator, hidden activations are zeroed with probability `dropout` and the
/// survivors scaled by 1 / (1 - dropout).
ForwardCache forward_cached(const MappingModel& model, const Matrix& x, double dropout = 0.0, Rng* rng = nullptr);

/// Backpropagates per-row upstream gradients; returns `scale` times their sum.
Gradients backprop(const MappingModel& model, const ForwardCache& cache, const Matrix& upstream, double scale);

/// Batch-averaged parameter gradients for upstream dLoss/df(x_i) rows.
Gradients gradients(const MappingModel& model, const Matrix& x_batch, const Matrix& upstream);

/// JSON checkpoint listing dims, activation and row-major parameters.
void save_model(std::ostream& out, const MappingModel& model);
MappingModel load_model(std::istream& in);

}  // namespace crossmap

#endif
