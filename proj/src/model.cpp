#include "crossmap/model.hpp"

#include "crossmap/errors.hpp"
#include "crossmap/kernels.hpp"

#include <json.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace crossmap {

Activation parse_activation(std::string_view name) {
    if (name == "relu") {
        return Activation::relu;
    }
    if (name == "tanh") {
        return Activation::tanh;
    }
    if (name == "sigmoid") {
        return Activation::sigmoid;
    }
    throw ValidationError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::relu:
            return "relu";
        case Activation::tanh:
            return "tanh";
        case Activation::sigmoid:
            return "sigmoid";
    }
    return "?";
}

namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::relu:
            return z > 0.0 ? z : 0.0;
        case Activation::tanh:
            return std::tanh(z);
        case Activation::sigmoid:
            return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

// Derivative in terms of the pre-activation. relu'(0) = 0.
double activate_derivative(Activation a, double z) {
    switch (a) {
        case Activation::relu:
            return z > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
    }
    return 1.0;
}

}  // namespace

MappingModel::MappingModel(std::vector<Layer> layers, Activation hidden_activation)
    : layers_(std::move(layers)), activation_(hidden_activation) {
    if (layers_.empty()) {
        throw ValidationError("mapping model needs at least one layer");
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.in_dim() == 0 || layer.out_dim() == 0) {
            throw ValidationError("layer " + std::to_string(l) + " has a zero dimension");
        }
        if (layer.bias.size() != layer.out_dim()) {
            throw ValidationError("layer " + std::to_string(l) + ": bias has " + std::to_string(layer.bias.size()) +
                                  " entries, expected " + std::to_string(layer.out_dim()));
        }
        if (l > 0 && layer.in_dim() != layers_[l - 1].out_dim()) {
            throw ValidationError("layer " + std::to_string(l) + " expects input dimension " +
                                  std::to_string(layer.in_dim()) + " but layer " + std::to_string(l - 1) +
                                  " produces " + std::to_string(layers_[l - 1].out_dim()));
        }
        if (!layer.weights.all_finite()) {
            throw ValidationError("layer " + std::to_string(l) + " has non-finite weights");
        }
        for (double b : layer.bias) {
            if (!std::isfinite(b)) {
                throw ValidationError("layer " + std::to_string(l) + " has a non-finite bias");
            }
        }
    }
}

std::vector<std::size_t> MappingModel::hidden_dims() const {
    std::vector<std::size_t> dims;
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
        dims.push_back(layers_[l].out_dim());
    }
    return dims;
}

std::size_t MappingModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) {
        n += layer.weights.size() + layer.bias.size();
    }
    return n;
}

InitScheme InitScheme::uniform(double lo, double hi) {
    if (!(lo < hi)) {
        throw ValidationError("uniform init needs lo < hi");
    }
    return {Kind::uniform, lo, hi};
}

MappingModel init_model(std::size_t d_x, std::size_t d_y, const std::vector<std::size_t>& hidden_dims,
                        Activation activation, const InitScheme& scheme, std::uint64_t seed) {
    if (d_x == 0 || d_y == 0) {
        throw ValidationError("init_model: input and output dimensions must be positive");
    }
    std::vector<std::size_t> dims{d_x};
    for (auto h : hidden_dims) {
        if (h == 0) {
            throw ValidationError("init_model: hidden layer sizes must be positive");
        }
        dims.push_back(h);
    }
    dims.push_back(d_y);

    Rng rng(seed);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l];
        const std::size_t out = dims[l + 1];
        double lo = scheme.lo;
        double hi = scheme.hi;
        if (scheme.kind == InitScheme::Kind::fan_in_scaled) {
            hi = std::sqrt(6.0 / static_cast<double>(in + out));
            lo = -hi;
        }
        Layer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
        for (double& w : layer.weights.values()) {
            w = rng.uniform(lo, hi);
        }
        layers.push_back(std::move(layer));
    }
    return {std::move(layers), activation};
}

Gradients Gradients::zeros_like(const MappingModel& model) {
    Gradients g;
    for (const auto& layer : model.layers()) {
        g.layers.push_back({Matrix(layer.out_dim(), layer.in_dim()), std::vector<double>(layer.out_dim(), 0.0)});
    }
    return g;
}

ForwardCache forward_cached(const MappingModel& model, const Matrix& x, double dropout, Rng* rng) {
    if (x.cols() != model.input_dim()) {
        throw ValidationError("forward: input dimension " + std::to_string(x.cols()) + ", model expects " +
                              std::to_string(model.input_dim()));
    }
    const bool use_dropout = dropout > 0.0 && rng != nullptr;
    const double keep_scale = use_dropout ? 1.0 / (1.0 - dropout) : 1.0;
    const auto& layers = model.layers();

    ForwardCache cache;
    Matrix current = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        Matrix z(current.rows(), layer.out_dim());
        kernels::affine_rows(current, layer.weights, layer.bias, z);
        cache.inputs.push_back(std::move(current));
        if (l + 1 == layers.size()) {
            cache.output = std::move(z);
            break;
        }
        Matrix a(z.rows(), z.cols());
        auto zv = z.values();
        auto av = a.values();
        for (std::size_t i = 0; i < zv.size(); ++i) {
            av[i] = activate(model.activation(), zv[i]);
        }
        if (use_dropout) {
            // Mask drawn serially so the stream does not depend on thread count.
            Matrix mask(z.rows(), z.cols());
            auto mv = mask.values();
            for (std::size_t i = 0; i < mv.size(); ++i) {
                mv[i] = rng->bernoulli(dropout) ? 0.0 : keep_scale;
                av[i] *= mv[i];
            }
            cache.dropout_mask.push_back(std::move(mask));
        }
        cache.pre_hidden.push_back(std::move(z));
        current = std::move(a);
    }
    return cache;
}

Gradients backprop(const MappingModel& model, const ForwardCache& cache, const Matrix& upstream, double scale) {
    const auto& layers = model.layers();
    if (upstream.rows() != cache.output.rows() || upstream.cols() != cache.output.cols()) {
        throw ValidationError("backprop: upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                              std::to_string(upstream.cols()) + ", expected " +
                              std::to_string(cache.output.rows()) + "x" + std::to_string(cache.output.cols()));
    }
    Gradients grads = Gradients::zeros_like(model);
    Matrix delta = upstream;
    for (std::size_t l = layers.size(); l-- > 0;) {
        auto& g = grads.layers[l];
        kernels::accumulate_outer(delta, cache.inputs[l], scale, g.weights);
        for (std::size_t i = 0; i < delta.rows(); ++i) {
            const auto d = delta.row(i);
            for (std::size_t o = 0; o < d.size(); ++o) {
                g.bias[o] += scale * d[o];
            }
        }
        if (l == 0) {
            break;
        }
        Matrix below(delta.rows(), layers[l].in_dim());
        kernels::transpose_product_rows(delta, layers[l].weights, below);
        const auto zv = cache.pre_hidden[l - 1].values();
        auto bv = below.values();
        const bool masked = !cache.dropout_mask.empty();
        for (std::size_t i = 0; i < bv.size(); ++i) {
            bv[i] *= activate_derivative(model.activation(), zv[i]);
            if (masked) {
                bv[i] *= cache.dropout_mask[l - 1].values()[i];
            }
        }
        delta = std::move(below);
    }
    return grads;
}

Gradients gradients(const MappingModel& model, const Matrix& x_batch, const Matrix& upstream) {
    if (x_batch.rows() == 0) {
        throw ValidationError("gradients: empty batch");
    }
    if (upstream.rows() != x_batch.rows()) {
        throw ValidationError("gradients: " + std::to_string(upstream.rows()) + " upstream rows for " +
                              std::to_string(x_batch.rows()) + " inputs");
    }
    const auto cache = forward_cached(model, x_batch);
    return backprop(model, cache, upstream, 1.0 / static_cast<double>(x_batch.rows()));
}

Matrix forward(const MappingModel& model, const Matrix& x) { return forward_cached(model, x).output; }

VectorSet forward(const MappingModel& model, const VectorSet& x) {
    return {x.keys(), forward(model, x.values())};
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_model(std::ostream& out, const MappingModel& model) {
    nlohmann::ordered_json doc;
    doc["format"] = "crossmap-model";
    doc["version"] = 1;
    doc["input_dim"] = model.input_dim();
    doc["output_dim"] = model.output_dim();
    doc["hidden_dims"] = model.hidden_dims();
    doc["activation"] = std::string(to_string(model.activation()));
    auto& layers = doc["layers"] = nlohmann::ordered_json::array();
    for (const auto& layer : model.layers()) {
        nlohmann::ordered_json l;
        l["rows"] = layer.out_dim();
        l["cols"] = layer.in_dim();
        l["weights"] = layer.weights.storage();
        l["bias"] = layer.bias;
        layers.push_back(std::move(l));
    }
    out << doc.dump(1) << '\n';
}

MappingModel load_model(std::istream& in) {
    nlohmann::json doc;
    try {
        in >> doc;
        if (doc.at("format").get<std::string>() != "crossmap-model") {
            throw ValidationError("not a crossmap model checkpoint");
        }
        std::vector<Layer> layers;
        for (const auto& l : doc.at("layers")) {
            const auto rows = l.at("rows").get<std::size_t>();
            const auto cols = l.at("cols").get<std::size_t>();
            layers.push_back({Matrix(rows, cols, l.at("weights").get<std::vector<double>>()),
                              l.at("bias").get<std::vector<double>>()});
        }
        return {std::move(layers), parse_activation(doc.at("activation").get<std::string>())};
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed model checkpoint: ") + e.what());
    }
}

}  // namespace crossmap
