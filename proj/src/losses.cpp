#include "crossmap/errors.hpp"
#include "crossmap/training.hpp"

#include <cmath>
#include <string>

namespace crossmap {

LossKind parse_loss(std::string_view name) {
    if (name == "mse") {
        return LossKind::mse;
    }
    if (name == "cosine" || name == "cos") {
        return LossKind::cosine;
    }
    if (name == "max_margin" || name == "max-margin" || name == "margin") {
        return LossKind::max_margin;
    }
    throw ValidationError("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::mse:
            return "mse";
        case LossKind::cosine:
            return "cosine";
        case LossKind::max_margin:
            return "max_margin";
    }
    return "?";
}

LossValue evaluate_loss(LossKind kind, std::span<const double> pred, std::span<const double> target,
                        const std::optional<MarginContext>& context) {
    if (pred.size() != target.size()) {
        throw ValidationError("loss: prediction has dimension " + std::to_string(pred.size()) + ", target " +
                              std::to_string(target.size()));
    }
    const std::size_t d = pred.size();
    LossValue out;
    out.grad_pred.assign(d, 0.0);

    switch (kind) {
        case LossKind::mse: {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double r = pred[j] - target[j];
                out.grad_pred[j] = r;
                s += r * r;
            }
            out.value = 0.5 * s;
            return out;
        }
        case LossKind::cosine: {
            const double np = std::sqrt(squared_norm(pred));
            const double nt = std::sqrt(squared_norm(target));
            if (np == 0.0 || nt == 0.0) {
                throw ValidationError("cosine loss is undefined for a zero vector");
            }
            const double c = dot(pred, target) / (np * nt);
            for (std::size_t j = 0; j < d; ++j) {
                out.grad_pred[j] = -(target[j] / (np * nt) - c * pred[j] / (np * np));
            }
            out.value = 1.0 - c;
            return out;
        }
        case LossKind::max_margin: {
            if (!context) {
                throw ValidationError("max-margin loss needs a negative example");
            }
            const auto neg = context->negative_pred;
            if (neg.size() != d) {
                throw ValidationError("max-margin: negative prediction has the wrong dimension");
            }
            out.grad_negative.assign(d, 0.0);
            const double pos_dist = std::sqrt(squared_distance(pred, target));
            const double neg_dist = std::sqrt(squared_distance(neg, target));
            const double hinge = context->margin + pos_dist - neg_dist;
            if (hinge <= 0.0) {
                return out;
            }
            out.value = hinge;
            for (std::size_t j = 0; j < d; ++j) {
                if (pos_dist > 0.0) {
                    out.grad_pred[j] = (pred[j] - target[j]) / pos_dist;
                }
                if (neg_dist > 0.0) {
                    out.grad_negative[j] = -(neg[j] - target[j]) / neg_dist;
                }
            }
            return out;
        }
    }
    return out;
}

std::optional<std::size_t> select_negative(const Matrix& preds, const Matrix& targets,
                                           const std::vector<std::string>* labels, std::size_t i, double margin) {
    if (labels == nullptr) {
        throw ValidationError("max-margin needs class labels; use the mse or cosine loss for unlabelled data");
    }
    if (labels->size() != preds.rows() || targets.rows() != preds.rows()) {
        throw ValidationError("select_negative: batch sizes disagree");
    }
    const auto target = targets.row(i);
    const double pos_dist = std::sqrt(squared_distance(preds.row(i), target));
    for (std::size_t j = 0; j < preds.rows(); ++j) {
        if ((*labels)[j] == (*labels)[i]) {
            continue;
        }
        const double neg_dist = std::sqrt(squared_distance(preds.row(j), target));
        if (margin + pos_dist - neg_dist > 0.0) {
            return j;
        }
    }
    return std::nullopt;
}

void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> acc, double lr,
                  double rho, double eps) {
    if (params.size() != grads.size() || params.size() != acc.size()) {
        throw ValidationError("rmsprop: parameter, gradient and accumulator sizes differ");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        acc[i] = rho * acc[i] + (1.0 - rho) * g * g;
        params[i] -= lr * g / (std::sqrt(acc[i]) + eps);
    }
}

void rmsprop_update(MappingModel& model, const Gradients& grads, RmspropState& state, double lr, double rho,
                    double eps) {
    auto& layers = model.mutable_layers();
    if (grads.layers.size() != layers.size() || state.accumulators.layers.size() != layers.size()) {
        throw ValidationError("rmsprop: gradient shape does not match the model");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& acc = state.accumulators.layers[l];
        const auto& g = grads.layers[l];
        if (g.weights.rows() != layers[l].weights.rows() || g.weights.cols() != layers[l].weights.cols()) {
            throw ValidationError("rmsprop: gradient shape does not match layer " + std::to_string(l));
        }
        rmsprop_step(layers[l].weights.values(), g.weights.values(), acc.weights.values(), lr, rho, eps);
        rmsprop_step(layers[l].bias, g.bias, acc.bias, lr, rho, eps);
    }
}

}  // namespace crossmap
