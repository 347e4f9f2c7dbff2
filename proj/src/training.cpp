#include "crossmap/training.hpp"

#include "crossmap/errors.hpp"
#include "crossmap/neighborhood.hpp"
#include "text_util.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace crossmap {

namespace {

constexpr double kDivergenceLimit = 1e12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool diverged(double loss) { return !std::isfinite(loss) || loss > kDivergenceLimit; }

std::string csv_cell(double v) { return std::isnan(v) ? std::string() : detail::format_real(v); }

}  // namespace

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ValidationError("learning rate must be positive");
    }
    if (batch_size == 0) {
        throw ValidationError("batch size must be positive");
    }
    if (!(margin >= 0.0)) {
        throw ValidationError("margin must be non-negative");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        throw ValidationError("dropout must lie in [0, 1)");
    }
    if (!(rmsprop_rho >= 0.0 && rmsprop_rho < 1.0)) {
        throw ValidationError("rmsprop rho must lie in [0, 1)");
    }
    if (!(rmsprop_eps > 0.0)) {
        throw ValidationError("rmsprop epsilon must be positive");
    }
    if (track_neighbors && neighbor_k == 0) {
        throw ValidationError("neighbour k must be positive");
    }
}

void TrainHistory::write_csv(std::ostream& out) const {
    out << "epoch,train_loss,test_loss,mnno_x_train,mnno_x_test,mnno_y_train,mnno_y_test\n";
    for (const auto& r : epochs) {
        out << r.epoch << ',' << csv_cell(r.train_loss) << ',' << csv_cell(r.test_loss) << ','
            << csv_cell(r.mnno_x_train) << ',' << csv_cell(r.mnno_x_test) << ',' << csv_cell(r.mnno_y_train) << ','
            << csv_cell(r.mnno_y_test) << '\n';
    }
}

BatchLoss batch_loss(const MappingModel& model, const Matrix& x, const Matrix& y,
                     const std::vector<std::string>* labels, const TrainConfig& config, Rng* dropout_rng,
                     const std::vector<std::optional<std::size_t>>* fixed_negatives) {
    const std::size_t n = x.rows();
    if (n == 0 || y.rows() != n) {
        throw ValidationError("batch_loss: empty batch or mismatched targets");
    }
    if (y.cols() != model.output_dim()) {
        throw ValidationError("batch_loss: target dimension " + std::to_string(y.cols()) + ", model outputs " +
                              std::to_string(model.output_dim()));
    }
    const auto cache = forward_cached(model, x, config.dropout, dropout_rng);
    const Matrix& preds = cache.output;
    Matrix upstream(n, preds.cols());

    BatchLoss out;
    double total = 0.0;
    if (config.loss == LossKind::max_margin) {
        out.negatives.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.negatives[i] = fixed_negatives ? fixed_negatives->at(i)
                                               : select_negative(preds, y, labels, i, config.margin);
            const auto& neg = out.negatives[i];
            if (!neg) {
                continue;
            }
            const auto lv = evaluate_loss(LossKind::max_margin, preds.row(i), y.row(i),
                                          MarginContext{preds.row(*neg), config.margin});
            total += lv.value;
            auto up_i = upstream.row(i);
            auto up_j = upstream.row(*neg);
            for (std::size_t d = 0; d < up_i.size(); ++d) {
                up_i[d] += lv.grad_pred[d];
                up_j[d] += lv.grad_negative[d];
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const auto lv = evaluate_loss(config.loss, preds.row(i), y.row(i));
            total += lv.value;
            std::copy(lv.grad_pred.begin(), lv.grad_pred.end(), upstream.row(i).begin());
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    out.value = total * inv_n;
    out.grads = backprop(model, cache, upstream, inv_n);
    return out;
}

double dataset_loss(const MappingModel& model, const PairedDataset& data, const TrainConfig& config) {
    if (data.size() == 0) {
        return kNaN;
    }
    const Matrix preds = forward(model, data.x().values());
    const Matrix& targets = data.y().values();
    double total = 0.0;
    if (config.loss != LossKind::max_margin) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            total += evaluate_loss(config.loss, preds.row(i), targets.row(i)).value;
        }
        return total / static_cast<double>(data.size());
    }
    if (!data.has_labels()) {
        throw ValidationError("max-margin needs class labels; use the mse or cosine loss for unlabelled data");
    }
    for (std::size_t start = 0; start < data.size(); start += config.batch_size) {
        const std::size_t end = std::min(data.size(), start + config.batch_size);
        std::vector<std::size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Matrix p = preds.select_rows(idx);
        const Matrix t = targets.select_rows(idx);
        std::vector<std::string> labels;
        for (auto i : idx) {
            labels.push_back((*data.labels())[i]);
        }
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (auto neg = select_negative(p, t, &labels, i, config.margin)) {
                total += evaluate_loss(LossKind::max_margin, p.row(i), t.row(i), MarginContext{p.row(*neg), config.margin})
                             .value;
            }
        }
    }
    return total / static_cast<double>(data.size());
}

namespace {

struct OverlapPair {
    double with_x = kNaN;
    double with_y = kNaN;
};

OverlapPair overlaps(const Matrix& x, const Matrix& y, const Matrix& fx, const TrainConfig& config) {
    if (x.rows() < 2) {
        return {};
    }
    const auto nfx = top_k_neighbors(fx, config.neighbor_k, config.neighbor_measure);
    const auto nx = top_k_neighbors(x, config.neighbor_k, config.neighbor_measure);
    const auto ny = top_k_neighbors(y, config.neighbor_k, config.neighbor_measure);
    return {mean_nn_overlap(nx, nfx), mean_nn_overlap(ny, nfx)};
}

Matrix stack(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() + b.rows(), a.cols());
    auto v = out.values();
    std::copy(a.values().begin(), a.values().end(), v.begin());
    std::copy(b.values().begin(), b.values().end(), v.begin() + static_cast<std::ptrdiff_t>(a.size()));
    return out;
}

OverlapPair pooled_overlaps(const PairedDataset& train_set, const PairedDataset& test_set, const Matrix& fx_train,
                            const Matrix& fx_test, const TrainConfig& config) {
    std::vector<std::size_t> queries(test_set.size());
    std::iota(queries.begin(), queries.end(), train_set.size());
    const Matrix x = stack(train_set.x().values(), test_set.x().values());
    const Matrix y = stack(train_set.y().values(), test_set.y().values());
    const Matrix fx = stack(fx_train, fx_test);
    return {mean_nn_overlap_over(x, fx, queries, config.neighbor_k, config.neighbor_measure),
            mean_nn_overlap_over(y, fx, queries, config.neighbor_k, config.neighbor_measure)};
}

}  // namespace

TrainResult train(MappingModel model, const PairedDataset& train_set, const PairedDataset& test_set,
                  const TrainConfig& config) {
    config.validate();
    if (train_set.size() == 0) {
        throw ValidationError("train: empty training set");
    }
    if (train_set.x().dim() != model.input_dim() || train_set.y().dim() != model.output_dim()) {
        throw ValidationError("train: data is " + std::to_string(train_set.x().dim()) + " -> " +
                              std::to_string(train_set.y().dim()) + " but the model maps " +
                              std::to_string(model.input_dim()) + " -> " + std::to_string(model.output_dim()));
    }
    if (test_set.size() > 0 &&
        (test_set.x().dim() != model.input_dim() || test_set.y().dim() != model.output_dim())) {
        throw ValidationError("train: test set dimensions do not match the model");
    }
    if (config.loss == LossKind::max_margin && !train_set.has_labels()) {
        throw ValidationError("max-margin needs class labels; use the mse or cosine loss for unlabelled data");
    }

    Rng order_rng(derive_seed(config.seed, 0x0DE5));
    Rng dropout_rng(derive_seed(config.seed, 0xD80));
    RmspropState state = RmspropState::for_model(model);
    TrainHistory history;

    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Matrix& xs = train_set.x().values();
    const Matrix& ys = train_set.y().values();

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t end = std::min(n, start + config.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix xb = xs.select_rows(idx);
            const Matrix yb = ys.select_rows(idx);
            std::vector<std::string> labels;
            if (train_set.has_labels()) {
                for (auto i : idx) {
                    labels.push_back((*train_set.labels())[i]);
                }
            }
            auto bl = batch_loss(model, xb, yb, train_set.has_labels() ? &labels : nullptr, config,
                                 config.dropout > 0.0 ? &dropout_rng : nullptr);
            if (diverged(bl.value)) {
                throw TrainingDiverged(epoch, bl.value);
            }
            rmsprop_update(model, bl.grads, state, config.learning_rate, config.rmsprop_rho, config.rmsprop_eps);
        }

        EpochRecord rec{epoch, dataset_loss(model, train_set, config), dataset_loss(model, test_set, config),
                        kNaN, kNaN, kNaN, kNaN};
        if (diverged(rec.train_loss)) {
            throw TrainingDiverged(epoch, rec.train_loss);
        }
        if (config.track_neighbors) {
            const Matrix fx_train = forward(model, xs);
            const auto tr = overlaps(xs, ys, fx_train, config);
            rec.mnno_x_train = tr.with_x;
            rec.mnno_y_train = tr.with_y;
            if (test_set.size() > 0) {
                const Matrix fx_test = forward(model, test_set.x().values());
                const auto te = config.pool_test_neighbors
                                    ? pooled_overlaps(train_set, test_set, fx_train, fx_test, config)
                                    : overlaps(test_set.x().values(), test_set.y().values(), fx_test, config);
                rec.mnno_x_test = te.with_x;
                rec.mnno_y_test = te.with_y;
            }
        }
        history.epochs.push_back(rec);
    }
    return {std::move(model), std::move(history)};
}

}  // namespace crossmap
