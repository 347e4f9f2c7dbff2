#ifndef CROSSMAP_TRAINING_HPP
#define CROSSMAP_TRAINING_HPP

#include "crossmap/model.hpp"
#include "crossmap/vectors.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crossmap {

enum class LossKind { mse, cosine, max_margin };

LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind k);

/// Prediction of the contrastive item f(x~) and the margin, for max-margin.
struct MarginContext {
    std::span<const double> negative_pred;
    double margin = 1.0;
};

struct LossValue {
    double value = 0.0;
    std::vector<double> grad_pred;      ///< d loss / d pred
    std::vector<double> grad_negative;  ///< d loss / d f(x~); max-margin only
};

/**
 * Per-item loss and its gradient with respect to the prediction.
 *
 *  - mse:        0.5 * ||pred - target||^2
 *  - cosine:     1 - cos(pred, target)
 *  - max_margin: max(0, margin + ||pred - target|| - ||f(x~) - target||)
 */
LossValue evaluate_loss(LossKind kind, std::span<const double> pred, std::span<const double> target,
                        const std::optional<MarginContext>& context = std::nullopt);

/// First j (scan order 0..n-1) whose label differs from item i's and that violates
/// margin + ||pred_i - y_i|| - ||pred_j - y_i|| > 0. Throws if labels are absent.
std::optional<std::size_t> select_negative(const Matrix& preds, const Matrix& targets,
                                           const std::vector<std::string>* labels, std::size_t i, double margin);

struct RmspropState {
    Gradients accumulators;

    static RmspropState for_model(const MappingModel& model) { return {Gradients::zeros_like(model)}; }
};

/// acc <- rho*acc + (1-rho)*g^2;  param <- param - lr*g / (sqrt(acc) + eps)
void rmsprop_step(std::span<double> params, std::span<const double> grads, std::span<double> acc, double lr,
                  double rho, double eps);
void rmsprop_update(MappingModel& model, const Gradients& grads, RmspropState& state, double lr, double rho,
                    double eps);

struct TrainConfig {
    LossKind loss = LossKind::mse;
    double margin = 1.0;
    double learning_rate = 0.001;
    std::size_t batch_size = 64;
    std::size_t epochs = 100;
    double dropout = 0.0;
    double rmsprop_rho = 0.9;
    double rmsprop_eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t neighbor_k = 10;
    Measure neighbor_measure = Measure::cosine;
    bool track_neighbors = true;
    /// Search test-item neighbourhoods among train + test items instead of the test set only.
    bool pool_test_neighbors = false;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  ///< 1-based
    double train_loss = 0.0;
    double test_loss = 0.0;
    double mnno_x_train = 0.0;  ///< mNNO(X, f(X)) on the training items
    double mnno_x_test = 0.0;
    double mnno_y_train = 0.0;  ///< mNNO(Y, f(X)) on the training items
    double mnno_y_test = 0.0;
};

/// One record per completed epoch. Untracked quantities are NaN and export as empty CSV cells.
struct TrainHistory {
    std::vector<EpochRecord> epochs;

    void write_csv(std::ostream& out) const;
};

struct BatchLoss {
    double value = 0.0;  ///< mean over the batch
    Gradients grads;     ///< batch-mean gradient
    std::vector<std::optional<std::size_t>> negatives;
};

/**
 * Mean loss of a batch and its parameter gradient.
 *
 * For max-margin, negatives are chosen inside the batch with select_negative
 * unless `fixed_negatives` is given, and the gradient flows through both
 * f(x_i) and f(x~). Dropout applies only when `dropout_rng` is non-null.
 */
BatchLoss batch_loss(const MappingModel& model, const Matrix& x, const Matrix& y,
                     const std::vector<std::string>* labels, const TrainConfig& config, Rng* dropout_rng = nullptr,
                     const std::vector<std::optional<std::size_t>>* fixed_negatives = nullptr);

/// Eval-mode mean loss over a whole set; max-margin scans negatives within
/// consecutive chunks of `batch_size` items in dataset order.
double dataset_loss(const MappingModel& model, const PairedDataset& data, const TrainConfig& config);

struct TrainResult {
    MappingModel model;
    TrainHistory history;
};

/// Mini-batch RMSprop training with seeded epoch reshuffling. Throws
/// TrainingDiverged when a loss becomes non-finite or exceeds 1e12.
TrainResult train(MappingModel model, const PairedDataset& train_set, const PairedDataset& test_set,
                  const TrainConfig& config);

// ---------------------------------------------------------------------------
// Cross-validated grid search

struct GridSpace {
    std::vector<double> learning_rates{0.01, 0.001, 0.0001};
    std::vector<std::size_t> hidden_units{64, 128, 256, 512, 1024};
    std::vector<double> margins{1.0, 2.5, 5.0, 7.5, 10.0};
    std::vector<double> dropouts{0.0};

    void validate() const;
};

struct ModelSpace {
    std::size_t hidden_layers = 1;  ///< 0 = linear
    Activation activation = Activation::relu;
    InitScheme init = InitScheme::fan_in_scaled();
};

struct GridCell {
    double learning_rate = 0.0;
    std::size_t hidden_units = 0;  ///< 0 for linear models
    double margin = 0.0;           ///< only meaningful for max-margin
    double dropout = 0.0;
};

struct CellResult {
    GridCell cell;
    bool failed = false;
    std::string failure;
    std::vector<double> mean_test_loss;  ///< per epoch, averaged over folds
    std::size_t best_epoch = 0;          ///< 1-based
    double best_loss = 0.0;
};

struct GridResult {
    std::vector<CellResult> cells;
    std::optional<std::size_t> best;  ///< index into cells; empty when every cell failed

    void write_csv(std::ostream& out) const;
};

/// Seed used to initialise the model of fold `fold`; shared by all grid cells.
std::uint64_t fold_init_seed(std::uint64_t seed, std::size_t fold);

MappingModel init_for(const ModelSpace& space, const GridCell& cell, std::size_t d_x, std::size_t d_y,
                      std::uint64_t seed);

/// Configuration of one cell on top of `base`.
TrainConfig config_for(const TrainConfig& base, const GridCell& cell);

/// Exhaustive k-fold evaluation of every cell. The winner has the lowest mean
/// CV test loss (at its best epoch); ties go to fewer hidden units, then the
/// smaller learning rate. Diverging cells are marked failed and excluded.
GridResult grid_search_cv(const PairedDataset& dataset, const ModelSpace& model_space, const GridSpace& grid,
                          const TrainConfig& base, std::size_t k_folds, std::uint64_t seed);

}  // namespace crossmap

#endif
