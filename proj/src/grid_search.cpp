#include "crossmap/errors.hpp"
#include "crossmap/training.hpp"
#include "text_util.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

namespace crossmap {

void GridSpace::validate() const {
    if (learning_rates.empty() || hidden_units.empty() || margins.empty() || dropouts.empty()) {
        throw ValidationError("grid search: every grid must have at least one value");
    }
}

void GridResult::write_csv(std::ostream& out) const {
    out << "learning_rate,hidden_units,margin,dropout,status,best_epoch,mean_cv_test_loss,selected\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const auto& r = cells[c];
        out << detail::format_real(r.cell.learning_rate) << ',' << r.cell.hidden_units << ','
            << detail::format_real(r.cell.margin) << ',' << detail::format_real(r.cell.dropout) << ','
            << (r.failed ? "FAILED" : "ok") << ',';
        if (!r.failed) {
            out << r.best_epoch << ',' << detail::format_real(r.best_loss);
        } else {
            out << ',';
        }
        out << ',' << (best && *best == c ? "yes" : "no") << '\n';
    }
}

std::uint64_t fold_init_seed(std::uint64_t seed, std::size_t fold) { return derive_seed(seed, 1000 + fold); }

MappingModel init_for(const ModelSpace& space, const GridCell& cell, std::size_t d_x, std::size_t d_y,
                      std::uint64_t seed) {
    std::vector<std::size_t> hidden(space.hidden_layers, cell.hidden_units);
    return init_model(d_x, d_y, hidden, space.activation, space.init, seed);
}

TrainConfig config_for(const TrainConfig& base, const GridCell& cell) {
    TrainConfig cfg = base;
    cfg.learning_rate = cell.learning_rate;
    cfg.margin = cell.margin;
    cfg.dropout = cell.dropout;
    return cfg;
}

namespace {

std::vector<GridCell> enumerate_cells(const ModelSpace& space, const GridSpace& grid, const TrainConfig& base) {
    const std::vector<std::size_t> units = space.hidden_layers == 0 ? std::vector<std::size_t>{0} : grid.hidden_units;
    const std::vector<double> margins =
        base.loss == LossKind::max_margin ? grid.margins : std::vector<double>{base.margin};
    const std::vector<double> dropouts = space.hidden_layers == 0 ? std::vector<double>{0.0} : grid.dropouts;
    std::vector<GridCell> cells;
    for (double lr : grid.learning_rates) {
        for (auto h : units) {
            for (double m : margins) {
                for (double d : dropouts) {
                    cells.push_back({lr, h, m, d});
                }
            }
        }
    }
    return cells;
}

}  // namespace

GridResult grid_search_cv(const PairedDataset& dataset, const ModelSpace& model_space, const GridSpace& grid,
                          const TrainConfig& base, std::size_t k_folds, std::uint64_t seed) {
    grid.validate();
    base.validate();
    const auto folds = k_fold_split(dataset, k_folds, seed);
    const auto cells = enumerate_cells(model_space, grid, base);

    GridResult result;
    result.cells.resize(cells.size());
    const std::ptrdiff_t n_cells = static_cast<std::ptrdiff_t>(cells.size());

    // Cells are independent and fully seeded; each writes only its own slot.
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t c = 0; c < n_cells; ++c) {
        auto& r = result.cells[static_cast<std::size_t>(c)];
        r.cell = cells[static_cast<std::size_t>(c)];
        TrainConfig cfg = config_for(base, r.cell);
        cfg.track_neighbors = false;
        r.mean_test_loss.assign(cfg.epochs, 0.0);
        try {
            for (std::size_t f = 0; f < folds.size(); ++f) {
                cfg.seed = derive_seed(seed, f);
                auto model = init_for(model_space, r.cell, dataset.x().dim(), dataset.y().dim(),
                                      fold_init_seed(seed, f));
                const auto trained = train(std::move(model), folds[f].train, folds[f].test, cfg);
                for (std::size_t e = 0; e < cfg.epochs; ++e) {
                    const double loss = trained.history.epochs[e].test_loss;
                    if (!std::isfinite(loss)) {
                        throw TrainingDiverged(e + 1, loss);
                    }
                    r.mean_test_loss[e] += loss / static_cast<double>(folds.size());
                }
            }
            r.best_epoch = 0;
            r.best_loss = std::numeric_limits<double>::infinity();
            for (std::size_t e = 0; e < r.mean_test_loss.size(); ++e) {
                if (r.mean_test_loss[e] < r.best_loss) {
                    r.best_loss = r.mean_test_loss[e];
                    r.best_epoch = e + 1;
                }
            }
            if (r.best_epoch == 0) {
                r.failed = true;
                r.failure = "no finite test loss";
            }
        } catch (const std::exception& e) {
            r.failed = true;
            r.failure = e.what();
        }
    }

    for (std::size_t c = 0; c < result.cells.size(); ++c) {
        const auto& r = result.cells[c];
        if (r.failed) {
            continue;
        }
        if (!result.best) {
            result.best = c;
            continue;
        }
        const auto& b = result.cells[*result.best];
        const auto key = [](const CellResult& x) {
            return std::make_tuple(x.best_loss, x.cell.hidden_units, x.cell.learning_rate, x.cell.margin,
                                   x.cell.dropout);
        };
        if (key(r) < key(b)) {
            result.best = c;
        }
    }
    return result;
}

}  // namespace crossmap
