#include "crossmap/experiment.hpp"

#include "crossmap/errors.hpp"
#include "crossmap/neighborhood.hpp"
#include "text_util.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace crossmap {

using nlohmann::ordered_json;

LoadedDataset load_dataset(const DatasetSource& source) {
    switch (source.kind) {
        case DatasetSource::Kind::synthetic:
            return {generate_synthetic_paired(source.synthetic), std::nullopt};
        case DatasetSource::Kind::paired_tsv:
            return {load_paired_tsv(source.paired_path), std::nullopt};
        case DatasetSource::Kind::separate: {
            auto paired = pair_by_keys(load_vector_set(source.x_path, source.x_format),
                                       load_vector_set(source.y_path, source.y_format));
            return {std::move(paired.dataset), std::move(paired.diagnostics)};
        }
    }
    throw ValidationError("unknown dataset kind");
}

std::size_t parse_model_depth(std::string_view name) {
    if (name == "lin") {
        return 0;
    }
    if (name == "nn") {
        return 1;
    }
    if (name.starts_with("nn-")) {
        std::size_t depth = 0;
        const auto digits = name.substr(3);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), depth);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && depth > 0) {
            return depth;
        }
    }
    throw ValidationError("unknown model '" + std::string(name) + "' (expected lin, nn, or nn-<layers>)");
}

void write_artifacts(const std::filesystem::path& out_dir, const Artifacts& artifacts) {
    for (const auto& [rel, contents] : artifacts) {
        const auto path = out_dir / rel;
        std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write '" + path.string() + "'");
        }
        out << contents;
        if (!out) {
            throw std::runtime_error("failed writing '" + path.string() + "'");
        }
    }
}

namespace {

ordered_json dataset_json(const DatasetSource& src, const PairedDataset& data) {
    ordered_json j;
    switch (src.kind) {
        case DatasetSource::Kind::synthetic: {
            const auto& s = src.synthetic;
            j["kind"] = "synthetic";
            j["n_classes"] = s.n_classes;
            j["items_per_class"] = s.items_per_class;
            j["cross_map"] = to_string(s.cross_map);
            j["noise_x"] = s.noise_x;
            j["noise_y"] = s.noise_y;
            j["seed"] = s.seed;
            break;
        }
        case DatasetSource::Kind::paired_tsv:
            j["kind"] = "paired_tsv";
            j["path"] = src.paired_path.generic_string();
            break;
        case DatasetSource::Kind::separate:
            j["kind"] = "separate";
            j["x_path"] = src.x_path.generic_string();
            j["y_path"] = src.y_path.generic_string();
            break;
    }
    j["items"] = data.size();
    j["d_x"] = data.x().dim();
    j["d_y"] = data.y().dim();
    return j;
}

template <typename Fn>
std::string to_text(Fn&& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

/// Per-item overlap fractions of the query items. With `pooled`, neighbours
/// are searched among all rows; otherwise among the query rows only.
std::vector<double> item_overlaps(const Matrix& v, const Matrix& z, std::span<const std::size_t> queries,
                                  std::size_t k, Measure measure, bool pooled) {
    std::vector<double> out;
    out.reserve(queries.size());
    if (pooled) {
        const auto nv = top_k_neighbors(v, k, measure);
        const auto nz = top_k_neighbors(z, k, measure);
        const double k_eff = static_cast<double>(nv.k_effective());
        for (auto q : queries) {
            out.push_back(static_cast<double>(nn_overlap(nv.row(q), nz.row(q))) / k_eff);
        }
        return out;
    }
    const auto nv = top_k_neighbors(v.select_rows(queries), k, measure);
    const auto nz = top_k_neighbors(z.select_rows(queries), k, measure);
    const double k_eff = static_cast<double>(nv.k_effective());
    for (auto o : per_item_overlap(nv, nz)) {
        out.push_back(static_cast<double>(o) / k_eff);
    }
    return out;
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Rows of `train` followed by rows of `test`.
Matrix stack(const Matrix& train, const Matrix& test) {
    Matrix out(train.rows() + test.rows(), train.cols());
    std::copy(train.values().begin(), train.values().end(), out.values().begin());
    std::copy(test.values().begin(), test.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(train.size()));
    return out;
}

struct RunKey {
    Direction direction;
    std::string model;
    LossKind loss;

    std::string slug() const {
        return std::string(to_string(direction)) + "_" + model + "_" + std::string(to_string(loss));
    }
};

/// Test overlaps of one fold for every k: (X, f(X)), (Y, f(X)), (X, Y).
struct FoldOverlaps {
    std::vector<std::vector<double>> x_fx, y_fx, x_y;  // [k][item]
};

FoldOverlaps fold_overlaps(const MappingModel& model, const Fold& fold, const Exp1Config& cfg) {
    FoldOverlaps out;
    const Matrix fx_test = forward(model, fold.test.x().values());
    Matrix x, y, fx;
    std::vector<std::size_t> queries(fold.test.size());
    if (cfg.pool_test_neighbors) {
        x = stack(fold.train.x().values(), fold.test.x().values());
        y = stack(fold.train.y().values(), fold.test.y().values());
        fx = stack(forward(model, fold.train.x().values()), fx_test);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            queries[i] = fold.train.size() + i;
        }
    } else {
        x = fold.test.x().values();
        y = fold.test.y().values();
        fx = fx_test;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            queries[i] = i;
        }
    }
    for (auto k : cfg.ks) {
        out.x_fx.push_back(item_overlaps(x, fx, queries, k, cfg.measure, cfg.pool_test_neighbors));
        out.y_fx.push_back(item_overlaps(y, fx, queries, k, cfg.measure, cfg.pool_test_neighbors));
        out.x_y.push_back(item_overlaps(x, y, queries, k, cfg.measure, cfg.pool_test_neighbors));
    }
    return out;
}

}  // namespace

Exp1Output run_experiment1(const Exp1Config& config) {
    config.validate();
    const LoadedDataset loaded = load_dataset(config.dataset);
    for (auto loss : config.losses) {
        if (loss == LossKind::max_margin && !loaded.data.has_labels()) {
            throw ValidationError("max_margin loss needs class labels in the dataset");
        }
    }
    if (loaded.data.size() < 2 * config.folds) {
        throw ValidationError("dataset has " + std::to_string(loaded.data.size()) + " items, too few for " +
                              std::to_string(config.folds) + " folds");
    }

    Exp1Output out;
    ordered_json prov;
    prov["name"] = config.name;
    prov["seed"] = config.seed;
    prov["dataset"] = dataset_json(config.dataset, loaded.data);
    prov["folds"] = config.folds;
    prov["measure"] = to_string(config.measure);
    prov["pool_test_neighbors"] = config.pool_test_neighbors;
    prov["significance_unit"] = config.unit == SignificanceUnit::fold ? "fold" : "item";
    prov["runs"] = ordered_json::array();
    if (loaded.pairing) {
        out.artifacts["pairing.txt"] = loaded.pairing->to_text();
    }

    TrainConfig base;
    base.batch_size = config.batch_size;
    base.epochs = config.epochs;
    base.rmsprop_rho = config.rmsprop_rho;
    base.rmsprop_eps = config.rmsprop_eps;
    base.neighbor_k = config.ks.front();
    base.neighbor_measure = config.measure;
    base.pool_test_neighbors = config.pool_test_neighbors;

    std::vector<std::size_t> tested_rows;
    for (auto direction : config.directions) {
        const PairedDataset data = direction == Direction::x_to_y ? loaded.data : loaded.data.swapped();
        const auto folds = k_fold_split(data, config.folds, config.seed);
        if (direction == config.directions.front()) {
            auto& fold_keys = prov["fold_test_keys"] = ordered_json::array();
            for (const auto& f : folds) {
                fold_keys.push_back(f.test.keys());
            }
        }
        for (const auto& model_name : config.models) {
            for (auto loss : config.losses) {
                const RunKey key{direction, model_name, loss};
                ModelSpace space{parse_model_depth(model_name), config.activation, InitScheme::fan_in_scaled()};
                TrainConfig run_base = base;
                run_base.loss = loss;

                ordered_json run;
                run["direction"] = to_string(direction);
                run["model"] = model_name;
                run["loss"] = to_string(loss);

                MappingRow proto;
                proto.dataset = config.name;
                proto.direction = direction;
                proto.model = model_name;
                proto.loss = loss;
                proto.measure = config.measure;

                const auto grid = grid_search_cv(data, space, config.grid, run_base, config.folds, config.seed);
                out.artifacts["grid/" + key.slug() + ".csv"] = to_text([&](std::ostream& o) { grid.write_csv(o); });

                std::string failure;
                std::vector<FoldOverlaps> per_fold;
                if (!grid.best) {
                    failure = grid.cells.empty() ? "no grid cells" : "every grid cell failed: " + grid.cells[0].failure;
                } else {
                    const auto& best = grid.cells[*grid.best];
                    TrainConfig cfg = config_for(run_base, best.cell);
                    cfg.epochs = best.best_epoch;
                    run["selected"] = {{"learning_rate", best.cell.learning_rate},
                                       {"hidden_units", best.cell.hidden_units},
                                       {"margin", best.cell.margin},
                                       {"dropout", best.cell.dropout},
                                       {"best_epoch", best.best_epoch},
                                       {"mean_cv_test_loss", best.best_loss}};
                    proto.learning_rate = best.cell.learning_rate;
                    if (space.hidden_layers > 0) {
                        proto.hidden_units = best.cell.hidden_units;
                        proto.dropout = best.cell.dropout;
                    }
                    if (loss == LossKind::max_margin) {
                        proto.margin = best.cell.margin;
                    }
                    proto.epochs = best.best_epoch;
                    try {
                        for (std::size_t f = 0; f < folds.size(); ++f) {
                            cfg.seed = derive_seed(config.seed, f);
                            cfg.track_neighbors = config.write_histories;
                            auto model = init_for(space, best.cell, data.x().dim(), data.y().dim(),
                                                  fold_init_seed(config.seed, f));
                            const auto trained = train(std::move(model), folds[f].train, folds[f].test, cfg);
                            if (config.write_histories) {
                                out.artifacts["histories/" + key.slug() + "_fold" + std::to_string(f) + ".csv"] =
                                    to_text([&](std::ostream& o) { trained.history.write_csv(o); });
                            }
                            per_fold.push_back(fold_overlaps(trained.model, folds[f], config));
                        }
                    } catch (const TrainingDiverged& e) {
                        failure = e.what();
                    } catch (const ValidationError& e) {
                        failure = e.what();
                    }
                }
                run["status"] = failure.empty() ? "ok" : "FAILED";
                if (!failure.empty()) {
                    run["failure"] = failure;
                }
                prov["runs"].push_back(std::move(run));

                for (std::size_t ki = 0; ki < config.ks.size(); ++ki) {
                    MappingRow row = proto;
                    row.k = config.ks[ki];
                    if (!failure.empty()) {
                        row = MappingRow{};
                        row.dataset = proto.dataset;
                        row.direction = direction;
                        row.model = model_name;
                        row.loss = loss;
                        row.measure = config.measure;
                        row.k = config.ks[ki];
                        row.failed = true;
                        out.report.rows.push_back(std::move(row));
                        continue;
                    }
                    std::vector<double> fold_x, fold_y, fold_xy, item_x, item_y;
                    for (const auto& fo : per_fold) {
                        fold_x.push_back(mean_of(fo.x_fx[ki]));
                        fold_y.push_back(mean_of(fo.y_fx[ki]));
                        fold_xy.push_back(mean_of(fo.x_y[ki]));
                        item_x.insert(item_x.end(), fo.x_fx[ki].begin(), fo.x_fx[ki].end());
                        item_y.insert(item_y.end(), fo.y_fx[ki].begin(), fo.y_fx[ki].end());
                    }
                    row.mnno_x_fx = mean_of(fold_x);
                    row.mnno_y_fx = mean_of(fold_y);
                    row.mnno_x_y = mean_of(fold_xy);
                    row.p_value = config.unit == SignificanceUnit::fold ? wilcoxon_rank_sum_p(fold_x, fold_y)
                                                                        : wilcoxon_rank_sum_p(item_x, item_y);
                    tested_rows.push_back(out.report.rows.size());
                    out.report.rows.push_back(std::move(row));
                }
            }
        }
    }

    if (!tested_rows.empty()) {
        std::vector<double> ps;
        for (auto r : tested_rows) {
            ps.push_back(*out.report.rows[r].p_value);
        }
        const auto adjusted = bonferroni_adjust(ps);
        for (std::size_t i = 0; i < tested_rows.size(); ++i) {
            auto& row = out.report.rows[tested_rows[i]];
            row.p_adjusted = adjusted[i];
            row.significant = adjusted[i] < config.alpha;
        }
    }
    prov["alpha"] = config.alpha;
    prov["bonferroni_m"] = tested_rows.size();

    out.artifacts["report.csv"] = render_report(out.report, ReportFormat::csv);
    out.artifacts["report.md"] = render_report(out.report, ReportFormat::markdown);
    out.artifacts["provenance.json"] = prov.dump(2) + "\n";
    return out;
}

Exp2Output run_experiment2(const Exp2Config& config) {
    config.validate();
    std::vector<BenchmarkPairs> listed;
    for (const auto& [name, path] : config.benchmarks) {
        listed.push_back(load_benchmark(path, name));
    }

    Exp2Output out;
    ordered_json prov;
    prov["name"] = config.name;
    prov["seed"] = config.probe.seed;
    prov["runs"] = config.probe.runs;
    prov["output_dim"] = config.probe.output_dim;
    prov["hidden_units"] = config.probe.hidden_units;
    prov["activation"] = to_string(config.probe.activation);
    prov["identity_lin"] = config.probe.identity_lin;
    prov["embeddings"] = ordered_json::array();

    for (std::size_t e = 0; e < config.embeddings.size(); ++e) {
        const auto& src = config.embeddings[e];
        ProbeOptions options = config.probe;
        options.seed = derive_seed(config.probe.seed, e);
        ordered_json ej;
        ej["name"] = src.name;
        ej["seed"] = options.seed;
        ProbeReport part;
        if (src.planted) {
            const auto planted = generate_planted_similarity(*src.planted);
            ej["source"] = "planted";
            ej["items"] = planted.embeddings.size();
            part = run_untrained_probe(planted.embeddings, src.name, {planted.benchmark}, options);
        } else {
            const auto emb = load_vector_set(src.path, src.format);
            ej["source"] = src.path.generic_string();
            ej["items"] = emb.size();
            part = run_untrained_probe(emb, src.name, listed, options);
        }
        prov["embeddings"].push_back(std::move(ej));
        out.report.rows.insert(out.report.rows.end(), part.rows.begin(), part.rows.end());
    }

    // Adjust over every mapped cell of the whole report, not per embedding.
    std::vector<std::size_t> mapped;
    std::vector<double> ps;
    for (std::size_t r = 0; r < out.report.rows.size(); ++r) {
        if (out.report.rows[r].p_value) {
            mapped.push_back(r);
            ps.push_back(*out.report.rows[r].p_value);
        }
    }
    if (!ps.empty()) {
        const auto adjusted = bonferroni_adjust(ps);
        for (std::size_t i = 0; i < mapped.size(); ++i) {
            auto& row = out.report.rows[mapped[i]];
            row.p_adjusted = adjusted[i];
            row.significant = adjusted[i] < config.probe.alpha;
        }
    }
    prov["alpha"] = config.probe.alpha;
    prov["bonferroni_m"] = ps.size();

    out.artifacts["report.csv"] = render_report(out.report, ReportFormat::csv);
    out.artifacts["report.md"] = render_report(out.report, ReportFormat::markdown);
    out.artifacts["provenance.json"] = prov.dump(2) + "\n";
    return out;
}

TrainJobOutput run_train_job(const TrainJobConfig& config) {
    config.validate();
    const LoadedDataset loaded = load_dataset(config.dataset);
    if (config.training.loss == LossKind::max_margin && !loaded.data.has_labels()) {
        throw ValidationError("max_margin loss needs class labels in the dataset");
    }
    const PairedDataset data = config.direction == Direction::x_to_y ? loaded.data : loaded.data.swapped();
    const auto folds = k_fold_split(data, config.folds, config.seed);
    const auto& fold = folds[config.fold];

    TrainConfig cfg = config.training;
    cfg.seed = derive_seed(config.seed, config.fold);
    std::vector<std::size_t> hidden(config.hidden_layers, config.hidden_units);
    auto model = init_model(data.x().dim(), data.y().dim(), hidden, config.activation, InitScheme::fan_in_scaled(),
                            fold_init_seed(config.seed, config.fold));
    auto trained = train(std::move(model), fold.train, fold.test, cfg);

    TrainJobOutput out{trained.model, trained.history, {}};
    out.artifacts["history.csv"] = to_text([&](std::ostream& o) { trained.history.write_csv(o); });
    out.artifacts["model.json"] = to_text([&](std::ostream& o) { save_model(o, trained.model); });
    ordered_json prov;
    prov["name"] = config.name;
    prov["seed"] = config.seed;
    prov["dataset"] = dataset_json(config.dataset, loaded.data);
    prov["direction"] = to_string(config.direction);
    prov["fold"] = config.fold;
    prov["folds"] = config.folds;
    prov["training_seed"] = cfg.seed;
    prov["init_seed"] = fold_init_seed(config.seed, config.fold);
    prov["test_keys"] = fold.test.keys();
    out.artifacts["provenance.json"] = prov.dump(2) + "\n";
    if (loaded.pairing) {
        out.artifacts["pairing.txt"] = loaded.pairing->to_text();
    }
    return out;
}

}  // namespace crossmap
