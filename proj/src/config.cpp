// JSON config documents for the experiment harness.
#include "crossmap/errors.hpp"
#include "crossmap/experiment.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace crossmap {

using nlohmann::json;

namespace {

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw ValidationError("config: '" + where + "' must be an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.contains(key)) {
            throw ValidationError("config: unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config: key '") + key + "' has the wrong type");
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

SynthSpec parse_synth(const json& j) {
    only_keys(j, {"n_classes", "items_per_class", "d_x", "d_y", "cross_map", "noise_x", "noise_y", "seed"},
              "dataset.synthetic");
    SynthSpec s;
    s.n_classes = get_or(j, "n_classes", s.n_classes);
    s.items_per_class = get_or(j, "items_per_class", s.items_per_class);
    s.d_x = get_or(j, "d_x", s.d_x);
    s.d_y = get_or(j, "d_y", s.d_y);
    s.cross_map = parse_cross_map(get_or<std::string>(j, "cross_map", "linear"));
    s.noise_x = get_or(j, "noise_x", s.noise_x);
    s.noise_y = get_or(j, "noise_y", s.noise_y);
    s.seed = get_or<std::uint64_t>(j, "seed", 0);
    s.validate();
    return s;
}

DatasetSource parse_dataset(const json& j, const std::filesystem::path& base) {
    only_keys(j, {"synthetic", "paired_tsv", "x", "y"}, "dataset");
    DatasetSource src;
    if (j.contains("synthetic")) {
        src.kind = DatasetSource::Kind::synthetic;
        src.synthetic = parse_synth(j.at("synthetic"));
    } else if (j.contains("paired_tsv")) {
        src.kind = DatasetSource::Kind::paired_tsv;
        src.paired_path = resolve(base, j.at("paired_tsv").get<std::string>());
    } else if (j.contains("x") && j.contains("y")) {
        src.kind = DatasetSource::Kind::separate;
        for (const char* side : {"x", "y"}) {
            const auto& s = j.at(side);
            only_keys(s, {"path", "format"}, std::string("dataset.") + side);
            const auto path = resolve(base, s.at("path").get<std::string>());
            const auto format = parse_vector_format(get_or<std::string>(s, "format", "glove_text"));
            if (std::string(side) == "x") {
                src.x_path = path;
                src.x_format = format;
            } else {
                src.y_path = path;
                src.y_format = format;
            }
        }
    } else {
        throw ValidationError("config: dataset needs 'synthetic', 'paired_tsv', or both 'x' and 'y'");
    }
    return src;
}

void check_file(const std::filesystem::path& p) {
    if (!std::filesystem::is_regular_file(p)) {
        throw ValidationError("missing input file '" + p.string() + "'");
    }
}

void check_dataset_files(const DatasetSource& src) {
    switch (src.kind) {
        case DatasetSource::Kind::synthetic:
            break;
        case DatasetSource::Kind::paired_tsv:
            check_file(src.paired_path);
            break;
        case DatasetSource::Kind::separate:
            check_file(src.x_path);
            check_file(src.y_path);
            break;
    }
}

json parse_document(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: not valid JSON: ") + e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename T>
std::vector<T> list_or(const json& obj, const char* key, std::vector<T> fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    if (!obj.at(key).is_array()) {
        throw ValidationError(std::string("config: '") + key + "' must be a list");
    }
    return get_or(obj, key, fallback);
}

}  // namespace

// ---------------------------------------------------------------------------

void Exp1Config::validate() const {
    if (models.empty()) {
        throw ValidationError("config: the model list is empty");
    }
    for (const auto& m : models) {
        parse_model_depth(m);
    }
    if (directions.empty() || losses.empty() || ks.empty()) {
        throw ValidationError("config: directions, losses and neighbour k lists must be non-empty");
    }
    for (auto k : ks) {
        if (k == 0) {
            throw ValidationError("config: neighbour k must be positive");
        }
    }
    if (folds < 2) {
        throw ValidationError("config: need at least 2 folds");
    }
    if (epochs == 0) {
        throw ValidationError("config: epochs must be positive");
    }
    grid.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("config: alpha must lie in (0, 1)");
    }
    TrainConfig probe;
    probe.batch_size = batch_size;
    probe.rmsprop_rho = rmsprop_rho;
    probe.rmsprop_eps = rmsprop_eps;
    for (double lr : grid.learning_rates) {
        probe.learning_rate = lr;
        probe.validate();
    }
    for (double d : grid.dropouts) {
        probe.dropout = d;
        probe.validate();
    }
    for (double m : grid.margins) {
        probe.margin = m;
        probe.validate();
    }
    for (auto h : grid.hidden_units) {
        if (h == 0) {
            throw ValidationError("config: hidden units must be positive");
        }
    }
    check_dataset_files(dataset);
}

Exp1Config parse_exp1_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    const json j = parse_document(json_text);
    only_keys(j,
              {"name", "seed", "dataset", "directions", "models", "losses", "neighbors", "folds", "grid", "training",
               "significance", "write_histories"},
              "experiment config");
    Exp1Config c;
    c.name = get_or<std::string>(j, "name", c.name);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (!j.contains("dataset")) {
        throw ValidationError("config: missing 'dataset'");
    }
    c.dataset = parse_dataset(j.at("dataset"), base_dir);
    if (j.contains("directions")) {
        c.directions.clear();
        for (const auto& d : list_or<std::string>(j, "directions", {})) {
            c.directions.push_back(parse_direction(d));
        }
    }
    c.models = list_or<std::string>(j, "models", c.models);
    if (j.contains("losses")) {
        c.losses.clear();
        for (const auto& l : list_or<std::string>(j, "losses", {})) {
            c.losses.push_back(parse_loss(l));
        }
    }
    if (j.contains("neighbors")) {
        const auto& n = j.at("neighbors");
        only_keys(n, {"k", "measure", "pool_test"}, "neighbors");
        if (n.contains("k")) {
            c.ks = n.at("k").is_array() ? list_or<std::size_t>(n, "k", {}) : std::vector{get_or<std::size_t>(n, "k", 10)};
        }
        c.measure = parse_measure(get_or<std::string>(n, "measure", "cosine"));
        c.pool_test_neighbors = get_or(n, "pool_test", false);
    }
    c.folds = get_or(j, "folds", c.folds);
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        only_keys(g, {"learning_rates", "hidden_units", "margins", "dropouts", "epochs"}, "grid");
        c.grid.learning_rates = list_or(g, "learning_rates", c.grid.learning_rates);
        c.grid.hidden_units = list_or(g, "hidden_units", c.grid.hidden_units);
        c.grid.margins = list_or(g, "margins", c.grid.margins);
        c.grid.dropouts = list_or(g, "dropouts", c.grid.dropouts);
        c.epochs = get_or(g, "epochs", c.epochs);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        only_keys(t, {"batch_size", "rho", "eps", "activation"}, "training");
        c.batch_size = get_or(t, "batch_size", c.batch_size);
        c.rmsprop_rho = get_or(t, "rho", c.rmsprop_rho);
        c.rmsprop_eps = get_or(t, "eps", c.rmsprop_eps);
        c.activation = parse_activation(get_or<std::string>(t, "activation", "relu"));
    }
    if (j.contains("significance")) {
        const auto& s = j.at("significance");
        only_keys(s, {"alpha", "unit"}, "significance");
        c.alpha = get_or(s, "alpha", c.alpha);
        const auto unit = get_or<std::string>(s, "unit", "fold");
        if (unit == "fold") {
            c.unit = SignificanceUnit::fold;
        } else if (unit == "item") {
            c.unit = SignificanceUnit::item;
        } else {
            throw ValidationError("config: significance unit must be 'fold' or 'item'");
        }
    }
    c.write_histories = get_or(j, "write_histories", c.write_histories);
    return c;
}

Exp1Config load_exp1_config(const std::filesystem::path& path) {
    return parse_exp1_config(read_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------

void Exp2Config::validate() const {
    if (embeddings.empty()) {
        throw ValidationError("config: no embeddings listed");
    }
    bool has_planted = false;
    for (const auto& e : embeddings) {
        if (e.planted) {
            has_planted = true;
            e.planted->validate();
        } else {
            check_file(e.path);
        }
    }
    if (benchmarks.empty() && !has_planted) {
        throw ValidationError("config: no benchmarks listed");
    }
    for (const auto& [name, path] : benchmarks) {
        check_file(path);
    }
    if (probe.runs == 0) {
        throw ValidationError("config: runs must be at least 1");
    }
    if (probe.measures.empty()) {
        throw ValidationError("config: no similarity measures listed");
    }
    if (probe.output_dim == 0 || probe.hidden_units == 0) {
        throw ValidationError("config: dimensions must be positive");
    }
    if (!(probe.alpha > 0.0 && probe.alpha < 1.0)) {
        throw ValidationError("config: alpha must lie in (0, 1)");
    }
}

Exp2Config parse_exp2_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    const json j = parse_document(json_text);
    only_keys(j,
              {"name", "seed", "runs", "output_dim", "hidden_units", "activation", "measures", "alpha", "identity_lin",
               "embeddings", "benchmarks"},
              "probe config");
    Exp2Config c;
    c.name = get_or<std::string>(j, "name", c.name);
    c.probe.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.probe.runs = get_or(j, "runs", c.probe.runs);
    c.probe.output_dim = get_or(j, "output_dim", c.probe.output_dim);
    c.probe.hidden_units = get_or(j, "hidden_units", c.probe.hidden_units);
    c.probe.activation = parse_activation(get_or<std::string>(j, "activation", "tanh"));
    if (j.contains("measures")) {
        c.probe.measures.clear();
        for (const auto& m : list_or<std::string>(j, "measures", {})) {
            c.probe.measures.push_back(parse_measure(m));
        }
    }
    c.probe.alpha = get_or(j, "alpha", c.probe.alpha);
    c.probe.identity_lin = get_or(j, "identity_lin", false);
    if (j.contains("embeddings")) {
        for (const auto& e : j.at("embeddings")) {
            only_keys(e, {"name", "path", "format", "planted"}, "embeddings entry");
            EmbeddingSource src;
            src.name = get_or<std::string>(e, "name", "");
            if (src.name.empty()) {
                throw ValidationError("config: every embedding needs a name");
            }
            if (e.contains("planted")) {
                const auto& p = e.at("planted");
                only_keys(p, {"n_items", "dim", "n_clusters", "cluster_spread", "noise", "n_pairs", "seed"},
                          "planted");
                PlantedSpec s;
                s.n_items = get_or(p, "n_items", s.n_items);
                s.dim = get_or(p, "dim", s.dim);
                s.n_clusters = get_or(p, "n_clusters", s.n_clusters);
                s.cluster_spread = get_or(p, "cluster_spread", s.cluster_spread);
                s.noise = get_or(p, "noise", s.noise);
                s.n_pairs = get_or(p, "n_pairs", s.n_pairs);
                s.seed = get_or<std::uint64_t>(p, "seed", 0);
                src.planted = s;
            } else {
                src.path = resolve(base_dir, e.at("path").get<std::string>());
                src.format = parse_vector_format(get_or<std::string>(e, "format", "glove_text"));
            }
            c.embeddings.push_back(std::move(src));
        }
    }
    if (j.contains("benchmarks")) {
        for (const auto& b : j.at("benchmarks")) {
            only_keys(b, {"name", "path"}, "benchmarks entry");
            const auto path = resolve(base_dir, b.at("path").get<std::string>());
            c.benchmarks.emplace_back(get_or<std::string>(b, "name", path.stem().string()), path);
        }
    }
    return c;
}

Exp2Config load_exp2_config(const std::filesystem::path& path) {
    return parse_exp2_config(read_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------

void TrainJobConfig::validate() const {
    training.validate();
    if (folds < 2 || fold >= folds) {
        throw ValidationError("config: need folds >= 2 and 0 <= fold < folds");
    }
    if (hidden_layers > 0 && hidden_units == 0) {
        throw ValidationError("config: hidden units must be positive");
    }
    check_dataset_files(dataset);
}

TrainJobConfig parse_train_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    const json j = parse_document(json_text);
    only_keys(j, {"name", "seed", "dataset", "direction", "model", "training", "neighbors", "folds", "fold"},
              "train config");
    TrainJobConfig c;
    c.name = get_or<std::string>(j, "name", c.name);
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    if (!j.contains("dataset")) {
        throw ValidationError("config: missing 'dataset'");
    }
    c.dataset = parse_dataset(j.at("dataset"), base_dir);
    c.direction = parse_direction(get_or<std::string>(j, "direction", "x_to_y"));
    if (j.contains("model")) {
        const auto& m = j.at("model");
        only_keys(m, {"name", "hidden_layers", "hidden_units", "activation"}, "model");
        if (m.contains("name")) {
            c.hidden_layers = parse_model_depth(m.at("name").get<std::string>());
        }
        c.hidden_layers = get_or(m, "hidden_layers", c.hidden_layers);
        c.hidden_units = get_or(m, "hidden_units", c.hidden_units);
        c.activation = parse_activation(get_or<std::string>(m, "activation", "relu"));
    }
    auto& t = c.training;
    if (j.contains("training")) {
        const auto& tj = j.at("training");
        only_keys(tj, {"loss", "margin", "learning_rate", "batch_size", "epochs", "dropout", "rho", "eps"},
                  "training");
        t.loss = parse_loss(get_or<std::string>(tj, "loss", "mse"));
        t.margin = get_or(tj, "margin", t.margin);
        t.learning_rate = get_or(tj, "learning_rate", t.learning_rate);
        t.batch_size = get_or(tj, "batch_size", t.batch_size);
        t.epochs = get_or(tj, "epochs", t.epochs);
        t.dropout = get_or(tj, "dropout", t.dropout);
        t.rmsprop_rho = get_or(tj, "rho", t.rmsprop_rho);
        t.rmsprop_eps = get_or(tj, "eps", t.rmsprop_eps);
    }
    if (j.contains("neighbors")) {
        const auto& n = j.at("neighbors");
        only_keys(n, {"k", "measure", "pool_test"}, "neighbors");
        t.neighbor_k = get_or(n, "k", t.neighbor_k);
        t.neighbor_measure = parse_measure(get_or<std::string>(n, "measure", "cosine"));
        t.pool_test_neighbors = get_or(n, "pool_test", false);
    }
    c.folds = get_or(j, "folds", c.folds);
    c.fold = get_or(j, "fold", c.fold);
    return c;
}

TrainJobConfig load_train_config(const std::filesystem::path& path) {
    return parse_train_config(read_file(path), path.parent_path());
}

}  // namespace crossmap
