#ifndef CROSSMAP_EXPERIMENT_HPP
#define CROSSMAP_EXPERIMENT_HPP

#include "crossmap/evaluation.hpp"
#include "crossmap/report.hpp"
#include "crossmap/synth.hpp"
#include "crossmap/training.hpp"
#include "crossmap/vectors.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace crossmap {

/// Where the paired data of an experiment comes from. Relative paths are
/// resolved against the directory of the config file.
struct DatasetSource {
    enum class Kind { synthetic, paired_tsv, separate };

    Kind kind = Kind::synthetic;
    SynthSpec synthetic;
    std::filesystem::path paired_path;
    std::filesystem::path x_path;
    std::filesystem::path y_path;
    VectorFormat x_format = VectorFormat::glove_text;
    VectorFormat y_format = VectorFormat::glove_text;
};

struct LoadedDataset {
    PairedDataset data;
    std::optional<PairingDiagnostics> pairing;  ///< set when x and y came from separate files
};

LoadedDataset load_dataset(const DatasetSource& source);

/// Hidden-layer count of a model name: lin -> 0, nn / nn-1 -> 1, nn-3 -> 3, ...
std::size_t parse_model_depth(std::string_view name);

enum class SignificanceUnit { fold, item };

/// Neighbourhood experiment: does f(X) keep the neighbourhoods of X or take on those of Y?
struct Exp1Config {
    std::string name = "experiment";
    std::uint64_t seed = 0;
    DatasetSource dataset;
    std::vector<Direction> directions{Direction::x_to_y, Direction::y_to_x};
    std::vector<std::string> models{"lin", "nn-1"};
    std::vector<LossKind> losses{LossKind::mse};
    std::vector<std::size_t> ks{10};
    Measure measure = Measure::cosine;
    bool pool_test_neighbors = false;
    std::size_t folds = 5;
    GridSpace grid;
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double rmsprop_rho = 0.9;
    double rmsprop_eps = 1e-8;
    Activation activation = Activation::relu;
    double alpha = 0.05;
    SignificanceUnit unit = SignificanceUnit::fold;
    bool write_histories = true;

    void validate() const;
};

/// Untrained-network probe over word-similarity benchmarks.
struct EmbeddingSource {
    std::string name;
    std::filesystem::path path;
    VectorFormat format = VectorFormat::glove_text;
    std::optional<PlantedSpec> planted;  ///< synthetic embeddings with their own benchmark
};

struct Exp2Config {
    std::string name = "probe";
    std::vector<EmbeddingSource> embeddings;
    std::vector<std::pair<std::string, std::filesystem::path>> benchmarks;
    ProbeOptions probe;

    void validate() const;
};

/// Single training run on one fold, for inspecting learning curves.
struct TrainJobConfig {
    std::string name = "train";
    std::uint64_t seed = 0;
    DatasetSource dataset;
    Direction direction = Direction::x_to_y;
    std::size_t hidden_layers = 1;
    std::size_t hidden_units = 128;
    Activation activation = Activation::relu;
    TrainConfig training;
    std::size_t folds = 5;
    std::size_t fold = 0;

    void validate() const;
};

Exp1Config load_exp1_config(const std::filesystem::path& path);
Exp1Config parse_exp1_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
Exp2Config load_exp2_config(const std::filesystem::path& path);
Exp2Config parse_exp2_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
TrainJobConfig load_train_config(const std::filesystem::path& path);
TrainJobConfig parse_train_config(std::string_view json_text, const std::filesystem::path& base_dir = {});

/// Files produced by a run, keyed by path relative to the output directory.
using Artifacts = std::map<std::string, std::string>;

struct Exp1Output {
    ExperimentReport report;
    Artifacts artifacts;
};

struct Exp2Output {
    ProbeReport report;
    Artifacts artifacts;
};

struct TrainJobOutput {
    MappingModel model;
    TrainHistory history;
    Artifacts artifacts;
};

Exp1Output run_experiment1(const Exp1Config& config);
Exp2Output run_experiment2(const Exp2Config& config);
TrainJobOutput run_train_job(const TrainJobConfig& config);

void write_artifacts(const std::filesystem::path& out_dir, const Artifacts& artifacts);

}  // namespace crossmap

#endif
