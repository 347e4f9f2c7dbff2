// Command-line entry point: mnno, train, exp1, exp2, synth, stats.
#include "crossmap/errors.hpp"
#include "crossmap/experiment.hpp"
#include "crossmap/neighborhood.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace crossmap;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write '" + path + "'");
    }
    out << text;
}

struct MnnoArgs {
    std::string v_path, z_path, paired_path, format = "glove_text", measure = "cosine", neighbors_out;
    std::size_t k = 10;
};

int run_mnno(const MnnoArgs& a) {
    const Measure measure = parse_measure(a.measure);
    PairedDataset data;
    if (!a.paired_path.empty()) {
        data = load_paired_tsv(a.paired_path);
    } else {
        if (a.v_path.empty() || a.z_path.empty()) {
            throw ValidationError("mnno needs two vector files or --paired");
        }
        const auto fmt = parse_vector_format(a.format);
        auto paired = pair_by_keys(load_vector_set(a.v_path, fmt), load_vector_set(a.z_path, fmt));
        std::cerr << paired.diagnostics.to_text();
        data = std::move(paired.dataset);
    }
    const auto nv = top_k_neighbors(data.x(), a.k, measure);
    const auto nz = top_k_neighbors(data.y(), a.k, measure);
    if (!a.neighbors_out.empty()) {
        std::ofstream out(a.neighbors_out, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write '" + a.neighbors_out + "'");
        }
        nv.write_tsv(out);
    }
    std::printf("items\t%zu\nk\t%zu\nk_effective\t%zu\nmeasure\t%s\nmnno\t%.6f\n", data.size(), a.k,
                nv.k_effective(), std::string(to_string(measure)).c_str(), mean_nn_overlap(nv, nz));
    return 0;
}

struct CommonArgs {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string format = "markdown";
};

struct SynthArgs {
    SynthSpec spec;
    std::string cross_map = "linear";
    std::string out;
};

struct StatsArgs {
    std::string csv, col_a, col_b, method = "automatic";
    std::vector<double> p_values;
    std::optional<std::size_t> m;
};

int run_stats(const StatsArgs& a) {
    if (!a.p_values.empty()) {
        const auto adjusted = bonferroni_adjust(a.p_values, a.m);
        for (std::size_t i = 0; i < adjusted.size(); ++i) {
            std::printf("%.6g\t%.6g\n", a.p_values[i], adjusted[i]);
        }
        return 0;
    }
    if (a.csv.empty() || a.col_a.empty() || a.col_b.empty()) {
        throw ValidationError("stats needs --csv with --a and --b, or --p values");
    }
    const auto table = parse_csv(read_text(a.csv));
    const auto xs = table.numbers(a.col_a);
    const auto ys = table.numbers(a.col_b);
    RankSumMethod method = RankSumMethod::automatic;
    if (a.method == "exact") {
        method = RankSumMethod::exact;
    } else if (a.method == "normal") {
        method = RankSumMethod::normal;
    } else if (a.method != "automatic") {
        throw ValidationError("unknown method '" + a.method + "'");
    }
    std::printf("n_a\t%zu\nn_b\t%zu\np\t%.6g\n", xs.size(), ys.size(), wilcoxon_rank_sum_p(xs, ys, method));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neighbourhood analysis of cross-modal mappings"};
    app.require_subcommand(1);

    MnnoArgs mnno;
    auto* mnno_cmd = app.add_subcommand("mnno", "Mean nearest-neighbour overlap of two vector sets");
    mnno_cmd->add_option("v", mnno.v_path, "First vector file");
    mnno_cmd->add_option("z", mnno.z_path, "Second vector file");
    mnno_cmd->add_option("--paired", mnno.paired_path, "Paired TSV file instead of two vector files");
    mnno_cmd->add_option("--format", mnno.format, "Vector file format: glove_text or tsv")->capture_default_str();
    mnno_cmd->add_option("--k", mnno.k, "Neighbourhood size")->capture_default_str();
    mnno_cmd->add_option("--measure", mnno.measure, "cosine or euclidean")->capture_default_str();
    mnno_cmd->add_option("--neighbors-out", mnno.neighbors_out, "Write the first set's neighbour lists here");

    CommonArgs train_args, exp1_args, exp2_args;
    std::optional<std::size_t> exp1_k;
    std::string exp1_measure;
    auto add_common = [](CLI::App* cmd, CommonArgs& a) {
        cmd->add_option("--config", a.config, "JSON config file")->required();
        cmd->add_option("--out-dir", a.out_dir, "Directory for the run's files")->required();
        cmd->add_option("--seed", a.seed, "Override the config seed");
    };
    auto* train_cmd = app.add_subcommand("train", "Train one mapping on one fold and log its learning curve");
    add_common(train_cmd, train_args);
    auto* exp1_cmd = app.add_subcommand("exp1", "Neighbourhood experiment over mappings and datasets");
    add_common(exp1_cmd, exp1_args);
    exp1_cmd->add_option("--k", exp1_k, "Override the neighbourhood size");
    exp1_cmd->add_option("--measure", exp1_measure, "Override the similarity measure");
    exp1_cmd->add_option("--format", exp1_args.format, "Report printed to stdout: csv or markdown")
        ->capture_default_str();
    auto* exp2_cmd = app.add_subcommand("exp2", "Untrained-network probe on similarity benchmarks");
    add_common(exp2_cmd, exp2_args);
    exp2_cmd->add_option("--format", exp2_args.format, "Report printed to stdout: csv or markdown")
        ->capture_default_str();

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic paired dataset as paired TSV");
    synth_cmd->add_option("--out", synth.out, "Output file")->required();
    synth_cmd->add_option("--seed", synth.spec.seed, "Seed")->capture_default_str();
    synth_cmd->add_option("--n-classes", synth.spec.n_classes)->capture_default_str();
    synth_cmd->add_option("--items-per-class", synth.spec.items_per_class)->capture_default_str();
    synth_cmd->add_option("--d-x", synth.spec.d_x)->capture_default_str();
    synth_cmd->add_option("--d-y", synth.spec.d_y)->capture_default_str();
    synth_cmd->add_option("--noise-x", synth.spec.noise_x)->capture_default_str();
    synth_cmd->add_option("--noise-y", synth.spec.noise_y)->capture_default_str();
    synth_cmd->add_option("--cross-map", synth.cross_map, "linear or tanh_mlp")->capture_default_str();

    StatsArgs stats;
    auto* stats_cmd = app.add_subcommand("stats", "Rank-sum test on two CSV columns, or Bonferroni adjustment");
    stats_cmd->add_option("--csv", stats.csv, "CSV file with a header row");
    stats_cmd->add_option("--a", stats.col_a, "First column");
    stats_cmd->add_option("--b", stats.col_b, "Second column");
    stats_cmd->add_option("--method", stats.method, "automatic, exact or normal")->capture_default_str();
    stats_cmd->add_option("--p", stats.p_values, "p-values to Bonferroni-adjust");
    stats_cmd->add_option("--m", stats.m, "Number of tests (defaults to the count of --p values)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*mnno_cmd) {
            return run_mnno(mnno);
        }
        if (*train_cmd) {
            auto cfg = load_train_config(train_args.config);
            if (train_args.seed) {
                cfg.seed = *train_args.seed;
            }
            const auto out = run_train_job(cfg);
            write_artifacts(train_args.out_dir, out.artifacts);
            if (!out.history.epochs.empty()) {
                const auto& last = out.history.epochs.back();
                std::printf("epochs\t%zu\ntrain_loss\t%.6g\ntest_loss\t%.6g\n", last.epoch, last.train_loss,
                            last.test_loss);
            }
            return 0;
        }
        if (*exp1_cmd) {
            auto cfg = load_exp1_config(exp1_args.config);
            if (exp1_args.seed) {
                cfg.seed = *exp1_args.seed;
            }
            if (exp1_k) {
                cfg.ks = {*exp1_k};
            }
            if (!exp1_measure.empty()) {
                cfg.measure = parse_measure(exp1_measure);
            }
            const auto format = parse_report_format(exp1_args.format);
            const auto out = run_experiment1(cfg);
            write_artifacts(exp1_args.out_dir, out.artifacts);
            std::cout << render_report(out.report, format);
            return 0;
        }
        if (*exp2_cmd) {
            auto cfg = load_exp2_config(exp2_args.config);
            if (exp2_args.seed) {
                cfg.probe.seed = *exp2_args.seed;
            }
            const auto format = parse_report_format(exp2_args.format);
            const auto out = run_experiment2(cfg);
            write_artifacts(exp2_args.out_dir, out.artifacts);
            std::cout << render_report(out.report, format);
            return 0;
        }
        if (*synth_cmd) {
            synth.spec.cross_map = parse_cross_map(synth.cross_map);
            std::ostringstream buf;
            write_paired_tsv(buf, generate_synthetic_paired(synth.spec));
            write_text(synth.out, buf.str());
            return 0;
        }
        if (*stats_cmd) {
            return run_stats(stats);
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
