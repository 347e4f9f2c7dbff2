#ifndef CROSSMAP_EVALUATION_HPP
#define CROSSMAP_EVALUATION_HPP

#include "crossmap/model.hpp"
#include "crossmap/vectors.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crossmap {

struct WordPair {
    std::string first;
    std::string second;
    double rating = 0.0;
};

/// Human similarity judgements for word pairs.
struct BenchmarkPairs {
    std::string name;
    std::vector<WordPair> pairs;
};

/// `word1 TAB word2 TAB rating` per line; blank lines and lines starting with '#' are skipped.
BenchmarkPairs parse_benchmark(std::istream& in, std::string name, const std::string& source = "<stream>");
BenchmarkPairs load_benchmark(const std::filesystem::path& path, std::string name = {});
void write_benchmark(std::ostream& out, const BenchmarkPairs& pairs);

struct PairScores {
    std::vector<double> predicted;      ///< one per covered pair
    std::vector<double> human;          ///< matching ratings
    std::vector<std::size_t> covered;   ///< indices into the benchmark
    double coverage = 0.0;              ///< covered / total
};

/// Model similarity for every pair whose two words are both in `embeddings`.
/// Throws ValidationError when no pair is covered.
PairScores score_word_pairs(const VectorSet& embeddings, const BenchmarkPairs& pairs, Measure measure);

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of the average ranks. Throws on length mismatch, fewer
/// than two values, or a constant input.
double spearman_rho(std::span<const double> a, std::span<const double> b);

enum class RankSumMethod { automatic, exact, normal };

/// Combined size up to which `automatic` enumerates the exact null distribution.
inline constexpr std::size_t kExactRankSumLimit = 12;

/**
 * Two-sided Wilcoxon rank-sum (Mann-Whitney) p-value.
 *
 * `automatic` is exact when n_a + n_b <= 12 and there are no ties, and
 * otherwise uses the normal approximation with tie and continuity correction.
 * Requesting `exact` on tied data throws.
 */
double wilcoxon_rank_sum_p(std::span<const double> a, std::span<const double> b,
                           RankSumMethod method = RankSumMethod::automatic);

/// min(1, p * m) for each p; m defaults to the number of p-values.
std::vector<double> bonferroni_adjust(std::span<const double> p_values, std::optional<std::size_t> m = std::nullopt);

// ---------------------------------------------------------------------------
// Untrained-network probe

enum class ProbeMapping { nn, lin, raw };

std::string_view to_string(ProbeMapping m);

struct ProbeOptions {
    std::size_t runs = 10;
    std::size_t output_dim = 2048;
    std::size_t hidden_units = 2048;
    Activation activation = Activation::tanh;
    std::vector<Measure> measures{Measure::cosine, Measure::euclidean};
    double alpha = 0.05;
    /// Replace the random linear map by W = I (needs output_dim == input dim).
    bool identity_lin = false;
    std::uint64_t seed = 0;
};

struct ProbeRow {
    std::string embedding;
    std::string benchmark;
    Measure measure = Measure::cosine;
    ProbeMapping mapping = ProbeMapping::raw;
    double mean_spearman = 0.0;
    double std_spearman = 0.0;
    double coverage = 0.0;
    std::size_t runs = 0;
    std::optional<double> p_value;     ///< mapped rows only: rank-sum of runs vs the raw score
    std::optional<double> p_adjusted;
    bool significant = false;

    friend bool operator==(const ProbeRow&, const ProbeRow&) = default;
};

struct ProbeReport {
    std::vector<ProbeRow> rows;

    friend bool operator==(const ProbeReport&, const ProbeReport&) = default;
};

/**
 * Maps `embeddings` through `runs` random networks (weights U[-1, 1], zero
 * biases) and scores each benchmark with every measure. Rows per benchmark and
 * measure come in the order nn, lin, raw. Mapped rows carry a rank-sum p-value
 * of the per-run scores against the raw score, Bonferroni-adjusted over all
 * mapped rows of the report.
 */
ProbeReport run_untrained_probe(const VectorSet& embeddings, const std::string& embedding_name,
                                const std::vector<BenchmarkPairs>& benchmarks, const ProbeOptions& options);

}  // namespace crossmap

#endif
