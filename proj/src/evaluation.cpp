#include "crossmap/evaluation.hpp"

#include "crossmap/errors.hpp"
#include "crossmap/rng.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace crossmap {

BenchmarkPairs parse_benchmark(std::istream& in, std::string name, const std::string& source) {
    BenchmarkPairs out{std::move(name), {}};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (detail::is_blank(line) || line.front() == '#') {
            continue;
        }
        auto fields = detail::split(line, '\t');
        if (fields.size() != 3) {
            throw ParseError(source, line_no, "expected 'word1<TAB>word2<TAB>rating'");
        }
        const auto w1 = detail::trim(fields[0]);
        const auto w2 = detail::trim(fields[1]);
        if (w1.empty() || w2.empty()) {
            throw ParseError(source, line_no, "empty word");
        }
        out.pairs.push_back({std::string(w1), std::string(w2), detail::parse_real(fields[2], source, line_no)});
    }
    return out;
}

BenchmarkPairs load_benchmark(const std::filesystem::path& path, std::string name) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open benchmark file '" + path.string() + "'");
    }
    if (name.empty()) {
        name = path.stem().string();
    }
    return parse_benchmark(in, std::move(name), path.string());
}

void write_benchmark(std::ostream& out, const BenchmarkPairs& pairs) {
    for (const auto& p : pairs.pairs) {
        out << p.first << '\t' << p.second << '\t' << detail::format_real(p.rating) << '\n';
    }
}

PairScores score_word_pairs(const VectorSet& embeddings, const BenchmarkPairs& pairs, Measure measure) {
    PairScores out;
    for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
        const auto& p = pairs.pairs[i];
        const auto a = embeddings.find(p.first);
        const auto b = embeddings.find(p.second);
        if (!a || !b) {
            continue;
        }
        out.predicted.push_back(similarity(embeddings.row(*a), embeddings.row(*b), measure));
        out.human.push_back(p.rating);
        out.covered.push_back(i);
    }
    if (out.covered.empty()) {
        throw ValidationError("benchmark '" + pairs.name + "': no pair has both words in the embeddings");
    }
    out.coverage = static_cast<double>(out.covered.size()) / static_cast<double>(pairs.pairs.size());
    return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError("spearman: inputs differ in length");
    }
    if (a.size() < 2) {
        throw ValidationError("spearman: need at least two observations");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - ma;
        const double db = rb[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw ValidationError("spearman: rank correlation is undefined for a constant input");
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Rank-sum test

namespace {

double exact_rank_sum_p(double rank_sum_a, std::size_t na, std::size_t nb) {
    const std::size_t n = na + nb;
    const std::size_t max_sum = n * (n + 1) / 2;
    // ways[j][s]: number of j-element subsets of {1..r} with rank sum s, built up over r.
    std::vector<std::vector<double>> ways(na + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t j = std::min(r, na); j >= 1; --j) {
            for (std::size_t s = max_sum; s >= r; --s) {
                ways[j][s] += ways[j - 1][s - r];
            }
        }
    }
    const auto observed = static_cast<std::size_t>(std::llround(rank_sum_a));
    double total = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t s = 0; s <= max_sum; ++s) {
        const double w = ways[na][s];
        total += w;
        if (s <= observed) {
            lower += w;
        }
        if (s >= observed) {
            upper += w;
        }
    }
    return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

double normal_rank_sum_p(double rank_sum_a, std::span<const double> combined, std::size_t na, std::size_t nb) {
    const double n = static_cast<double>(na + nb);
    const double a = static_cast<double>(na);
    const double b = static_cast<double>(nb);
    const double u = rank_sum_a - a * (a + 1.0) / 2.0;
    const double mean = a * b / 2.0;

    std::vector<double> sorted(combined.begin(), combined.end());
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    const double variance = a * b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) {
        return 1.0;
    }
    const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(variance);
    const double p = std::erfc(z / std::sqrt(2.0));
    return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

}  // namespace

double wilcoxon_rank_sum_p(std::span<const double> a, std::span<const double> b, RankSumMethod method) {
    if (a.empty() || b.empty()) {
        throw ValidationError("rank-sum test: both samples must be non-empty");
    }
    std::vector<double> combined(a.begin(), a.end());
    combined.insert(combined.end(), b.begin(), b.end());
    for (double v : combined) {
        if (!std::isfinite(v)) {
            throw ValidationError("rank-sum test: non-finite observation");
        }
    }
    const auto ranks = average_ranks(combined);
    const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
    const bool ties = std::set<double>(combined.begin(), combined.end()).size() != combined.size();

    if (method == RankSumMethod::exact && ties) {
        throw ValidationError("rank-sum test: exact method requires untied data");
    }
    const bool exact = method == RankSumMethod::exact ||
                       (method == RankSumMethod::automatic && !ties && combined.size() <= kExactRankSumLimit);
    return exact ? exact_rank_sum_p(rank_sum_a, a.size(), b.size())
                 : normal_rank_sum_p(rank_sum_a, combined, a.size(), b.size());
}

std::vector<double> bonferroni_adjust(std::span<const double> p_values, std::optional<std::size_t> m) {
    const double factor = static_cast<double>(m.value_or(p_values.size()));
    if (m && *m == 0) {
        throw ValidationError("bonferroni: number of tests must be positive");
    }
    std::vector<double> out;
    out.reserve(p_values.size());
    for (double p : p_values) {
        if (!(p > 0.0 && p <= 1.0)) {
            throw ValidationError("bonferroni: p-value " + std::to_string(p) + " outside (0, 1]");
        }
        out.push_back(std::min(1.0, p * factor));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Untrained probe

std::string_view to_string(ProbeMapping m) {
    switch (m) {
        case ProbeMapping::nn:
            return "f_nn";
        case ProbeMapping::lin:
            return "f_lin";
        case ProbeMapping::raw:
            return "raw";
    }
    return "?";
}

namespace {

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
};

Summary summarize(std::span<const double> values) {
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0};
}

double benchmark_spearman(const VectorSet& emb, const BenchmarkPairs& bench, Measure measure, double* coverage) {
    const auto scores = score_word_pairs(emb, bench, measure);
    if (coverage) {
        *coverage = scores.coverage;
    }
    return spearman_rho(scores.predicted, scores.human);
}

// Only words that some benchmark mentions need to be mapped.
VectorSet restrict_to_benchmarks(const VectorSet& emb, const std::vector<BenchmarkPairs>& benchmarks) {
    std::set<std::string, std::less<>> words;
    for (const auto& b : benchmarks) {
        for (const auto& p : b.pairs) {
            words.insert(p.first);
            words.insert(p.second);
        }
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < emb.size(); ++i) {
        if (words.contains(emb.keys()[i])) {
            keep.push_back(i);
        }
    }
    return emb.subset(keep);
}

}  // namespace

ProbeReport run_untrained_probe(const VectorSet& embeddings, const std::string& embedding_name,
                                const std::vector<BenchmarkPairs>& benchmarks, const ProbeOptions& options) {
    if (options.runs == 0) {
        throw ValidationError("untrained probe: runs must be at least 1");
    }
    if (benchmarks.empty() || options.measures.empty()) {
        throw ValidationError("untrained probe: need at least one benchmark and one measure");
    }
    if (options.output_dim == 0 || options.hidden_units == 0) {
        throw ValidationError("untrained probe: dimensions must be positive");
    }
    const VectorSet emb = restrict_to_benchmarks(embeddings, benchmarks);
    if (emb.size() == 0) {
        throw ValidationError("untrained probe: no benchmark word is in the embeddings");
    }
    const std::size_t d_x = emb.dim();
    if (options.identity_lin && options.output_dim != d_x) {
        throw ValidationError("untrained probe: identity linear map needs output_dim == input dimension");
    }

    const std::size_t n_b = benchmarks.size();
    const std::size_t n_m = options.measures.size();
    // scores[mapping][benchmark][measure][run]
    std::vector<std::vector<std::vector<std::vector<double>>>> scores(
        2, std::vector<std::vector<std::vector<double>>>(n_b, std::vector<std::vector<double>>(n_m)));

    const auto uniform = InitScheme::uniform(-1.0, 1.0);
    for (std::size_t run = 0; run < options.runs; ++run) {
        const auto nn = init_model(d_x, options.output_dim, {options.hidden_units}, options.activation, uniform,
                                   derive_seed(options.seed, 2 * run));
        MappingModel lin = init_model(d_x, options.output_dim, {}, options.activation, uniform,
                                      derive_seed(options.seed, 2 * run + 1));
        if (options.identity_lin) {
            auto& w = lin.mutable_layers().front().weights;
            w.fill(0.0);
            for (std::size_t i = 0; i < d_x; ++i) {
                w(i, i) = 1.0;
            }
        }
        const VectorSet mapped[2] = {forward(nn, emb), forward(lin, emb)};
        for (std::size_t m = 0; m < 2; ++m) {
            for (std::size_t b = 0; b < n_b; ++b) {
                for (std::size_t s = 0; s < n_m; ++s) {
                    scores[m][b][s].push_back(benchmark_spearman(mapped[m], benchmarks[b], options.measures[s], nullptr));
                }
            }
        }
    }

    ProbeReport report;
    std::vector<std::size_t> mapped_rows;
    std::vector<double> raw_p;
    for (std::size_t b = 0; b < n_b; ++b) {
        for (std::size_t s = 0; s < n_m; ++s) {
            double coverage = 0.0;
            const double raw = benchmark_spearman(emb, benchmarks[b], options.measures[s], &coverage);
            const std::vector<double> raw_runs(options.runs, raw);
            for (std::size_t m = 0; m < 2; ++m) {
                const auto& runs = scores[m][b][s];
                const auto sum = summarize(runs);
                ProbeRow row{embedding_name, benchmarks[b].name, options.measures[s],
                             m == 0 ? ProbeMapping::nn : ProbeMapping::lin, sum.mean, sum.stddev, coverage,
                             options.runs, std::nullopt, std::nullopt, false};
                row.p_value = wilcoxon_rank_sum_p(runs, raw_runs);
                mapped_rows.push_back(report.rows.size());
                raw_p.push_back(*row.p_value);
                report.rows.push_back(std::move(row));
            }
            report.rows.push_back({embedding_name, benchmarks[b].name, options.measures[s], ProbeMapping::raw, raw, 0.0,
                                   coverage, 1, std::nullopt, std::nullopt, false});
        }
    }
    const auto adjusted = bonferroni_adjust(raw_p);
    for (std::size_t i = 0; i < mapped_rows.size(); ++i) {
        auto& row = report.rows[mapped_rows[i]];
        row.p_adjusted = adjusted[i];
        row.significant = adjusted[i] < options.alpha;
    }
    return report;
}

}  // namespace crossmap
