#include "crossmap/vectors.hpp"

#include "crossmap/errors.hpp"
#include "crossmap/rng.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace crossmap {

Measure parse_measure(std::string_view name) {
    if (name == "cosine" || name == "cos") {
        return Measure::cosine;
    }
    if (name == "euclidean" || name == "eucl") {
        return Measure::euclidean;
    }
    throw ValidationError("unknown similarity measure '" + std::string(name) + "'");
}

std::string_view to_string(Measure m) { return m == Measure::cosine ? "cosine" : "euclidean"; }

double similarity(std::span<const double> a, std::span<const double> b, Measure measure) {
    if (a.size() != b.size()) {
        throw ValidationError("similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    if (measure == Measure::euclidean) {
        return 1.0 / (1.0 + std::sqrt(squared_distance(a, b)));
    }
    const double na = std::sqrt(squared_norm(a));
    const double nb = std::sqrt(squared_norm(b));
    if (na == 0.0 || nb == 0.0) {
        throw ValidationError("cosine similarity is undefined for a zero vector");
    }
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

VectorSet::VectorSet(std::vector<std::string> keys, Matrix values)
    : keys_(std::move(keys)), values_(std::move(values)) {
    if (keys_.size() != values_.rows()) {
        throw ValidationError("vector set has " + std::to_string(keys_.size()) + " keys but " +
                              std::to_string(values_.rows()) + " rows");
    }
    if (!keys_.empty() && values_.cols() == 0) {
        throw ValidationError("vector set has zero-dimensional rows");
    }
    if (!values_.all_finite()) {
        throw ValidationError("vector set contains a non-finite value");
    }
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (!index_.emplace(keys_[i], i).second) {
            throw ValidationError("duplicate key '" + keys_[i] + "'");
        }
    }
}

std::optional<std::size_t> VectorSet::find(std::string_view key) const {
    const auto it = index_.find(key);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

VectorSet VectorSet::subset(std::span<const std::size_t> indices) const {
    std::vector<std::string> keys;
    keys.reserve(indices.size());
    for (auto i : indices) {
        keys.push_back(keys_.at(i));
    }
    return {std::move(keys), values_.select_rows(indices)};
}

PairedDataset::PairedDataset(VectorSet x, VectorSet y, std::optional<std::vector<std::string>> labels)
    : x_(std::move(x)), y_(std::move(y)), labels_(std::move(labels)) {
    if (x_.keys() != y_.keys()) {
        throw ValidationError("paired dataset: x and y keys are not aligned");
    }
    if (labels_ && labels_->size() != x_.size()) {
        throw ValidationError("paired dataset: " + std::to_string(labels_->size()) + " labels for " +
                              std::to_string(x_.size()) + " items");
    }
}

PairedDataset PairedDataset::subset(std::span<const std::size_t> indices) const {
    std::optional<std::vector<std::string>> labels;
    if (labels_) {
        labels.emplace();
        for (auto i : indices) {
            labels->push_back(labels_->at(i));
        }
    }
    return {x_.subset(indices), y_.subset(indices), std::move(labels)};
}

PairedDataset PairedDataset::swapped() const { return {y_, x_, labels_}; }

// ---------------------------------------------------------------------------
// Text formats

VectorFormat parse_vector_format(std::string_view name) {
    if (name == "glove_text" || name == "glove" || name == "text") {
        return VectorFormat::glove_text;
    }
    if (name == "tsv") {
        return VectorFormat::tsv;
    }
    throw ValidationError("unknown vector format '" + std::string(name) + "'");
}

VectorSet parse_vector_set(std::istream& in, VectorFormat format, const std::string& source) {
    std::vector<std::string> keys;
    std::vector<double> values;
    std::map<std::string, std::size_t, std::less<>> seen;
    std::size_t dim = 0;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (detail::is_blank(line)) {
            continue;
        }
        std::string key;
        std::vector<double> row;
        if (format == VectorFormat::glove_text) {
            auto tokens = detail::split_whitespace(line);
            key = std::string(tokens.front());
            for (std::size_t t = 1; t < tokens.size(); ++t) {
                row.push_back(detail::parse_real(tokens[t], source, line_no));
            }
        } else {
            auto fields = detail::split(line, '\t');
            if (fields.size() != 2) {
                throw ParseError(source, line_no, "expected 'key<TAB>v1,...,vd', got " +
                                                      std::to_string(fields.size()) + " fields");
            }
            key = std::string(fields[0]);
            row = detail::parse_real_list(fields[1], source, line_no);
        }
        if (key.empty()) {
            throw ParseError(source, line_no, "empty key");
        }
        if (row.empty()) {
            throw ParseError(source, line_no, "no vector values for key '" + key + "'");
        }
        if (keys.empty()) {
            dim = row.size();
        } else if (row.size() != dim) {
            throw ParseError(source, line_no, "dimension mismatch: expected " + std::to_string(dim) +
                                                  " values, found " + std::to_string(row.size()));
        }
        if (!seen.emplace(key, line_no).second) {
            throw ParseError(source, line_no, "duplicate key '" + key + "'");
        }
        keys.push_back(std::move(key));
        values.insert(values.end(), row.begin(), row.end());
    }
    const std::size_t n = keys.size();
    return {std::move(keys), Matrix(n, dim, std::move(values))};
}

VectorSet load_vector_set(const std::filesystem::path& path, VectorFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open vector file '" + path.string() + "'");
    }
    return parse_vector_set(in, format, path.string());
}

void write_vector_set(std::ostream& out, const VectorSet& set, VectorFormat format) {
    for (std::size_t i = 0; i < set.size(); ++i) {
        out << set.keys()[i];
        if (format == VectorFormat::glove_text) {
            for (double v : set.row(i)) {
                out << ' ' << detail::format_real(v);
            }
        } else {
            out << '\t' << detail::join_reals(set.row(i), ',');
        }
        out << '\n';
    }
}

PairedDataset parse_paired_tsv(std::istream& in, const std::string& source) {
    std::vector<std::string> keys;
    std::vector<std::string> labels;
    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t dx = 0;
    std::size_t dy = 0;
    std::optional<bool> labelled;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (detail::is_blank(line)) {
            continue;
        }
        auto fields = detail::split(line, '\t');
        if (fields.size() != 3 && fields.size() != 4) {
            throw ParseError(source, line_no, "expected 3 or 4 tab-separated fields, got " +
                                                  std::to_string(fields.size()));
        }
        const bool has_label = fields.size() == 4 && !fields[1].empty();
        if (!labelled) {
            labelled = has_label;
        } else if (*labelled != has_label) {
            throw ParseError(source, line_no, "label present on some lines but not others");
        }
        const std::size_t xf = fields.size() == 4 ? 2 : 1;
        auto x = detail::parse_real_list(fields[xf], source, line_no);
        auto y = detail::parse_real_list(fields[xf + 1], source, line_no);
        if (keys.empty()) {
            dx = x.size();
            dy = y.size();
        } else if (x.size() != dx || y.size() != dy) {
            throw ParseError(source, line_no, "dimension mismatch: expected " + std::to_string(dx) + "/" +
                                                  std::to_string(dy) + " values, found " +
                                                  std::to_string(x.size()) + "/" + std::to_string(y.size()));
        }
        keys.emplace_back(fields[0]);
        if (has_label) {
            labels.emplace_back(fields[1]);
        }
        xs.insert(xs.end(), x.begin(), x.end());
        ys.insert(ys.end(), y.begin(), y.end());
    }
    const std::size_t n = keys.size();
    std::optional<std::vector<std::string>> label_opt;
    if (labelled.value_or(false)) {
        label_opt = std::move(labels);
    }
    try {
        VectorSet x(keys, Matrix(n, dx, std::move(xs)));
        VectorSet y(std::move(keys), Matrix(n, dy, std::move(ys)));
        return {std::move(x), std::move(y), std::move(label_opt)};
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

PairedDataset load_paired_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open paired file '" + path.string() + "'");
    }
    return parse_paired_tsv(in, path.string());
}

void write_paired_tsv(std::ostream& out, const PairedDataset& data) {
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.keys()[i] << '\t';
        if (data.has_labels()) {
            out << (*data.labels())[i];
        }
        out << '\t' << detail::join_reals(data.x().row(i), ',') << '\t'
            << detail::join_reals(data.y().row(i), ',') << '\n';
    }
}

// ---------------------------------------------------------------------------

VectorSet aggregate_centroids(const std::map<std::string, std::vector<std::vector<double>>>& groups) {
    std::vector<std::string> keys;
    std::vector<double> values;
    std::size_t dim = 0;
    for (const auto& [key, members] : groups) {
        if (members.empty()) {
            throw ValidationError("centroid of empty group '" + key + "'");
        }
        if (keys.empty()) {
            dim = members.front().size();
        }
        std::vector<double> sum(dim, 0.0);
        for (const auto& v : members) {
            if (v.size() != dim) {
                throw ValidationError("group '" + key + "' has a vector of dimension " +
                                      std::to_string(v.size()) + ", expected " + std::to_string(dim));
            }
            for (std::size_t j = 0; j < dim; ++j) {
                sum[j] += v[j];
            }
        }
        for (double& s : sum) {
            s /= static_cast<double>(members.size());
        }
        keys.push_back(key);
        values.insert(values.end(), sum.begin(), sum.end());
    }
    const std::size_t n = keys.size();
    return {std::move(keys), Matrix(n, dim, std::move(values))};
}

std::string PairingDiagnostics::to_text() const {
    std::ostringstream out;
    const std::size_t paired = x_total - dropped_from_x.size();
    out << "paired " << paired << " keys (x: " << x_total << ", y: " << y_total << ")\n";
    out << "dropped from x: " << dropped_from_x.size() << '\n';
    for (const auto& k : dropped_from_x) {
        out << "  " << k << '\n';
    }
    out << "dropped from y: " << dropped_from_y.size() << '\n';
    for (const auto& k : dropped_from_y) {
        out << "  " << k << '\n';
    }
    return out.str();
}

PairingResult pair_by_keys(const VectorSet& x, const VectorSet& y) {
    std::vector<std::string> common;
    PairingDiagnostics diag;
    diag.x_total = x.size();
    diag.y_total = y.size();
    for (const auto& k : x.keys()) {
        if (y.find(k)) {
            common.push_back(k);
        } else {
            diag.dropped_from_x.push_back(k);
        }
    }
    for (const auto& k : y.keys()) {
        if (!x.find(k)) {
            diag.dropped_from_y.push_back(k);
        }
    }
    if (common.empty()) {
        throw ValidationError("pair_by_keys: the two vector sets share no keys");
    }
    std::sort(common.begin(), common.end());
    std::sort(diag.dropped_from_x.begin(), diag.dropped_from_x.end());
    std::sort(diag.dropped_from_y.begin(), diag.dropped_from_y.end());

    std::vector<std::size_t> xi;
    std::vector<std::size_t> yi;
    for (const auto& k : common) {
        xi.push_back(*x.find(k));
        yi.push_back(*y.find(k));
    }
    return {PairedDataset(x.subset(xi), y.subset(yi)), std::move(diag)};
}

std::vector<Fold> k_fold_split(const PairedDataset& dataset, std::size_t k, std::uint64_t seed) {
    const std::size_t n = dataset.size();
    if (k < 2 || k > n) {
        throw ValidationError("k_fold_split: need 2 <= k <= N (k = " + std::to_string(k) +
                              ", N = " + std::to_string(n) + ")");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<Fold> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t begin = f * n / k;
        const std::size_t end = (f + 1) * n / k;
        std::vector<bool> in_test(n, false);
        for (std::size_t p = begin; p < end; ++p) {
            in_test[order[p]] = true;
        }
        auto& fold = folds[f];
        for (std::size_t i = 0; i < n; ++i) {
            (in_test[i] ? fold.test_indices : fold.train_indices).push_back(i);
        }
        fold.train = dataset.subset(fold.train_indices);
        fold.test = dataset.subset(fold.test_indices);
    }
    return folds;
}

}  // namespace crossmap
