#ifndef CROSSMAP_VECTORS_HPP
#define CROSSMAP_VECTORS_HPP

#include "crossmap/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crossmap {

enum class Measure { cosine, euclidean };

Measure parse_measure(std::string_view name);
std::string_view to_string(Measure m);

/// Cosine in [-1, 1], or the distance-derived 1 / (1 + ||a - b||) in (0, 1].
/// Throws ValidationError on a dimension mismatch or a zero vector under cosine.
double similarity(std::span<const double> a, std::span<const double> b, Measure measure);

/**
 * Named rows of one vector space.
 *
 * Keys are unique, values are finite, and key i names row i. The invariants
 * are checked once at construction; a VectorSet is immutable afterwards.
 */
class VectorSet {
public:
    VectorSet() = default;
    VectorSet(std::vector<std::string> keys, Matrix values);

    std::size_t size() const { return keys_.size(); }
    std::size_t dim() const { return values_.cols(); }
    const std::vector<std::string>& keys() const { return keys_; }
    const Matrix& values() const { return values_; }
    std::span<const double> row(std::size_t i) const { return values_.row(i); }

    /// Row index of `key`, if present.
    std::optional<std::size_t> find(std::string_view key) const;

    VectorSet subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const VectorSet&, const VectorSet&) = default;

private:
    std::vector<std::string> keys_;
    Matrix values_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

/// Two key-aligned vector sets: x_i is paired with y_i.
class PairedDataset {
public:
    PairedDataset() = default;
    PairedDataset(VectorSet x, VectorSet y, std::optional<std::vector<std::string>> labels = {});

    std::size_t size() const { return x_.size(); }
    const VectorSet& x() const { return x_; }
    const VectorSet& y() const { return y_; }
    const std::vector<std::string>& keys() const { return x_.keys(); }
    bool has_labels() const { return labels_.has_value(); }
    const std::optional<std::vector<std::string>>& labels() const { return labels_; }

    PairedDataset subset(std::span<const std::size_t> indices) const;

    /// The same pairs with the roles of x and y exchanged.
    PairedDataset swapped() const;

    friend bool operator==(const PairedDataset&, const PairedDataset&) = default;

private:
    VectorSet x_;
    VectorSet y_;
    std::optional<std::vector<std::string>> labels_;
};

enum class VectorFormat {
    glove_text,  ///< `key v1 v2 ... vd`, whitespace separated
    tsv,         ///< `key TAB v1,v2,...,vd`
};

VectorFormat parse_vector_format(std::string_view name);

VectorSet parse_vector_set(std::istream& in, VectorFormat format, const std::string& source = "<stream>");
VectorSet load_vector_set(const std::filesystem::path& path, VectorFormat format);
void write_vector_set(std::ostream& out, const VectorSet& set, VectorFormat format);

/// Paired TSV: `key TAB label TAB x1,...,xd TAB y1,...,yd`. The label field may be
/// empty or omitted (three fields); every line must make the same choice.
PairedDataset parse_paired_tsv(std::istream& in, const std::string& source = "<stream>");
PairedDataset load_paired_tsv(const std::filesystem::path& path);
void write_paired_tsv(std::ostream& out, const PairedDataset& data);

/// Mean vector per key. Keys come out in lexicographic order.
VectorSet aggregate_centroids(const std::map<std::string, std::vector<std::vector<double>>>& groups);

struct PairingDiagnostics {
    std::size_t x_total = 0;
    std::size_t y_total = 0;
    std::vector<std::string> dropped_from_x;  ///< keys only present in x
    std::vector<std::string> dropped_from_y;  ///< keys only present in y

    std::string to_text() const;
};

struct PairingResult {
    PairedDataset dataset;
    PairingDiagnostics diagnostics;
};

/// Restricts both sets to their common keys, in lexicographic key order.
PairingResult pair_by_keys(const VectorSet& x, const VectorSet& y);

struct Fold {
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
    PairedDataset train;
    PairedDataset test;
};

/// Seeded k-fold partition. Fold sizes differ by at most one; indices inside
/// each fold keep dataset order.
std::vector<Fold> k_fold_split(const PairedDataset& dataset, std::size_t k, std::uint64_t seed);

}  // namespace crossmap

#endif
