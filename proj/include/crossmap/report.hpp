#ifndef CROSSMAP_REPORT_HPP
#define CROSSMAP_REPORT_HPP

#include "crossmap/evaluation.hpp"
#include "crossmap/training.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crossmap {

enum class Direction { x_to_y, y_to_x };

Direction parse_direction(std::string_view name);
std::string_view to_string(Direction d);

/// One mapping configuration of the neighbourhood experiment. Metric cells are
/// empty for failed rows.
struct MappingRow {
    std::string dataset;
    Direction direction = Direction::x_to_y;
    std::string model;  ///< lin, nn-1, nn-3, nn-5
    LossKind loss = LossKind::mse;
    Measure measure = Measure::cosine;
    std::size_t k = 10;
    bool failed = false;
    std::optional<double> mnno_x_fx;  ///< test mNNO(X, f(X))
    std::optional<double> mnno_y_fx;  ///< test mNNO(Y, f(X))
    std::optional<double> mnno_x_y;   ///< test mNNO(X, Y)
    std::optional<double> p_value;
    std::optional<double> p_adjusted;
    bool significant = false;
    std::optional<double> learning_rate;
    std::optional<std::size_t> hidden_units;
    std::optional<double> margin;
    std::optional<double> dropout;
    std::optional<std::size_t> epochs;

    friend bool operator==(const MappingRow&, const MappingRow&) = default;
};

struct ExperimentReport {
    std::vector<MappingRow> rows;

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

enum class ReportFormat { csv, markdown };

ReportFormat parse_report_format(std::string_view name);

/// Stable column order. Markdown bolds the larger of the two mapped-overlap
/// cells and stars significant rows. Throws on an empty report.
std::string render_report(const ExperimentReport& report, ReportFormat format);
std::string render_report(const ProbeReport& report, ReportFormat format);

ExperimentReport parse_experiment_csv(std::string_view text);
ProbeReport parse_probe_csv(std::string_view text);

/// Minimal RFC 4180 table: quoted fields may contain commas, quotes and newlines.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column; throws ValidationError when missing.
    std::size_t column(std::string_view name) const;
    /// Numeric values of a column, skipping empty cells.
    std::vector<double> numbers(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
std::string csv_escape(std::string_view field);

}  // namespace crossmap

#endif
