#include "crossmap/report.hpp"

#include "crossmap/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace crossmap {

Direction parse_direction(std::string_view name) {
    if (name == "x_to_y") {
        return Direction::x_to_y;
    }
    if (name == "y_to_x") {
        return Direction::y_to_x;
    }
    throw ValidationError("unknown direction '" + std::string(name) + "'");
}

std::string_view to_string(Direction d) { return d == Direction::x_to_y ? "x_to_y" : "y_to_x"; }

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") {
        return ReportFormat::csv;
    }
    if (name == "markdown" || name == "md") {
        return ReportFormat::markdown;
    }
    throw ValidationError("unknown report format '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// CSV primitives

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(field);
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

CsvTable parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        if (!(record.size() == 1 && record.front().empty())) {
            records.push_back(std::move(record));
        }
        record.clear();
        field_started = false;
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\n') {
            end_record();
        } else if (c != '\r') {
            field += c;
            field_started = true;
        }
        ++i;
    }
    if (quoted) {
        throw ValidationError("csv: unterminated quoted field");
    }
    if (field_started || !record.empty()) {
        end_record();
    }
    if (records.empty()) {
        throw ValidationError("csv: no header line");
    }
    CsvTable table;
    table.header = std::move(records.front());
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            throw ValidationError("csv: record " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                                  " fields, header has " + std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

std::size_t CsvTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
        throw ValidationError("csv: no column named '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
}

std::vector<double> CsvTable::numbers(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (detail::trim(rows[r][c]).empty()) {
            continue;
        }
        const auto v = detail::try_parse_real(rows[r][c]);
        if (!v) {
            throw ValidationError("csv: column '" + std::string(name) + "' row " + std::to_string(r + 1) +
                                  " is not a number: '" + rows[r][c] + "'");
        }
        out.push_back(*v);
    }
    return out;
}

namespace {

std::string opt_real(const std::optional<double>& v) { return v ? detail::format_real(*v) : std::string(); }

template <typename T>
std::string opt_int(const std::optional<T>& v) {
    return v ? std::to_string(*v) : std::string();
}

std::optional<double> read_opt_real(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    if (auto v = detail::try_parse_real(s)) {
        return v;
    }
    throw ValidationError("report csv: bad number '" + s + "'");
}

std::optional<std::size_t> read_opt_size(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ValidationError("report csv: bad integer '" + s + "'");
    }
    return v;
}

bool read_flag(const std::string& s) {
    if (s == "yes") {
        return true;
    }
    if (s == "no") {
        return false;
    }
    throw ValidationError("report csv: expected yes/no, got '" + s + "'");
}

std::string fixed3(const std::optional<double>& v) {
    if (!v) {
        return "FAILED";
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *v);
    return buf;
}

constexpr const char* kMappingColumns[] = {
    "dataset",  "direction",   "model",         "loss",          "measure",      "k",
    "status",   "mnno_x_fx",   "mnno_y_fx",     "mnno_x_y",      "p_value",      "p_adjusted",
    "significant", "learning_rate", "hidden_units", "margin", "dropout", "epochs"};

constexpr const char* kProbeColumns[] = {"embedding", "benchmark",  "measure",    "mapping",
                                         "mean_spearman", "std_spearman", "coverage", "runs",
                                         "p_value",   "p_adjusted", "significant"};

template <std::size_t N>
std::string header_line(const char* const (&cols)[N]) {
    std::string out;
    for (std::size_t i = 0; i < N; ++i) {
        if (i > 0) {
            out += ',';
        }
        out += cols[i];
    }
    return out + '\n';
}

template <std::size_t N>
void check_header(const CsvTable& t, const char* const (&cols)[N]) {
    if (t.header.size() != N || !std::equal(t.header.begin(), t.header.end(), cols)) {
        throw ValidationError("report csv: unexpected header");
    }
}

std::string render_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << header_line(kMappingColumns);
    for (const auto& r : report.rows) {
        out << csv_escape(r.dataset) << ',' << to_string(r.direction) << ',' << csv_escape(r.model) << ','
            << to_string(r.loss) << ',' << to_string(r.measure) << ',' << r.k << ',' << (r.failed ? "FAILED" : "ok")
            << ',' << opt_real(r.mnno_x_fx) << ',' << opt_real(r.mnno_y_fx) << ',' << opt_real(r.mnno_x_y) << ','
            << opt_real(r.p_value) << ',' << opt_real(r.p_adjusted) << ',' << (r.significant ? "yes" : "no") << ','
            << opt_real(r.learning_rate) << ',' << opt_int(r.hidden_units) << ',' << opt_real(r.margin) << ','
            << opt_real(r.dropout) << ',' << opt_int(r.epochs) << '\n';
    }
    return out.str();
}

std::string render_markdown(const ExperimentReport& report) {
    std::ostringstream out;
    out << "| dataset | direction | model | loss | measure | K | mNNO(X,f(X)) | mNNO(Y,f(X)) | mNNO(X,Y) | p (adj.) |\n";
    out << "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : report.rows) {
        std::string xf = fixed3(r.mnno_x_fx);
        std::string yf = fixed3(r.mnno_y_fx);
        if (!r.failed && r.mnno_x_fx && r.mnno_y_fx) {
            const std::string star = r.significant ? "\\*" : "";
            if (*r.mnno_x_fx > *r.mnno_y_fx) {
                xf = "**" + xf + "**" + star;
            } else if (*r.mnno_y_fx > *r.mnno_x_fx) {
                yf = "**" + yf + "**" + star;
            }
        }
        char p[32] = "";
        if (r.p_adjusted) {
            std::snprintf(p, sizeof(p), "%.3g", *r.p_adjusted);
        }
        out << "| " << r.dataset << " | " << to_string(r.direction) << " | " << r.model << " | " << to_string(r.loss)
            << " | " << to_string(r.measure) << " | " << r.k << " | " << xf << " | " << yf << " | "
            << fixed3(r.mnno_x_y) << " | " << p << " |\n";
    }
    return out.str();
}

std::string render_csv(const ProbeReport& report) {
    std::ostringstream out;
    out << header_line(kProbeColumns);
    for (const auto& r : report.rows) {
        out << csv_escape(r.embedding) << ',' << csv_escape(r.benchmark) << ',' << to_string(r.measure) << ','
            << to_string(r.mapping) << ',' << detail::format_real(r.mean_spearman) << ','
            << detail::format_real(r.std_spearman) << ',' << detail::format_real(r.coverage) << ',' << r.runs << ','
            << opt_real(r.p_value) << ',' << opt_real(r.p_adjusted) << ',' << (r.significant ? "yes" : "no") << '\n';
    }
    return out.str();
}

// Rows: mapping per embedding. Columns: benchmark x measure. Bold marks the best
// score of each column within an embedding block; a star marks a significant
// mapped-vs-raw difference.
std::string render_markdown(const ProbeReport& report) {
    std::vector<std::pair<std::string, std::string>> columns;  // benchmark, measure
    std::vector<std::string> embeddings;
    std::map<std::tuple<std::string, std::string, std::string, std::string>, const ProbeRow*> cells;
    for (const auto& r : report.rows) {
        std::pair<std::string, std::string> col{r.benchmark, std::string(to_string(r.measure))};
        if (std::find(columns.begin(), columns.end(), col) == columns.end()) {
            columns.push_back(col);
        }
        if (std::find(embeddings.begin(), embeddings.end(), r.embedding) == embeddings.end()) {
            embeddings.push_back(r.embedding);
        }
        cells[{r.embedding, std::string(to_string(r.mapping)), col.first, col.second}] = &r;
    }
    std::ostringstream out;
    out << "| |";
    for (const auto& [b, m] : columns) {
        out << ' ' << b << " (" << (m == "cosine" ? "cos" : "eucl") << ") |";
    }
    out << "\n|---|";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        out << "---|";
    }
    out << '\n';
    const ProbeMapping order[] = {ProbeMapping::nn, ProbeMapping::lin, ProbeMapping::raw};
    for (const auto& emb : embeddings) {
        for (auto mapping : order) {
            const std::string name(to_string(mapping));
            out << "| " << (mapping == ProbeMapping::raw ? emb : name + "(" + emb + ")") << " |";
            for (const auto& [b, m] : columns) {
                const auto it = cells.find({emb, name, b, m});
                if (it == cells.end()) {
                    out << " |";
                    continue;
                }
                double best = -2.0;
                for (auto other : order) {
                    const auto o = cells.find({emb, std::string(to_string(other)), b, m});
                    if (o != cells.end()) {
                        best = std::max(best, o->second->mean_spearman);
                    }
                }
                std::string v = fixed3(it->second->mean_spearman);
                if (it->second->mean_spearman == best) {
                    v = "**" + v + "**";
                }
                if (it->second->significant) {
                    v += "\\*";
                }
                out << ' ' << v << " |";
            }
            out << '\n';
        }
    }
    return out.str();
}

}  // namespace

std::string render_report(const ExperimentReport& report, ReportFormat format) {
    if (report.rows.empty()) {
        throw ValidationError("cannot render an empty report");
    }
    return format == ReportFormat::csv ? render_csv(report) : render_markdown(report);
}

std::string render_report(const ProbeReport& report, ReportFormat format) {
    if (report.rows.empty()) {
        throw ValidationError("cannot render an empty report");
    }
    return format == ReportFormat::csv ? render_csv(report) : render_markdown(report);
}

ExperimentReport parse_experiment_csv(std::string_view text) {
    const auto table = parse_csv(text);
    check_header(table, kMappingColumns);
    ExperimentReport report;
    for (const auto& f : table.rows) {
        MappingRow r;
        r.dataset = f[0];
        r.direction = parse_direction(f[1]);
        r.model = f[2];
        r.loss = parse_loss(f[3]);
        r.measure = parse_measure(f[4]);
        r.k = read_opt_size(f[5]).value_or(0);
        r.failed = f[6] == "FAILED";
        r.mnno_x_fx = read_opt_real(f[7]);
        r.mnno_y_fx = read_opt_real(f[8]);
        r.mnno_x_y = read_opt_real(f[9]);
        r.p_value = read_opt_real(f[10]);
        r.p_adjusted = read_opt_real(f[11]);
        r.significant = read_flag(f[12]);
        r.learning_rate = read_opt_real(f[13]);
        r.hidden_units = read_opt_size(f[14]);
        r.margin = read_opt_real(f[15]);
        r.dropout = read_opt_real(f[16]);
        r.epochs = read_opt_size(f[17]);
        report.rows.push_back(std::move(r));
    }
    return report;
}

ProbeReport parse_probe_csv(std::string_view text) {
    const auto table = parse_csv(text);
    check_header(table, kProbeColumns);
    ProbeReport report;
    for (const auto& f : table.rows) {
        ProbeRow r;
        r.embedding = f[0];
        r.benchmark = f[1];
        r.measure = parse_measure(f[2]);
        if (f[3] == "f_nn") {
            r.mapping = ProbeMapping::nn;
        } else if (f[3] == "f_lin") {
            r.mapping = ProbeMapping::lin;
        } else if (f[3] == "raw") {
            r.mapping = ProbeMapping::raw;
        } else {
            throw ValidationError("report csv: unknown mapping '" + f[3] + "'");
        }
        r.mean_spearman = read_opt_real(f[4]).value_or(0.0);
        r.std_spearman = read_opt_real(f[5]).value_or(0.0);
        r.coverage = read_opt_real(f[6]).value_or(0.0);
        r.runs = read_opt_size(f[7]).value_or(0);
        r.p_value = read_opt_real(f[8]);
        r.p_adjusted = read_opt_real(f[9]);
        r.significant = read_flag(f[10]);
        report.rows.push_back(std::move(r));
    }
    return report;
}

}  // namespace crossmap
