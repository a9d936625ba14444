#pragma once

#include "chartforge/common.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace chartforge {

enum class ColumnKind { categorical, numeric };

inline std::string_view to_string(ColumnKind k) { return k == ColumnKind::numeric ? "numeric" : "categorical"; }

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::categorical;
    std::optional<std::string> unit;

    friend bool operator==(const Column &, const Column &) = default;
};

/// A categorical cell holds text, a numeric cell holds a finite double.
using Cell = std::variant<std::string, double>;

/// Raw text grid; row 0 is the header.
using RawTable = std::vector<std::vector<std::string>>;

/// Typed columnar table. Invariants are checked on construction, so every
/// DataTable in the program is well formed.
class DataTable {
  public:
    DataTable() = default;

    DataTable(std::vector<Column> columns, std::vector<std::vector<Cell>> rows)
        : columns_(std::move(columns)), rows_(std::move(rows)) {
        validate();
    }

    const std::vector<Column> &columns() const { return columns_; }
    const std::vector<std::vector<Cell>> &rows() const { return rows_; }
    std::size_t row_count() const { return rows_.size(); }
    std::size_t column_count() const { return columns_.size(); }
    const Column &column(std::size_t c) const { return columns_.at(c); }
    const Cell &cell(std::size_t r, std::size_t c) const { return rows_.at(r).at(c); }

    double number(std::size_t r, std::size_t c) const { return std::get<double>(cell(r, c)); }

    /// Display text of a cell (numbers via format_number).
    std::string text(std::size_t r, std::size_t c) const {
        const Cell &v = cell(r, c);
        if (auto *d = std::get_if<double>(&v))
            return format_number(*d);
        return std::get<std::string>(v);
    }

    std::optional<std::size_t> find_column(std::string_view name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i].name == name)
                return i;
        return std::nullopt;
    }

    friend bool operator==(const DataTable &, const DataTable &) = default;

  private:
    void validate() const {
        std::set<std::string> names;
        for (const auto &col : columns_) {
            if (col.name.empty())
                throw Error(ErrorKind::InvalidTable, "column names must be non-empty");
            if (!names.insert(col.name).second)
                throw Error(ErrorKind::InvalidTable, "duplicate column name '" + col.name + "'");
        }
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            if (rows_[r].size() != columns_.size())
                throw Error(ErrorKind::RaggedInput, "row " + std::to_string(r) + " has " +
                                                        std::to_string(rows_[r].size()) + " cells, expected " +
                                                        std::to_string(columns_.size()));
            for (std::size_t c = 0; c < columns_.size(); ++c) {
                const bool is_num = std::holds_alternative<double>(rows_[r][c]);
                if (is_num != (columns_[c].kind == ColumnKind::numeric))
                    throw Error(ErrorKind::InvalidTable, "cell kind mismatch in column '" + columns_[c].name + "'");
                if (is_num && !std::isfinite(std::get<double>(rows_[r][c])))
                    throw Error(ErrorKind::InvalidTable, "non-finite value in column '" + columns_[c].name + "'");
            }
        }
    }

    std::vector<Column> columns_;
    std::vector<std::vector<Cell>> rows_;
};

/// Same header and same display text everywhere. This is the equality used
/// for round trips through text (labels, flattened tables).
inline bool same_display(const DataTable &a, const DataTable &b) {
    if (a.column_count() != b.column_count() || a.row_count() != b.row_count())
        return false;
    for (std::size_t c = 0; c < a.column_count(); ++c)
        if (a.column(c).name != b.column(c).name || a.column(c).kind != b.column(c).kind)
            return false;
    for (std::size_t r = 0; r < a.row_count(); ++r)
        for (std::size_t c = 0; c < a.column_count(); ++c)
            if (a.text(r, c) != b.text(r, c))
                return false;
    return true;
}

// ---------------------------------------------------------------------------
// Numeric cell parsing

struct ParsedNumber {
    double value = 0.0;
    std::optional<std::string> unit;
};

namespace detail {

inline bool strip_currency(std::string_view &s, std::optional<std::string> &unit) {
    static constexpr std::string_view symbols[] = {"$", "\xE2\x82\xAC", "\xC2\xA3", "\xC2\xA5"};
    for (auto sym : symbols) {
        if (starts_with(s, sym)) {
            s.remove_prefix(sym.size());
            unit = std::string(sym);
            return true;
        }
    }
    return false;
}

/// Removes thousands separators when they are well placed ("1,234,567.8").
inline std::optional<std::string> strip_grouping(std::string_view s) {
    if (s.find(',') == std::string_view::npos)
        return std::string(s);
    const auto dot = s.find('.');
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot);
    if (frac.find(',') != std::string_view::npos)
        return std::nullopt;
    std::size_t first = whole.find(',');
    if (first == 0 || first > 3)
        return std::nullopt;
    std::string out(whole.substr(0, first));
    std::size_t pos = first;
    while (pos < whole.size()) {
        if (whole[pos] != ',' || pos + 4 > whole.size())
            return std::nullopt;
        auto group = whole.substr(pos + 1, 3);
        if (!std::all_of(group.begin(), group.end(), [](char c) { return c >= '0' && c <= '9'; }))
            return std::nullopt;
        out += group;
        pos += 4;
    }
    if (!std::all_of(out.begin(), out.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    out += frac;
    return out;
}

} // namespace detail

/// Parses a table cell as a number after stripping one leading currency
/// symbol, thousands separators and one trailing '%'.
inline std::optional<ParsedNumber> parse_table_number(std::string_view text) {
    std::string_view s = trim(text);
    ParsedNumber out;
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
        detail::strip_currency(s, out.unit);
    } else if (detail::strip_currency(s, out.unit)) {
        if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
            negative = s.front() == '-';
            s.remove_prefix(1);
        }
    }
    if (!s.empty() && s.back() == '%') {
        if (out.unit)
            return std::nullopt; // "$5%" is not a number
        s.remove_suffix(1);
        out.unit = "%";
    }
    if (s.empty() || s.front() == '-' || s.front() == '+')
        return std::nullopt;
    auto digits = detail::strip_grouping(s);
    if (!digits)
        return std::nullopt;
    auto value = parse_plain_number(*digits);
    if (!value)
        return std::nullopt;
    out.value = negative ? -*value : *value;
    if (out.value == 0.0)
        out.value = 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Kind inference

inline constexpr double kNumericColumnThreshold = 0.9;

/// Builds a typed table from raw text. Row 0 of `raw` is the header. Empty or
/// repeated header names are replaced by "column_<n>" / "<name> (<k>)".
inline DataTable infer_column_kinds(const RawTable &raw) {
    if (raw.empty() || raw.front().empty())
        throw Error(ErrorKind::EmptyTable, "no header");
    const std::size_t ncols = raw.front().size();
    for (std::size_t r = 1; r < raw.size(); ++r)
        if (raw[r].size() != ncols)
            throw Error(ErrorKind::RaggedInput, "row " + std::to_string(r) + " has " + std::to_string(raw[r].size()) +
                                                    " cells, header has " + std::to_string(ncols));
    if (raw.size() < 2)
        throw Error(ErrorKind::EmptyTable, "no data rows");

    std::vector<Column> columns(ncols);
    std::map<std::string, int> seen;
    for (std::size_t c = 0; c < ncols; ++c) {
        std::string name(trim(raw[0][c]));
        if (name.empty())
            name = "column_" + std::to_string(c + 1);
        if (int n = ++seen[name]; n > 1)
            name += " (" + std::to_string(n) + ")";
        columns[c].name = name;
    }

    const std::size_t nrows = raw.size() - 1;
    std::vector<std::vector<std::optional<ParsedNumber>>> parsed(ncols, std::vector<std::optional<ParsedNumber>>(nrows));
    for (std::size_t c = 0; c < ncols; ++c) {
        std::size_t non_empty = 0, numeric = 0;
        std::vector<std::string> units; // first-seen order
        std::map<std::string, int> unit_counts;
        for (std::size_t r = 0; r < nrows; ++r) {
            std::string_view cell = trim(raw[r + 1][c]);
            if (cell.empty())
                continue;
            ++non_empty;
            parsed[c][r] = parse_table_number(cell);
            if (parsed[c][r]) {
                ++numeric;
                if (const auto &u = parsed[c][r]->unit) {
                    if (unit_counts[*u]++ == 0)
                        units.push_back(*u);
                }
            }
        }
        const bool is_numeric =
            non_empty > 0 && static_cast<double>(numeric) >= kNumericColumnThreshold * static_cast<double>(non_empty);
        columns[c].kind = is_numeric ? ColumnKind::numeric : ColumnKind::categorical;
        if (is_numeric && !units.empty()) {
            std::string best = units.front();
            for (const auto &u : units)
                if (unit_counts[u] > unit_counts[best])
                    best = u;
            columns[c].unit = best;
        }
    }

    std::vector<std::vector<Cell>> rows;
    for (std::size_t r = 0; r < nrows; ++r) {
        std::vector<Cell> row;
        bool keep = true;
        for (std::size_t c = 0; c < ncols && keep; ++c) {
            if (columns[c].kind == ColumnKind::numeric) {
                if (!parsed[c][r])
                    keep = false;
                else
                    row.emplace_back(parsed[c][r]->value);
            } else {
                row.emplace_back(std::string(trim(raw[r + 1][c])));
            }
        }
        if (keep)
            rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw Error(ErrorKind::EmptyTable, "no rows survive numeric parsing");
    return DataTable(std::move(columns), std::move(rows));
}

/// Renders a table back to raw text. Numbers use the shortest exact form and
/// carry their column unit, so infer_column_kinds(to_raw(t)) reproduces t.
inline RawTable to_raw(const DataTable &table) {
    RawTable raw;
    std::vector<std::string> header;
    for (const auto &col : table.columns())
        header.push_back(col.name);
    raw.push_back(std::move(header));
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        std::vector<std::string> row;
        for (std::size_t c = 0; c < table.column_count(); ++c) {
            const auto &col = table.column(c);
            if (col.kind == ColumnKind::numeric) {
                const double v = table.number(r, c);
                std::string s = format_exact(std::abs(v));
                if (col.unit && *col.unit == "%")
                    s += "%";
                else if (col.unit)
                    s = *col.unit + s;
                row.push_back(v < 0 ? "-" + s : s);
            } else {
                row.push_back(std::get<std::string>(table.cell(r, c)));
            }
        }
        raw.push_back(std::move(row));
    }
    return raw;
}

// ---------------------------------------------------------------------------
// CSV (RFC 4180)

inline RawTable parse_csv(std::string_view text) {
    RawTable out;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false, field_started = false;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        if (!(row.size() == 1 && row[0].empty()))
            out.push_back(std::move(row));
        row.clear();
    };
    if (starts_with(text, "\xEF\xBB\xBF"))
        text.remove_prefix(3);
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (ch == ',') {
            end_field();
        } else if (ch == '\r' || ch == '\n') {
            if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n')
                ++i;
            end_row();
        } else {
            field += ch;
            field_started = true;
        }
    }
    if (in_quotes)
        throw Error(ErrorKind::InvalidTable, "unterminated quoted field");
    if (field_started || !field.empty() || !row.empty())
        end_row();
    return out;
}

inline std::string csv_escape(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string write_csv(const RawTable &raw) {
    std::string out;
    for (const auto &row : raw) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += ',';
            out += csv_escape(row[i]);
        }
        out += "\r\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON shape {"columns": [...], "rows": [[...]]} (+ optional "units")

inline nlohmann::json to_json(const DataTable &table) {
    nlohmann::json cols = nlohmann::json::array(), rows = nlohmann::json::array(), units = nlohmann::json::array();
    bool any_unit = false;
    for (const auto &col : table.columns()) {
        cols.push_back(col.name);
        units.push_back(col.unit ? nlohmann::json(*col.unit) : nlohmann::json());
        any_unit = any_unit || col.unit.has_value();
    }
    for (const auto &row : table.rows()) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto &cell : row) {
            if (auto *d = std::get_if<double>(&cell))
                jr.push_back(*d);
            else
                jr.push_back(std::get<std::string>(cell));
        }
        rows.push_back(std::move(jr));
    }
    nlohmann::json out = {{"columns", cols}, {"rows", rows}};
    if (any_unit)
        out["units"] = units;
    return out;
}

/// Imports the JSON shape. Cells may be strings or numbers; kinds are then
/// inferred from content exactly as for CSV.
inline DataTable table_from_json(const nlohmann::json &j) {
    if (!j.is_object() || !j.contains("columns") || !j.contains("rows") || !j["columns"].is_array() ||
        !j["rows"].is_array())
        throw Error(ErrorKind::InvalidTable, "expected {\"columns\": [...], \"rows\": [[...]]}");
    RawTable raw;
    std::vector<std::string> header;
    for (const auto &c : j["columns"])
        header.push_back(c.is_string() ? c.get<std::string>() : c.dump());
    raw.push_back(header);
    for (const auto &row : j["rows"]) {
        if (!row.is_array())
            throw Error(ErrorKind::InvalidTable, "row is not an array");
        std::vector<std::string> cells;
        for (const auto &cell : row) {
            if (cell.is_string())
                cells.push_back(cell.get<std::string>());
            else if (cell.is_number())
                cells.push_back(format_exact(cell.get<double>()));
            else if (cell.is_null())
                cells.emplace_back();
            else
                cells.push_back(cell.dump());
        }
        raw.push_back(std::move(cells));
    }
    DataTable inferred = infer_column_kinds(raw);
    if (j.contains("units") && j["units"].is_array() && j["units"].size() == inferred.column_count()) {
        auto cols = inferred.columns();
        for (std::size_t c = 0; c < cols.size(); ++c)
            if (j["units"][c].is_string() && cols[c].kind == ColumnKind::numeric)
                cols[c].unit = j["units"][c].get<std::string>();
        return DataTable(std::move(cols), inferred.rows());
    }
    return inferred;
}

// ---------------------------------------------------------------------------
// Chart-ready tables and decomposition

inline constexpr std::size_t kMaxChartRows = 8;
inline constexpr std::size_t kMaxGroupsPerChart = 4;

/// Projection of a table onto one categorical x column, an optional
/// categorical group column and one numeric y column.
struct ChartReadyTable {
    DataTable base;
    std::size_t x_column = 0;
    std::optional<std::size_t> group_column;
    std::size_t y_column = 1;

    bool grouped() const { return group_column.has_value(); }
    std::size_t row_count() const { return base.row_count(); }
    const std::string &x_name() const { return base.column(x_column).name; }
    const std::string &y_name() const { return base.column(y_column).name; }

    std::string x(std::size_t r) const { return std::get<std::string>(base.cell(r, x_column)); }
    std::string group(std::size_t r) const {
        return group_column ? std::get<std::string>(base.cell(r, *group_column)) : y_name();
    }
    double y(std::size_t r) const { return base.number(r, y_column); }

    /// x labels in first-appearance order.
    std::vector<std::string> x_labels() const {
        std::vector<std::string> out;
        for (std::size_t r = 0; r < row_count(); ++r)
            if (std::find(out.begin(), out.end(), x(r)) == out.end())
                out.push_back(x(r));
        return out;
    }

    /// Series names in first-appearance order; the y column name when ungrouped.
    std::vector<std::string> series() const {
        if (!group_column)
            return {y_name()};
        std::vector<std::string> out;
        for (std::size_t r = 0; r < row_count(); ++r)
            if (std::find(out.begin(), out.end(), group(r)) == out.end())
                out.push_back(group(r));
        return out;
    }

    std::optional<double> value(std::string_view series_name, std::string_view x_label) const {
        for (std::size_t r = 0; r < row_count(); ++r)
            if (x(r) == x_label && group(r) == series_name)
                return y(r);
        return std::nullopt;
    }
};

/// Validates the ChartReadyTable invariants.
inline ChartReadyTable make_chart_ready(DataTable base, std::size_t x, std::optional<std::size_t> group,
                                        std::size_t y) {
    auto bad = [](const std::string &m) { return Error(ErrorKind::InvalidTable, m); };
    if (x >= base.column_count() || y >= base.column_count() || (group && *group >= base.column_count()))
        throw bad("column index out of range");
    if (base.column(x).kind != ColumnKind::categorical)
        throw bad("x column must be categorical");
    if (group && (base.column(*group).kind != ColumnKind::categorical || *group == x))
        throw bad("group column must be a distinct categorical column");
    if (base.column(y).kind != ColumnKind::numeric)
        throw bad("y column must be numeric");
    if (base.row_count() == 0)
        throw Error(ErrorKind::EmptyTable, "chart table has no rows");
    if (base.row_count() > kMaxChartRows)
        throw bad("chart table has more than 8 rows");
    std::set<std::pair<std::string, std::string>> keys;
    for (std::size_t r = 0; r < base.row_count(); ++r) {
        auto key = std::make_pair(std::get<std::string>(base.cell(r, x)),
                                  group ? std::get<std::string>(base.cell(r, *group)) : std::string());
        if (!keys.insert(key).second)
            throw bad("duplicate (x, group) pair '" + key.first + "'");
        if (key.first.empty())
            throw bad("empty x label");
        if (group && (key.second.empty() || key.second == base.column(x).name))
            throw bad("group label must be non-empty and differ from the x column name");
    }
    ChartReadyTable t{std::move(base), x, group, y};
    if (group) {
        // every x must carry every series: charts never show holes
        const auto xs = t.x_labels();
        const auto ss = t.series();
        if (xs.size() * ss.size() != t.row_count())
            throw bad("grouped table is missing (x, group) combinations");
    }
    return t;
}

namespace detail {

inline DataTable project(const DataTable &src, const std::vector<std::size_t> &cols,
                         const std::vector<std::size_t> &row_ids) {
    std::vector<Column> columns;
    for (auto c : cols)
        columns.push_back(src.column(c));
    std::vector<std::vector<Cell>> rows;
    for (auto r : row_ids) {
        std::vector<Cell> row;
        for (auto c : cols)
            row.push_back(src.cell(r, c));
        rows.push_back(std::move(row));
    }
    return DataTable(std::move(columns), std::move(rows));
}

/// Splits n items into ceil(n / cap) nearly equal consecutive chunks.
inline std::vector<std::pair<std::size_t, std::size_t>> balanced_chunks(std::size_t n, std::size_t cap) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (n == 0)
        return out;
    const std::size_t k = (n + cap - 1) / cap;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t size = n / k + (i < n % k ? 1 : 0);
        out.emplace_back(begin, begin + size);
        begin += size;
    }
    return out;
}

} // namespace detail

/// Splits an arbitrary table into chart-sized pieces: one numeric y column and
/// one (or two) categorical columns, chosen from the seed, then windowed so no
/// piece exceeds eight rows. Duplicate (x, group) pairs keep their first
/// occurrence; grouped pieces keep only x values present in every group.
inline std::vector<ChartReadyTable> decompose(const DataTable &table, std::uint64_t rng_seed) {
    std::vector<std::size_t> numeric, categorical;
    for (std::size_t c = 0; c < table.column_count(); ++c)
        (table.column(c).kind == ColumnKind::numeric ? numeric : categorical).push_back(c);
    if (numeric.empty())
        throw Error(ErrorKind::NoNumericColumn, "table has no numeric column");
    if (categorical.empty())
        throw Error(ErrorKind::NoCategoricalColumn, "table has no categorical column");

    Rng rng(rng_seed);
    const std::size_t y = rng.pick(numeric);
    const std::size_t x = rng.pick(categorical);
    std::optional<std::size_t> group;
    if (categorical.size() >= 2 && rng.chance(0.5)) {
        std::vector<std::size_t> rest;
        for (auto c : categorical)
            if (c != x)
                rest.push_back(c);
        group = rng.pick(rest);
    }

    auto str = [&](std::size_t r, std::size_t c) { return std::get<std::string>(table.cell(r, c)); };
    std::vector<ChartReadyTable> out;

    // distinct groups in first-appearance order
    std::vector<std::string> groups;
    if (group) {
        for (std::size_t r = 0; r < table.row_count(); ++r) {
            const std::string g = str(r, *group);
            if (!g.empty() && g != table.column(x).name && std::find(groups.begin(), groups.end(), g) == groups.end())
                groups.push_back(g);
        }
        if (groups.size() < 2)
            group.reset();
    }

    if (!group) {
        std::vector<std::size_t> keep;
        std::set<std::string> seen;
        for (std::size_t r = 0; r < table.row_count(); ++r)
            if (!str(r, x).empty() && seen.insert(str(r, x)).second)
                keep.push_back(r);
        for (std::size_t i = 0; i < keep.size(); i += kMaxChartRows) {
            std::vector<std::size_t> window(keep.begin() + static_cast<std::ptrdiff_t>(i),
                                            keep.begin() + static_cast<std::ptrdiff_t>(std::min(keep.size(), i + kMaxChartRows)));
            out.push_back(make_chart_ready(detail::project(table, {x, y}, window), 0, std::nullopt, 1));
        }
        return out;
    }

    // first row index for every (x, group) pair
    std::map<std::pair<std::string, std::string>, std::size_t> first;
    std::vector<std::string> xs;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        auto key = std::make_pair(str(r, x), str(r, *group));
        if (key.first.empty())
            continue;
        if (first.emplace(key, r).second && std::find(xs.begin(), xs.end(), key.first) == xs.end())
            xs.push_back(key.first);
    }
    for (auto [gb, ge] : detail::balanced_chunks(groups.size(), kMaxGroupsPerChart)) {
        const std::vector<std::string> chunk(groups.begin() + static_cast<std::ptrdiff_t>(gb),
                                             groups.begin() + static_cast<std::ptrdiff_t>(ge));
        std::vector<std::string> complete;
        for (const auto &xv : xs)
            if (std::all_of(chunk.begin(), chunk.end(), [&](const std::string &g) { return first.count({xv, g}) > 0; }))
                complete.push_back(xv);
        const std::size_t per_window = kMaxChartRows / chunk.size();
        for (std::size_t i = 0; i < complete.size(); i += per_window) {
            std::vector<std::size_t> rows;
            for (std::size_t k = i; k < std::min(complete.size(), i + per_window); ++k)
                for (const auto &g : chunk)
                    rows.push_back(first.at({complete[k], g}));
            out.push_back(make_chart_ready(detail::project(table, {x, *group, y}, rows), 0, 1, 2));
        }
    }
    return out;
}

/// The table a reader sees in the chart: [x, y] when ungrouped, otherwise a
/// pivot [x, series_1, ..., series_k]. Extraction reconstructs this shape.
inline DataTable chart_view(const ChartReadyTable &t) {
    const Column &ycol = t.base.column(t.y_column);
    const Column xcol = t.base.column(t.x_column);
    const auto xs = t.x_labels();
    if (!t.grouped()) {
        std::vector<std::vector<Cell>> rows;
        for (std::size_t r = 0; r < t.row_count(); ++r)
            rows.push_back({t.x(r), t.y(r)});
        return DataTable({xcol, ycol}, std::move(rows));
    }
    const auto ss = t.series();
    std::vector<Column> cols{xcol};
    for (const auto &s : ss)
        cols.push_back(Column{s, ColumnKind::numeric, ycol.unit});
    std::vector<std::vector<Cell>> rows;
    for (const auto &xv : xs) {
        std::vector<Cell> row{xv};
        for (const auto &s : ss)
            row.emplace_back(*t.value(s, xv));
        rows.push_back(std::move(row));
    }
    return DataTable(std::move(cols), std::move(rows));
}

} // namespace chartforge
