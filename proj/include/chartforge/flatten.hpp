#pragma once

#include "chartforge/render.hpp"
#include "chartforge/table.hpp"

#include <string>
#include <vector>

namespace chartforge {

inline constexpr std::string_view kCellSep = " | ";
inline constexpr std::string_view kRowSep = " & ";

inline std::string escape_cell(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '\\' || c == '|' || c == '&')
            out += '\\';
        out += c;
    }
    return out;
}

namespace detail {

inline std::string join_rows(const std::vector<std::vector<std::string>> &grid) {
    std::string out;
    for (std::size_t r = 0; r < grid.size(); ++r) {
        if (r)
            out += kRowSep;
        for (std::size_t c = 0; c < grid[r].size(); ++c) {
            if (c)
                out += kCellSep;
            out += escape_cell(grid[r][c]);
        }
    }
    return out;
}

} // namespace detail

/// Header row then data rows; cells joined by " | ", rows by " & ".
inline std::string flatten_table(const DataTable &table) {
    std::vector<std::vector<std::string>> grid;
    std::vector<std::string> header;
    for (const auto &c : table.columns())
        header.push_back(c.name);
    grid.push_back(std::move(header));
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        std::vector<std::string> row;
        for (std::size_t c = 0; c < table.column_count(); ++c)
            row.push_back(table.text(r, c));
        grid.push_back(std::move(row));
    }
    return detail::join_rows(grid);
}

/// Inverse of flatten_table at the text level. Each separator owns exactly
/// one space on either side.
inline std::vector<std::vector<std::string>> parse_flattened(std::string_view text) {
    std::vector<std::vector<std::string>> out(1);
    std::string cur;
    bool after_sep = false;
    auto close = [&](bool before_sep) {
        std::string v = std::move(cur);
        if (after_sep && !v.empty() && v.front() == ' ')
            v.erase(v.begin());
        if (before_sep && !v.empty() && v.back() == ' ')
            v.pop_back();
        out.back().push_back(std::move(v));
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
            cur += text[++i];
            continue;
        }
        if (c == '|' || c == '&') {
            close(true);
            if (c == '&')
                out.emplace_back();
            after_sep = true;
            continue;
        }
        cur += c;
    }
    close(false);
    return out;
}

/// Mark heights as fractions of the plot height, two decimals. Bars use the
/// bbox height, points the distance from the plot bottom to their center.
/// Values of one series run left to right joined by " | "; series are joined
/// by " & " in legend order.
inline std::string value_estimation_target(const RenderedChart &chart) {
    if (chart.chart_type == ChartType::pie)
        throw Error(ErrorKind::UnsupportedChartType, "value estimation needs bars or line points");
    const double plot_h = chart.plot_area.h;
    std::vector<std::vector<std::string>> grid;
    for (const auto &entry : chart.legend) {
        std::vector<const MarkRecord *> marks;
        for (const auto &m : chart.marks)
            if (m.series == entry.series && m.kind != MarkKind::slice)
                marks.push_back(&m);
        std::stable_sort(marks.begin(), marks.end(),
                         [](const MarkRecord *a, const MarkRecord *b) { return a->bbox.x < b->bbox.x; });
        std::vector<std::string> row;
        for (const auto *m : marks) {
            const double h = m->kind == MarkKind::bar ? m->bbox.h : chart.plot_area.bottom() - m->bbox.cy();
            row.push_back(format_number(h / plot_h));
        }
        if (!row.empty())
            grid.push_back(std::move(row));
    }
    if (grid.empty())
        throw Error(ErrorKind::UnsupportedChartType, "chart has no bar or point marks");
    return detail::join_rows(grid);
}

} // namespace chartforge
