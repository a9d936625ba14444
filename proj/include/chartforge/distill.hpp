#pragma once

#include "chartforge/flatten.hpp"
#include "chartforge/geometry.hpp"
#include "chartforge/metrics.hpp"
#include "chartforge/table.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace chartforge {

/// One input/output pair shown to the model before the real request.
struct Demonstration {
    std::string input;
    std::string output;

    Demonstration(std::string in, std::string out) : input(std::move(in)), output(std::move(out)) {
        if (trim(input).empty() || trim(output).empty())
            throw Error(ErrorKind::InvalidPrompt, "demonstration needs both an input and an output");
    }

    friend bool operator==(const Demonstration &, const Demonstration &) = default;
};

struct Decoding {
    int max_tokens = 256;
    double temperature = 0.0;

    friend bool operator==(const Decoding &, const Decoding &) = default;
};

struct PromptBundle {
    std::string system_preamble;
    Demonstration demonstration;
    std::string target_payload;
    Decoding decoding;

    PromptBundle(std::string preamble, Demonstration demo, std::string payload, Decoding dec = {})
        : system_preamble(std::move(preamble)), demonstration(std::move(demo)), target_payload(std::move(payload)),
          decoding(dec) {
        if (trim(target_payload).empty())
            throw Error(ErrorKind::InvalidPrompt, "empty target payload");
    }

    friend bool operator==(const PromptBundle &, const PromptBundle &) = default;
};

/// Chat message list: system, demo user/assistant turn, then the request.
inline nlohmann::json chat_messages(const PromptBundle &b) {
    return nlohmann::json::array({{{"role", "system"}, {"content", b.system_preamble}},
                                  {{"role", "user"}, {"content", b.demonstration.input}},
                                  {{"role", "assistant"}, {"content", b.demonstration.output}},
                                  {{"role", "user"}, {"content", b.target_payload}}});
}

/// Single-string rendering for completion-style backends.
inline std::string prompt_text(const PromptBundle &b) {
    return b.system_preamble + "\n\n" + b.demonstration.input + "\n" + b.demonstration.output + "\n\n" +
           b.target_payload + "\n";
}

inline nlohmann::json to_json(const PromptBundle &b) {
    return {{"system_preamble", b.system_preamble},
            {"demonstration", {{"input", b.demonstration.input}, {"output", b.demonstration.output}}},
            {"target_payload", b.target_payload},
            {"decoding", {{"max_tokens", b.decoding.max_tokens}, {"temperature", b.decoding.temperature}}}};
}

// ---------------------------------------------------------------------------
// Table to summary

inline constexpr std::string_view kTableSummaryPreamble =
    "You write short chart summaries. Each input is a data table with cells separated by \" | \" and rows by "
    "\" & \". Describe the main trend, the highest and lowest values and any notable comparison. Use only numbers "
    "that appear in the table.";

/// Title and unit lines followed by the flattened table.
inline std::string table_payload(const DataTable &table, std::string_view title = {}) {
    std::string out;
    if (!trim(title).empty())
        out += "Title: " + std::string(trim(title)) + "\n";
    std::string units;
    for (const auto &c : table.columns())
        if (c.kind == ColumnKind::numeric && c.unit)
            units += (units.empty() ? "" : ", ") + c.name + " (" + *c.unit + ")";
    if (!units.empty())
        out += "Units: " + units + "\n";
    return out + "Table: " + flatten_table(table);
}

inline Demonstration table_demonstration(const DataTable &table, std::string summary, std::string_view title = {}) {
    return Demonstration(table_payload(table, title), std::move(summary));
}

inline PromptBundle build_table_summary_prompt(const DataTable &table, const Demonstration &demo,
                                               std::string_view title = {}, Decoding decoding = {}) {
    return PromptBundle(std::string(kTableSummaryPreamble), demo, table_payload(table, title) + "\nSummary:",
                        decoding);
}

// ---------------------------------------------------------------------------
// OCR layout to summary

struct OcrLine {
    std::string text;
    Rect bbox;
};

inline constexpr std::string_view kOcrSummaryPreamble =
    "You write short chart summaries from text read off a chart image. The text keeps its position on the "
    "page: rows are lines of the chart and horizontal spacing follows the original layout.";

namespace detail {

inline std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (char c : s)
        n += (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    return n;
}

} // namespace detail

/// Places OCR lines on a monospaced grid. Lines whose vertical centres fall
/// within half a line height of a row's first line share that row; columns
/// come from x divided by the median character width.
inline std::string layout_text(std::vector<OcrLine> lines) {
    if (lines.empty())
        return {};
    std::vector<double> char_w, line_h;
    for (const auto &l : lines) {
        const auto len = detail::utf8_length(l.text);
        if (len > 0 && l.bbox.w > 0)
            char_w.push_back(l.bbox.w / static_cast<double>(len));
        if (l.bbox.h > 0)
            line_h.push_back(l.bbox.h);
    }
    auto median_of = [](std::vector<double> v, double fallback) {
        if (v.empty())
            return fallback;
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double cw = median_of(char_w, 7.0), lh = median_of(line_h, 12.0);
    double min_x = lines[0].bbox.x;
    for (const auto &l : lines)
        min_x = std::min(min_x, l.bbox.x);
    std::stable_sort(lines.begin(), lines.end(), [](const OcrLine &a, const OcrLine &b) {
        return a.bbox.cy() < b.bbox.cy() || (a.bbox.cy() == b.bbox.cy() && a.bbox.x < b.bbox.x);
    });
    std::vector<std::vector<const OcrLine *>> rows;
    double row_y = 0;
    for (const auto &l : lines) {
        if (rows.empty() || l.bbox.cy() - row_y > lh / 2) {
            rows.emplace_back();
            row_y = l.bbox.cy();
        }
        rows.back().push_back(&l);
    }
    std::string out;
    for (auto &row : rows) {
        std::stable_sort(row.begin(), row.end(), [](auto *a, auto *b) { return a->bbox.x < b->bbox.x; });
        std::string text;
        std::size_t width = 0;
        for (const auto *l : row) {
            const auto col = static_cast<std::size_t>(std::llround((l->bbox.x - min_x) / cw));
            const std::size_t at = width == 0 ? col : std::max(col, width + 1);
            text.append(at - width, ' ');
            text += l->text;
            width = at + detail::utf8_length(l->text);
        }
        if (!out.empty())
            out += '\n';
        out += text;
    }
    return out;
}

inline PromptBundle build_ocr_layout_prompt(const std::vector<OcrLine> &lines, const Demonstration &demo,
                                            Decoding decoding = {}) {
    if (lines.empty())
        throw Error(ErrorKind::InvalidPrompt, "no OCR lines");
    return PromptBundle(std::string(kOcrSummaryPreamble), demo, "Chart text:\n" + layout_text(lines) + "\nSummary:",
                        decoding);
}

// ---------------------------------------------------------------------------
// Rubric evaluation

struct RubricPrompts {
    PromptBundle steps_request;
    std::string table_text;
    std::string summary;
    std::string criterion;

    /// Second stage: grading steps plus the chart table and the summary.
    PromptBundle rating_request(std::string_view steps) const {
        if (trim(steps).empty())
            throw Error(ErrorKind::InvalidPrompt, "empty grading steps");
        Demonstration demo(
            "Criterion: Coverage\nSteps:\n1. Read the table.\n2. Check which values the summary mentions.\n"
            "Table: Year | Sales & 2001 | 5 & 2002 | 7\nSummary: Sales rose from 5 in 2001 to 7 in 2002.\nRating:",
            "5 - both values and the trend are covered.");
        return PromptBundle(
            "You rate chart summaries from 1 to 5 by following grading steps. Begin the reply with the integer "
            "rating, then a short reason.",
            std::move(demo),
            "Criterion: " + criterion + "\nSteps:\n" + std::string(trim(steps)) + "\nTable: " + table_text +
                "\nSummary: " + summary + "\nRating:",
            Decoding{64, 0.0});
    }
};

inline RubricPrompts build_rubric_eval_prompt(const DataTable &table, std::string_view summary,
                                              std::string_view criterion) {
    if (trim(summary).empty() || trim(criterion).empty())
        throw Error(ErrorKind::InvalidPrompt, "summary and criterion must be non-empty");
    Demonstration demo("Criterion: Coverage - the summary mentions the values a reader needs.\nWrite the grading "
                       "steps.",
                       "1. Read the table.\n2. Check which values the summary mentions.\n3. Rate 1 (none) to 5 "
                       "(all key values).");
    PromptBundle a("You turn an evaluation criterion for chart summaries into numbered grading steps.",
                   std::move(demo), "Criterion: " + std::string(trim(criterion)) + "\nWrite the grading steps.",
                   Decoding{256, 0.0});
    return RubricPrompts{std::move(a), flatten_table(table), std::string(trim(summary)), std::string(trim(criterion))};
}

/// Leading integer of a rating reply, 1 to 5.
inline int parse_rating(std::string_view reply) {
    auto s = trim(reply);
    std::size_t i = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9')
        ++i;
    if (i == 0 || i > 3)
        throw Error(ErrorKind::ParseFailure, "rating reply does not start with an integer");
    const int v = std::stoi(std::string(s.substr(0, i)));
    if (v < 1 || v > 5)
        throw Error(ErrorKind::ParseFailure, "rating " + std::to_string(v) + " outside 1-5");
    return v;
}

// ---------------------------------------------------------------------------
// Offline summarizer

/// Rule-based summary: a title sentence, the maximum, the minimum and the
/// labels above the mean. Every number it prints is copied from a table cell.
inline std::string fallback_summary(const DataTable &table, std::string_view title = {}) {
    std::optional<std::size_t> label_col;
    std::vector<std::size_t> value_cols;
    for (std::size_t c = 0; c < table.column_count(); ++c) {
        if (table.column(c).kind == ColumnKind::numeric)
            value_cols.push_back(c);
        else if (!label_col)
            label_col = c;
    }
    if (value_cols.empty() || table.row_count() == 0)
        throw Error(ErrorKind::NoNumericColumn, "nothing to summarize");
    struct Point {
        std::size_t r, c;
        double v;
    };
    std::vector<Point> points;
    for (std::size_t r = 0; r < table.row_count(); ++r)
        for (auto c : value_cols)
            points.push_back({r, c, table.number(r, c)});

    auto label = [&](const Point &p) {
        std::string where = label_col ? table.text(p.r, *label_col) : "row " + table.text(p.r, value_cols[0]);
        if (value_cols.size() > 1)
            return table.column(p.c).name + " in " + where;
        return where;
    };
    auto value = [&](const Point &p) {
        const auto &unit = table.column(p.c).unit;
        std::string text = table.text(p.r, p.c);
        if (!unit)
            return text;
        return *unit == "%" ? text + "%" : *unit + text;
    };
    const bool single = value_cols.size() == 1;
    const std::string what = single ? table.column(value_cols[0]).name : "value";

    std::size_t hi = 0, lo = 0;
    double sum = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].v > points[hi].v)
            hi = i;
        if (points[i].v < points[lo].v)
            lo = i;
        sum += points[i].v;
    }
    const double mean = sum / static_cast<double>(points.size());

    std::string out;
    if (!trim(title).empty())
        out += "The chart shows " + std::string(trim(title)) + ". ";
    else if (label_col)
        out += "The chart shows " + what + " by " + table.column(*label_col).name + ". ";
    else
        out += "The chart shows " + what + ". ";
    out += "The highest " + what + " is " + value(points[hi]) + " for " + label(points[hi]) + ". ";
    out += "The lowest " + what + " is " + value(points[lo]) + " for " + label(points[lo]) + ".";
    std::vector<std::string> above;
    for (const auto &p : points)
        if (p.v > mean)
            above.push_back(label(p));
    if (!above.empty() && above.size() < points.size()) {
        out += " Above the average are ";
        for (std::size_t i = 0; i < above.size(); ++i) {
            if (i)
                out += i + 1 == above.size() ? " and " : ", ";
            out += above[i];
        }
        out += ".";
    }
    return out;
}

/// Numbers in `summary` that do not occur in the table text (header included).
inline std::vector<double> unsupported_numbers(std::string_view summary, const DataTable &table,
                                               std::string_view title = {}) {
    std::string source = flatten_table(table) + " " + std::string(title);
    auto known = extract_numbers(source);
    std::vector<double> out;
    for (double x : extract_numbers(summary))
        if (std::find(known.begin(), known.end(), x) == known.end())
            out.push_back(x);
    return out;
}

} // namespace chartforge
