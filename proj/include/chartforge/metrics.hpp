#pragma once

#include "chartforge/flatten.hpp"
#include "chartforge/table.hpp"

#include <json.hpp>

#include <array>
#include <limits>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

namespace chartforge {

// ---------------------------------------------------------------------------
// Assignment

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method,
/// potentials formulation). Returns assignment[row] = column.
inline std::vector<std::size_t> solve_assignment(const std::vector<std::vector<double>> &cost) {
    const std::size_t n = cost.size();
    if (n == 0)
        return {};
    for (const auto &row : cost)
        if (row.size() != n)
            throw Error(ErrorKind::InvalidSpec, "assignment matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based arrays; p[j] is the row matched to column j
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> out(n);
    for (std::size_t j = 1; j <= n; ++j)
        out[p[j] - 1] = j - 1;
    return out;
}

inline double assignment_cost(const std::vector<std::vector<double>> &cost) {
    const auto a = solve_assignment(cost);
    double total = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        total += cost[i][a[i]];
    return total;
}

/// Pads a rows x cols matrix to square with `fill`.
inline std::vector<std::vector<double>> pad_square(std::vector<std::vector<double>> m, std::size_t cols,
                                                   double fill) {
    const std::size_t n = std::max(m.size(), cols);
    for (auto &row : m)
        row.resize(n, fill);
    m.resize(n, std::vector<double>(n, fill));
    return m;
}

// ---------------------------------------------------------------------------
// Relaxed accuracy

inline constexpr double kRelaxedTolerance = 0.05;
inline constexpr double kMetricEpsilon = 1e-9;

inline std::optional<double> metric_number(std::string_view text) {
    auto p = parse_table_number(text);
    if (!p)
        return std::nullopt;
    return p->value;
}

/// 1 when both sides are numbers within 5% of gold, or when the trimmed
/// strings match case-insensitively.
inline int relaxed_accuracy(std::string_view pred, std::string_view gold) {
    const auto p = metric_number(pred), g = metric_number(gold);
    if (p && g) {
        if (*g == 0.0)
            return *p == 0.0 ? 1 : 0;
        // relative slack absorbs representation error at exactly 5%
        return std::abs(*p - *g) <= kRelaxedTolerance * std::abs(*g) * (1 + 1e-12) ? 1 : 0;
    }
    return to_lower_ascii(trim(pred)) == to_lower_ascii(trim(gold)) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Number sets

/// Numbers in free text: optional sign, thousands groups, decimals, and a
/// trailing percent sign that is dropped.
inline std::vector<double> extract_numbers(std::string_view text) {
    static const std::regex re(R"([-+]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|\.\d+)%?)");
    std::vector<double> out;
    const std::string s(text);
    for (std::sregex_iterator it(s.begin(), s.end(), re), end; it != end; ++it) {
        std::string m = it->str();
        m.erase(std::remove(m.begin(), m.end(), ','), m.end());
        if (!m.empty() && m.back() == '%')
            m.pop_back();
        if (auto v = parse_plain_number(m))
            out.push_back(*v);
    }
    return out;
}

/// Numbers in the body cells of a table; headers are ignored.
inline std::vector<double> table_numbers(const DataTable &t) {
    std::vector<double> out;
    for (std::size_t r = 0; r < t.row_count(); ++r)
        for (std::size_t c = 0; c < t.column_count(); ++c) {
            if (const double *d = std::get_if<double>(&t.cell(r, c)))
                out.push_back(*d);
            else
                for (double x : extract_numbers(t.text(r, c)))
                    out.push_back(x);
        }
    return out;
}

/// Numbers in a flattened table (header row skipped) or in plain text.
inline std::vector<double> text_numbers(std::string_view text) {
    const auto grid = parse_flattened(text);
    std::vector<double> out;
    for (std::size_t r = grid.size() > 1 ? 1 : 0; r < grid.size(); ++r)
        for (const auto &cell : grid[r])
            for (double x : extract_numbers(cell))
                out.push_back(x);
    return out;
}

inline double relative_distance(double p, double g) {
    return std::min(1.0, std::abs(p - g) / std::max(std::abs(g), kMetricEpsilon));
}

inline double rnss(const std::vector<double> &pred, const std::vector<double> &gold) {
    if (pred.empty() && gold.empty())
        return 1.0;
    std::vector<std::vector<double>> cost;
    for (double p : pred) {
        std::vector<double> row;
        for (double g : gold)
            row.push_back(relative_distance(p, g));
        cost.push_back(std::move(row));
    }
    const auto square = pad_square(std::move(cost), gold.size(), 1.0);
    return 1.0 - assignment_cost(square) / static_cast<double>(std::max(pred.size(), gold.size()));
}

inline double rnss(const DataTable &pred, const DataTable &gold) { return rnss(table_numbers(pred), table_numbers(gold)); }
inline double rnss(std::string_view pred, const DataTable &gold) { return rnss(text_numbers(pred), table_numbers(gold)); }

// ---------------------------------------------------------------------------
// Relative mapping similarity

struct TableEntry {
    std::string row_key;
    std::string col_key;
    std::optional<double> number;
    std::string text;
};

inline std::string normalize_key(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : trim(s)) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            space = true;
            continue;
        }
        if (space)
            out += ' ';
        space = false;
        out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    }
    return out;
}

/// (row key, column key, value) triples: the first column keys the rows,
/// every other column contributes one entry per row.
inline std::vector<TableEntry> table_entries(const DataTable &t) {
    std::vector<TableEntry> out;
    for (std::size_t r = 0; r < t.row_count(); ++r)
        for (std::size_t c = 1; c < t.column_count(); ++c) {
            TableEntry e{normalize_key(t.text(r, 0)), normalize_key(t.column(c).name), std::nullopt, ""};
            if (const double *d = std::get_if<double>(&t.cell(r, c)))
                e.number = *d;
            else
                e.text = normalize_key(t.text(r, c));
            out.push_back(std::move(e));
        }
    return out;
}

/// Swaps rows and columns: column names become row keys and row keys become
/// column names. The corner name is kept.
inline DataTable transpose_table(const DataTable &t) {
    if (t.column_count() < 2 || t.row_count() == 0)
        return t;
    RawTable raw;
    std::vector<std::string> header = {t.column(0).name};
    for (std::size_t r = 0; r < t.row_count(); ++r)
        header.push_back(t.text(r, 0));
    raw.push_back(header);
    for (std::size_t c = 1; c < t.column_count(); ++c) {
        std::vector<std::string> row = {t.column(c).name};
        for (std::size_t r = 0; r < t.row_count(); ++r)
            row.push_back(t.text(r, c));
        raw.push_back(std::move(row));
    }
    return infer_column_kinds(raw);
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline double normalized_levenshtein(std::string_view a, std::string_view b) {
    const auto m = std::max(a.size(), b.size());
    return m == 0 ? 0.0 : static_cast<double>(levenshtein(a, b)) / static_cast<double>(m);
}

inline double entry_similarity(const TableEntry &p, const TableEntry &g) {
    const double k = 1.0 - normalized_levenshtein(p.row_key + " " + p.col_key, g.row_key + " " + g.col_key);
    double v = 0;
    if (p.number && g.number)
        v = 1.0 - relative_distance(*p.number, *g.number);
    else if (!p.number && !g.number)
        v = p.text == g.text ? 1.0 : 0.0;
    return k * v;
}

struct PrecisionRecall {
    double precision = 0, recall = 0, f1 = 0;
};

namespace detail {

inline PrecisionRecall rms_once(const std::vector<TableEntry> &pred, const std::vector<TableEntry> &gold) {
    if (pred.empty() || gold.empty())
        return {};
    std::vector<std::vector<double>> cost;
    for (const auto &p : pred) {
        std::vector<double> row;
        for (const auto &g : gold)
            row.push_back(1.0 - entry_similarity(p, g));
        cost.push_back(std::move(row));
    }
    const auto square = pad_square(std::move(cost), gold.size(), 1.0);
    const auto a = solve_assignment(square);
    double total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (a[i] < gold.size())
            total += 1.0 - square[i][a[i]];
    PrecisionRecall out;
    out.precision = total / static_cast<double>(pred.size());
    out.recall = total / static_cast<double>(gold.size());
    out.f1 = out.precision + out.recall > 0 ? 2 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
    return out;
}

} // namespace detail

/// RMS precision/recall/F1. The prediction is also scored transposed and the
/// better F1 is kept.
inline PrecisionRecall rms_f1(const DataTable &pred, const DataTable &gold) {
    const auto g = table_entries(gold);
    const auto direct = detail::rms_once(table_entries(pred), g);
    const auto flipped = detail::rms_once(table_entries(transpose_table(pred)), g);
    return flipped.f1 > direct.f1 ? flipped : direct;
}

/// Best-effort table from a flattened string: short rows are padded, long
/// rows truncated to the header width.
inline DataTable table_from_flattened(std::string_view text) {
    auto grid = parse_flattened(text);
    if (grid.empty() || grid[0].empty())
        throw Error(ErrorKind::EmptyTable, "empty flattened table");
    const auto width = grid[0].size();
    std::set<std::string> seen;
    for (auto &name : grid[0]) {
        if (name.empty())
            name = "column";
        std::string base = name;
        for (int i = 2; !seen.insert(name).second; ++i)
            name = base + " " + std::to_string(i);
    }
    for (auto &row : grid)
        row.resize(width);
    return infer_column_kinds(grid);
}

// ---------------------------------------------------------------------------
// BLEU

namespace detail {

inline char32_t decode_utf8(std::string_view s, std::size_t &i) {
    const auto b = static_cast<unsigned char>(s[i]);
    int len = b < 0x80 ? 1 : (b >> 5) == 6 ? 2 : (b >> 4) == 14 ? 3 : (b >> 3) == 30 ? 4 : 1;
    if (i + static_cast<std::size_t>(len) > s.size())
        len = 1;
    char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1F) : len == 3 ? (b & 0x0F) : (b & 0x07);
    for (int k = 1; k < len; ++k)
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
    i += static_cast<std::size_t>(len);
    return cp;
}

inline bool is_space(char32_t c) {
    return c == ' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

inline bool is_punct(char32_t c) {
    if (c < 0x80)
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
               (c >= 0x7B && c <= 0x7E);
    return (c >= 0xA1 && c <= 0xBF && c != 0xAA && c != 0xB5 && c != 0xBA) || (c >= 0x2010 && c <= 0x2027) ||
           (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003);
}

} // namespace detail

/// Lowercase, split on whitespace, every punctuation character its own token.
inline std::vector<std::string> bleu_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    const std::string lower = to_lower_ascii(text);
    for (std::size_t i = 0; i < lower.size();) {
        const std::size_t start = i;
        const char32_t cp = detail::decode_utf8(lower, i);
        if (detail::is_space(cp) || detail::is_punct(cp)) {
            if (!cur.empty())
                out.push_back(std::move(cur));
            cur.clear();
            if (!detail::is_space(cp))
                out.emplace_back(lower.substr(start, i - start));
        } else {
            cur.append(lower, start, i - start);
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

/// Corpus BLEU-4 on a 0-100 scale with add-epsilon smoothing of zero
/// precisions and the closest reference length for the brevity penalty.
inline double corpus_bleu(const std::vector<std::string> &preds, const std::vector<std::vector<std::string>> &golds) {
    if (preds.size() != golds.size())
        throw Error(ErrorKind::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                                   std::to_string(golds.size()) + " reference sets");
    constexpr int kOrder = 4;
    std::array<double, kOrder> matched{}, total{};
    double c_len = 0, r_len = 0;
    using Counts = std::map<std::vector<std::string>, int>;
    auto ngrams = [](const std::vector<std::string> &tok, int n) {
        Counts out;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tok.size(); ++i)
            ++out[std::vector<std::string>(tok.begin() + static_cast<long>(i), tok.begin() + static_cast<long>(i) + n)];
        return out;
    };
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const auto hyp = bleu_tokens(preds[k]);
        std::vector<std::vector<std::string>> refs;
        for (const auto &g : golds[k])
            refs.push_back(bleu_tokens(g));
        c_len += static_cast<double>(hyp.size());
        if (!refs.empty()) {
            std::size_t best = refs[0].size();
            for (const auto &r : refs) {
                const auto d = std::abs(static_cast<long>(r.size()) - static_cast<long>(hyp.size()));
                const auto bd = std::abs(static_cast<long>(best) - static_cast<long>(hyp.size()));
                if (d < bd || (d == bd && r.size() < best))
                    best = r.size();
            }
            r_len += static_cast<double>(best);
        }
        for (int n = 1; n <= kOrder; ++n) {
            const auto h = ngrams(hyp, n);
            Counts max_ref;
            for (const auto &r : refs)
                for (const auto &[g, cnt] : ngrams(r, n))
                    max_ref[g] = std::max(max_ref[g], cnt);
            for (const auto &[g, cnt] : h) {
                total[n - 1] += cnt;
                auto it = max_ref.find(g);
                if (it != max_ref.end())
                    matched[n - 1] += std::min(cnt, it->second);
            }
        }
    }
    if (c_len == 0)
        return 0.0;
    double log_sum = 0;
    for (int n = 0; n < kOrder; ++n) {
        const double p = matched[n] > 0 ? matched[n] / total[n] : kMetricEpsilon;
        log_sum += std::log(p) / kOrder;
    }
    const double bp = c_len >= r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
    return 100.0 * bp * std::exp(log_sum);
}

// ---------------------------------------------------------------------------
// Reports

struct ExampleScore {
    std::string id;
    std::map<std::string, double> scores;
};

struct MetricReport {
    std::vector<ExampleScore> per_example;
    std::map<std::string, double> aggregate;
};

inline nlohmann::json to_json(const MetricReport &r) {
    nlohmann::json ex = nlohmann::json::array();
    for (const auto &e : r.per_example)
        ex.push_back({{"id", e.id}, {"scores", e.scores}});
    return {{"aggregate", r.aggregate}, {"per_example", ex}};
}

} // namespace chartforge
