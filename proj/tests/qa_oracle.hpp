#pragma once

// Brute-force QA answers computed straight from the source table and the
// renderer's layout conventions (x labels in table order, bars x-major then
// series order, legend colors assigned in palette order). Shares nothing with
// the template engine beyond the number formatter.

#include "chartforge/qa.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

using chartforge::ChartReadyTable;
using chartforge::ChartType;
using chartforge::format_number;
using chartforge::SlotBinding;

struct Chart {
    ChartType type;
    std::string palette;
    std::vector<std::string> xs, series, colors, names;
    std::vector<std::vector<double>> table; // table[s][x]

    Chart(const ChartReadyTable &t, ChartType ty, const std::string &pal) : type(ty), palette(pal) {
        xs = t.x_labels();
        series = t.series();
        const auto &p = chartforge::palette(pal).colors;
        names = ty == ChartType::pie ? xs : series;
        for (std::size_t i = 0; i < names.size(); ++i)
            colors.push_back(p[i % p.size()].hex);
        for (const auto &s : series) {
            std::vector<double> row;
            for (const auto &x : xs)
                row.push_back(*t.value(s, x));
            table.push_back(row);
        }
    }

    std::size_t n() const { return xs.size(); }
    std::size_t k() const { return series.size(); }

    /// bars in drawing order: group by x, series inside the group
    std::vector<std::pair<std::size_t, double>> bars() const {
        std::vector<std::pair<std::size_t, double>> out;
        for (std::size_t x = 0; x < n(); ++x)
            for (std::size_t s = 0; s < k(); ++s)
                out.push_back({x, table[s][x]});
        return out;
    }
    std::vector<double> group(std::size_t x) const {
        std::vector<double> g;
        for (std::size_t s = 0; s < k(); ++s)
            g.push_back(table[s][x]);
        return g;
    }
    std::vector<double> every() const {
        std::vector<double> out;
        for (auto &b : bars())
            out.push_back(b.second);
        return out;
    }
};

inline long long c100(double x) { return std::llround(x * 100.0); }
inline long long c1e6(double x) { return std::llround(x * 1e6); }

// brute-force helpers: no sorting, everything by counting ranks
inline double largest(const std::vector<double> &v) {
    double m = v[0];
    for (double x : v)
        if (x > m)
            m = x;
    return m;
}
inline double smallest(const std::vector<double> &v) {
    double m = v[0];
    for (double x : v)
        if (x < m)
            m = x;
    return m;
}
inline double total(const std::vector<double> &v) {
    double s = 0;
    for (std::size_t i = v.size(); i-- > 0;)
        s += v[i];
    return s;
}
/// Element with exactly `r` elements strictly before it in ascending order,
/// ties broken by position.
inline double kth(const std::vector<double> &v, std::size_t r) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t rank = 0;
        for (std::size_t j = 0; j < v.size(); ++j)
            rank += v[j] < v[i] || (v[j] == v[i] && j < i);
        if (rank == r)
            return v[i];
    }
    return v[0];
}
inline double mid(const std::vector<double> &v) {
    const auto n = v.size();
    return n % 2 == 1 ? kth(v, n / 2) : (kth(v, n / 2 - 1) + kth(v, n / 2)) / 2.0;
}
inline std::size_t first_of(const std::vector<double> &v, double target) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == target)
            return i;
    return 0;
}
inline std::size_t last_of(const std::vector<double> &v, double target) {
    for (std::size_t i = v.size(); i-- > 0;)
        if (v[i] == target)
            return i;
    return 0;
}
inline std::optional<std::string> div(double a, double b) {
    if (b == 0.0)
        return std::nullopt;
    return format_number(a / b);
}
inline std::string yn(bool b) { return b ? "Yes" : "No"; }

inline std::optional<std::string> answer(const Chart &c, const SlotBinding &b) {
    auto slot = [&](const std::string &k) { return b.slots.at(k); };
    auto idx = [](const std::vector<std::string> &v, const std::string &s) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] == s)
                return i;
        throw std::runtime_error("unknown slot value " + s);
    };
    auto col = [&](int i) { return idx(c.colors, slot("color" + std::to_string(i))); };
    auto leg = [&](int i) { return idx(c.names, slot("legend" + std::to_string(i))); };
    auto xi = [&](int i) { return idx(c.xs, slot("x" + std::to_string(i))); };
    auto val = [&] { return std::stod(slot("value")); };
    auto C = [&](int i) { return c.table[col(i)]; };
    auto L = [&](int i) { return c.table[leg(i)]; };
    const auto v = b.variant;
    const auto n = c.n();
    const auto F = [](double x) -> std::optional<std::string> { return format_number(x); };
    auto count_above = [](const std::vector<double> &vals, double t) {
        int k = 0;
        for (double x : vals)
            k += c100(x) > c100(t);
        return std::to_string(k);
    };
    auto absdiff = [&](const std::vector<double> &a, const std::vector<double> &d) {
        std::vector<double> out;
        for (std::size_t i = 0; i < a.size(); ++i)
            out.push_back(a[i] > d[i] ? a[i] - d[i] : d[i] - a[i]);
        return out;
    };
    auto pair_labels = [&](const std::vector<double> &vals, double target, bool diff) -> std::optional<std::string> {
        std::optional<std::string> found;
        int hits = 0;
        for (std::size_t i = 0; i < vals.size(); ++i)
            for (std::size_t j = 0; j < vals.size(); ++j) {
                if (j <= i)
                    continue;
                double r = diff ? std::fabs(vals[j] - vals[i]) : vals[j] + vals[i];
                if (c100(r) == c100(target)) {
                    ++hits;
                    found = c.xs[i] + " and " + c.xs[j];
                }
            }
        return hits == 1 ? found : std::nullopt;
    };
    const auto bars = c.bars();
    std::vector<double> bar_vals;
    for (auto &p : bars)
        bar_vals.push_back(p.second);
    const auto all = c.every();

    switch (b.template_id) {
    case 1: return F(c.group(1)[0]);
    case 2: return F(c.group(n - 2)[c.k() - 1]);
    case 3: return F(c.group(n - 1)[c.k() - 2]);
    case 4: return F(c.group(0)[c.k() - 2]);
    case 5: return F(bar_vals.front());
    case 6: return F(bar_vals.back());
    case 7: return F(bar_vals[1]);
    case 8: return F(bar_vals[bar_vals.size() - 2]);
    case 9: return c.xs[bars[first_of(bar_vals, largest(bar_vals))].first];
    case 10: return c.xs[bars[first_of(bar_vals, smallest(bar_vals))].first];
    case 11: return c.xs[bars[last_of(bar_vals, largest(bar_vals))].first];
    case 12: return c.xs[bars[last_of(bar_vals, smallest(bar_vals))].first];
    case 13: return F(C(1)[0]);
    case 14: return F(C(1)[n - 1]);
    case 15: return F(C(1)[1]);
    case 16: return F(C(1)[n - 2]);
    case 17: return c.series[col(1)];
    case 18: return chartforge::color_name(c.palette, c.colors[leg(1)]);
    case 19: {
        double a = c.table[0][xi(1)], d = c.table[0][xi(2)];
        if (c100(a) == c100(d))
            return std::nullopt;
        return c.xs[a > d ? xi(1) : xi(2)];
    }
    case 20: return F((largest(all) + smallest(all)) / std::stoi(slot("n")));
    case 21: return c.xs[first_of(L(1), largest(L(1)))];
    case 22: return F(largest(L(1)) - smallest(L(1)));
    case 23: {
        double s = 0;
        for (double x : c.table[0])
            if (c100(x) > c100(val()))
                s += x;
        return F(s);
    }
    case 24: {
        const auto m = all.size();
        return F(kth(all, m - 1) + kth(all, m - 2) + kth(all, m - 3));
    }
    case 25: {
        auto s = L(1);
        if (v == 0)
            return F(mid(s));
        std::optional<double> best;
        int best_count = 1;
        for (double x : s) {
            int k = 0;
            for (double y : s)
                k += c100(x) == c100(y);
            if (k > best_count || (k == best_count && best && c100(x) < c100(*best))) {
                best = x;
                best_count = k;
            }
        }
        if (!best)
            return std::nullopt;
        return F(*best);
    }
    case 26: return F(smallest(L(1)));
    case 27: return F(v == 0 ? largest(L(1)) : smallest(L(1)));
    case 28: return pair_labels(L(1), val(), false);
    case 29: return F(kth(L(1), n - 2) + kth(L(1), 1));
    case 30: {
        auto s = L(1);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t rank = 0;
            for (std::size_t j = 0; j < n; ++j)
                rank += s[j] > s[i] || (s[j] == s[i] && j < i);
            if (rank == 1)
                return c.xs[i];
        }
        return std::nullopt;
    }
    case 31: return F(kth(L(1), n / 2 - 1) + kth(L(1), n / 2));
    case 32: return pair_labels(L(1), val(), true);
    case 33: {
        double s = 0;
        for (auto i = xi(1); i <= xi(2); ++i)
            s += L(1)[i];
        return F(s / static_cast<double>(xi(2) - xi(1) + 1));
    }
    case 34: return F((largest(L(1)) + smallest(L(1))) / 2);
    case 35: return F(total(L(1)) / n + total(L(2)) / n);
    case 36: return F(v == 0 ? largest(L(1)) + smallest(L(2)) : largest(L(1)) - smallest(L(2)));
    case 37: {
        auto d = absdiff(L(1), L(2));
        std::size_t best = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (v == 0 ? c1e6(d[i]) > c1e6(d[best]) : c1e6(d[i]) < c1e6(d[best]))
                best = i;
        return c.xs[best];
    }
    case 38: return c.xs[first_of(L(1), smallest(L(1)))];
    case 39: {
        const double target = v == 0 ? largest(all) : smallest(all);
        return c.xs[bars[first_of(all, target)].first];
    }
    case 40: {
        double s = 0;
        for (const auto &row : c.table)
            s += mid(row);
        return F(s);
    }
    case 41: {
        double s = 0;
        int k = 0;
        for (double x : all)
            if (c100(x) > c100(val())) {
                s += x;
                ++k;
            }
        if (k == 0)
            return std::nullopt;
        return F(s / k);
    }
    case 42: {
        auto d = absdiff(L(1), L(2));
        return F(largest(d) + smallest(d));
    }
    case 43: {
        auto d = absdiff(L(1), L(2));
        return F(v == 0 ? largest(d) : smallest(d));
    }
    case 44: return div(largest(c.table[0]), smallest(c.table[0]));
    case 45: {
        const auto &s = c.table[0];
        return v == 0 ? div(kth(s, n - 1), kth(s, n - 2)) : div(kth(s, 1), kth(s, 0));
    }
    case 46: return F(bar_vals.front() - bar_vals.back());
    case 47: return F(total(c.group(1)));
    case 48: return F(total(c.group(n - 1)));
    case 49: return div(bar_vals[0], bar_vals[1]);
    case 50: return F(C(1)[n - 1] - C(2)[0]);
    case 51: return F(total(C(1)) / n);
    case 52: return count_above(C(1), val());
    case 53: return F(total(c.group(n - 2)) / static_cast<double>(c.k()));
    case 54: return count_above(c.group(0), val());
    case 55: return c.names[col(1)];
    case 56: return F(mid(C(1)));
    case 57: return F((total(C(1)) + total(C(2))) / 2);
    case 58: return F((mid(C(1)) + mid(C(2))) / 2);
    case 59: return F(smallest(absdiff(C(1), C(2))));
    case 60: return div(c.group(0)[0], c.group(0)[c.k() - 1]);
    case 61: return F(largest(C(1)));
    case 62: return F(smallest(C(1)));
    case 63: return F(total(C(1)));
    case 64: return F(largest(c.group(0)) - largest(c.group(1)));
    case 65: return F(C(1)[0] + C(2)[n - 1]);
    case 66: return F(kth(C(1), 1) - kth(C(1), 0));
    case 67: return F((largest(C(1)) + smallest(C(1))) / 2);
    case 68: return F(C(1)[xi(1)]);
    case 69: {
        double s = C(1)[xi(1)] + C(2)[xi(1)];
        return F(v == 0 ? s : s / 2);
    }
    case 70: return F(largest(C(1)) + largest(C(2)));
    case 71: {
        const double target = v == 0 ? largest(all) : smallest(all);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t s = 0; s < c.k(); ++s)
                if (c.table[s][x] == target)
                    return chartforge::color_name(c.palette, c.colors[s]);
        return std::nullopt;
    }
    case 72: {
        int k = 0;
        auto s = C(1);
        for (std::size_t i = 0; i < n; ++i) {
            bool dup = false;
            for (std::size_t j = 0; j < n; ++j)
                dup = dup || (i != j && c100(s[i]) == c100(s[j]));
            k += dup;
        }
        return std::to_string(k);
    }
    case 73: return F(C(1)[n - 1] + C(1)[n - 2]);
    case 74: return F(kth(all, 0) * kth(all, 1));
    case 75: return F(smallest(C(1)) + mid(C(1)));
    case 76: return c.xs[first_of(C(1), largest(C(1)))];
    case 77: return F((C(1)[n - 1] + C(1)[n - 2] + C(1)[n - 3]) / 3);
    case 78: return count_above(C(1), val());
    case 79: {
        if (v == 1 && n < 3)
            return std::nullopt;
        return div(kth(C(1), n - 1), kth(C(1), n - 2 - v));
    }
    case 80: return yn(c1e6(smallest(C(1)) + smallest(C(2))) > c1e6(largest(C(3))));
    case 81: return yn(c1e6(mid(C(1))) > c1e6(mid(C(2))));
    case 82: return yn(c1e6(mid(C(1))) > c1e6(largest(C(2))));
    case 83: return F(C(1)[xi(1)] * C(1)[xi(2)]);
    case 84: {
        const auto m = bar_vals.size();
        return yn(c1e6(bar_vals[m / 2 - 1] + bar_vals[m / 2]) > c1e6(bar_vals[0] + bar_vals[m - 1]));
    }
    case 85: return div(C(1)[xi(1)], C(2)[xi(2)]);
    case 86: return yn(c1e6(total(C(1))) > c1e6(total(C(2))));
    case 87: {
        double a = kth(C(1), 0) + kth(C(1), 1), d = kth(C(2), 0) + kth(C(2), 1);
        return F(a > d ? a - d : d - a);
    }
    case 88: {
        double pair = v < 2 ? kth(C(1), 0) + kth(C(1), 1) : kth(C(1), n - 1) + kth(C(1), n - 2);
        return F(v % 2 == 0 ? pair : pair / 2);
    }
    case 89: return div(c.table[0][col(1)], c.table[0][col(2)]);
    case 90: return c.xs[col(1)];
    }
    throw std::runtime_error("oracle has no template " + std::to_string(b.template_id));
}

} // namespace oracle
