#pragma once

#include "chartforge/render.hpp"
#include "chartforge/style.hpp"
#include "chartforge/tasks.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace chartforge {

// ---------------------------------------------------------------------------
// Chart facts: what a reader can see on a rendered chart

/// Values and positions read off a RenderedChart. For pie charts `series`
/// holds the single value column and `colors`/legend slots index segments.
struct ChartFacts {
    struct Bar {
        std::size_t s = 0, x = 0;
        double value = 0;
    };

    ChartType type = ChartType::simple_bar;
    std::string palette;
    std::vector<std::string> xs;        ///< left to right (pie: slice order)
    std::vector<std::string> series;    ///< legend order
    std::vector<std::string> colors;    ///< hex per series, per segment for pie
    std::vector<std::vector<double>> v; ///< v[series][x]
    std::vector<Bar> bars;              ///< bar charts, left to right
    std::vector<std::vector<double>> groups;
    std::vector<double> ticks;
    double axis_min = 0, axis_max = 0;

    bool pie() const { return type == ChartType::pie; }
    std::size_t n() const { return xs.size(); }
    std::size_t k() const { return series.size(); }
    const std::vector<std::string> &legend_names() const { return pie() ? xs : series; }

    /// Every value, x-major then legend order.
    std::vector<double> all() const {
        std::vector<double> out;
        for (std::size_t x = 0; x < n(); ++x)
            for (std::size_t s = 0; s < k(); ++s)
                out.push_back(v[s][x]);
        return out;
    }
};

inline ChartFacts chart_facts(const RenderedChart &c) {
    ChartFacts f;
    f.type = c.chart_type;
    f.palette = c.palette;
    f.axis_min = c.axis_min;
    f.axis_max = c.axis_max;
    auto legend_color = [&](const std::string &name) {
        for (const auto &e : c.legend)
            if (e.series == name)
                return e.color;
        throw Error(ErrorKind::InvalidSpec, "no legend entry for '" + name + "'");
    };
    if (f.pie()) {
        std::vector<double> vals;
        for (const auto &m : c.marks)
            if (m.kind == MarkKind::slice) {
                if (f.series.empty())
                    f.series.push_back(m.series);
                f.xs.push_back(m.x_label);
                f.colors.push_back(legend_color(m.x_label));
                vals.push_back(m.value);
            }
        f.v.push_back(std::move(vals));
        return f;
    }
    auto ticks = c.x_ticks;
    std::stable_sort(ticks.begin(), ticks.end(),
                     [](const CategoryTick &a, const CategoryTick &b) { return a.pixel < b.pixel; });
    for (const auto &t : ticks)
        f.xs.push_back(t.label);
    for (const auto &e : c.legend) {
        f.series.push_back(e.series);
        f.colors.push_back(e.color);
    }
    for (const auto &t : c.axis_ticks)
        f.ticks.push_back(t.value);
    auto index_of = [](const std::vector<std::string> &v, const std::string &s) {
        auto it = std::find(v.begin(), v.end(), s);
        if (it == v.end())
            throw Error(ErrorKind::InvalidSpec, "mark refers to unknown label '" + s + "'");
        return static_cast<std::size_t>(it - v.begin());
    };
    f.v.assign(f.k(), std::vector<double>(f.n(), 0.0));
    std::vector<std::vector<bool>> seen(f.k(), std::vector<bool>(f.n(), false));
    std::vector<std::pair<double, ChartFacts::Bar>> bars;
    for (const auto &m : c.marks) {
        if (m.kind != MarkKind::bar && m.kind != MarkKind::point)
            continue;
        const auto s = index_of(f.series, m.series), x = index_of(f.xs, m.x_label);
        f.v[s][x] = m.value;
        seen[s][x] = true;
        if (m.kind == MarkKind::bar)
            bars.push_back({m.bbox.x, {s, x, m.value}});
    }
    for (const auto &row : seen)
        if (std::find(row.begin(), row.end(), false) != row.end())
            throw Error(ErrorKind::InvalidSpec, "chart is missing a mark");
    std::stable_sort(bars.begin(), bars.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
    if (!bars.empty())
        f.groups.assign(f.n(), {});
    for (const auto &[px, bar] : bars) {
        f.bars.push_back(bar);
        f.groups[bar.x].push_back(bar.value);
    }
    return f;
}

// ---------------------------------------------------------------------------
// Templates

enum class SlotKind { color, color_b, color_c, legend, legend_b, x, x_b, tick, divisor, pair_sum, pair_diff };

inline std::string_view to_string(SlotKind k) {
    switch (k) {
    case SlotKind::color: return "color";
    case SlotKind::color_b: return "color";
    case SlotKind::color_c: return "color";
    case SlotKind::legend: return "legend-label";
    case SlotKind::legend_b: return "legend-label";
    case SlotKind::x: return "x-axis-label";
    case SlotKind::x_b: return "x-axis-label";
    case SlotKind::tick: return "value";
    case SlotKind::divisor: return "n";
    case SlotKind::pair_sum: return "value";
    case SlotKind::pair_diff: return "value";
    }
    return "";
}

inline std::string slot_key(SlotKind k) {
    switch (k) {
    case SlotKind::color: return "color1";
    case SlotKind::color_b: return "color2";
    case SlotKind::color_c: return "color3";
    case SlotKind::legend: return "legend1";
    case SlotKind::legend_b: return "legend2";
    case SlotKind::x: return "x1";
    case SlotKind::x_b: return "x2";
    case SlotKind::divisor: return "n";
    default: return "value";
    }
}

struct SlotBinding {
    int template_id = 0;
    std::size_t variant = 0;
    std::map<std::string, std::string> slots;
    std::uint64_t rng_seed = 0;
};

namespace qa_detail {

inline long long cents(double x) { return std::llround(x * 100.0); }
inline long long micro(double x) { return std::llround(x * 1e6); }

inline std::string yes_no(bool b) { return b ? "Yes" : "No"; }

inline double sum(const std::vector<double> &v) {
    double s = 0;
    for (double x : v)
        s += x;
    return s;
}
inline double mean(const std::vector<double> &v) { return sum(v) / static_cast<double>(v.size()); }
inline double vmax(const std::vector<double> &v) { return *std::max_element(v.begin(), v.end()); }
inline double vmin(const std::vector<double> &v) { return *std::min_element(v.begin(), v.end()); }
inline std::vector<double> sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}
inline double median(const std::vector<double> &v) {
    auto s = sorted(v);
    const auto n = s.size();
    return n % 2 ? s[n / 2] : (s[n / 2 - 1] + s[n / 2]) / 2.0;
}

/// Index of the best element; ties go to the first (or last) occurrence.
template <class Better> std::size_t best_index(const std::vector<double> &v, Better better, bool last = false) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (better(v[i], v[best]) || (last && !better(v[best], v[i])))
            best = i;
    return best;
}
inline std::size_t argmax(const std::vector<double> &v, bool last = false) {
    return best_index(v, [](double a, double b) { return a > b; }, last);
}
inline std::size_t argmin(const std::vector<double> &v, bool last = false) {
    return best_index(v, [](double a, double b) { return a < b; }, last);
}

inline std::optional<std::string> ratio(double a, double b) {
    if (b == 0.0)
        return std::nullopt;
    return format_number(a / b);
}

inline std::vector<double> abs_diffs(const std::vector<double> &a, const std::vector<double> &b) {
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i)
        d.push_back(std::abs(a[i] - b[i]));
    return d;
}

/// Bound slots resolved against chart facts.
struct Ctx {
    const ChartFacts &f;
    const SlotBinding &b;

    const std::string &slot(const std::string &key) const {
        auto it = b.slots.find(key);
        if (it == b.slots.end())
            throw Error(ErrorKind::InvalidSpec, "unbound slot " + key);
        return it->second;
    }
    static std::size_t find(const std::vector<std::string> &v, const std::string &s) {
        auto it = std::find(v.begin(), v.end(), s);
        if (it == v.end())
            throw Error(ErrorKind::InvalidSpec, "slot value '" + s + "' is not on the chart");
        return static_cast<std::size_t>(it - v.begin());
    }
    std::size_t color(int i) const { return find(f.colors, slot("color" + std::to_string(i))); }
    std::size_t legend(int i) const { return find(f.legend_names(), slot("legend" + std::to_string(i))); }
    std::size_t x(int i) const { return find(f.xs, slot("x" + std::to_string(i))); }
    double value() const {
        auto v = parse_plain_number(slot("value"));
        if (!v)
            throw Error(ErrorKind::InvalidSpec, "value slot is not a number");
        return *v;
    }
    int n() const { return std::stoi(slot("n")); }
    std::size_t variant() const { return b.variant; }
    const std::vector<double> &cv(int i) const { return f.v[color(i)]; }
    const std::vector<double> &lv(int i) const { return f.v[legend(i)]; }
};

using Answer = std::optional<std::string>;

inline Answer num(double x) { return format_number(x); }

/// "A and B" for the unique pair of x positions whose combined value matches.
inline Answer unique_pair(const ChartFacts &f, const std::vector<double> &vals, double target, bool diff) {
    std::vector<std::pair<std::size_t, std::size_t>> hits;
    for (std::size_t i = 0; i < vals.size(); ++i)
        for (std::size_t j = i + 1; j < vals.size(); ++j) {
            const double c = diff ? std::abs(vals[i] - vals[j]) : vals[i] + vals[j];
            if (cents(c) == cents(target))
                hits.emplace_back(i, j);
        }
    if (hits.size() != 1)
        return std::nullopt;
    return f.xs[hits[0].first] + " and " + f.xs[hits[0].second];
}

} // namespace qa_detail

struct QATemplate {
    int id = 0;
    std::vector<std::string> patterns; ///< one per variant
    std::vector<SlotKind> slots;
    std::string applicability;
    std::function<bool(const ChartFacts &)> applies;
    std::function<std::optional<std::string>(const qa_detail::Ctx &)> answer;
};

inline std::string template_label(int id) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "T%02d", id);
    return buf;
}

namespace qa_detail {

inline bool xy(const ChartFacts &f) { return !f.pie(); }
inline bool bar(const ChartFacts &f) { return is_bar(f.type); }
inline bool line(const ChartFacts &f) { return is_line(f.type); }
inline bool grouped(const ChartFacts &f) { return f.type == ChartType::grouped_bar; }
inline bool single(const ChartFacts &f) {
    return f.type == ChartType::simple_bar || f.type == ChartType::line_single || f.pie();
}

inline std::vector<QATemplate> build_templates() {
    using S = SlotKind;
    std::vector<QATemplate> t;
    auto add = [&](int id, std::vector<std::string> patterns, std::vector<SlotKind> slots, std::string when,
                   std::function<bool(const ChartFacts &)> applies, std::function<Answer(const Ctx &)> answer) {
        t.push_back({id, std::move(patterns), std::move(slots), std::move(when), std::move(applies), std::move(answer)});
    };
    const auto mx = [](const std::vector<double> &v) { return vmax(v); };
    const auto mn = [](const std::vector<double> &v) { return vmin(v); };

    // positional bar templates
    add(1, {"What is the value of the first bar from the left in the second group from the left?"}, {},
        "grouped bars, at least 2 groups", [](auto &f) { return grouped(f) && f.n() >= 2; },
        [](auto &c) { return num(c.f.groups[1].front()); });
    add(2, {"What is the value of the first bar from the right in the second group from the right?"}, {},
        "grouped bars, at least 2 groups", [](auto &f) { return grouped(f) && f.n() >= 2; },
        [](auto &c) { return num(c.f.groups[c.f.n() - 2].back()); });
    add(3, {"What is the value of the second bar from the right in the first group from the right?"}, {},
        "grouped bars", grouped, [](auto &c) {
            const auto &g = c.f.groups.back();
            return num(g[g.size() - 2]);
        });
    add(4, {"What is the value of the second bar from the right in the first group from the left?"}, {},
        "grouped bars", grouped, [](auto &c) {
            const auto &g = c.f.groups.front();
            return num(g[g.size() - 2]);
        });
    add(5, {"What is the value of the leftmost bar?"}, {}, "bar charts", bar,
        [](auto &c) { return num(c.f.bars.front().value); });
    add(6, {"What is the value of the rightmost bar?"}, {}, "bar charts", bar,
        [](auto &c) { return num(c.f.bars.back().value); });
    add(7, {"What is the value of the second bar from the left?"}, {}, "bar charts, at least 2 bars",
        [](auto &f) { return bar(f) && f.bars.size() >= 2; }, [](auto &c) { return num(c.f.bars[1].value); });
    add(8, {"What is the value of the second bar from the right?"}, {}, "bar charts, at least 2 bars",
        [](auto &f) { return bar(f) && f.bars.size() >= 2; },
        [](auto &c) { return num(c.f.bars[c.f.bars.size() - 2].value); });
    auto extreme_bar = [](bool top, bool last) {
        return [top, last](const Ctx &c) -> Answer {
            std::vector<double> vals;
            for (const auto &b : c.f.bars)
                vals.push_back(b.value);
            const auto i = top ? argmax(vals, last) : argmin(vals, last);
            return c.f.xs[c.f.bars[i].x];
        };
    };
    auto two_bars = [](const ChartFacts &f) { return bar(f) && f.bars.size() >= 2; };
    add(9, {"What is the x-axis label of the leftmost topmost bar?"}, {}, "bar charts, at least 2 bars", two_bars,
        extreme_bar(true, false));
    add(10, {"What is the x-axis label of the leftmost bottommost bar?"}, {}, "bar charts, at least 2 bars", two_bars,
        extreme_bar(false, false));
    add(11, {"What is the x-axis label of the rightmost topmost bar?"}, {}, "bar charts, at least 2 bars", two_bars,
        extreme_bar(true, true));
    add(12, {"What is the x-axis label of the rightmost bottommost bar?"}, {}, "bar charts, at least 2 bars",
        two_bars, extreme_bar(false, true));
    add(13, {"What is the value of the leftmost {color1} data point?"}, {S::color}, "bar and line charts", xy,
        [](auto &c) { return num(c.cv(1).front()); });
    add(14, {"What is the value of the rightmost {color1} data point?"}, {S::color}, "bar and line charts", xy,
        [](auto &c) { return num(c.cv(1).back()); });
    add(15, {"What is the value of the second {color1} data point from the left?"}, {S::color},
        "bar and line charts, at least 2 x labels", [](auto &f) { return xy(f) && f.n() >= 2; },
        [](auto &c) { return num(c.cv(1)[1]); });
    add(16, {"What is the value of the second {color1} data point from the right?"}, {S::color},
        "bar and line charts, at least 2 x labels", [](auto &f) { return xy(f) && f.n() >= 2; },
        [](auto &c) { return num(c.cv(1)[c.f.n() - 2]); });

    // legend and color lookups, simple comparisons
    add(17, {"Which legend is represented by {color1}?"}, {S::color}, "bar and line charts with several series",
        [](auto &f) { return xy(f) && f.k() >= 2; }, [](auto &c) -> Answer { return c.f.series[c.color(1)]; });
    add(18, {"What is the color of {legend1}?"}, {S::legend}, "any chart with a legend",
        [](auto &f) { return !f.legend_names().empty(); },
        [](auto &c) -> Answer { return color_name(c.f.palette, c.f.colors[c.legend(1)]); });
    add(19, {"Which one is greater, {x1} or {x2}?"}, {S::x, S::x_b}, "single-series charts, at least 2 x labels",
        [](auto &f) { return single(f) && f.n() >= 2; },
        [](auto &c) -> Answer {
            const double a = c.f.v[0][c.x(1)], b = c.f.v[0][c.x(2)];
            if (cents(a) == cents(b))
                return std::nullopt;
            return a > b ? c.f.xs[c.x(1)] : c.f.xs[c.x(2)];
        });
    add(20, {"Divide the sum of the largest and lowest values by {n}."}, {S::divisor}, "any chart",
        [](auto &) { return true; },
        [](auto &c) {
            const auto a = c.f.all();
            return num((vmax(a) + vmin(a)) / c.n());
        });
    add(21, {"When did line {legend1} peak?"}, {S::legend}, "line charts", line,
        [](auto &c) -> Answer { return c.f.xs[argmax(c.lv(1))]; });
    add(22, {"What is the difference between the maximum and minimum of {legend1}?"}, {S::legend},
        "bar and line charts", xy, [](auto &c) { return num(vmax(c.lv(1)) - vmin(c.lv(1))); });
    add(23, {"What is the sum of the pie segments above {value}?"}, {S::tick},
        "pie charts with at least 2 distinct segment values", [](auto &f) {
            return f.pie() && cents(vmax(f.v[0])) != cents(vmin(f.v[0]));
        },
        [](auto &c) {
            double s = 0;
            for (double x : c.f.v[0])
                if (cents(x) > cents(c.value()))
                    s += x;
            return num(s);
        });
    add(24, {"What is the sum of the top three values?"}, {}, "at least 3 values",
        [](auto &f) { return f.all().size() >= 3; },
        [](auto &c) {
            auto s = sorted(c.f.all());
            return num(s[s.size() - 1] + s[s.size() - 2] + s[s.size() - 3]);
        });
    add(25, {"What is the median of {legend1}?", "What is the mode of {legend1}?"}, {S::legend},
        "bar and line charts, at least 3 x labels", [](auto &f) { return xy(f) && f.n() >= 3; },
        [](auto &c) -> Answer {
            const auto &v = c.lv(1);
            if (c.variant() == 0)
                return num(median(v));
            std::map<long long, int> count;
            for (double x : v)
                ++count[cents(x)];
            long long best = 0;
            int best_n = 0;
            for (const auto &[key, k] : count)
                if (k > best_n) {
                    best = key;
                    best_n = k;
                }
            if (best_n < 2)
                return std::nullopt;
            for (double x : v)
                if (cents(x) == best)
                    return num(x);
            return std::nullopt;
        });
    add(26, {"What is the negative peak of {legend1}?"}, {S::legend}, "bar and line charts", xy,
        [](auto &c) { return num(vmin(c.lv(1))); });
    add(27, {"What is the largest value of {legend1}?", "What is the smallest value of {legend1}?"}, {S::legend},
        "bar and line charts", xy,
        [](auto &c) { return num(c.variant() == 0 ? vmax(c.lv(1)) : vmin(c.lv(1))); });
    add(28, {"Which two x-axis labels of {legend1} sum up to {value}?"}, {S::legend, S::pair_sum},
        "bar and line charts, at least 2 x labels", [](auto &f) { return xy(f) && f.n() >= 2; },
        [](auto &c) { return unique_pair(c.f, c.lv(1), c.value(), false); });
    add(29, {"What is the sum of the second highest and second lowest value of {legend1}?"}, {S::legend},
        "bar and line charts, at least 4 x labels", [](auto &f) { return xy(f) && f.n() >= 4; },
        [](auto &c) {
            auto s = sorted(c.lv(1));
            return num(s[s.size() - 2] + s[1]);
        });
    add(30, {"Which x-axis label is second highest for {legend1}?"}, {S::legend},
        "bar and line charts, at least 2 x labels", [](auto &f) { return xy(f) && f.n() >= 2; },
        [](auto &c) -> Answer {
            const auto &v = c.lv(1);
            std::vector<std::size_t> order(v.size());
            for (std::size_t i = 0; i < order.size(); ++i)
                order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] > v[b]; });
            return c.f.xs[order[1]];
        });
    add(31, {"What is the sum of the two middle values of {legend1}?"}, {S::legend},
        "bar and line charts, an even number of at least 4 x labels",
        [](auto &f) { return xy(f) && f.n() >= 4 && f.n() % 2 == 0; },
        [](auto &c) {
            auto s = sorted(c.lv(1));
            return num(s[s.size() / 2 - 1] + s[s.size() / 2]);
        });
    add(32, {"Which two x-axis labels of {legend1} have a difference of {value}?"}, {S::legend, S::pair_diff},
        "bar and line charts, at least 2 x labels", [](auto &f) { return xy(f) && f.n() >= 2; },
        [](auto &c) { return unique_pair(c.f, c.lv(1), c.value(), true); });
    add(33, {"What is the average of {legend1} from {x1} to {x2}?"}, {S::legend, S::x, S::x_b},
        "bar and line charts, at least 2 x labels", [](auto &f) { return xy(f) && f.n() >= 2; },
        [](auto &c) {
            const auto &v = c.lv(1);
            return num(mean(std::vector<double>(v.begin() + static_cast<long>(c.x(1)),
                                                v.begin() + static_cast<long>(c.x(2)) + 1)));
        });
    add(34, {"What is the average of the highest and lowest value of {legend1}?"}, {S::legend},
        "bar and line charts", xy, [](auto &c) { return num((vmax(c.lv(1)) + vmin(c.lv(1))) / 2); });
    auto multi = [](const ChartFacts &f) { return xy(f) && f.k() >= 2; };
    add(35, {"What is the sum of the average of {legend1} and the average of {legend2}?"},
        {S::legend, S::legend_b}, "bar and line charts with several series", multi,
        [](auto &c) { return num(mean(c.lv(1)) + mean(c.lv(2))); });
    add(36,
        {"What is the sum of the maximum of {legend1} and the minimum of {legend2}?",
         "What is the difference between the maximum of {legend1} and the minimum of {legend2}?"},
        {S::legend, S::legend_b}, "bar and line charts with several series", multi, [](auto &c) {
            return num(c.variant() == 0 ? vmax(c.lv(1)) + vmin(c.lv(2)) : vmax(c.lv(1)) - vmin(c.lv(2)));
        });
    add(37,
        {"Which x-axis label has the maximum difference between {legend1} and {legend2}?",
         "Which x-axis label has the minimum difference between {legend1} and {legend2}?"},
        {S::legend, S::legend_b}, "bar and line charts with several series", multi, [](auto &c) -> Answer {
            std::vector<double> d;
            for (double x : abs_diffs(c.lv(1), c.lv(2)))
                d.push_back(static_cast<double>(micro(x)));
            return c.f.xs[c.variant() == 0 ? argmax(d) : argmin(d)];
        });
    add(38, {"Which x-axis label witnessed the smallest value of {legend1}?"}, {S::legend}, "bar and line charts",
        xy, [](auto &c) -> Answer { return c.f.xs[argmin(c.lv(1))]; });
    add(39,
        {"Which label contains the largest value across all labels?",
         "Which label contains the smallest value across all labels?"},
        {}, "any chart", [](auto &) { return true; },
        [](auto &c) -> Answer {
            const auto a = c.f.all();
            const auto i = c.variant() == 0 ? argmax(a) : argmin(a);
            return c.f.xs[i / c.f.k()];
        });
    add(40, {"Sum up the medians of all the data series in this chart."}, {},
        "bar and line charts, at least 3 x labels", [](auto &f) { return xy(f) && f.n() >= 3; },
        [](auto &c) {
            double s = 0;
            for (const auto &v : c.f.v)
                s += median(v);
            return num(s);
        });
    add(41, {"What is the average of all values above {value}?"}, {S::tick}, "any chart",
        [](auto &f) { return !f.pie() || cents(vmax(f.v[0])) != cents(vmin(f.v[0])); },
        [](auto &c) -> Answer {
            std::vector<double> above;
            for (double x : c.f.all())
                if (cents(x) > cents(c.value()))
                    above.push_back(x);
            if (above.empty())
                return std::nullopt;
            return num(mean(above));
        });
    add(42, {"What is the sum of the largest and smallest difference between {legend1} and {legend2}?"},
        {S::legend, S::legend_b}, "bar and line charts with several series", multi, [](auto &c) {
            const auto d = abs_diffs(c.lv(1), c.lv(2));
            return num(vmax(d) + vmin(d));
        });
    add(43,
        {"What is the maximum difference between {legend1} and {legend2}?",
         "What is the minimum difference between {legend1} and {legend2}?"},
        {S::legend, S::legend_b}, "bar and line charts with several series", multi, [](auto &c) {
            const auto d = abs_diffs(c.lv(1), c.lv(2));
            return num(c.variant() == 0 ? vmax(d) : vmin(d));
        });
    add(44, {"What is the ratio of the largest to the smallest pie segment?"}, {}, "pie charts",
        [](auto &f) { return f.pie(); }, [](auto &c) { return ratio(vmax(c.f.v[0]), vmin(c.f.v[0])); });
    add(45,
        {"What is the ratio of the two largest segments?", "What is the ratio of the two smallest segments?"}, {},
        "pie charts, at least 2 segments", [](auto &f) { return f.pie() && f.n() >= 2; },
        [](auto &c) {
            auto s = sorted(c.f.v[0]);
            const auto n = s.size();
            return c.variant() == 0 ? ratio(s[n - 1], s[n - 2]) : ratio(s[1], s[0]);
        });
    add(46, {"What is the difference between the leftmost and rightmost bars?"}, {}, "bar charts, at least 2 bars",
        two_bars, [](auto &c) { return num(c.f.bars.front().value - c.f.bars.back().value); });
    add(47, {"What is the sum of the bars in the second group from the left?"}, {},
        "grouped bars, at least 2 groups", [](auto &f) { return grouped(f) && f.n() >= 2; },
        [](auto &c) { return num(sum(c.f.groups[1])); });
    add(48, {"What is the sum of the bars in the first group from the right?"}, {}, "grouped bars", grouped,
        [](auto &c) { return num(sum(c.f.groups.back())); });
    add(49, {"What is the ratio between the two leftmost bars?"}, {}, "bar charts, at least 2 bars", two_bars,
        [](auto &c) { return ratio(c.f.bars[0].value, c.f.bars[1].value); });
    add(50, {"What is the difference between the rightmost {color1} bar and the leftmost {color2} bar?"},
        {S::color, S::color_b}, "grouped bars", grouped,
        [](auto &c) { return num(c.cv(1).back() - c.cv(2).front()); });
    add(51, {"What is the average of the {color1} bar values?"}, {S::color}, "bar charts", bar,
        [](auto &c) { return num(mean(c.cv(1))); });
    add(52, {"How many {color1} bars are larger than {value}?"}, {S::color, S::tick}, "bar charts", bar,
        [](auto &c) -> Answer {
            const auto v = c.value();
            const auto &vals = c.cv(1);
            return std::to_string(std::count_if(vals.begin(), vals.end(), [&](double x) { return cents(x) > cents(v); }));
        });
    add(53, {"What is the average of the bars in the second group from the right?"}, {},
        "grouped bars, at least 2 groups", [](auto &f) { return grouped(f) && f.n() >= 2; },
        [](auto &c) { return num(mean(c.f.groups[c.f.n() - 2])); });
    add(54, {"How many bars in the leftmost group have a value over {value}?"}, {S::tick}, "grouped bars", grouped,
        [](auto &c) -> Answer {
            const auto v = c.value();
            const auto &g = c.f.groups.front();
            return std::to_string(std::count_if(g.begin(), g.end(), [&](double x) { return cents(x) > cents(v); }));
        });
    add(55, {"What does the {color1} represent?"}, {S::color}, "any chart", [](auto &) { return true; },
        [](auto &c) -> Answer { return c.f.legend_names()[c.color(1)]; });
    add(56, {"What is the median value of the {color1} {marks}?"}, {S::color},
        "bar and line charts, at least 3 x labels", [](auto &f) { return xy(f) && f.n() >= 3; },
        [](auto &c) { return num(median(c.cv(1))); });
    add(57, {"What is the average of the {color1} sum and the {color2} sum?"}, {S::color, S::color_b},
        "bar and line charts with several series", multi,
        [](auto &c) { return num((sum(c.cv(1)) + sum(c.cv(2))) / 2); });
    add(58, {"What is the average of the {color1} median and the {color2} median?"}, {S::color, S::color_b},
        "bar and line charts with several series, at least 3 x labels",
        [multi](auto &f) { return multi(f) && f.n() >= 3; },
        [](auto &c) { return num((median(c.cv(1)) + median(c.cv(2))) / 2); });
    add(59, {"What is the least difference between the {color1} and {color2} {marks}?"}, {S::color, S::color_b},
        "bar and line charts with several series", multi,
        [](auto &c) { return num(vmin(abs_diffs(c.cv(1), c.cv(2)))); });
    add(60, {"What is the ratio between the leftmost and rightmost bar in the first group from the left?"}, {},
        "grouped bars", grouped,
        [](auto &c) { return ratio(c.f.groups.front().front(), c.f.groups.front().back()); });
    add(61, {"What is the maximum value in the {color1} {marks}?"}, {S::color}, "bar and line charts", xy,
        [mx](auto &c) { return num(mx(c.cv(1))); });
    add(62, {"What is the minimum value in the {color1} {marks}?"}, {S::color}, "bar and line charts", xy,
        [mn](auto &c) { return num(mn(c.cv(1))); });
    add(63, {"What is the sum of the {color1} {marks}?"}, {S::color}, "bar and line charts", xy,
        [](auto &c) { return num(sum(c.cv(1))); });
    add(64, {"What is the difference between the maximum values of the two leftmost bar groups?"}, {},
        "grouped bars, at least 2 groups", [](auto &f) { return grouped(f) && f.n() >= 2; },
        [](auto &c) { return num(vmax(c.f.groups[0]) - vmax(c.f.groups[1])); });
    add(65, {"What is the sum of the first {color1} and last {color2} {items}?"}, {S::color, S::color_b},
        "bar and line charts with several series", multi,
        [](auto &c) { return num(c.cv(1).front() + c.cv(2).back()); });
    add(66, {"What is the difference between the two lowest {color1} bars?"}, {S::color},
        "bar charts, at least 2 x labels", [](auto &f) { return bar(f) && f.n() >= 2; },
        [](auto &c) {
            auto s = sorted(c.cv(1));
            return num(s[1] - s[0]);
        });
    add(67, {"Add the largest and smallest {color1} values and divide by 2."}, {S::color}, "bar and line charts",
        xy, [](auto &c) { return num((vmax(c.cv(1)) + vmin(c.cv(1))) / 2); });
    add(68, {"What is the value of the {color1} {marks} in {x1}?"}, {S::color, S::x}, "bar and line charts", xy,
        [](auto &c) { return num(c.cv(1)[c.x(1)]); });
    add(69,
        {"What is the sum of the {color1} and {color2} values in {x1}?",
         "What is the average of the {color1} and {color2} values in {x1}?"},
        {S::color, S::color_b, S::x}, "bar and line charts with several series", multi, [](auto &c) {
            const double s = c.cv(1)[c.x(1)] + c.cv(2)[c.x(1)];
            return num(c.variant() == 0 ? s : s / 2);
        });
    add(70, {"What is the sum of the highest points in the {color1} and {color2} {marks}?"},
        {S::color, S::color_b}, "bar and line charts with several series", multi,
        [](auto &c) { return num(vmax(c.cv(1)) + vmax(c.cv(2))); });
    add(71, {"Which color has the highest values?", "Which color has the smallest values?"}, {},
        "bar and line charts with several series", multi, [](auto &c) -> Answer {
            const auto a = c.f.all();
            const auto i = c.variant() == 0 ? argmax(a) : argmin(a);
            return color_name(c.f.palette, c.f.colors[i % c.f.k()]);
        });
    add(72, {"How many values are equal in the {color1} {marks}?"}, {S::color}, "bar and line charts", xy,
        [](auto &c) -> Answer {
            const auto &v = c.cv(1);
            std::map<long long, int> count;
            for (double x : v)
                ++count[cents(x)];
            int n = 0;
            for (double x : v)
                n += count[cents(x)] > 1;
            return std::to_string(n);
        });
    add(73, {"Sum the two rightmost values of the {color1} graph."}, {S::color},
        "bar and line charts, at least 2 x labels", [](auto &f) { return xy(f) && f.n() >= 2; },
        [](auto &c) {
            const auto &v = c.cv(1);
            return num(v[v.size() - 1] + v[v.size() - 2]);
        });
    add(74, {"What is the product of the two smallest values in the graph?"}, {}, "at least 2 values",
        [](auto &f) { return f.all().size() >= 2; },
        [](auto &c) {
            auto s = sorted(c.f.all());
            return num(s[0] * s[1]);
        });
    add(75, {"What is the sum of the lowest and median values of the {color1} {marks}?"}, {S::color},
        "bar and line charts, at least 3 x labels", [](auto &f) { return xy(f) && f.n() >= 3; },
        [](auto &c) { return num(vmin(c.cv(1)) + median(c.cv(1))); });
    add(76, {"When did the {color1} line reach the peak?"}, {S::color}, "line charts", line,
        [](auto &c) -> Answer { return c.f.xs[argmax(c.cv(1))]; });
    add(77, {"What is the average of the rightmost three points of the {color1} line?"}, {S::color},
        "line charts, at least 3 x labels", [](auto &f) { return line(f) && f.n() >= 3; },
        [](auto &c) {
            const auto &v = c.cv(1);
            return num(mean(std::vector<double>(v.end() - 3, v.end())));
        });
    add(78, {"How many {color1} data points are above {value}?"}, {S::color, S::tick}, "line charts", line,
        [](auto &c) -> Answer {
            const auto v = c.value();
            const auto &vals = c.cv(1);
            return std::to_string(std::count_if(vals.begin(), vals.end(), [&](double x) { return cents(x) > cents(v); }));
        });
    add(79,
        {"What's the ratio of the largest and the second-largest {color1} bar?",
         "What's the ratio of the largest and the third-largest {color1} bar?"},
        {S::color}, "bar charts, at least 2 x labels", [](auto &f) { return bar(f) && f.n() >= 2; },
        [](auto &c) -> Answer {
            auto s = sorted(c.cv(1));
            const auto n = s.size();
            if (c.variant() == 1 && n < 3)
                return std::nullopt;
            return ratio(s[n - 1], s[n - 2 - c.variant()]);
        });
    add(80,
        {"Is the sum of the lowest values of the {color1} and {color2} bars greater than the largest value of the "
         "{color3} bar?"},
        {S::color, S::color_b, S::color_c}, "grouped bars with at least 3 series",
        [](auto &f) { return grouped(f) && f.k() >= 3; },
        [](auto &c) -> Answer {
            return yes_no(micro(vmin(c.cv(1)) + vmin(c.cv(2))) > micro(vmax(c.cv(3))));
        });
    add(81, {"Is the median value of the {color1} bars greater than the median value of the {color2} bars?"},
        {S::color, S::color_b}, "grouped bars, at least 3 groups",
        [](auto &f) { return grouped(f) && f.n() >= 3; },
        [](auto &c) -> Answer { return yes_no(micro(median(c.cv(1))) > micro(median(c.cv(2)))); });
    add(82, {"Is the median of all the {color1} bars greater than the largest value of the {color2} bar?"},
        {S::color, S::color_b}, "grouped bars, at least 3 groups",
        [](auto &f) { return grouped(f) && f.n() >= 3; },
        [](auto &c) -> Answer { return yes_no(micro(median(c.cv(1))) > micro(vmax(c.cv(2)))); });
    add(83, {"What's the product of the {color1} bars in {x1} and {x2}?"}, {S::color, S::x, S::x_b},
        "bar charts, at least 2 x labels", [](auto &f) { return bar(f) && f.n() >= 2; },
        [](auto &c) { return num(c.cv(1)[c.x(1)] * c.cv(1)[c.x(2)]); });
    add(84, {"Is the sum of the two middle bars greater than the sum of the leftmost and rightmost bars?"}, {},
        "simple bar charts with an even number of at least 4 bars",
        [](auto &f) { return f.type == ChartType::simple_bar && f.bars.size() >= 4 && f.bars.size() % 2 == 0; },
        [](auto &c) -> Answer {
            const auto &b = c.f.bars;
            const auto m = b.size();
            return yes_no(micro(b[m / 2 - 1].value + b[m / 2].value) > micro(b.front().value + b.back().value));
        });
    add(85, {"What's the ratio of the {x1} {color1} bar and the {x2} {color2} bar?"},
        {S::color, S::color_b, S::x, S::x_b}, "grouped bars", grouped,
        [](auto &c) { return ratio(c.cv(1)[c.x(1)], c.cv(2)[c.x(2)]); });
    add(86, {"Is the total of all {color1} bars greater than the total of all {color2} bars?"},
        {S::color, S::color_b}, "grouped bars", grouped,
        [](auto &c) -> Answer { return yes_no(micro(sum(c.cv(1))) > micro(sum(c.cv(2)))); });
    add(87,
        {"Take the sum of the two smallest {color1} bars and the sum of the two smallest {color2} bars, deduct the "
         "smaller value from the larger value, what's the result?"},
        {S::color, S::color_b}, "grouped bars, at least 2 groups", [](auto &f) { return grouped(f) && f.n() >= 2; },
        [](auto &c) {
            auto a = sorted(c.cv(1)), b = sorted(c.cv(2));
            return num(std::abs((a[0] + a[1]) - (b[0] + b[1])));
        });
    add(88,
        {"What is the sum of the two smallest {color1} bars?", "What is the average of the two smallest {color1} bars?",
         "What is the sum of the two largest {color1} bars?", "What is the average of the two largest {color1} bars?"},
        {S::color}, "bar charts, at least 2 x labels", [](auto &f) { return bar(f) && f.n() >= 2; },
        [](auto &c) {
            auto s = sorted(c.cv(1));
            const auto n = s.size();
            const double pair = c.variant() < 2 ? s[0] + s[1] : s[n - 1] + s[n - 2];
            return num(c.variant() % 2 == 0 ? pair : pair / 2);
        });
    add(89, {"What is the ratio of the {color1} and {color2} segments?"}, {S::color, S::color_b},
        "pie charts, at least 2 segments", [](auto &f) { return f.pie() && f.n() >= 2; },
        [](auto &c) { return ratio(c.f.v[0][c.color(1)], c.f.v[0][c.color(2)]); });
    add(90, {"What segment is represented by {color1}?"}, {S::color}, "pie charts", [](auto &f) { return f.pie(); },
        [](auto &c) -> Answer { return c.f.xs[c.color(1)]; });
    return t;
}

} // namespace qa_detail

/// The 90 templates, indexed by id - 1.
inline const std::vector<QATemplate> &qa_templates() {
    static const std::vector<QATemplate> all = qa_detail::build_templates();
    return all;
}

inline const QATemplate &qa_template(int id) {
    if (id < 1 || id > static_cast<int>(qa_templates().size()))
        throw Error(ErrorKind::InvalidSpec, "no template " + std::to_string(id));
    return qa_templates()[static_cast<std::size_t>(id - 1)];
}

inline std::vector<int> enumerate_applicable(const ChartFacts &f) {
    std::vector<int> out;
    for (const auto &t : qa_templates())
        if (t.applies(f))
            out.push_back(t.id);
    return out;
}

inline std::vector<int> enumerate_applicable(const RenderedChart &chart) {
    return enumerate_applicable(chart_facts(chart));
}

/// Draws slot values for a template. Pair slots need a bound legend or color
/// slot and keep the target inside the axis range.
inline std::optional<SlotBinding> bind_slots(const QATemplate &t, const ChartFacts &f, std::uint64_t seed) {
    using qa_detail::cents;
    Rng rng(seed);
    SlotBinding b;
    b.template_id = t.id;
    b.rng_seed = seed;
    b.variant = rng.index(t.patterns.size());
    const auto &names = f.legend_names();
    std::vector<std::size_t> used_colors, used_legends;
    std::size_t x1 = 0;
    bool has_x_b = std::find(t.slots.begin(), t.slots.end(), SlotKind::x_b) != t.slots.end();
    auto draw_distinct = [&](std::vector<std::size_t> &used) -> std::optional<std::size_t> {
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < names.size(); ++i)
            if (std::find(used.begin(), used.end(), i) == used.end())
                free.push_back(i);
        if (free.empty())
            return std::nullopt;
        const auto i = rng.pick(free);
        used.push_back(i);
        return i;
    };
    for (auto kind : t.slots) {
        const auto key = slot_key(kind);
        switch (kind) {
        case SlotKind::color:
        case SlotKind::color_b:
        case SlotKind::color_c: {
            auto i = draw_distinct(used_colors);
            if (!i)
                return std::nullopt;
            b.slots[key] = f.colors[*i];
            break;
        }
        case SlotKind::legend:
        case SlotKind::legend_b: {
            auto i = draw_distinct(used_legends);
            if (!i)
                return std::nullopt;
            b.slots[key] = names[*i];
            break;
        }
        case SlotKind::x:
            if (f.n() < (has_x_b ? 2u : 1u))
                return std::nullopt;
            x1 = rng.index(has_x_b ? f.n() - 1 : f.n());
            b.slots[key] = f.xs[x1];
            break;
        case SlotKind::x_b:
            b.slots[key] = f.xs[x1 + 1 + rng.index(f.n() - 1 - x1)];
            break;
        case SlotKind::tick: {
            std::vector<double> candidates;
            if (f.pie()) {
                const auto top = cents(qa_detail::vmax(f.v[0]));
                for (double x : f.v[0])
                    if (cents(x) < top)
                        candidates.push_back(x);
            } else {
                candidates = f.ticks;
            }
            if (candidates.empty())
                return std::nullopt;
            b.slots[key] = format_number(rng.pick(candidates));
            break;
        }
        case SlotKind::divisor:
            b.slots[key] = std::to_string(rng.uniform_int(2, 5));
            break;
        case SlotKind::pair_sum:
        case SlotKind::pair_diff: {
            if (f.pie())
                return std::nullopt;
            std::size_t s = 0;
            if (b.slots.count("legend1"))
                s = qa_detail::Ctx::find(f.series, b.slots["legend1"]);
            else if (b.slots.count("color1"))
                s = qa_detail::Ctx::find(f.colors, b.slots["color1"]);
            const auto &v = f.v[s];
            const bool diff = kind == SlotKind::pair_diff;
            std::map<long long, int> count;
            std::vector<double> combos;
            for (std::size_t i = 0; i < v.size(); ++i)
                for (std::size_t j = i + 1; j < v.size(); ++j) {
                    const double c = diff ? std::abs(v[i] - v[j]) : v[i] + v[j];
                    if (count[cents(c)]++ == 0)
                        combos.push_back(c);
                }
            std::vector<double> ok;
            for (double c : combos)
                if (count[cents(c)] == 1 && cents(c) != 0 && c >= f.axis_min && c <= f.axis_max)
                    ok.push_back(c);
            if (ok.empty())
                return std::nullopt;
            b.slots[key] = format_number(rng.pick(ok));
            break;
        }
        }
    }
    return b;
}

inline std::optional<std::string> answer_template(const ChartFacts &f, const SlotBinding &b) {
    return qa_template(b.template_id).answer(qa_detail::Ctx{f, b});
}

inline std::string render_question(const ChartFacts &f, const SlotBinding &b) {
    const auto &t = qa_template(b.template_id);
    std::string q = t.patterns.at(b.variant);
    auto replace = [&](const std::string &ph, const std::string &with) {
        for (auto pos = q.find(ph); pos != std::string::npos; pos = q.find(ph, pos + with.size()))
            q.replace(pos, ph.size(), with);
    };
    for (const auto &[key, value] : b.slots)
        replace("{" + key + "}", starts_with(key, "color") ? color_name(f.palette, value) : value);
    replace("{marks}", is_line(f.type) ? "line" : "bars");
    replace("{items}", is_line(f.type) ? "line points" : "bars");
    return q;
}

struct QaItem {
    SlotBinding binding;
    std::string question;
    std::string answer;
};

/// Samples up to `count` distinct questions. A template is dropped after 20
/// failed bindings or duplicate questions.
inline std::vector<QaItem> sample_qa(const ChartFacts &f, std::size_t count, std::uint64_t seed) {
    std::vector<QaItem> out;
    auto ids = enumerate_applicable(f);
    std::map<int, int> failures;
    std::set<std::string> seen;
    Rng rng(mix_seed(seed, 0x9A7E));
    for (std::uint64_t attempt = 0; out.size() < count && !ids.empty(); ++attempt) {
        const std::size_t pick = rng.index(ids.size());
        const int id = ids[pick];
        auto binding = bind_slots(qa_template(id), f, mix_seed(seed, attempt));
        std::optional<std::string> answer;
        std::string question;
        if (binding) {
            answer = answer_template(f, *binding);
            question = render_question(f, *binding);
        }
        if (!answer || !seen.insert(question).second) {
            if (++failures[id] >= 20)
                ids.erase(ids.begin() + static_cast<long>(pick));
            continue;
        }
        out.push_back({*binding, question, *answer});
    }
    return out;
}

inline std::vector<TaskRecord> generate_qa(const RenderedChart &chart, std::size_t count, std::uint64_t seed,
                                           const std::string &image = "") {
    std::vector<TaskRecord> out;
    for (auto &item : sample_qa(chart_facts(chart), count, seed))
        out.push_back(make_record(image, TaskKind::qa_reasoning, item.question, item.answer));
    return out;
}

inline nlohmann::json qa_catalog_json() {
    nlohmann::json out = nlohmann::json::array();
    for (const auto &t : qa_templates()) {
        nlohmann::json slots = nlohmann::json::array();
        for (auto s : t.slots)
            slots.push_back({{"name", slot_key(s)}, {"type", to_string(s)}});
        out.push_back({{"id", template_label(t.id)},
                       {"patterns", t.patterns},
                       {"slots", slots},
                       {"applicability", t.applicability}});
    }
    return out;
}

} // namespace chartforge
