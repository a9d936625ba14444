#pragma once

#include "chartforge/style.hpp"
#include "chartforge/table.hpp"

#include <array>
#include <string>
#include <vector>

namespace chartforge {

namespace detail {

struct Theme {
    std::string x_name;
    std::vector<std::string> x_values;
    std::string group_name;
    std::vector<std::string> groups;
    std::vector<std::string> y_names;
    std::optional<std::string> unit;
};

inline const std::vector<Theme> &themes() {
    static const std::vector<Theme> all = {
        {"Year",
         {"2012", "2013", "2014", "2015", "2016", "2017", "2018", "2019", "2020", "2021", "2022"},
         "Region",
         {"North", "South", "East", "West", "Central"},
         {"Revenue", "Sales", "Exports"},
         std::nullopt},
        {"Country",
         {"India", "Japan", "Brazil", "Canada", "Kenya", "France", "Chile", "Norway", "Egypt", "Peru"},
         "Gender",
         {"Men", "Women", "All adults"},
         {"Share of adults", "Approval rate", "Turnout"},
         "%"},
        {"Month",
         {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"},
         "Product",
         {"Laptops", "Phones", "Tablets", "Monitors"},
         {"Units sold", "Returns", "Net change"},
         std::nullopt},
        {"Department",
         {"R&D", "Sales & Marketing", "Legal", "IT <core>", "Ops | Field", "HR", "Finance", "Support"},
         "Quarter",
         {"Q1", "Q2", "Q3", "Q4"},
         {"Budget", "Headcount", "Overrun"},
         "$"},
        {"Age group",
         {"18-29", "30-49", "50-64", "65+", "Under 18", "All ages"},
         "Party",
         {"Rep/Lean Rep", "Dem/Lean Dem", "Independent"},
         {"Percent agreeing", "Trust index"},
         "%"},
    };
    return all;
}

} // namespace detail

/// Random chart-ready table fitting `type`. Values carry at most two
/// decimals so their display text is exact.
inline ChartReadyTable random_chart_table(std::uint64_t seed, ChartType type) {
    Rng rng(mix_seed(seed, 0x7AB1E));
    const auto &theme = rng.pick(detail::themes());
    const bool grouped = is_grouped(type);

    std::size_t k = 1, n_x = 0;
    if (grouped) {
        k = static_cast<std::size_t>(rng.uniform_int(2, static_cast<int>(std::min<std::size_t>(4, theme.groups.size()))));
        n_x = static_cast<std::size_t>(rng.uniform_int(2, static_cast<int>(kMaxChartRows / k)));
    } else {
        n_x = static_cast<std::size_t>(rng.uniform_int(2, static_cast<int>(kMaxChartRows)));
    }
    std::vector<std::string> xs = theme.x_values;
    rng.shuffle(xs.begin(), xs.end());
    xs.resize(std::min(n_x, xs.size()));
    if (theme.x_name == "Year" || theme.x_name == "Month")
        std::sort(xs.begin(), xs.end(), [&](const std::string &a, const std::string &b) {
            auto pos = [&](const std::string &v) {
                return std::find(theme.x_values.begin(), theme.x_values.end(), v) - theme.x_values.begin();
            };
            return pos(a) < pos(b);
        });
    std::vector<std::string> groups = theme.groups;
    rng.shuffle(groups.begin(), groups.end());
    groups.resize(k);

    static constexpr std::array<double, 6> scales = {1, 10, 50, 100, 1000, 25000};
    const double scale = scales[rng.index(scales.size())];
    const int decimals = rng.uniform_int(0, 2);
    const bool negatives = type != ChartType::pie && rng.chance(0.15);
    auto draw = [&] {
        double v = rng.uniform(negatives ? -0.6 : 0.02, 1.0) * scale;
        v = round_to(v, decimals);
        if (type == ChartType::pie && v <= 0)
            v = std::pow(10.0, -decimals);
        return v;
    };

    Column xcol{theme.x_name, ColumnKind::categorical, std::nullopt};
    Column ycol{rng.pick(theme.y_names), ColumnKind::numeric, theme.unit};
    std::vector<std::vector<Cell>> rows;
    if (!grouped) {
        for (const auto &x : xs)
            rows.push_back({x, draw()});
        return make_chart_ready(DataTable({xcol, ycol}, std::move(rows)), 0, std::nullopt, 1);
    }
    Column gcol{theme.group_name, ColumnKind::categorical, std::nullopt};
    for (const auto &x : xs)
        for (const auto &g : groups)
            rows.push_back({x, g, draw()});
    return make_chart_ready(DataTable({xcol, gcol, ycol}, std::move(rows)), 0, 1, 2);
}

} // namespace chartforge
