#pragma once

#include "chartforge/common.hpp"
#include "chartforge/table.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace chartforge {

enum class ChartType { simple_bar, grouped_bar, pie, line_single, line_multi };

inline constexpr std::array<ChartType, 5> kAllChartTypes = {ChartType::simple_bar, ChartType::grouped_bar,
                                                            ChartType::pie, ChartType::line_single,
                                                            ChartType::line_multi};

inline std::string_view to_string(ChartType t) {
    switch (t) {
    case ChartType::simple_bar: return "simple_bar";
    case ChartType::grouped_bar: return "grouped_bar";
    case ChartType::pie: return "pie";
    case ChartType::line_single: return "line_single";
    case ChartType::line_multi: return "line_multi";
    }
    return "simple_bar";
}

inline std::optional<ChartType> parse_chart_type(std::string_view s) {
    for (auto t : kAllChartTypes)
        if (to_string(t) == s)
            return t;
    return std::nullopt;
}

inline bool is_bar(ChartType t) { return t == ChartType::simple_bar || t == ChartType::grouped_bar; }
inline bool is_line(ChartType t) { return t == ChartType::line_single || t == ChartType::line_multi; }
inline bool is_grouped(ChartType t) { return t == ChartType::grouped_bar || t == ChartType::line_multi; }

// ---------------------------------------------------------------------------
// Palettes

struct NamedColor {
    std::string hex;
    std::string name;
};

struct Palette {
    std::string id;
    std::vector<NamedColor> colors;
};

/// Categorical schemes after ColorBrewer and Tableau. Color names are unique
/// within a palette so questions can refer to a series by its color.
inline const std::vector<Palette> &palettes() {
    static const std::vector<Palette> all = {
        {"tableau10",
         {{"#4e79a7", "blue"}, {"#f28e2b", "orange"}, {"#e15759", "red"}, {"#76b7b2", "teal"},
          {"#59a14f", "green"}, {"#edc948", "yellow"}, {"#b07aa1", "purple"}, {"#ff9da7", "pink"},
          {"#9c755f", "brown"}, {"#bab0ac", "gray"}}},
        {"category10",
         {{"#1f77b4", "blue"}, {"#ff7f0e", "orange"}, {"#2ca02c", "green"}, {"#d62728", "red"},
          {"#9467bd", "purple"}, {"#8c564b", "brown"}, {"#e377c2", "pink"}, {"#7f7f7f", "gray"},
          {"#bcbd22", "olive"}, {"#17becf", "cyan"}}},
        {"set1",
         {{"#e41a1c", "red"}, {"#377eb8", "blue"}, {"#4daf4a", "green"}, {"#984ea3", "purple"},
          {"#ff7f00", "orange"}, {"#ffff33", "yellow"}, {"#a65628", "brown"}, {"#f781bf", "pink"},
          {"#999999", "gray"}}},
        {"set2",
         {{"#66c2a5", "teal"}, {"#fc8d62", "salmon"}, {"#8da0cb", "periwinkle"}, {"#e78ac3", "pink"},
          {"#a6d854", "lime"}, {"#ffd92f", "yellow"}, {"#e5c494", "tan"}, {"#b3b3b3", "gray"}}},
        {"dark2",
         {{"#1b9e77", "teal"}, {"#d95f02", "orange"}, {"#7570b3", "purple"}, {"#e7298a", "magenta"},
          {"#66a61e", "green"}, {"#e6ab02", "mustard"}, {"#a6761d", "brown"}, {"#666666", "gray"}}},
        {"paired",
         {{"#1f78b4", "dark blue"}, {"#a6cee3", "light blue"}, {"#33a02c", "dark green"},
          {"#b2df8a", "light green"}, {"#e31a1c", "red"}, {"#fb9a99", "light red"}, {"#ff7f00", "orange"},
          {"#fdbf6f", "light orange"}, {"#6a3d9a", "violet"}, {"#cab2d6", "lavender"}}},
        {"accent",
         {{"#7fc97f", "green"}, {"#beaed4", "lavender"}, {"#fdc086", "peach"}, {"#386cb0", "blue"},
          {"#f0027f", "magenta"}, {"#bf5b17", "brown"}, {"#666666", "gray"}, {"#ffff99", "yellow"}}},
        {"pastel1",
         {{"#fbb4ae", "pink"}, {"#b3cde3", "light blue"}, {"#ccebc5", "mint"}, {"#decbe4", "lilac"},
          {"#fed9a6", "peach"}, {"#ffffcc", "cream"}, {"#e5d8bd", "beige"}, {"#fddaec", "rose"}}},
    };
    return all;
}

inline const Palette &palette(std::string_view id) {
    for (const auto &p : palettes())
        if (p.id == id)
            return p;
    throw Error(ErrorKind::InvalidSpec, "unknown palette '" + std::string(id) + "'");
}

/// Human name of a color within a palette; the hex itself when unknown.
inline std::string color_name(std::string_view palette_id, std::string_view hex) {
    for (const auto &p : palettes())
        if (p.id == palette_id)
            for (const auto &c : p.colors)
                if (c.hex == hex)
                    return c.name;
    return std::string(hex);
}

// ---------------------------------------------------------------------------
// Style

enum class LineDash { solid, dotted, dashed };
enum class LegendMarker { rect, circle };
enum class GridMode { none, horizontal, both };

inline std::string_view to_string(LineDash d) {
    return d == LineDash::solid ? "solid" : d == LineDash::dotted ? "dotted" : "dashed";
}
inline std::string_view to_string(LegendMarker m) { return m == LegendMarker::rect ? "rect" : "circle"; }
inline std::string_view to_string(GridMode g) {
    return g == GridMode::none ? "none" : g == GridMode::horizontal ? "horizontal" : "both";
}

struct Margins {
    double left = 70, top = 60, right = 20, bottom = 60;
    friend bool operator==(const Margins &, const Margins &) = default;
};

struct StyleParams {
    std::string palette = "tableau10";
    double bar_thickness = 0.7; ///< fraction of the band occupied by bars, [0.4, 0.9]
    double bar_gap = 0.1;       ///< gap between bars of a group, fraction of a bar slot, [0.05, 0.4]
    LineDash line_dash = LineDash::solid;
    LegendMarker legend_marker = LegendMarker::rect;
    GridMode grid = GridMode::none;
    bool show_data_labels = true;
    int font_px = 12; ///< [9, 16]
    Margins margins;

    friend bool operator==(const StyleParams &, const StyleParams &) = default;
};

inline void validate(const StyleParams &s) {
    auto bad = [](const std::string &m) { return Error(ErrorKind::InvalidSpec, m); };
    if (s.bar_thickness < 0.4 || s.bar_thickness > 0.9)
        throw bad("bar_thickness outside [0.4, 0.9]");
    if (s.bar_gap < 0.05 || s.bar_gap > 0.4)
        throw bad("bar_gap outside [0.05, 0.4]");
    if (s.font_px < 9 || s.font_px > 16)
        throw bad("font_px outside [9, 16]");
    if (palette(s.palette).colors.size() < 8)
        throw bad("palette has fewer than 8 colors");
    const auto &m = s.margins;
    if (m.left < 0 || m.top < 0 || m.right < 0 || m.bottom < 0)
        throw bad("negative margin");
}

/// Draws every style field from the seed.
inline StyleParams diversify_style(std::uint64_t rng_seed) {
    Rng rng(mix_seed(rng_seed, 0x5757));
    StyleParams s;
    s.palette = palettes()[rng.index(palettes().size())].id;
    s.bar_thickness = round_to(rng.uniform(0.4, 0.9), 2);
    s.bar_gap = round_to(rng.uniform(0.05, 0.4), 2);
    s.line_dash = static_cast<LineDash>(rng.index(3));
    s.legend_marker = static_cast<LegendMarker>(rng.index(2));
    s.grid = static_cast<GridMode>(rng.index(3));
    s.show_data_labels = rng.chance(0.5);
    s.font_px = rng.uniform_int(9, 16);
    s.margins.left = rng.uniform_int(55, 95);
    s.margins.top = rng.uniform_int(45, 80);
    s.margins.right = rng.uniform_int(10, 40);
    s.margins.bottom = rng.uniform_int(45, 80);
    return s;
}

inline nlohmann::json to_json(const StyleParams &s) {
    return {{"palette", s.palette},
            {"bar_thickness", s.bar_thickness},
            {"bar_gap", s.bar_gap},
            {"line_dash", to_string(s.line_dash)},
            {"legend_marker", to_string(s.legend_marker)},
            {"grid", to_string(s.grid)},
            {"show_data_labels", s.show_data_labels},
            {"font_px", s.font_px},
            {"margins", {s.margins.left, s.margins.top, s.margins.right, s.margins.bottom}}};
}

inline StyleParams style_from_json(const nlohmann::json &j) {
    StyleParams s;
    s.palette = j.value("palette", s.palette);
    s.bar_thickness = j.value("bar_thickness", s.bar_thickness);
    s.bar_gap = j.value("bar_gap", s.bar_gap);
    const auto dash = j.value("line_dash", std::string("solid"));
    s.line_dash = dash == "dotted" ? LineDash::dotted : dash == "dashed" ? LineDash::dashed : LineDash::solid;
    s.legend_marker = j.value("legend_marker", std::string("rect")) == "circle" ? LegendMarker::circle : LegendMarker::rect;
    const auto grid = j.value("grid", std::string("none"));
    s.grid = grid == "horizontal" ? GridMode::horizontal : grid == "both" ? GridMode::both : GridMode::none;
    s.show_data_labels = j.value("show_data_labels", s.show_data_labels);
    s.font_px = j.value("font_px", s.font_px);
    if (j.contains("margins") && j["margins"].is_array() && j["margins"].size() == 4)
        s.margins = {j["margins"][0].get<double>(), j["margins"][1].get<double>(), j["margins"][2].get<double>(),
                     j["margins"][3].get<double>()};
    return s;
}

// ---------------------------------------------------------------------------
// Chart type choice

/// Relative weight per chart type, indexed like kAllChartTypes.
using ChartTypeWeights = std::array<double, 5>;

/// Corpus mix of bar 58.51 / line 32.94 / pie 9.39, with bars and lines split
/// evenly between their single- and multi-series forms.
inline constexpr ChartTypeWeights kDefaultChartTypeWeights = {29.255, 29.255, 9.39, 16.47, 16.47};

inline std::size_t type_index(ChartType t) { return static_cast<std::size_t>(t); }

inline bool pie_admissible(const ChartReadyTable &t) {
    if (t.grouped() || t.row_count() < 2 || t.row_count() > 8)
        return false;
    double total = 0;
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        if (t.y(r) < 0)
            return false;
        total += t.y(r);
    }
    return total > 0;
}

inline bool admissible(ChartType type, const ChartReadyTable &t) {
    switch (type) {
    case ChartType::grouped_bar:
    case ChartType::line_multi: return t.grouped();
    case ChartType::simple_bar:
    case ChartType::line_single: return !t.grouped();
    case ChartType::pie: return pie_admissible(t);
    }
    return false;
}

inline std::vector<ChartType> admissible_types(const ChartReadyTable &t) {
    std::vector<ChartType> out;
    for (auto type : kAllChartTypes)
        if (admissible(type, t))
            out.push_back(type);
    return out;
}

/// Weighted draw among the admissible types. When every admissible type has
/// zero weight the draw is uniform among them.
inline ChartType choose_chart_type(const ChartReadyTable &table, std::uint64_t rng_seed,
                                   const ChartTypeWeights &weights = kDefaultChartTypeWeights) {
    const auto types = admissible_types(table);
    double total = 0;
    for (auto t : types)
        total += std::max(0.0, weights[type_index(t)]);
    Rng rng(mix_seed(rng_seed, 0xC4A7));
    if (total <= 0)
        return types[rng.index(types.size())];
    double u = rng.unit() * total;
    for (auto t : types) {
        const double w = std::max(0.0, weights[type_index(t)]);
        if (u < w)
            return t;
        u -= w;
    }
    for (auto it = types.rbegin(); it != types.rend(); ++it)
        if (weights[type_index(*it)] > 0)
            return *it;
    return types.back();
}

} // namespace chartforge
