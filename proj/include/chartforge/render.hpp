#pragma once

#include "chartforge/axis.hpp"
#include "chartforge/geometry.hpp"
#include "chartforge/style.hpp"
#include "chartforge/table.hpp"

#include <json.hpp>

#include <sstream>
#include <string>
#include <vector>

namespace chartforge {

struct ChartSpec {
    ChartType chart_type = ChartType::simple_bar;
    ChartReadyTable table;
    StyleParams style;
    int width = 800;
    int height = 600;
    std::string title; ///< empty: "<y> by <x>"
};

enum class MarkKind { bar, slice, point };

inline std::string_view to_string(MarkKind k) {
    return k == MarkKind::bar ? "bar" : k == MarkKind::slice ? "slice" : "point";
}

struct MarkRecord {
    MarkKind kind = MarkKind::bar;
    std::string series;
    std::string x_label;
    double value = 0;
    Rect bbox;
    std::string color;
    double sweep_deg = 0; ///< slices only
};

struct AxisTick {
    double pixel = 0;
    std::string label;
    double value = 0;
};

struct CategoryTick {
    double pixel = 0;
    std::string label;
};

struct LegendEntry {
    std::string series;
    std::string color;
};

struct RenderedChart {
    ChartType chart_type = ChartType::simple_bar;
    std::string svg;
    int width = 0, height = 0;
    Rect plot_area;
    std::vector<MarkRecord> marks;
    std::vector<AxisTick> axis_ticks; ///< y axis, ascending value
    std::vector<CategoryTick> x_ticks;
    std::vector<LegendEntry> legend;
    std::string palette;
    std::string title, x_title, y_title;
    double axis_min = 0, axis_max = 0;
    bool show_data_labels = false;
};

inline constexpr double kLegendWidth = 150;
inline constexpr double kMinPlotSide = 100;
inline constexpr double kPointRadius = 3.5;

namespace detail {

inline void validate_spec(const ChartSpec &spec) {
    validate(spec.style);
    if (!admissible(spec.chart_type, spec.table))
        throw Error(ErrorKind::InvalidSpec, "chart type " + std::string(to_string(spec.chart_type)) +
                                                " does not fit the table shape");
}

class SvgWriter {
  public:
    void open(std::string_view tag, std::initializer_list<std::pair<std::string_view, std::string>> attrs,
              bool self_close = false) {
        out_ << '<' << tag;
        for (const auto &[k, v] : attrs)
            out_ << ' ' << k << "=\"" << xml_escape(v) << '"';
        out_ << (self_close ? "/>" : ">");
        if (self_close)
            out_ << '\n';
    }
    void leaf(std::string_view tag, std::initializer_list<std::pair<std::string_view, std::string>> attrs) {
        open(tag, attrs, true);
    }
    void text(std::initializer_list<std::pair<std::string_view, std::string>> attrs, std::string_view content) {
        open("text", attrs);
        out_ << xml_escape(content) << "</text>\n";
    }
    void close(std::string_view tag) { out_ << "</" << tag << ">\n"; }
    void raw(std::string_view s) { out_ << s; }
    std::string str() const { return out_.str(); }

  private:
    std::ostringstream out_;
};

inline std::string translate(double x, double y) { return "translate(" + fmt_coord(x) + "," + fmt_coord(y) + ")"; }

} // namespace detail

/// Emits the chart as SVG plus full mark provenance. Output is a pure function
/// of the spec.
inline RenderedChart render(const ChartSpec &spec) {
    using detail::translate;
    detail::validate_spec(spec);
    const auto &style = spec.style;
    const auto &t = spec.table;
    const auto &colors = palette(style.palette).colors;
    const double font = style.font_px;

    RenderedChart out;
    out.chart_type = spec.chart_type;
    out.width = spec.width;
    out.height = spec.height;
    out.palette = style.palette;
    out.show_data_labels = style.show_data_labels;
    out.x_title = t.x_name();
    out.y_title = t.y_name();
    out.title = spec.title.empty() ? t.y_name() + " by " + t.x_name() : spec.title;

    const auto &m = style.margins;
    Rect plot{q3(m.left), q3(m.top), q3(spec.width - m.left - m.right - kLegendWidth),
              q3(spec.height - m.top - m.bottom)};
    if (plot.w < kMinPlotSide || plot.h < kMinPlotSide)
        throw Error(ErrorKind::CanvasTooSmall, "plot area " + fmt_coord(plot.w) + "x" + fmt_coord(plot.h) +
                                                   " is below 100x100 px");
    out.plot_area = plot;

    const auto xs = t.x_labels();
    const auto ss = t.series();
    const bool pie = spec.chart_type == ChartType::pie;

    detail::SvgWriter w;
    w.raw("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    w.open("svg", {{"xmlns", "http://www.w3.org/2000/svg"},
                   {"width", std::to_string(spec.width)},
                   {"height", std::to_string(spec.height)},
                   {"viewBox", "0 0 " + std::to_string(spec.width) + " " + std::to_string(spec.height)},
                   {"font-family", "sans-serif"},
                   {"font-size", std::to_string(style.font_px)}});
    w.raw("\n");
    w.leaf("rect", {{"class", "background"}, {"x", "0"}, {"y", "0"}, {"width", std::to_string(spec.width)},
                    {"height", std::to_string(spec.height)}, {"fill", "#ffffff"}});
    w.text({{"class", "chart-title"}, {"x", fmt_coord(spec.width / 2.0)}, {"y", fmt_coord(font + 8)},
            {"text-anchor", "middle"}, {"font-size", std::to_string(style.font_px + 4)}},
           out.title);

    // legend entries: series for xy charts, categories for pie
    const auto &legend_names = pie ? xs : ss;
    for (std::size_t i = 0; i < legend_names.size(); ++i)
        out.legend.push_back({legend_names[i], colors[i % colors.size()].hex});
    auto series_color = [&](const std::string &s) {
        for (const auto &e : out.legend)
            if (e.series == s)
                return e.color;
        return colors[0].hex;
    };

    w.open("g", {{"class", "plot"}, {"transform", translate(plot.x, plot.y)}});
    w.raw("\n");
    w.leaf("rect", {{"class", "plot-area"}, {"x", "0"}, {"y", "0"}, {"width", fmt_coord(plot.w)},
                    {"height", fmt_coord(plot.h)}, {"fill", "none"}});

    auto local_x = [&](double ax) { return fmt_coord(ax - plot.x); };
    auto local_y = [&](double ay) { return fmt_coord(ay - plot.y); };

    if (pie) {
        double total = 0;
        for (std::size_t r = 0; r < t.row_count(); ++r)
            total += t.y(r);
        const double cx = q3(plot.cx()), cy = q3(plot.cy());
        const double radius = q3(std::min(plot.w, plot.h) / 2 - 10);
        double start = 0;
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            const double v = t.y(r);
            const double sweep = v / total * 360.0;
            const std::string color = series_color(t.x(r));
            auto p0 = polar(cx, cy, radius, start);
            auto p1 = polar(cx, cy, radius, start + sweep);
            std::string d = "M " + local_x(cx) + " " + local_y(cy) + " L " + local_x(p0.first) + " " +
                            local_y(p0.second);
            if (sweep >= 359.999) {
                auto mid = polar(cx, cy, radius, start + 180.0);
                d += " A " + fmt_coord(radius) + " " + fmt_coord(radius) + " 0 0 1 " + local_x(mid.first) + " " +
                     local_y(mid.second);
                d += " A " + fmt_coord(radius) + " " + fmt_coord(radius) + " 0 0 1 " + local_x(p1.first) + " " +
                     local_y(p1.second);
            } else if (sweep > 0) {
                d += " A " + fmt_coord(radius) + " " + fmt_coord(radius) + " 0 " + (sweep > 180.0 ? "1" : "0") +
                     " 1 " + local_x(p1.first) + " " + local_y(p1.second);
            }
            d += " Z";
            w.leaf("path", {{"class", "mark-slice"}, {"data-series", t.y_name()}, {"data-x", t.x(r)}, {"d", d},
                            {"fill", color}, {"stroke", "#ffffff"}});
            Rect bb = sector_bbox(cx, cy, radius, start, sweep);
            out.marks.push_back({MarkKind::slice, t.y_name(), t.x(r), v,
                                 Rect{q3(bb.x), q3(bb.y), q3(bb.w), q3(bb.h)}, color, sweep});
            if (style.show_data_labels) {
                auto lp = polar(cx, cy, radius * 0.65, start + sweep / 2);
                w.text({{"class", "mark-label"}, {"data-series", t.y_name()}, {"data-x", t.x(r)},
                        {"x", local_x(lp.first)}, {"y", local_y(lp.second)}, {"text-anchor", "middle"}},
                       format_number(v));
            }
            start += sweep;
        }
        w.text({{"class", "axis-title"}, {"data-axis", "y"}, {"x", local_x(plot.cx())},
                {"y", fmt_coord(plot.h + 1.5 * font)}, {"text-anchor", "middle"}},
               t.y_name());
    } else {
        double lo = t.y(0), hi = t.y(0);
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            lo = std::min(lo, t.y(r));
            hi = std::max(hi, t.y(r));
        }
        const bool bars = is_bar(spec.chart_type);
        const NiceAxis axis = bars ? nice_axis(std::min(0.0, lo), std::max(0.0, hi)) : nice_axis(lo, hi);
        out.axis_min = axis.min;
        out.axis_max = axis.max;
        auto ypix = [&](double v) { return q3(plot.y + plot.h - (v - axis.min) / (axis.max - axis.min) * plot.h); };
        const double band = plot.w / static_cast<double>(xs.size());
        auto band_center = [&](std::size_t i) { return q3(plot.x + (static_cast<double>(i) + 0.5) * band); };

        // grid and axes
        for (double v : axis.ticks) {
            if (style.grid != GridMode::none)
                w.leaf("line", {{"class", "grid-line"}, {"x1", "0"}, {"x2", fmt_coord(plot.w)},
                                {"y1", local_y(ypix(v))}, {"y2", local_y(ypix(v))}, {"stroke", "#e0e0e0"}});
        }
        if (style.grid == GridMode::both)
            for (std::size_t i = 0; i < xs.size(); ++i)
                w.leaf("line", {{"class", "grid-line"}, {"x1", local_x(band_center(i))},
                                {"x2", local_x(band_center(i))}, {"y1", "0"}, {"y2", fmt_coord(plot.h)},
                                {"stroke", "#e0e0e0"}});
        w.leaf("line", {{"class", "axis-line"}, {"x1", "0"}, {"x2", "0"}, {"y1", "0"}, {"y2", fmt_coord(plot.h)},
                        {"stroke", "#333333"}});
        const double base_line = bars ? ypix(0.0) : q3(plot.bottom());
        w.leaf("line", {{"class", "axis-line"}, {"x1", "0"}, {"x2", fmt_coord(plot.w)}, {"y1", local_y(base_line)},
                        {"y2", local_y(base_line)}, {"stroke", "#333333"}});

        for (double v : axis.ticks) {
            const double py = ypix(v);
            out.axis_ticks.push_back({py, format_number(v), v});
            w.open("g", {{"class", "axis-y-tick"}, {"transform", translate(0, py - plot.y)}});
            w.leaf("line", {{"x1", "-5"}, {"x2", "0"}, {"y1", "0"}, {"y2", "0"}, {"stroke", "#333333"}});
            w.text({{"x", "-8"}, {"y", fmt_coord(font / 3)}, {"text-anchor", "end"}}, format_number(v));
            w.close("g");
        }
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double px = band_center(i);
            out.x_ticks.push_back({px, xs[i]});
            w.open("g", {{"class", "axis-x-tick"}, {"transform", translate(px - plot.x, plot.h)}});
            w.leaf("line", {{"x1", "0"}, {"x2", "0"}, {"y1", "0"}, {"y2", "5"}, {"stroke", "#333333"}});
            w.text({{"x", "0"}, {"y", fmt_coord(font + 6)}, {"text-anchor", "middle"}}, xs[i]);
            w.close("g");
        }
        w.text({{"class", "axis-title"}, {"data-axis", "x"}, {"x", fmt_coord(plot.w / 2)},
                {"y", fmt_coord(plot.h + 2.6 * font)}, {"text-anchor", "middle"}},
               t.x_name());
        w.text({{"class", "axis-title"}, {"data-axis", "y"}, {"x", "0"}, {"y", fmt_coord(-0.8 * font)},
                {"text-anchor", "start"}},
               t.y_name());

        auto label = [&](const std::string &s, const std::string &x, double ax, double ay, double v) {
            if (style.show_data_labels)
                w.text({{"class", "mark-label"}, {"data-series", s}, {"data-x", x}, {"x", local_x(ax)},
                        {"y", local_y(ay)}, {"text-anchor", "middle"}},
                       format_number(v));
        };

        if (bars) {
            const std::size_t k = ss.size();
            const double group_w = band * style.bar_thickness;
            const double slot = group_w / static_cast<double>(k);
            const double bar_w = q3(k == 1 ? group_w : slot * (1.0 - style.bar_gap));
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double group_left = plot.x + static_cast<double>(i) * band + (band - group_w) / 2;
                for (std::size_t j = 0; j < k; ++j) {
                    const auto v = t.value(ss[j], xs[i]);
                    const double bx = q3(group_left + static_cast<double>(j) * slot + (k == 1 ? 0.0 : slot * style.bar_gap / 2));
                    const double tip = ypix(*v);
                    const double top = std::min(tip, base_line);
                    const double h = q3(std::abs(tip - base_line));
                    const std::string color = series_color(ss[j]);
                    w.leaf("rect", {{"class", "mark-bar"}, {"data-series", ss[j]}, {"data-x", xs[i]},
                                    {"x", local_x(bx)}, {"y", local_y(top)}, {"width", fmt_coord(bar_w)},
                                    {"height", fmt_coord(h)}, {"fill", color}});
                    out.marks.push_back({MarkKind::bar, ss[j], xs[i], *v, Rect{bx, top, bar_w, h}, color, 0});
                    const bool up = *v >= 0;
                    label(ss[j], xs[i], q3(bx + bar_w / 2), up ? tip - 4 : tip + font, *v);
                }
            }
        } else {
            const std::string dash = style.line_dash == LineDash::dotted   ? "2,3"
                                     : style.line_dash == LineDash::dashed ? "6,4"
                                                                           : "";
            for (const auto &s : ss) {
                const std::string color = series_color(s);
                std::string d;
                for (std::size_t i = 0; i < xs.size(); ++i)
                    d += std::string(i ? " L " : "M ") + local_x(band_center(i)) + " " +
                         local_y(ypix(*t.value(s, xs[i])));
                if (dash.empty())
                    w.leaf("path", {{"class", "mark-line"}, {"data-series", s}, {"d", d}, {"fill", "none"},
                                    {"stroke", color}, {"stroke-width", "2"}});
                else
                    w.leaf("path", {{"class", "mark-line"}, {"data-series", s}, {"d", d}, {"fill", "none"},
                                    {"stroke", color}, {"stroke-width", "2"}, {"stroke-dasharray", dash}});
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    const double v = *t.value(s, xs[i]);
                    const double px = band_center(i), py = ypix(v);
                    w.leaf("circle", {{"class", "mark-point"}, {"data-series", s}, {"data-x", xs[i]},
                                      {"cx", local_x(px)}, {"cy", local_y(py)}, {"r", fmt_coord(kPointRadius)},
                                      {"fill", color}});
                    out.marks.push_back({MarkKind::point, s, xs[i], v,
                                         Rect{q3(px - kPointRadius), q3(py - kPointRadius), 2 * kPointRadius,
                                              2 * kPointRadius},
                                         color, 0});
                    label(s, xs[i], px, py - 8, v);
                }
            }
        }
    }
    w.close("g");

    // legend
    const double lx = q3(plot.right() + 20), ly = plot.y;
    w.open("g", {{"class", "legend"}, {"transform", translate(lx, ly)}});
    w.raw("\n");
    if (pie)
        w.text({{"class", "axis-title"}, {"data-axis", "x"}, {"x", "0"}, {"y", fmt_coord(-0.8 * font)}}, t.x_name());
    for (std::size_t i = 0; i < out.legend.size(); ++i) {
        const auto &e = out.legend[i];
        w.open("g", {{"class", "legend-item"}, {"data-series", e.series}, {"transform", translate(0, 20.0 * static_cast<double>(i))}});
        if (style.legend_marker == LegendMarker::rect)
            w.leaf("rect", {{"x", "0"}, {"y", "0"}, {"width", "12"}, {"height", "12"}, {"fill", e.color}});
        else
            w.leaf("circle", {{"cx", "6"}, {"cy", "6"}, {"r", "6"}, {"fill", e.color}});
        w.text({{"x", "18"}, {"y", "10"}}, e.series);
        w.close("g");
    }
    w.close("g");
    w.close("svg");
    out.svg = w.str();
    return out;
}

// ---------------------------------------------------------------------------
// Sidecar JSON

inline nlohmann::json rect_json(const Rect &r) { return {r.x, r.y, r.w, r.h}; }
inline Rect rect_from_json(const nlohmann::json &j) {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(), j.at(3).get<double>()};
}

inline nlohmann::json to_json(const RenderedChart &c) {
    nlohmann::json marks = nlohmann::json::array();
    for (const auto &mk : c.marks) {
        nlohmann::json jm = {{"kind", to_string(mk.kind)}, {"series", mk.series}, {"x", mk.x_label},
                             {"value", mk.value},          {"bbox", rect_json(mk.bbox)}, {"color", mk.color}};
        if (mk.kind == MarkKind::slice)
            jm["sweep_deg"] = mk.sweep_deg;
        marks.push_back(std::move(jm));
    }
    nlohmann::json yt = nlohmann::json::array(), xt = nlohmann::json::array(), legend = nlohmann::json::array();
    for (const auto &tk : c.axis_ticks)
        yt.push_back({{"pixel", tk.pixel}, {"label", tk.label}, {"value", tk.value}});
    for (const auto &tk : c.x_ticks)
        xt.push_back({{"pixel", tk.pixel}, {"label", tk.label}});
    for (const auto &e : c.legend)
        legend.push_back({{"series", e.series}, {"color", e.color}});
    return {{"chart_type", to_string(c.chart_type)},
            {"canvas", {c.width, c.height}},
            {"plot_area", rect_json(c.plot_area)},
            {"palette", c.palette},
            {"title", c.title},
            {"x_title", c.x_title},
            {"y_title", c.y_title},
            {"axis", {c.axis_min, c.axis_max}},
            {"show_data_labels", c.show_data_labels},
            {"axis_ticks", yt},
            {"x_ticks", xt},
            {"legend", legend},
            {"marks", marks}};
}

/// Reads a sidecar back. The svg field stays empty; it lives in its own file.
inline RenderedChart rendered_from_json(const nlohmann::json &j) {
    RenderedChart c;
    auto type = parse_chart_type(j.at("chart_type").get<std::string>());
    if (!type)
        throw Error(ErrorKind::InvalidSpec, "unknown chart type in sidecar");
    c.chart_type = *type;
    c.width = j.at("canvas").at(0).get<int>();
    c.height = j.at("canvas").at(1).get<int>();
    c.plot_area = rect_from_json(j.at("plot_area"));
    c.palette = j.value("palette", std::string());
    c.title = j.value("title", std::string());
    c.x_title = j.value("x_title", std::string());
    c.y_title = j.value("y_title", std::string());
    c.axis_min = j.at("axis").at(0).get<double>();
    c.axis_max = j.at("axis").at(1).get<double>();
    c.show_data_labels = j.value("show_data_labels", false);
    for (const auto &t : j.at("axis_ticks"))
        c.axis_ticks.push_back({t.at("pixel").get<double>(), t.at("label").get<std::string>(), t.at("value").get<double>()});
    for (const auto &t : j.at("x_ticks"))
        c.x_ticks.push_back({t.at("pixel").get<double>(), t.at("label").get<std::string>()});
    for (const auto &e : j.at("legend"))
        c.legend.push_back({e.at("series").get<std::string>(), e.at("color").get<std::string>()});
    for (const auto &m : j.at("marks")) {
        MarkRecord mk;
        const auto kind = m.at("kind").get<std::string>();
        mk.kind = kind == "slice" ? MarkKind::slice : kind == "point" ? MarkKind::point : MarkKind::bar;
        mk.series = m.at("series").get<std::string>();
        mk.x_label = m.at("x").get<std::string>();
        mk.value = m.at("value").get<double>();
        mk.bbox = rect_from_json(m.at("bbox"));
        mk.color = m.at("color").get<std::string>();
        mk.sweep_deg = m.value("sweep_deg", 0.0);
        c.marks.push_back(std::move(mk));
    }
    return c;
}

} // namespace chartforge
