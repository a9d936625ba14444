#pragma once

#include "chartforge/geometry.hpp"
#include "chartforge/render.hpp"
#include "chartforge/table.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace chartforge {

// ---------------------------------------------------------------------------
// Selector profile

/// Where to find each chart element in an SVG. Selectors are comma-separated
/// alternatives of the form `tag.class1.class2[attr=value]`, every part
/// optional but at least one present.
struct SelectorProfile {
    std::string mark_bar = ".mark-bar";
    std::string mark_slice = ".mark-slice";
    std::string mark_point = ".mark-point";
    std::string mark_line = ".mark-line";
    std::string x_tick = ".axis-x-tick";
    std::string y_tick = ".axis-y-tick";
    std::string axis_title = ".axis-title";
    std::string legend_item = ".legend-item";
    std::string chart_title = ".chart-title";
    std::string plot_area = ".plot-area";
    std::string mark_label = ".mark-label";
    std::string series_attr = "data-series";
    std::string x_attr = "data-x";
    std::string axis_attr = "data-axis";
    std::string value_attr = "data-value";

    std::vector<std::pair<std::string, const std::string *>> fields() const {
        return {{"mark_bar", &mark_bar},       {"mark_slice", &mark_slice},   {"mark_point", &mark_point},
                {"mark_line", &mark_line},     {"x_tick", &x_tick},           {"y_tick", &y_tick},
                {"axis_title", &axis_title},   {"legend_item", &legend_item}, {"chart_title", &chart_title},
                {"plot_area", &plot_area},     {"mark_label", &mark_label},   {"series_attr", &series_attr},
                {"x_attr", &x_attr},           {"axis_attr", &axis_attr},     {"value_attr", &value_attr}};
    }

    void validate() const {
        for (const auto &[name, value] : fields())
            if (trim(*value).empty())
                throw Error(ErrorKind::InvalidConfig, "selector '" + name + "' is empty");
    }
};

inline nlohmann::json to_json(const SelectorProfile &p) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto &[name, value] : p.fields())
        j[name] = *value;
    return j;
}

/// Missing keys keep the built-in defaults.
inline SelectorProfile profile_from_json(const nlohmann::json &j) {
    SelectorProfile p;
    for (const auto &[name, value] : p.fields())
        if (j.contains(name)) {
            if (!j[name].is_string())
                throw Error(ErrorKind::InvalidConfig, "selector '" + name + "' must be a string");
            *const_cast<std::string *>(value) = j[name].get<std::string>();
        }
    p.validate();
    return p;
}

namespace detail {

struct SimpleSelector {
    std::string tag;
    std::vector<std::string> classes;
    std::string attr;
    std::optional<std::string> attr_value;
};

inline std::vector<SimpleSelector> parse_selector(std::string_view text) {
    std::vector<SimpleSelector> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos)
            comma = text.size();
        std::string_view part = trim(text.substr(start, comma - start));
        start = comma + 1;
        if (part.empty())
            continue;
        SimpleSelector sel;
        std::size_t i = 0;
        while (i < part.size() && part[i] != '.' && part[i] != '[')
            sel.tag += part[i++];
        while (i < part.size()) {
            if (part[i] == '.') {
                std::string cls;
                ++i;
                while (i < part.size() && part[i] != '.' && part[i] != '[')
                    cls += part[i++];
                if (cls.empty())
                    throw Error(ErrorKind::InvalidConfig, "empty class in selector '" + std::string(part) + "'");
                sel.classes.push_back(cls);
            } else {
                const auto close = part.find(']', i);
                if (close == std::string_view::npos)
                    throw Error(ErrorKind::InvalidConfig, "unterminated '[' in selector '" + std::string(part) + "'");
                std::string_view inner = part.substr(i + 1, close - i - 1);
                const auto eq = inner.find('=');
                sel.attr = std::string(trim(inner.substr(0, eq)));
                if (eq != std::string_view::npos) {
                    std::string_view v = trim(inner.substr(eq + 1));
                    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
                        v = v.substr(1, v.size() - 2);
                    sel.attr_value = std::string(v);
                }
                i = close + 1;
            }
        }
        out.push_back(std::move(sel));
    }
    if (out.empty())
        throw Error(ErrorKind::InvalidConfig, "empty selector");
    return out;
}

using Ptree = boost::property_tree::ptree;

inline std::optional<std::string> attr(const Ptree &node, const std::string &name) {
    if (auto attrs = node.get_child_optional("<xmlattr>"))
        if (auto v = attrs->get_optional<std::string>(name))
            return *v;
    return std::nullopt;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty())
                out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

inline bool matches(const std::vector<SimpleSelector> &sels, const std::string &tag, const Ptree &node) {
    const auto cls = split_ws(attr(node, "class").value_or(""));
    for (const auto &s : sels) {
        if (!s.tag.empty() && s.tag != tag)
            continue;
        bool ok = std::all_of(s.classes.begin(), s.classes.end(),
                              [&](const std::string &c) { return std::find(cls.begin(), cls.end(), c) != cls.end(); });
        if (ok && !s.attr.empty()) {
            auto v = attr(node, s.attr);
            ok = v && (!s.attr_value || *v == *s.attr_value);
        }
        if (ok)
            return true;
    }
    return false;
}

/// All text below a node, in document order.
inline std::string text_content(const Ptree &node) {
    std::string out = node.data();
    for (const auto &[k, child] : node)
        if (k != "<xmlattr>" && k != "<xmlcomment>")
            out += text_content(child);
    return out;
}

inline double number_attr(const Ptree &node, const std::string &name, double fallback = 0.0) {
    auto v = attr(node, name);
    if (!v)
        return fallback;
    std::string_view s = trim(*v);
    if (ends_with(s, "px"))
        s.remove_suffix(2);
    auto parsed = parse_plain_number(s);
    if (!parsed)
        throw Error(ErrorKind::MalformedSvg, "attribute " + name + "=\"" + *v + "\" is not a number");
    return *parsed;
}

struct Offset {
    double dx = 0, dy = 0;
    bool tainted = false;
};

/// Composes a transform attribute onto an offset. Only translate is
/// understood; anything else marks the subtree as unreliable.
inline Offset compose(Offset base, const std::optional<std::string> &transform) {
    if (!transform)
        return base;
    std::string_view s = trim(*transform);
    while (!s.empty()) {
        if (!starts_with(s, "translate")) {
            base.tainted = true;
            return base;
        }
        const auto open = s.find('('), close = s.find(')');
        if (open == std::string_view::npos || close == std::string_view::npos || close < open)
            throw Error(ErrorKind::MalformedSvg, "bad transform '" + *transform + "'");
        std::string args(s.substr(open + 1, close - open - 1));
        std::replace(args.begin(), args.end(), ',', ' ');
        const auto parts = split_ws(args);
        if (parts.empty() || parts.size() > 2)
            throw Error(ErrorKind::MalformedSvg, "bad translate '" + *transform + "'");
        auto tx = parse_plain_number(parts[0]);
        auto ty = parts.size() == 2 ? parse_plain_number(parts[1]) : std::optional<double>(0.0);
        if (!tx || !ty)
            throw Error(ErrorKind::MalformedSvg, "bad translate '" + *transform + "'");
        base.dx += *tx;
        base.dy += *ty;
        s = trim(s.substr(close + 1));
        if (!s.empty() && s.front() == ',')
            s = trim(s.substr(1));
    }
    return base;
}

/// Angle of (x, y) around (cx, cy) in the renderer's convention: degrees,
/// 0 at twelve o'clock, clockwise, in [0, 360).
inline double angle_of(double cx, double cy, double x, double y) {
    double deg = std::atan2(x - cx, -(y - cy)) * 180.0 / kPi;
    if (deg < 0)
        deg += 360.0;
    return deg;
}

struct PathGeometry {
    Rect bbox;
    bool is_sector = false;
    double start_deg = 0, sweep_deg = 0;
};

/// Tokenises and walks a path's d attribute (M L H V A Z, absolute or
/// relative). A path shaped like `M c L p A ... Z` is read as a pie sector.
inline PathGeometry path_geometry(std::string_view d) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty())
            tokens.push_back(cur);
        cur.clear();
    };
    for (std::size_t i = 0; i < d.size(); ++i) {
        const char c = d[i];
        if (std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E') {
            flush();
            tokens.emplace_back(1, c);
        } else if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (c == '-' && !cur.empty() && cur.back() != 'e' && cur.back() != 'E') {
            flush();
            cur += c;
        } else {
            cur += c;
        }
    }
    flush();

    std::vector<std::pair<double, double>> pts;
    std::string commands;
    double x = 0, y = 0, sx = 0, sy = 0;
    char cmd = 0;
    double radius = 0, arc_sweep = 0;
    std::size_t i = 0;
    auto num = [&]() {
        if (i >= tokens.size())
            throw Error(ErrorKind::MalformedSvg, "truncated path data");
        auto v = parse_plain_number(tokens[i++]);
        if (!v)
            throw Error(ErrorKind::MalformedSvg, "bad number in path data");
        return *v;
    };
    while (i < tokens.size()) {
        if (std::isalpha(static_cast<unsigned char>(tokens[i][0]))) {
            cmd = tokens[i++][0];
            commands += static_cast<char>(std::toupper(static_cast<unsigned char>(cmd)));
            if (cmd == 'Z' || cmd == 'z') {
                x = sx;
                y = sy;
                continue;
            }
        } else if (!cmd || cmd == 'Z' || cmd == 'z') {
            throw Error(ErrorKind::MalformedSvg, "path data without command");
        }
        const bool rel = std::islower(static_cast<unsigned char>(cmd));
        switch (std::toupper(static_cast<unsigned char>(cmd))) {
        case 'M':
        case 'L': {
            double nx = num(), ny = num();
            x = rel ? x + nx : nx;
            y = rel ? y + ny : ny;
            if (std::toupper(static_cast<unsigned char>(cmd)) == 'M') {
                sx = x;
                sy = y;
                cmd = rel ? 'l' : 'L';
            }
            break;
        }
        case 'H': x = rel ? x + num() : num(); break;
        case 'V': y = rel ? y + num() : num(); break;
        case 'A': {
            const double rx = num();
            num(); // ry
            num(); // rotation
            const bool large = num() != 0;
            const bool clockwise = num() != 0;
            double nx = num(), ny = num();
            nx = rel ? x + nx : nx;
            ny = rel ? y + ny : ny;
            if (!pts.empty()) {
                const double a0 = angle_of(pts.front().first, pts.front().second, x, y);
                const double a1 = angle_of(pts.front().first, pts.front().second, nx, ny);
                double delta = clockwise ? a1 - a0 : a0 - a1;
                delta = std::fmod(delta + 720.0, 360.0);
                if (large && delta < 180.0 - 1e-6)
                    delta = 360.0 - delta;
                if (delta < 1e-9 && large)
                    delta = 360.0;
                arc_sweep += delta;
            }
            radius = rx;
            x = nx;
            y = ny;
            break;
        }
        default: throw Error(ErrorKind::MalformedSvg, std::string("unsupported path command '") + cmd + "'");
        }
        pts.emplace_back(x, y);
    }
    if (pts.empty())
        throw Error(ErrorKind::MalformedSvg, "empty path");

    PathGeometry g;
    double minx = pts[0].first, maxx = minx, miny = pts[0].second, maxy = miny;
    for (auto [px, py] : pts) {
        minx = std::min(minx, px);
        maxx = std::max(maxx, px);
        miny = std::min(miny, py);
        maxy = std::max(maxy, py);
    }
    g.bbox = {minx, miny, maxx - minx, maxy - miny};
    if (commands.size() >= 2 && commands.substr(0, 2) == "ML" && commands.find('A') != std::string::npos) {
        g.is_sector = true;
        g.sweep_deg = std::min(arc_sweep, 360.0);
        g.start_deg = angle_of(pts[0].first, pts[0].second, pts[1].first, pts[1].second);
        g.bbox = sector_bbox(pts[0].first, pts[0].second, radius, g.start_deg, g.sweep_deg);
    } else if (commands == "MLZ") {
        // zero-sweep sector emitted as "M c L p Z"
        g.is_sector = true;
        g.start_deg = angle_of(pts[0].first, pts[0].second, pts[1].first, pts[1].second);
    }
    return g;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Parsing

struct ParsedMark {
    MarkKind kind = MarkKind::bar;
    std::optional<std::string> series, x_label;
    std::optional<std::string> value_text; ///< from the value attribute
    Rect bbox;
    std::string fill;
    double sweep_deg = 0;
    double start_deg = 0;
};

struct ParsedTick {
    double pixel = 0;
    std::string label;
};

struct ParsedLabel {
    std::optional<std::string> series, x_label;
    double x = 0, y = 0;
    std::string text;
};

struct ParsedChart {
    std::vector<ParsedMark> marks;
    std::size_t line_count = 0;
    std::vector<ParsedTick> x_ticks, y_ticks;
    std::vector<LegendEntry> legend;
    std::vector<ParsedLabel> labels;
    std::string title, x_title, y_title;
    std::optional<Rect> plot_area;
};

namespace detail {

struct CompiledProfile {
    std::vector<SimpleSelector> bar, slice, point, line, x_tick, y_tick, axis_title, legend, title, plot, label;
    const SelectorProfile *p;

    explicit CompiledProfile(const SelectorProfile &prof)
        : bar(parse_selector(prof.mark_bar)), slice(parse_selector(prof.mark_slice)),
          point(parse_selector(prof.mark_point)), line(parse_selector(prof.mark_line)),
          x_tick(parse_selector(prof.x_tick)), y_tick(parse_selector(prof.y_tick)),
          axis_title(parse_selector(prof.axis_title)), legend(parse_selector(prof.legend_item)),
          title(parse_selector(prof.chart_title)), plot(parse_selector(prof.plot_area)),
          label(parse_selector(prof.mark_label)), p(&prof) {}
};

inline std::string first_fill(const Ptree &node) {
    if (auto f = attr(node, "fill"))
        return *f;
    for (const auto &[k, child] : node)
        if (k != "<xmlattr>" && k != "<xmlcomment>" && k != "text") {
            auto f = first_fill(child);
            if (!f.empty())
                return f;
        }
    return {};
}

/// Origin of a tick element in absolute pixels.
inline std::pair<double, double> tick_origin(const std::string &tag, const Ptree &node, const Offset &off) {
    if (tag == "text")
        return {off.dx + number_attr(node, "x"), off.dy + number_attr(node, "y")};
    if (tag == "line")
        return {off.dx + number_attr(node, "x1"), off.dy + number_attr(node, "y1")};
    return {off.dx, off.dy};
}

inline std::optional<Rect> shape_bbox(const std::string &tag, const Ptree &node, const Offset &off, PathGeometry *path) {
    if (tag == "rect") {
        const double w = number_attr(node, "width"), h = number_attr(node, "height");
        if (w < 0 || h < 0)
            throw Error(ErrorKind::MalformedSvg, "negative rect size");
        return Rect{off.dx + number_attr(node, "x"), off.dy + number_attr(node, "y"), w, h};
    }
    if (tag == "circle") {
        const double r = number_attr(node, "r");
        return Rect{off.dx + number_attr(node, "cx") - r, off.dy + number_attr(node, "cy") - r, 2 * r, 2 * r};
    }
    if (tag == "ellipse") {
        const double rx = number_attr(node, "rx"), ry = number_attr(node, "ry");
        return Rect{off.dx + number_attr(node, "cx") - rx, off.dy + number_attr(node, "cy") - ry, 2 * rx, 2 * ry};
    }
    if (tag == "line") {
        const double x1 = number_attr(node, "x1"), x2 = number_attr(node, "x2");
        const double y1 = number_attr(node, "y1"), y2 = number_attr(node, "y2");
        return Rect{off.dx + std::min(x1, x2), off.dy + std::min(y1, y2), std::abs(x2 - x1), std::abs(y2 - y1)};
    }
    if (tag == "path") {
        auto d = attr(node, "d");
        if (!d)
            throw Error(ErrorKind::MalformedSvg, "path without d");
        PathGeometry g = path_geometry(*d);
        if (path)
            *path = g;
        return Rect{off.dx + g.bbox.x, off.dy + g.bbox.y, g.bbox.w, g.bbox.h};
    }
    if (tag == "polyline" || tag == "polygon") {
        auto pts = attr(node, "points");
        if (!pts)
            throw Error(ErrorKind::MalformedSvg, tag + " without points");
        std::string s = *pts;
        std::replace(s.begin(), s.end(), ',', ' ');
        const auto nums = split_ws(s);
        if (nums.size() < 2 || nums.size() % 2)
            throw Error(ErrorKind::MalformedSvg, "odd point list");
        double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
        for (std::size_t i = 0; i < nums.size(); i += 2) {
            auto px = parse_plain_number(nums[i]), py = parse_plain_number(nums[i + 1]);
            if (!px || !py)
                throw Error(ErrorKind::MalformedSvg, "bad point list");
            minx = std::min(minx, *px);
            maxx = std::max(maxx, *px);
            miny = std::min(miny, *py);
            maxy = std::max(maxy, *py);
        }
        return Rect{off.dx + minx, off.dy + miny, maxx - minx, maxy - miny};
    }
    if (tag == "text")
        return Rect{off.dx + number_attr(node, "x"), off.dy + number_attr(node, "y"), 0, 0};
    return std::nullopt;
}

inline void walk(const std::string &tag, const Ptree &node, Offset off, const CompiledProfile &cp, ParsedChart &out,
                 std::vector<std::string> &untitled_axes) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>")
        return;
    off = compose(off, attr(node, "transform"));
    const auto &p = *cp.p;

    auto require_clean = [&](const char *what) {
        if (off.tainted)
            throw Error(ErrorKind::MalformedSvg, std::string(what) + " under a non-translate transform");
    };

    std::optional<MarkKind> kind;
    if (matches(cp.bar, tag, node))
        kind = MarkKind::bar;
    else if (matches(cp.slice, tag, node))
        kind = MarkKind::slice;
    else if (matches(cp.point, tag, node))
        kind = MarkKind::point;

    if (kind) {
        require_clean("mark");
        PathGeometry g;
        auto bbox = shape_bbox(tag, node, off, &g);
        if (!bbox)
            throw Error(ErrorKind::MalformedSvg, "mark element <" + tag + "> has no geometry");
        ParsedMark m;
        m.kind = *kind;
        m.series = attr(node, p.series_attr);
        m.x_label = attr(node, p.x_attr);
        m.value_text = attr(node, p.value_attr);
        m.bbox = *bbox;
        m.fill = first_fill(node);
        if (*kind == MarkKind::slice) {
            if (tag != "path" || !g.is_sector)
                throw Error(ErrorKind::MalformedSvg, "pie slice is not a sector path");
            m.sweep_deg = g.sweep_deg;
            m.start_deg = g.start_deg;
        }
        out.marks.push_back(std::move(m));
        return;
    }
    if (matches(cp.line, tag, node)) {
        ++out.line_count;
        return;
    }
    if (matches(cp.x_tick, tag, node) || matches(cp.y_tick, tag, node)) {
        require_clean("axis tick");
        const bool is_x = matches(cp.x_tick, tag, node);
        auto [px, py] = tick_origin(tag, node, off);
        (is_x ? out.x_ticks : out.y_ticks).push_back({is_x ? px : py, text_content(node)});
        return;
    }
    if (matches(cp.label, tag, node)) {
        ParsedLabel l;
        l.series = attr(node, p.series_attr);
        l.x_label = attr(node, p.x_attr);
        l.x = off.dx + number_attr(node, "x");
        l.y = off.dy + number_attr(node, "y");
        l.text = text_content(node);
        out.labels.push_back(std::move(l));
        return;
    }
    if (matches(cp.axis_title, tag, node)) {
        const auto axis = attr(node, p.axis_attr);
        const std::string text = text_content(node);
        if (axis && *axis == "x")
            out.x_title = text;
        else if (axis && *axis == "y")
            out.y_title = text;
        else
            untitled_axes.push_back(text);
        return;
    }
    if (matches(cp.title, tag, node)) {
        out.title = text_content(node);
        return;
    }
    if (matches(cp.legend, tag, node)) {
        std::string name = attr(node, p.series_attr).value_or("");
        if (name.empty())
            name = text_content(node);
        out.legend.push_back({name, first_fill(node)});
        return;
    }
    if (matches(cp.plot, tag, node)) {
        if (auto bb = shape_bbox(tag, node, off, nullptr))
            out.plot_area = *bb;
    }
    for (const auto &[k, child] : node)
        walk(k, child, off, cp, out, untitled_axes);
}

} // namespace detail

/// Reads marks, ticks, legend and titles out of an SVG document.
inline ParsedChart parse_chart_svg(const std::string &svg, const SelectorProfile &profile = {}) {
    profile.validate();
    const detail::CompiledProfile cp(profile);
    detail::Ptree tree;
    try {
        std::istringstream in(svg);
        boost::property_tree::read_xml(in, tree);
    } catch (const boost::property_tree::xml_parser_error &e) {
        throw Error(ErrorKind::MalformedSvg, e.message() + " at line " + std::to_string(e.line()));
    }
    ParsedChart out;
    std::vector<std::string> untitled;
    for (const auto &[k, child] : tree)
        detail::walk(k, child, {}, cp, out, untitled);
    // axis titles without an axis attribute: x first, then y
    for (const auto &t : untitled) {
        if (out.x_title.empty())
            out.x_title = t;
        else if (out.y_title.empty())
            out.y_title = t;
    }
    if (out.marks.empty())
        throw Error(ErrorKind::NoMarksFound, "no element matched the mark selectors");
    return out;
}

// ---------------------------------------------------------------------------
// Scale recovery

struct LinearScale {
    double a = 0, b = 0;        ///< value = a * pixel + b
    double max_residual = 0;
    int label_decimals = 0;     ///< most decimals shown on any tick label
    std::optional<std::string> unit;

    double operator()(double pixel) const { return a * pixel + b; }
};

inline constexpr double kMaxAxisResidual = 0.02;

/// Least-squares line through the numeric ticks. Non-numeric labels are
/// skipped; the fit is rejected when any tick is off by more than 2% of the
/// tick value range.
inline LinearScale fit_axis_scale(const std::vector<ParsedTick> &ticks) {
    std::vector<std::pair<double, double>> pts;
    LinearScale s;
    for (const auto &t : ticks) {
        auto parsed = parse_table_number(t.label);
        if (!parsed)
            continue;
        pts.emplace_back(t.pixel, parsed->value);
        if (parsed->unit && !s.unit)
            s.unit = parsed->unit;
        const std::string_view label = trim(t.label);
        const auto dot = label.find('.');
        if (dot != std::string_view::npos) {
            int d = 0;
            for (std::size_t i = dot + 1; i < label.size() && std::isdigit(static_cast<unsigned char>(label[i])); ++i)
                ++d;
            s.label_decimals = std::max(s.label_decimals, d);
        }
    }
    if (pts.size() < 2)
        throw Error(ErrorKind::InsufficientTicks, std::to_string(pts.size()) + " numeric tick(s), need 2");
    // sort so the sums do not depend on document order
    std::sort(pts.begin(), pts.end());
    double mx = 0, my = 0;
    for (auto [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxx = 0, sxy = 0, vmin = pts[0].second, vmax = pts[0].second;
    for (auto [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        vmin = std::min(vmin, y);
        vmax = std::max(vmax, y);
    }
    if (sxx <= 0 || vmax - vmin <= 0)
        throw Error(ErrorKind::NonLinearAxis, "ticks do not span a range");
    s.a = sxy / sxx;
    s.b = my - s.a * mx;
    for (auto [x, y] : pts)
        s.max_residual = std::max(s.max_residual, std::abs(s(x) - y));
    if (s.max_residual > kMaxAxisResidual * (vmax - vmin))
        throw Error(ErrorKind::NonLinearAxis, "max residual " + format_exact(s.max_residual) + " exceeds 2% of " +
                                                  format_exact(vmax - vmin));
    return s;
}

// ---------------------------------------------------------------------------
// Table reconstruction

enum class Confidence { exact, recovered };

inline std::string_view to_string(Confidence c) { return c == Confidence::exact ? "exact" : "recovered"; }

struct ExtractionResult {
    DataTable table;
    std::vector<MarkRecord> marks;
    Confidence confidence = Confidence::exact;
    std::vector<std::string> diagnostics;
};

inline nlohmann::json to_json(const ExtractionResult &r) {
    nlohmann::json j = to_json(r.table);
    j["confidence"] = to_string(r.confidence);
    j["diagnostics"] = r.diagnostics;
    return j;
}

/// Fill colors closer than this (RGB euclidean) to two legend entries are
/// reported as ambiguous.
inline constexpr double kColorAmbiguity = 30.0;

/// Builds the table a reader of the chart would write down. Values come from
/// data labels or value attributes when present, otherwise from the scale.
inline ExtractionResult reconstruct_table(const ParsedChart &pc, const std::optional<LinearScale> &scale) {
    if (pc.marks.empty())
        throw Error(ErrorKind::NoMarksFound, "nothing to reconstruct");
    ExtractionResult res;
    const bool pie = std::any_of(pc.marks.begin(), pc.marks.end(), [](const ParsedMark &m) { return m.kind == MarkKind::slice; });
    const std::string x_name = pc.x_title.empty() ? "label" : pc.x_title;
    const std::string y_name = pc.y_title.empty() ? "value" : pc.y_title;

    // series of every mark
    std::vector<std::string> mark_series(pc.marks.size());
    for (std::size_t i = 0; i < pc.marks.size(); ++i) {
        const auto &m = pc.marks[i];
        if (m.series) {
            mark_series[i] = *m.series;
            continue;
        }
        if (pie || pc.legend.empty()) {
            mark_series[i] = y_name;
            continue;
        }
        auto exact = std::find_if(pc.legend.begin(), pc.legend.end(), [&](const LegendEntry &e) {
            return to_lower_ascii(e.color) == to_lower_ascii(m.fill);
        });
        if (exact != pc.legend.end()) {
            mark_series[i] = exact->series;
            continue;
        }
        auto fill = parse_hex_color(m.fill);
        double best = 1e300, second = 1e300;
        std::string name;
        for (const auto &e : pc.legend) {
            auto c = parse_hex_color(e.color);
            if (!fill || !c)
                continue;
            const double dist = rgb_distance(*fill, *c);
            if (dist < best) {
                second = best;
                best = dist;
                name = e.series;
            } else if (dist < second) {
                second = dist;
            }
        }
        if (name.empty())
            throw Error(ErrorKind::MalformedSvg, "cannot match mark fill '" + m.fill + "' to a legend entry");
        mark_series[i] = name;
        res.confidence = Confidence::recovered;
        if (second - best < kColorAmbiguity)
            res.diagnostics.push_back("ambiguous color " + m.fill + " matched to '" + name + "'");
    }

    // x label of every mark
    std::vector<std::string> mark_x(pc.marks.size());
    for (std::size_t i = 0; i < pc.marks.size(); ++i) {
        const auto &m = pc.marks[i];
        if (m.x_label) {
            mark_x[i] = *m.x_label;
        } else if (pie) {
            if (i >= pc.legend.size())
                throw Error(ErrorKind::MalformedSvg, "unlabeled pie slice without a legend entry");
            mark_x[i] = pc.legend[i].series;
        } else {
            if (pc.x_ticks.empty())
                throw Error(ErrorKind::MalformedSvg, "mark has no x label and the chart has no x ticks");
            const ParsedTick *best = &pc.x_ticks[0];
            for (const auto &t : pc.x_ticks)
                if (std::abs(t.pixel - m.bbox.cx()) < std::abs(best->pixel - m.bbox.cx()))
                    best = &t;
            mark_x[i] = best->label;
        }
    }

    // values
    std::vector<std::optional<double>> values(pc.marks.size());
    std::map<std::pair<std::string, std::string>, std::string> label_text;
    for (const auto &l : pc.labels)
        if (l.series && l.x_label)
            label_text[{*l.series, *l.x_label}] = l.text;
    // labels without attributes go to the nearest mark
    for (const auto &l : pc.labels) {
        if (l.series && l.x_label)
            continue;
        std::size_t best = 0;
        double bd = 1e300;
        for (std::size_t i = 0; i < pc.marks.size(); ++i) {
            const double dx = pc.marks[i].bbox.cx() - l.x, dy = pc.marks[i].bbox.cy() - l.y;
            if (dx * dx + dy * dy < bd) {
                bd = dx * dx + dy * dy;
                best = i;
            }
        }
        label_text.emplace(std::make_pair(mark_series[best], mark_x[best]), l.text);
    }

    bool needs_scale = false, pie_props = false;
    for (std::size_t i = 0; i < pc.marks.size(); ++i) {
        const auto &m = pc.marks[i];
        std::optional<std::string> text;
        if (auto it = label_text.find({mark_series[i], mark_x[i]}); it != label_text.end())
            text = it->second;
        else if (m.value_text)
            text = m.value_text;
        if (text) {
            auto parsed = parse_table_number(*text);
            if (!parsed)
                throw Error(ErrorKind::MalformedSvg, "value '" + *text + "' is not a number");
            values[i] = parsed->value;
        } else if (pie) {
            pie_props = true;
        } else {
            needs_scale = true;
        }
    }
    if (needs_scale && !scale)
        throw Error(ErrorKind::ScaleRequired, "marks carry no values and no axis scale is available");
    if (pie_props) {
        // angles fix only the shares; every slice becomes a proportion
        res.confidence = Confidence::recovered;
        res.diagnostics.push_back("pie without values: emitting proportions");
        for (std::size_t i = 0; i < pc.marks.size(); ++i)
            values[i] = round_to(pc.marks[i].sweep_deg / 360.0, 4);
    }
    if (needs_scale) {
        res.confidence = Confidence::recovered;
        const int decimals = scale->label_decimals + 2;
        for (std::size_t i = 0; i < pc.marks.size(); ++i) {
            if (values[i])
                continue;
            const auto &m = pc.marks[i];
            double v = 0;
            if (m.kind == MarkKind::bar) {
                const double top = (*scale)(m.bbox.y), bottom = (*scale)(m.bbox.bottom());
                v = std::abs(top) >= std::abs(bottom) ? top : bottom;
            } else {
                v = (*scale)(m.bbox.cy());
            }
            values[i] = round_to(v, decimals);
        }
    }

    // row and column order
    std::vector<std::string> series;
    if (!pie)
        for (const auto &e : pc.legend)
            if (std::find(mark_series.begin(), mark_series.end(), e.series) != mark_series.end() &&
                std::find(series.begin(), series.end(), e.series) == series.end())
                series.push_back(e.series);
    for (const auto &s : mark_series)
        if (std::find(series.begin(), series.end(), s) == series.end())
            series.push_back(s);

    std::vector<std::string> xs;
    if (pie) {
        std::vector<std::size_t> order(pc.marks.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return pc.marks[a].start_deg < pc.marks[b].start_deg; });
        for (auto i : order)
            if (std::find(xs.begin(), xs.end(), mark_x[i]) == xs.end())
                xs.push_back(mark_x[i]);
    } else {
        std::map<std::string, double> left;
        for (std::size_t i = 0; i < pc.marks.size(); ++i) {
            auto [it, inserted] = left.emplace(mark_x[i], pc.marks[i].bbox.cx());
            if (!inserted)
                it->second = std::min(it->second, pc.marks[i].bbox.cx());
            if (inserted)
                xs.push_back(mark_x[i]);
        }
        std::stable_sort(xs.begin(), xs.end(), [&](const std::string &a, const std::string &b) { return left[a] < left[b]; });
    }

    std::map<std::pair<std::string, std::string>, double> cell;
    for (std::size_t i = 0; i < pc.marks.size(); ++i) {
        if (!cell.emplace(std::make_pair(mark_series[i], mark_x[i]), *values[i]).second)
            res.diagnostics.push_back("duplicate mark for (" + mark_series[i] + ", " + mark_x[i] + ")");
        const auto &m = pc.marks[i];
        res.marks.push_back({m.kind, mark_series[i], mark_x[i], *values[i], m.bbox, m.fill, m.sweep_deg});
    }

    const auto unit = scale ? scale->unit : std::nullopt;
    std::vector<Column> cols{{x_name, ColumnKind::categorical, std::nullopt}};
    if (series.size() == 1)
        cols.push_back({pie ? y_name : series[0], ColumnKind::numeric, unit});
    else
        for (const auto &s : series)
            cols.push_back({s, ColumnKind::numeric, unit});
    std::vector<std::vector<Cell>> rows;
    for (const auto &x : xs) {
        std::vector<Cell> row{x};
        bool complete = true;
        for (const auto &s : series) {
            auto it = cell.find({s, x});
            if (it == cell.end()) {
                complete = false;
                break;
            }
            row.emplace_back(it->second);
        }
        if (complete)
            rows.push_back(std::move(row));
        else
            res.diagnostics.push_back("row '" + x + "' is missing a series value and was dropped");
    }
    try {
        res.table = DataTable(std::move(cols), std::move(rows));
    } catch (const Error &e) {
        throw Error(ErrorKind::MalformedSvg, std::string("reconstructed table is invalid: ") + e.what());
    }
    return res;
}

/// parse + optional scale fit + reconstruct.
inline ExtractionResult extract_chart(const std::string &svg, const SelectorProfile &profile = {}) {
    const ParsedChart pc = parse_chart_svg(svg, profile);
    std::optional<LinearScale> scale;
    std::optional<Error> fit_error;
    const bool pie = std::any_of(pc.marks.begin(), pc.marks.end(), [](const ParsedMark &m) { return m.kind == MarkKind::slice; });
    if (!pie) {
        try {
            scale = fit_axis_scale(pc.y_ticks);
        } catch (const Error &e) {
            fit_error = e;
        }
    }
    try {
        return reconstruct_table(pc, scale);
    } catch (const Error &e) {
        // a bad axis matters only when values had to come from it
        if (e.kind() == ErrorKind::ScaleRequired && fit_error)
            throw *fit_error;
        throw;
    }
}

} // namespace chartforge
