#pragma once

#include "chartforge/common.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace chartforge {

inline constexpr double kPi = 3.14159265358979323846;

struct Rect {
    double x = 0, y = 0, w = 0, h = 0;

    double right() const { return x + w; }
    double bottom() const { return y + h; }
    double cx() const { return x + w / 2; }
    double cy() const { return y + h / 2; }

    bool contains(const Rect &o, double eps = 1e-6) const {
        return o.x >= x - eps && o.y >= y - eps && o.right() <= right() + eps && o.bottom() <= bottom() + eps;
    }

    friend bool operator==(const Rect &, const Rect &) = default;
};

/// Geometry is quantised to 1/1000 px before it is written anywhere, so the
/// SVG text and the sidecar describe the same shapes.
inline double q3(double v) { return round_to(v, 3); }

inline std::string fmt_coord(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", q3(v));
    std::string s(buf);
    while (s.back() == '0')
        s.pop_back();
    if (s.back() == '.')
        s.pop_back();
    if (s == "-0")
        s = "0";
    return s;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

/// Point on a circle; angles in degrees, 0 at twelve o'clock, clockwise.
inline std::pair<double, double> polar(double cx, double cy, double r, double deg) {
    const double a = deg * kPi / 180.0;
    return {cx + r * std::sin(a), cy - r * std::cos(a)};
}

/// Bounding box of a circular sector.
inline Rect sector_bbox(double cx, double cy, double r, double start_deg, double sweep_deg) {
    double minx = cx, maxx = cx, miny = cy, maxy = cy;
    auto add = [&](std::pair<double, double> p) {
        minx = std::min(minx, p.first);
        maxx = std::max(maxx, p.first);
        miny = std::min(miny, p.second);
        maxy = std::max(maxy, p.second);
    };
    add(polar(cx, cy, r, start_deg));
    add(polar(cx, cy, r, start_deg + sweep_deg));
    for (int k = -4; k <= 8; ++k) {
        const double a = 90.0 * k;
        if (a > start_deg && a < start_deg + sweep_deg)
            add(polar(cx, cy, r, a));
    }
    return {minx, miny, maxx - minx, maxy - miny};
}

struct Rgb {
    int r = 0, g = 0, b = 0;
};

inline std::optional<Rgb> parse_hex_color(std::string_view s) {
    s = trim(s);
    if (s.size() == 4 && s[0] == '#') {
        std::string full = "#";
        for (int i = 1; i < 4; ++i)
            full += std::string(2, s[static_cast<std::size_t>(i)]);
        return parse_hex_color(full);
    }
    if (s.size() != 7 || s[0] != '#')
        return std::nullopt;
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        return -1;
    };
    int v[6];
    for (int i = 0; i < 6; ++i)
        if ((v[i] = hex(s[static_cast<std::size_t>(i + 1)])) < 0)
            return std::nullopt;
    return Rgb{v[0] * 16 + v[1], v[2] * 16 + v[3], v[4] * 16 + v[5]};
}

inline double rgb_distance(const Rgb &a, const Rgb &b) {
    const double dr = a.r - b.r, dg = a.g - b.g, db = a.b - b.b;
    return std::sqrt(dr * dr + dg * dg + db * db);
}

} // namespace chartforge
