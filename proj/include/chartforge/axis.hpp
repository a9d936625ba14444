#pragma once

#include "chartforge/common.hpp"

#include <cmath>
#include <vector>

namespace chartforge {

/// A linear value axis whose ticks are multiples of 1, 2 or 5 x 10^k.
struct NiceAxis {
    double min = 0;
    double max = 1;
    double step = 1;
    std::vector<double> ticks;
};

inline constexpr int kMinTicks = 4;
inline constexpr int kMaxTicks = 8;
inline constexpr double kMinTickStep = 0.01; // tick labels carry at most two decimals

/// Smallest 1/2/5 step that covers [lo, hi] with 4 to 8 ticks. Degenerate
/// ranges are widened first.
inline NiceAxis nice_axis(double lo, double hi) {
    if (hi < lo)
        std::swap(lo, hi);
    if (hi - lo < 1e-12) {
        const double pad = std::max(1.0, std::abs(lo) * 0.1);
        if (lo >= 0 && lo - pad < 0 && lo == 0) {
            hi = lo + pad;
        } else {
            lo -= pad;
            hi += pad;
        }
    }
    const int base = static_cast<int>(std::floor(std::log10(hi - lo)));
    struct Candidate {
        long long n0, n1;
        int mult, exp;
    };
    std::optional<Candidate> best, fallback;
    for (int e = base - 3; e <= base + 2 && !best; ++e) {
        for (int m : {1, 2, 5}) {
            const double step = m * std::pow(10.0, e);
            if (step < kMinTickStep - 1e-12)
                continue;
            const long long n0 = static_cast<long long>(std::floor(lo / step + 1e-9));
            const long long n1 = static_cast<long long>(std::ceil(hi / step - 1e-9));
            const long long count = n1 - n0 + 1;
            if (n1 <= n0 || count > kMaxTicks)
                continue;
            if (!fallback)
                fallback = Candidate{n0, n1, m, e};
            if (count >= kMinTicks) {
                best = Candidate{n0, n1, m, e};
                break;
            }
        }
    }
    const Candidate c = best ? *best : *fallback;
    // k * m * 10^e, dividing by a power of ten keeps decimal ticks exact-ish
    auto value = [&](long long k) {
        const double units = static_cast<double>(k * c.mult);
        return c.exp >= 0 ? units * std::pow(10.0, c.exp) : units / std::pow(10.0, -c.exp);
    };
    NiceAxis axis;
    axis.step = c.exp >= 0 ? c.mult * std::pow(10.0, c.exp) : c.mult / std::pow(10.0, -c.exp);
    for (long long k = c.n0; k <= c.n1; ++k) {
        double v = value(k);
        axis.ticks.push_back(v == 0.0 ? 0.0 : v);
    }
    axis.min = axis.ticks.front();
    axis.max = axis.ticks.back();
    return axis;
}

} // namespace chartforge
