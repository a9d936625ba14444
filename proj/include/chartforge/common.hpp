#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chartforge {

enum class ErrorKind {
    EmptyTable,
    RaggedInput,
    InvalidTable,
    NoNumericColumn,
    NoCategoricalColumn,
    InvalidSpec,
    CanvasTooSmall,
    MalformedSvg,
    NoMarksFound,
    InsufficientTicks,
    NonLinearAxis,
    ScaleRequired,
    UnsupportedChartType,
    MissingSummary,
    AnswerNotInSummary,
    InvalidPrompt,
    BackendTimeout,
    RateLimited,
    BackendError,
    ParseFailure,
    LengthMismatch,
    MissingId,
    InvalidConfig,
    IoError,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::EmptyTable: return "EmptyTable";
    case ErrorKind::RaggedInput: return "RaggedInput";
    case ErrorKind::InvalidTable: return "InvalidTable";
    case ErrorKind::NoNumericColumn: return "NoNumericColumn";
    case ErrorKind::NoCategoricalColumn: return "NoCategoricalColumn";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::CanvasTooSmall: return "CanvasTooSmall";
    case ErrorKind::MalformedSvg: return "MalformedSvg";
    case ErrorKind::NoMarksFound: return "NoMarksFound";
    case ErrorKind::InsufficientTicks: return "InsufficientTicks";
    case ErrorKind::NonLinearAxis: return "NonLinearAxis";
    case ErrorKind::ScaleRequired: return "ScaleRequired";
    case ErrorKind::UnsupportedChartType: return "UnsupportedChartType";
    case ErrorKind::MissingSummary: return "MissingSummary";
    case ErrorKind::AnswerNotInSummary: return "AnswerNotInSummary";
    case ErrorKind::InvalidPrompt: return "InvalidPrompt";
    case ErrorKind::BackendTimeout: return "BackendTimeout";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::BackendError: return "BackendError";
    case ErrorKind::ParseFailure: return "ParseFailure";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::MissingId: return "MissingId";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library. `kind()` is the stable, testable part;
/// the message is for humans.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

// ---------------------------------------------------------------------------
// Number formatting

/// Display format shared by flattened tables, data labels, tick labels and QA
/// answers: at most two decimals, trailing zeros trimmed, no grouping. Rounds
/// half away from zero on the 9-decimal text.
inline std::string format_number(double value) {
    if (!std::isfinite(value))
        return "nan";
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.9f", std::abs(value));
    std::string digits(buf);
    const auto dot = digits.find('.');
    const bool up = digits[dot + 3] >= '5';
    std::string kept = digits.substr(0, dot) + digits.substr(dot + 1, 2);
    if (up) {
        int i = static_cast<int>(kept.size()) - 1;
        while (i >= 0 && kept[static_cast<std::size_t>(i)] == '9')
            kept[static_cast<std::size_t>(i--)] = '0';
        if (i < 0)
            kept.insert(kept.begin(), '1');
        else
            ++kept[static_cast<std::size_t>(i)];
    }
    std::string out = kept.substr(0, kept.size() - 2);
    std::string frac = kept.substr(kept.size() - 2);
    while (!frac.empty() && frac.back() == '0')
        frac.pop_back();
    if (!frac.empty())
        out += "." + frac;
    if (value < 0 && out != "0")
        out.insert(out.begin(), '-');
    return out;
}

/// Shortest text that parses back to the same double.
inline std::string format_exact(double value) {
    if (value == 0.0)
        return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

inline double round_to(double value, int decimals) {
    const double scale = std::pow(10.0, decimals);
    double r = std::round(value * scale) / scale;
    return r == 0.0 ? 0.0 : r;
}

/// Parses a plain decimal literal (optional sign, digits, optional fraction,
/// optional exponent). The whole view must be consumed.
inline std::optional<double> parse_plain_number(std::string_view text) {
    if (text.empty())
        return std::nullopt;
    if (text.front() == '+')
        text.remove_prefix(1);
    if (text.empty() || text.front() == '+')
        return std::nullopt;
    // from_chars accepts "inf"/"nan"; reject anything without a digit
    if (std::none_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; }))
        return std::nullopt;
    double value = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

inline std::string_view trim(std::string_view s) {
    const char *ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char &c : out)
        if (c >= 'A' && c <= 'Z')
            c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// ---------------------------------------------------------------------------
// Deterministic randomness

/// splitmix64 finaliser; used to derive independent streams from
/// (global seed, item id) pairs.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0x9E3779B97F4A7C15ULL) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Thin wrapper over mt19937_64. The distributions are written out by hand so
/// streams are identical across standard library implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n). n must be positive.
    std::size_t index(std::size_t n) {
        const unsigned __int128 wide = static_cast<unsigned __int128>(next()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    /// Uniform in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(index(static_cast<std::size_t>(hi - lo) + 1));
    }

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    bool chance(double p) { return unit() < p; }

    template <class T> const T &pick(const std::vector<T> &items) { return items[index(items.size())]; }

    template <class It> void shuffle(It first, It last) {
        const auto n = static_cast<std::size_t>(last - first);
        for (std::size_t i = n; i > 1; --i)
            std::swap(first[i - 1], first[index(i)]);
    }

  private:
    std::mt19937_64 engine_;
};

} // namespace chartforge
