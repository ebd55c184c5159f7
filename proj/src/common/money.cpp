#include "common/money.hpp"

#include "common/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace ouro {

namespace {

// Parses a decimal into an integer scaled by 10^scale. Rejects extra precision.
std::int64_t parse_scaled(std::string_view text, int scale, const char* what) {
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    bool negative = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    if (!s.empty() && s.front() == '$') s.remove_prefix(1);
    if (s.empty()) fail(ErrorCode::parse, std::string("empty ") + what);

    __int128 value = 0;
    int frac_digits = -1;
    bool any_digit = false;
    for (char c : s) {
        if (c == '.') {
            if (frac_digits >= 0) fail(ErrorCode::parse, std::string("bad ") + what + ": " + std::string(text));
            frac_digits = 0;
            continue;
        }
        if (c < '0' || c > '9') fail(ErrorCode::parse, std::string("bad ") + what + ": " + std::string(text));
        any_digit = true;
        if (frac_digits >= 0) {
            if (frac_digits == scale) {
                if (c != '0') fail(ErrorCode::parse, std::string("too many decimals in ") + what + ": " + std::string(text));
                continue;
            }
            ++frac_digits;
        }
        value = value * 10 + (c - '0');
        if (value > std::numeric_limits<std::int64_t>::max()) fail(ErrorCode::parse, std::string(what) + " out of range");
    }
    if (!any_digit) fail(ErrorCode::parse, std::string("bad ") + what + ": " + std::string(text));
    for (int i = std::max(frac_digits, 0); i < scale; ++i) {
        value *= 10;
        if (value > std::numeric_limits<std::int64_t>::max()) fail(ErrorCode::parse, std::string(what) + " out of range");
    }
    auto v = static_cast<std::int64_t>(value);
    return negative ? -v : v;
}

std::string format_scaled(std::int64_t value, int scale, int min_decimals, int max_decimals) {
    bool negative = value < 0;
    unsigned long long mag = negative ? 0ULL - static_cast<unsigned long long>(value) : static_cast<unsigned long long>(value);
    unsigned long long unit = 1;
    for (int i = 0; i < scale; ++i) unit *= 10;
    if (max_decimals < scale) {
        unsigned long long step = 1;
        for (int i = max_decimals; i < scale; ++i) step *= 10;
        mag = (mag + step / 2) / step * step;
    }
    unsigned long long whole = mag / unit;
    unsigned long long frac = mag % unit;
    std::string digits(static_cast<std::size_t>(scale), '0');
    for (int i = scale - 1; i >= 0; --i) {
        digits[static_cast<std::size_t>(i)] = static_cast<char>('0' + frac % 10);
        frac /= 10;
    }
    int keep = std::min(max_decimals, scale);
    while (keep > min_decimals && digits[static_cast<std::size_t>(keep - 1)] == '0') --keep;
    std::string out = (negative && mag != 0 ? "-" : "") + std::to_string(whole);
    if (keep > 0) out += "." + digits.substr(0, static_cast<std::size_t>(keep));
    return out;
}

} // namespace

Money Money::parse(std::string_view text) {
    return Money(parse_scaled(text, 12, "dollar amount"));
}

Money Money::from_double(double dollars) {
    return Money(static_cast<std::int64_t>(std::llround(dollars * static_cast<double>(kPicoPerDollar))));
}

std::string Money::to_string() const {
    return format_scaled(pico_, 12, 2, 12);
}

std::string Money::to_string(int decimals) const {
    return format_scaled(pico_, 12, decimals, decimals);
}

TokenRate TokenRate::per_million(std::string_view dollars_per_million) {
    // $/M tokens with 6 decimals == picodollars per token.
    TokenRate r;
    r.pico_ = parse_scaled(dollars_per_million, 6, "token price");
    return r;
}

std::string TokenRate::per_million_string() const {
    return format_scaled(pico_, 6, 2, 6);
}

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
    case ErrorCode::cancelled: return "cancelled";
    case ErrorCode::timeout: return "timeout";
    case ErrorCode::transport: return "transport";
    case ErrorCode::script: return "script";
    case ErrorCode::internal: return "internal";
    }
    return "unknown";
}

} // namespace ouro
