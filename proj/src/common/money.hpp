#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ouro {

// Exact decimal dollars, stored as an integer count of picodollars (1e-12 $).
// Sums are associative and order independent; range is roughly +-9.2 million $.
class Money {
public:
    static constexpr std::int64_t kPicoPerDollar = 1'000'000'000'000;

    constexpr Money() = default;

    static constexpr Money from_pico(std::int64_t pico) { return Money(pico); }
    static Money from_cents(std::int64_t cents) { return Money(cents * 10'000'000'000); }

    // Parses "3", "3.50", "-0.000001", "$0.712". At most 12 fractional digits.
    static Money parse(std::string_view text);

    // Only for display and for the utility function; never accumulate doubles.
    double to_double() const { return static_cast<double>(pico_) / static_cast<double>(kPicoPerDollar); }
    static Money from_double(double dollars);

    constexpr std::int64_t pico() const { return pico_; }

    // Full precision, trailing zeros trimmed but at least two decimals: "0.712", "3.00".
    std::string to_string() const;
    // Rounded half away from zero to `decimals` places.
    std::string to_string(int decimals) const;

    constexpr Money operator+(Money o) const { return Money(pico_ + o.pico_); }
    constexpr Money operator-(Money o) const { return Money(pico_ - o.pico_); }
    constexpr Money& operator+=(Money o) { pico_ += o.pico_; return *this; }
    constexpr Money operator*(std::int64_t n) const { return Money(pico_ * n); }
    constexpr auto operator<=>(const Money&) const = default;

private:
    constexpr explicit Money(std::int64_t pico) : pico_(pico) {}
    std::int64_t pico_ = 0;
};

// Price of a single token. Parsed from "dollars per million tokens" with at most
// six fractional digits, which makes the per-token price an exact picodollar count.
class TokenRate {
public:
    constexpr TokenRate() = default;
    static TokenRate per_million(std::string_view dollars_per_million);
    static constexpr TokenRate from_pico_per_token(std::int64_t p) { TokenRate r; r.pico_ = p; return r; }

    Money cost(std::int64_t tokens) const { return Money::from_pico(pico_ * tokens); }
    constexpr std::int64_t pico_per_token() const { return pico_; }
    std::string per_million_string() const;

    constexpr auto operator<=>(const TokenRate&) const = default;

private:
    std::int64_t pico_ = 0;
};

} // namespace ouro
