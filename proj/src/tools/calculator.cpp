#include "tools/calculator.hpp"

#include "common/error.hpp"

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>

namespace ouro::tools {

namespace mp = boost::multiprecision;
using Int = mp::cpp_int;
using Rational = mp::cpp_rational;
using Decimal = mp::cpp_dec_float_50;

namespace {

constexpr unsigned kMaxResultBits = 1u << 16;

struct Num {
    bool exact = true;
    Rational q;
    Decimal d;

    static Num of(Rational r) { return {true, std::move(r), {}}; }
    static Num approx(Decimal x) { return {false, {}, std::move(x)}; }

    Decimal as_decimal() const {
        if (!exact) return d;
        return Decimal(mp::numerator(q)) / Decimal(mp::denominator(q));
    }
    bool is_zero() const { return exact ? q == 0 : d == 0; }
    bool negative() const { return exact ? q < 0 : d < 0; }
};

[[noreturn]] void domain(const std::string& msg) { fail(ErrorCode::invalid_argument, msg); }

Int floor_div(const Int& n, const Int& d) {
    Int q = n / d;
    if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
    return q;
}

Num floor_num(const Num& x) {
    if (x.exact) return Num::of(Rational(floor_div(mp::numerator(x.q), mp::denominator(x.q))));
    return Num::approx(mp::floor(x.d));
}

Num ceil_num(const Num& x) {
    if (x.exact) return Num::of(Rational(-floor_div(-mp::numerator(x.q), mp::denominator(x.q))));
    return Num::approx(mp::ceil(x.d));
}

Num round_num(const Num& x) {
    // Half away from zero.
    if (x.exact) {
        Rational half(1, 2);
        return x.q < 0 ? Num::of(-floor_num(Num::of(-x.q + half)).q) : floor_num(Num::of(x.q + half));
    }
    return Num::approx(mp::round(x.d));
}

bool exact_sqrt(const Int& v, Int& root) {
    if (v < 0) return false;
    root = mp::sqrt(v);
    return root * root == v;
}

Num sqrt_num(const Num& x) {
    if (x.negative()) domain("sqrt of a negative number");
    if (x.exact) {
        Int rn, rd;
        if (exact_sqrt(mp::numerator(x.q), rn) && exact_sqrt(mp::denominator(x.q), rd)) return Num::of(Rational(rn, rd));
    }
    return Num::approx(mp::sqrt(x.as_decimal()));
}

Num power(const Num& base, const Num& exp) {
    if (exp.exact && mp::denominator(exp.q) == 1) {
        Int e = mp::numerator(exp.q);
        if (base.exact) {
            if (base.q == 0 && e < 0) domain("division by zero");
            Int n = mp::numerator(base.q), d = mp::denominator(base.q);
            Int mag = e < 0 ? Int(-e) : e;
            std::size_t bits = std::max(mp::msb(n == 0 ? Int(1) : Int(mp::abs(n))), mp::msb(d)) + 1;
            if (mag > kMaxResultBits || bits * mag.convert_to<std::size_t>() > kMaxResultBits)
                domain("result too large");
            unsigned k = mag.convert_to<unsigned>();
            Rational r(mp::pow(n, k), mp::pow(d, k));
            return Num::of(e < 0 ? Rational(1) / r : r);
        }
        if (mp::abs(e) > 100000) domain("exponent too large");
        return Num::approx(mp::pow(base.d, e.convert_to<int>()));
    }
    if (base.negative()) domain("fractional power of a negative number");
    if (base.is_zero()) {
        if (exp.negative()) domain("division by zero");
        return Num::of(0);
    }
    return Num::approx(mp::pow(base.as_decimal(), exp.as_decimal()));
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    Num parse() {
        Num v = sum();
        skip();
        if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
        return v;
    }

private:
    [[noreturn]] void error(const std::string& msg) const {
        fail(ErrorCode::parse, msg + " at position " + std::to_string(pos_ + 1));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(std::string_view tok) {
        skip();
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    Num sum() {
        Num v = product();
        for (;;) {
            if (eat("+")) v = add(v, product(), false);
            else if (eat("-")) v = add(v, product(), true);
            else return v;
        }
    }

    Num product() {
        Num v = unary();
        for (;;) {
            if (eat("*")) v = mul(v, unary());
            else if (eat("/")) v = div(v, unary());
            else return v;
        }
    }

    Num unary() {
        if (eat("-")) {
            Num v = unary();
            return v.exact ? Num::of(-v.q) : Num::approx(-v.d);
        }
        if (eat("+")) return unary();
        return power_expr();
    }

    Num power_expr() {
        Num base = primary();
        if (eat("**") || eat("^")) return power(base, unary());
        return base;
    }

    Num primary() {
        skip();
        if (pos_ >= s_.size()) error("unexpected end of expression");
        if (eat("(")) {
            Num v = sum();
            if (!eat(")")) error("expected ')'");
            return v;
        }
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            std::string name(s_.substr(start, pos_ - start));
            if (!eat("(")) error("expected '(' after " + name);
            Num arg = sum();
            if (!eat(")")) error("expected ')'");
            if (name == "floor") return floor_num(arg);
            if (name == "ceil") return ceil_num(arg);
            if (name == "round") return round_num(arg);
            if (name == "abs") return arg.negative() ? (arg.exact ? Num::of(-arg.q) : Num::approx(-arg.d)) : arg;
            if (name == "sqrt") return sqrt_num(arg);
            pos_ = start;
            error("unknown function '" + name + "'");
        }
        error("unexpected '" + std::string(1, c) + "'");
    }

    Num number() {
        std::size_t start = pos_;
        Int digits = 0;
        long long scale = 0;
        bool any = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            digits = digits * 10 + (s_[pos_++] - '0');
            any = true;
        }
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                digits = digits * 10 + (s_[pos_++] - '0');
                --scale;
                any = true;
            }
        }
        if (!any) {
            pos_ = start;
            error("malformed number");
        }
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            bool neg = false;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) neg = s_[pos_++] == '-';
            long long e = 0;
            bool exp_digits = false;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                if (e < 100000) e = e * 10 + (s_[pos_] - '0');
                ++pos_;
                exp_digits = true;
            }
            if (!exp_digits) pos_ = save;
            else scale += neg ? -e : e;
        }
        if (scale > 10000 || scale < -10000) domain("number literal out of range");
        Int ten = mp::pow(Int(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
        return Num::of(scale < 0 ? Rational(digits, ten) : Rational(digits * ten));
    }

    static Num add(const Num& a, const Num& b, bool sub) {
        if (a.exact && b.exact) return Num::of(sub ? Rational(a.q - b.q) : Rational(a.q + b.q));
        return Num::approx(sub ? Decimal(a.as_decimal() - b.as_decimal()) : Decimal(a.as_decimal() + b.as_decimal()));
    }
    static Num mul(const Num& a, const Num& b) {
        if (a.exact && b.exact) return Num::of(a.q * b.q);
        return Num::approx(a.as_decimal() * b.as_decimal());
    }
    static Num div(const Num& a, const Num& b) {
        if (b.is_zero()) domain("division by zero");
        if (a.exact && b.exact) return Num::of(a.q / b.q);
        return Num::approx(a.as_decimal() / b.as_decimal());
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

std::string strip_zeros(std::string s) {
    auto e = s.find_first_of("eE");
    std::string exp = e == std::string::npos ? "" : s.substr(e);
    std::string mant = s.substr(0, e);
    if (mant.find('.') != std::string::npos) {
        while (!mant.empty() && mant.back() == '0') mant.pop_back();
        if (!mant.empty() && mant.back() == '.') mant.pop_back();
    }
    if (mant == "-0") mant = "0";
    return mant + exp;
}

std::string decimal_text(const Decimal& d) { return strip_zeros(d.str(15, std::ios_base::fmtflags(0))); }

std::string format(const Num& v) {
    if (!v.exact) return decimal_text(v.d);
    Int n = mp::numerator(v.q), d = mp::denominator(v.q);
    if (d == 1) return n.str();
    Int rest = d;
    unsigned twos = 0, fives = 0;
    while (rest % 2 == 0) rest /= 2, ++twos;
    while (rest % 5 == 0) rest /= 5, ++fives;
    if (rest == 1) {
        unsigned places = std::max(twos, fives);
        Int scaled = mp::abs(n) * mp::pow(Int(10), places) / d;
        std::string digits = scaled.str();
        if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
        digits.insert(digits.size() - places, ".");
        return (n < 0 ? "-" : "") + digits;
    }
    return decimal_text(v.as_decimal()) + " (= " + n.str() + "/" + d.str() + ")";
}

} // namespace

std::string calculate(std::string_view expression) {
    if (expression.find_first_not_of(" \t\r\n") == std::string_view::npos) fail(ErrorCode::parse, "empty expression");
    return format(Parser(expression).parse());
}

} // namespace ouro::tools
