#pragma once

#include <string>
#include <string_view>

namespace ouro::tools {

// Evaluates an arithmetic expression: + - * / ^ (or **), parentheses, unary signs,
// decimal literals with optional exponent, and floor ceil round abs sqrt.
// Arithmetic is exact over the rationals; sqrt of a non-square and fractional
// powers fall back to 50-digit decimals. Integers print bare ("404"); terminating
// fractions print as exact decimals; other rationals print 15 significant digits
// followed by the exact fraction, e.g. "0.333333333333333 (= 1/3)".
// Throws Error(parse) for syntax errors and Error(invalid_argument) for domain
// errors such as division by zero.
std::string calculate(std::string_view expression);

} // namespace ouro::tools
