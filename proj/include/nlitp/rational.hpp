#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <string_view>

namespace nlitp {

using Rational = mpq_class;

// Parses an integer or decimal literal exactly ("3.8025" -> 38025/10000).
// Accepts an optional sign and an optional exponent ("1e-3", "2.5E+2").
// Throws std::invalid_argument on malformed input.
Rational parse_decimal(std::string_view text);

// Exact value of a finite double.
Rational from_double(double value);

double to_double(const Rational& value);

// Rounds to the nearest double no greater / no smaller than the value.
double to_double_down(const Rational& value);
double to_double_up(const Rational& value);

// Decimal rendering with `digits` digits after the point, round half away
// from zero. Used for human-facing output only.
std::string to_fixed(const Rational& value, int digits);

// Shortest round-trip-safe rendering of a double (17 significant digits).
std::string format_double(double value);

// Best rational approximation with denominator bounded by `max_denominator`
// (continued fractions, closest convergent or semiconvergent).
Rational best_approximation(const Rational& value, const mpz_class& max_denominator);

// Nearest multiple of 1/denominator.
Rational round_to_grid(const Rational& value, const mpz_class& denominator);

// Smallest dyadic rational r >= sqrt(value) found by refining a double
// estimate; value must be non-negative.
Rational sqrt_upper(const Rational& value);

Rational abs(const Rational& value);

// Integer power with a non-negative exponent.
Rational pow(const Rational& base, unsigned exponent);

}  // namespace nlitp
