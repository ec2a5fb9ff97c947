#include "nlitp/rational.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace nlitp {

Rational parse_decimal(std::string_view text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  std::size_t fraction_digits = 0;
  bool seen_point = false;
  bool any_digit = false;
  for (; pos < text.size(); ++pos) {
    const char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      any_digit = true;
      if (seen_point) ++fraction_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!any_digit) throw std::invalid_argument("malformed number '" + std::string(text) + "'");
  long exponent = 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    bool exp_negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      exp_negative = text[pos] == '-';
      ++pos;
    }
    bool exp_digit = false;
    for (; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
      exponent = exponent * 10 + (text[pos] - '0');
      exp_digit = true;
      if (exponent > 100000) throw std::invalid_argument("exponent out of range");
    }
    if (!exp_digit) throw std::invalid_argument("malformed exponent in '" + std::string(text) + "'");
    if (exp_negative) exponent = -exponent;
  }
  if (pos != text.size()) throw std::invalid_argument("malformed number '" + std::string(text) + "'");

  mpz_class numerator(digits, 10);
  exponent -= static_cast<long>(fraction_digits);
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(exponent < 0 ? -exponent : exponent));
  Rational result = exponent < 0 ? Rational(numerator, scale) : Rational(numerator * scale);
  result.canonicalize();
  return negative ? Rational(-result) : result;
}

Rational from_double(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite value has no rational form");
  return Rational(value);
}

double to_double(const Rational& value) {
  // mpq_get_d truncates; pick the nearer neighbour.
  const double truncated = value.get_d();
  if (from_double(truncated) == value) return truncated;
  const double away = std::nextafter(truncated, sgn(value) > 0 ? HUGE_VAL : -HUGE_VAL);
  const Rational err_t = abs(value - from_double(truncated));
  const Rational err_a = abs(value - from_double(away));
  return err_a < err_t ? away : truncated;
}

double to_double_down(const Rational& value) {
  double d = value.get_d();
  while (from_double(d) > value) d = std::nextafter(d, -HUGE_VAL);
  return d;
}

double to_double_up(const Rational& value) {
  double d = value.get_d();
  while (from_double(d) < value) d = std::nextafter(d, HUGE_VAL);
  return d;
}

std::string to_fixed(const Rational& value, int digits) {
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
  const Rational scaled = abs(value) * scale;
  // round half away from zero
  mpz_class q = (scaled.get_num() * 2 + scaled.get_den()) / (scaled.get_den() * 2);
  std::string s = q.get_str();
  if (digits > 0) {
    if (s.size() <= static_cast<std::size_t>(digits)) s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
  }
  if (sgn(value) < 0 && q != 0) s.insert(0, "-");
  return s;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

Rational round_to_grid(const Rational& value, const mpz_class& denominator) {
  if (sgn(denominator) <= 0) throw std::invalid_argument("grid denominator must be positive");
  const Rational scaled = value * denominator + Rational(1, 2);
  mpz_class n;
  mpz_fdiv_q(n.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  Rational r(n, denominator);
  r.canonicalize();
  return r;
}

Rational best_approximation(const Rational& value, const mpz_class& max_denominator) {
  if (max_denominator < 1) throw std::invalid_argument("denominator limit must be positive");
  if (value.get_den() <= max_denominator) return value;
  mpz_class p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  mpz_class n = value.get_num(), d = value.get_den();
  while (true) {
    mpz_class a;
    mpz_fdiv_q(a.get_mpz_t(), n.get_mpz_t(), d.get_mpz_t());
    mpz_class q2 = q0 + a * q1;
    if (q2 > max_denominator) break;
    mpz_class p2 = p0 + a * p1;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    mpz_class r = n - a * d;
    n = d;
    d = r;
    if (d == 0) break;
  }
  mpz_class k = (max_denominator - q0) / q1;
  Rational bound1(p0 + k * p1, q0 + k * q1);
  Rational bound2(p1, q1);
  bound1.canonicalize();
  bound2.canonicalize();
  return abs(bound2 - value) <= abs(bound1 - value) ? bound2 : bound1;
}

Rational sqrt_upper(const Rational& value) {
  if (sgn(value) < 0) throw std::invalid_argument("sqrt of negative value");
  if (sgn(value) == 0) return Rational(0);
  // exact square roots of perfect-square ratios stay exact
  mpz_class num_root, den_root;
  if (mpz_perfect_square_p(value.get_num().get_mpz_t()) && mpz_perfect_square_p(value.get_den().get_mpz_t())) {
    mpz_sqrt(num_root.get_mpz_t(), value.get_num().get_mpz_t());
    mpz_sqrt(den_root.get_mpz_t(), value.get_den().get_mpz_t());
    Rational r(num_root, den_root);
    r.canonicalize();
    return r;
  }
  Rational r = from_double(std::sqrt(to_double_up(value)));
  const Rational step = from_double(std::ldexp(std::max(1.0, to_double(r)), -40));
  while (r * r < value) r += step;
  return r;
}

Rational abs(const Rational& value) { return sgn(value) < 0 ? Rational(-value) : value; }

Rational pow(const Rational& base, unsigned exponent) {
  Rational result(1);
  Rational b = base;
  while (exponent > 0) {
    if (exponent & 1U) result *= b;
    exponent >>= 1U;
    if (exponent > 0) b *= b;
  }
  return result;
}

}  // namespace nlitp
