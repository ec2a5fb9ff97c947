#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nlitp/rational.hpp"

namespace nlitp {

struct VarId {
  std::uint32_t index = 0;
  auto operator<=>(const VarId&) const = default;
};

// Names of the variables of one problem. Declaration order is the variable
// order used by the canonical monomial order.
class VarSpace {
 public:
  VarId add(std::string name);
  VarId intern(std::string_view name);
  std::optional<VarId> find(std::string_view name) const;
  const std::string& name(VarId v) const { return names_.at(v.index); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

class Monomial {
 public:
  struct Power {
    VarId var;
    unsigned exp = 0;
    bool operator==(const Power&) const = default;
  };

  Monomial() = default;
  explicit Monomial(std::vector<Power> powers);
  static Monomial variable(VarId v, unsigned exp = 1);

  unsigned degree() const { return degree_; }
  unsigned exponent(VarId v) const;
  bool is_constant() const { return powers_.empty(); }
  const std::vector<Power>& powers() const { return powers_; }

  Monomial operator*(const Monomial& other) const;
  // Quotient when `divisor` divides this monomial.
  std::optional<Monomial> divide(const Monomial& divisor) const;

  bool operator==(const Monomial& other) const { return powers_ == other.powers_; }

  std::string to_string(const VarSpace& space) const;

 private:
  std::vector<Power> powers_;
  unsigned degree_ = 0;
};

// Graded lexicographic order: total degree first, then exponents compared
// variable by variable in declaration order (higher exponent of an earlier
// variable ranks later). The constant monomial is the smallest.
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const;
};

class Polynomial {
 public:
  using Terms = std::map<Monomial, Rational, GradedLex>;

  Polynomial() = default;
  static Polynomial constant(const Rational& c);
  static Polynomial variable(VarId v);
  static Polynomial term(const Monomial& m, const Rational& c);

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  // Total degree; -1 for the zero polynomial.
  int degree() const;
  Rational coefficient(const Monomial& m) const;
  Rational constant_term() const { return coefficient(Monomial()); }
  std::vector<VarId> variables() const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(const Rational& factor);
  Polynomial operator-() const;
  Polynomial pow(unsigned exponent) const;

  // Adds c * m in place.
  void add_term(const Monomial& m, const Rational& c);

  Rational eval(const std::map<VarId, Rational>& point) const;
  // Point indexed by VarId::index.
  double eval(std::span<const double> point) const;

  Polynomial substitute(const std::map<VarId, Polynomial>& bindings) const;

  std::string to_string(const VarSpace& space) const;
  std::string to_decimal_string(const VarSpace& space, int decimals) const;

  bool operator==(const Polynomial& other) const { return terms_ == other.terms_; }

 private:
  Terms terms_;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(Polynomial a, const Rational& c);
Polynomial operator*(const Rational& c, Polynomial a);

// Double-precision evaluator for sampling hot loops.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);
  double operator()(std::span<const double> point) const;

 private:
  struct Term {
    double coefficient;
    std::vector<std::pair<std::uint32_t, unsigned>> powers;
  };
  std::vector<Term> terms_;
};

struct MonomialBasis {
  std::vector<VarId> vars;
  unsigned degree = 0;
  std::vector<Monomial> entries;

  std::size_t size() const { return entries.size(); }
};

// All monomials over `vars` with total degree <= d, graded-lex ascending.
MonomialBasis monomial_basis(std::vector<VarId> vars, unsigned d);

// C(n + d, d), the size of monomial_basis over n variables.
std::uint64_t basis_size(unsigned n, unsigned d);

struct Interval {
  Rational lo;
  Rational hi;

  Rational magnitude() const;
  bool contains(const Rational& x) const { return lo <= x && x <= hi; }
};

Interval operator+(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
Interval interval_pow(const Interval& a, unsigned exponent);

class Box {
 public:
  Box() = default;
  void set(VarId v, Interval range);
  bool has(VarId v) const { return ranges_.count(v) > 0; }
  const Interval& at(VarId v) const;
  const std::map<VarId, Interval>& ranges() const { return ranges_; }
  bool empty() const { return ranges_.empty(); }

 private:
  std::map<VarId, Interval> ranges_;
};

// Sound enclosure of p over the box, by term-wise interval arithmetic.
Interval interval_bound(const Polynomial& p, const Box& box);

// Upper bound of sum_{|a| <= degree} |v^a| over the box.
Rational abs_monomial_sum_bound(const std::vector<VarId>& vars, unsigned degree, const Box& box);

// Upper bound of sum_{|a| <= d} (v^a)^2 over the box (E_d^T E_d).
Rational basis_square_sum_bound(const std::vector<VarId>& vars, unsigned d, const Box& box);

}  // namespace nlitp
