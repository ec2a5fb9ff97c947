#include <gtest/gtest.h>

#include <random>

#include "nlitp/parse.hpp"
#include "nlitp/poly.hpp"

namespace nlitp {
namespace {

class PolyTest : public ::testing::Test {
 protected:
  Polynomial P(std::string_view text) { return parse_polynomial(text, space); }
  VarId V(std::string_view name) { return space.intern(name); }
  VarSpace space;
};

TEST_F(PolyTest, DifferenceOfSquares) {
  EXPECT_EQ(P("(x+1)*(x-1)"), P("x^2 - 1"));
  EXPECT_EQ(P("x^2 + 3*y") + Polynomial(), P("x^2 + 3*y"));
  EXPECT_EQ(P("2*x^2*y") * P("3*y"), P("6*x^2*y^2"));
  EXPECT_EQ((P("x+1") * P("x-1")).degree(), 2);
  EXPECT_EQ(Polynomial().degree(), -1);
}

TEST_F(PolyTest, DecimalsAreExact) {
  EXPECT_EQ(P("3.8025").constant_term(), Rational(1521, 400));
  EXPECT_EQ(P("1/100").constant_term(), Rational(1, 100));
  EXPECT_EQ(P("1e-3").constant_term(), Rational(1, 1000));
  EXPECT_THROW(P("x/y"), ParseError);
  EXPECT_THROW(P("x^y"), ParseError);
  EXPECT_THROW(P("x +"), ParseError);
}

TEST_F(PolyTest, EvalAtOrigin) {
  const Polynomial f1 = P("4 - x^2 - y^2 - z^2 - a1^2 - b1^2 - c1^2 - d1^2");
  std::map<VarId, Rational> origin;
  for (VarId v : f1.variables()) origin[v] = 0;
  EXPECT_EQ(f1.eval(origin), 4);

  const Polynomial h = P("-416.7204 - 914.7840*x + 472.6184*y + 199.8985*x^2 + 190.2252*y^2 + 690.4208*z^2 - 187.1592*x*y");
  std::map<VarId, Rational> zero3{{V("x"), 0}, {V("y"), 0}, {V("z"), 0}};
  EXPECT_EQ(h.eval(zero3), parse_decimal("-416.7204"));
  EXPECT_EQ(h.eval(zero3), h.constant_term());

  std::map<VarId, Rational> partial{{V("x"), 0}};
  EXPECT_THROW(h.eval(partial), std::invalid_argument);
}

TEST_F(PolyTest, Substitution) {
  EXPECT_EQ(P("x^2").substitute({{V("x"), P("x+y")}}), P("x^2 + 2*x*y + y^2"));
  EXPECT_EQ(P("y").substitute({{V("y"), P("y+1")}}), P("y + 1"));
  // composed car-loop body
  const Polynomial step = P("vc + ac").substitute({{V("ac"), P("0.0005*(1000 - 0.5418*vc^2)")}});
  EXPECT_EQ(step, P("0.5 + vc - 0.0002709*vc^2"));
}

TEST_F(PolyTest, SimultaneousSubstitution) {
  // x and y are replaced at once, not sequentially
  const Polynomial p = P("x*y").substitute({{V("x"), P("y")}, {V("y"), P("x")}});
  EXPECT_EQ(p, P("x*y"));
}

TEST_F(PolyTest, GradedLexBasis) {
  const VarId x = V("x"), y = V("y");
  const MonomialBasis b = monomial_basis({x, y}, 2);
  ASSERT_EQ(b.size(), 6u);
  std::vector<std::string> names;
  for (const Monomial& m : b.entries) names.push_back(m.to_string(space));
  EXPECT_EQ(names, (std::vector<std::string>{"1", "y", "x", "y^2", "x*y", "x^2"}));

  EXPECT_EQ(monomial_basis({x}, 0).size(), 1u);
  std::vector<VarId> seven;
  for (const char* n : {"x", "y", "z", "a1", "b1", "c1", "d1"}) seven.push_back(V(n));
  EXPECT_EQ(monomial_basis(seven, 2).size(), 36u);
}

TEST_F(PolyTest, PrintsAscending) {
  EXPECT_EQ(P("x^2 - 3*x*y + 1/2").to_string(space), "1/2 - 3*x*y + x^2");
  EXPECT_EQ(P("-x").to_string(space), "-x");
  EXPECT_EQ(Polynomial().to_string(space), "0");
  EXPECT_EQ(P("1.23456*x - 2").to_decimal_string(space, 4), "-2.0000 + 1.2346*x");
  EXPECT_EQ(P(P("x^2 - 3*x*y + 1/2").to_string(space)), P("x^2 - 3*x*y + 1/2"));
}

TEST_F(PolyTest, JuxtapositionEndsExpression) {
  const std::string text = "4 - x^2 0";
  InfixReader r(text, 0, text.size(), space, true);
  EXPECT_EQ(r.read_expression(), P("4 - x^2"));
  EXPECT_EQ(r.read_expression(), Polynomial());
  EXPECT_TRUE(r.at_end());

  const std::string neg = "x -1";
  InfixReader r2(neg, 0, neg.size(), space, true);
  EXPECT_EQ(r2.read_expression(), P("x"));
  EXPECT_EQ(r2.read_expression(), P("-1"));

  EXPECT_EQ(P("(x -1)"), P("x - 1"));
}

TEST_F(PolyTest, IntervalBounds) {
  Box box;
  for (const char* n : {"x", "y", "a1"}) box.set(V(n), {Rational(-2), Rational(2)});
  const Interval f2 = interval_bound(P("-y^4 + 2*x^4 - a1^4 - 1/100"), box);
  EXPECT_EQ(f2.hi, Rational(3199, 100));
  EXPECT_LE(f2.hi, 32);
  const Interval c = interval_bound(P("4"), box);
  EXPECT_EQ(c.lo, 4);
  EXPECT_EQ(c.hi, 4);
  // 1 + |x| + |y|
  EXPECT_EQ(abs_monomial_sum_bound({V("x"), V("y")}, 1, box), 5);
  // degree 2 adds x^2, xy, y^2
  EXPECT_EQ(abs_monomial_sum_bound({V("x"), V("y")}, 2, box), 17);
  EXPECT_EQ(basis_square_sum_bound({V("x"), V("y")}, 1, box), 9);
}

TEST_F(PolyTest, IntervalPowers) {
  const Interval a{Rational(-1), Rational(3)};
  const Interval sq = interval_pow(a, 2);
  EXPECT_EQ(sq.lo, 0);
  EXPECT_EQ(sq.hi, 9);
  const Interval cube = interval_pow(a, 3);
  EXPECT_EQ(cube.lo, -1);
  EXPECT_EQ(cube.hi, 27);
}

// ---------------------------------------------------------------------------
// Properties

Rational q(long n, long d) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

Polynomial random_poly(std::mt19937_64& rng, const std::vector<VarId>& vars, unsigned max_deg, int terms) {
  std::uniform_int_distribution<int> coef(-9, 9);
  std::uniform_int_distribution<unsigned> expo(0, max_deg);
  std::uniform_int_distribution<std::size_t> pick(0, vars.size() - 1);
  Polynomial p;
  for (int t = 0; t < terms; ++t) {
    std::vector<Monomial::Power> powers;
    unsigned budget = expo(rng);
    while (budget > 0) {
      const unsigned e = 1 + static_cast<unsigned>(rng() % budget);
      powers.push_back({vars[pick(rng)], e});
      budget -= e;
    }
    p.add_term(Monomial(powers), q(coef(rng), 1 + static_cast<long>(rng() % 4)));
  }
  return p;
}

TEST_F(PolyTest, RingAxioms) {
  std::mt19937_64 rng(7);
  const std::vector<VarId> vars{V("x"), V("y"), V("z")};
  for (int trial = 0; trial < 100; ++trial) {
    const Polynomial a = random_poly(rng, vars, 3, 5);
    const Polynomial b = random_poly(rng, vars, 3, 5);
    const Polynomial c = random_poly(rng, vars, 3, 5);
    EXPECT_EQ((a + b) + c, a + (b + c));
    EXPECT_EQ(a * (b + c), a * b + a * c);
    EXPECT_EQ(a * b, b * a);
    EXPECT_TRUE((a - a).is_zero());
    if (!a.is_zero() && !b.is_zero()) EXPECT_EQ((a * b).degree(), a.degree() + b.degree());
    const Polynomial ab = a * b;
    for (const auto& [m, coef] : ab.terms()) EXPECT_NE(sgn(coef), 0);
  }
}

TEST_F(PolyTest, EvalSubstituteCoherence) {
  std::mt19937_64 rng(11);
  const std::vector<VarId> vars{V("x"), V("y"), V("z")};
  std::uniform_int_distribution<int> val(-5, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const Polynomial p = random_poly(rng, vars, 3, 4);
    std::map<VarId, Polynomial> sigma;
    for (VarId v : vars) sigma[v] = random_poly(rng, vars, 2, 3);
    std::map<VarId, Rational> pt;
    for (VarId v : vars) pt[v] = q(val(rng), 1 + static_cast<long>(rng() % 3));
    std::map<VarId, Rational> image;
    for (VarId v : vars) image[v] = sigma[v].eval(pt);
    EXPECT_EQ(p.substitute(sigma).eval(pt), p.eval(image));
  }
}

TEST_F(PolyTest, IntervalBoundIsSound) {
  std::mt19937_64 rng(13);
  const std::vector<VarId> vars{V("x"), V("y"), V("z")};
  Box box;
  box.set(vars[0], {Rational(-2), Rational(1)});
  box.set(vars[1], {Rational(0), Rational(3)});
  box.set(vars[2], {Rational(-1, 2), Rational(1, 2)});
  for (int trial = 0; trial < 10; ++trial) {
    const Polynomial p = random_poly(rng, vars, 4, 6);
    const Interval iv = interval_bound(p, box);
    for (int s = 0; s < 100; ++s) {
      std::map<VarId, Rational> pt;
      for (VarId v : vars) {
        const Interval& r = box.at(v);
        pt[v] = r.lo + (r.hi - r.lo) * q(static_cast<long>(rng() % 1001), 1000);
      }
      const Rational value = p.eval(pt);
      EXPECT_LE(iv.lo, value);
      EXPECT_GE(iv.hi, value);
    }
  }
}

TEST_F(PolyTest, BasisSizeMatchesBinomial) {
  std::mt19937_64 rng(17);
  std::vector<VarId> pool;
  for (int i = 0; i < 8; ++i) pool.push_back(V("v" + std::to_string(i)));
  for (int trial = 0; trial < 50; ++trial) {
    const unsigned n = 1 + static_cast<unsigned>(rng() % 8);
    const unsigned d = static_cast<unsigned>(rng() % 7);
    const std::vector<VarId> vars(pool.begin(), pool.begin() + n);
    const MonomialBasis b = monomial_basis(vars, d);
    EXPECT_EQ(b.size(), basis_size(n, d));
    EXPECT_TRUE(std::is_sorted(b.entries.begin(), b.entries.end(), GradedLex{}));
    EXPECT_TRUE(b.entries.front().is_constant());
  }
}

TEST_F(PolyTest, CompiledMatchesExact) {
  std::mt19937_64 rng(19);
  const std::vector<VarId> vars{V("x"), V("y")};
  const Polynomial p = random_poly(rng, vars, 5, 8);
  const CompiledPolynomial cp(p);
  const std::vector<double> pt{0.75, -1.25};
  const Rational exact = p.eval(std::map<VarId, Rational>{{vars[0], Rational(3, 4)}, {vars[1], Rational(-5, 4)}});
  EXPECT_NEAR(cp(pt), to_double(exact), 1e-9 * (1 + std::abs(to_double(exact))));
  EXPECT_DOUBLE_EQ(cp(pt), p.eval(std::span<const double>(pt)));
}

}  // namespace
}  // namespace nlitp
