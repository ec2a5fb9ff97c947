#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "nlitp/invariant.hpp"
#include "nlitp/rational.hpp"

namespace nlitp {
namespace {

std::string read_data(const std::string& rel) {
  std::ifstream in(std::string(NLITP_DATA_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Rational q(long n, long d = 1) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

using State = std::map<VarId, Rational>;

bool holds_exact(const Conjunct& c, const State& s) {
  for (const Atom& a : c.atoms) {
    const int v = sgn(a.poly.eval(s));
    if (a.rel == Relation::Ge ? v < 0 : a.rel == Relation::Gt ? v <= 0 : v != 0) return false;
  }
  return true;
}

bool holds_exact(const PolyFormula& f, const State& s) {
  for (const Conjunct& c : f.disjuncts)
    if (holds_exact(c, s)) return true;
  return false;
}

PolyFormula single(const Polynomial& p, Relation rel, Side side = Side::A) {
  PolyFormula f;
  f.side = side;
  Conjunct c;
  c.atoms.push_back({p, rel});
  f.disjuncts.push_back(c);
  return f;
}

VarId var(const Loop& l, const std::string& name) { return *l.space.find(name); }

TEST(ParseLoop, AlgorithmFour) {
  const Loop l = parse_loop(read_data("loops/alg4.lp"));
  EXPECT_EQ(l.program_vars.size(), 2u);
  EXPECT_EQ(l.state.size(), 2u);
  ASSERT_TRUE(l.guard.has_value());
  EXPECT_EQ(l.body.size(), 2u);
  const VarId x = var(l, "x"), y = var(l, "y");
  EXPECT_EQ(l.step.at(x), Polynomial::variable(x) + Polynomial::variable(y));
  EXPECT_EQ(l.step.at(y), Polynomial::variable(y) + Polynomial::constant(1));
}

TEST(ParseLoop, CarDropsTemporaries) {
  const Loop l = parse_loop(read_data("loops/car.lp"));
  EXPECT_FALSE(l.guard.has_value());
  ASSERT_EQ(l.state.size(), 1u);
  EXPECT_EQ(l.space.name(l.state[0]), "vc");
}

TEST(ParseLoop, MissingDomainIsAnError) {
  EXPECT_THROW(parse_loop("(loop (vars x) (pre (>= x 0)) (guard (< x 1)) (body (assign x (x + 1))) (post (>= x 1)))"),
               ParseError);
}

TEST(Wp, Substitution) {
  const Loop l = parse_loop(read_data("loops/alg4.lp"));
  const VarId x = var(l, "x"), y = var(l, "y");
  const PolyFormula w = wp(single(Polynomial::variable(x), Relation::Ge), l);
  ASSERT_EQ(w.disjuncts.size(), 1u);
  ASSERT_EQ(w.disjuncts[0].atoms.size(), 1u);
  EXPECT_EQ(w.disjuncts[0].atoms[0].poly, Polynomial::variable(x) + Polynomial::variable(y));
}

TEST(Wp, CarUpperBound) {
  const Loop l = parse_loop(read_data("loops/car.lp"));
  const VarId vc = var(l, "vc");
  const Polynomial v = Polynomial::variable(vc);
  const PolyFormula w = wp(single(v - Polynomial::constant(q(4961, 100)), Relation::Ge), l);
  ASSERT_EQ(w.disjuncts.size(), 1u);
  const Polynomial expected = Polynomial::constant(q(1, 2)) + v - v * v * q(2709, 10000000) - Polynomial::constant(q(4961, 100));
  EXPECT_EQ(w.disjuncts[0].atoms.at(0).poly, expected);
}

const char* kIdle =
    "(loop (vars x) (pre (>= 1 - x^2 0)) (guard (< x 0)) (body) (post (>= 2 - x^2 0)) (compactify-b (box x -3 3)))";

TEST(SpWp, EmptyBody) {
  Loop l = parse_loop(kIdle);
  const VarId x = var(l, "x");
  const PolyFormula p = single(Polynomial::constant(1) - Polynomial::variable(x) * Polynomial::variable(x), Relation::Ge);
  const PolyFormula s = sp(p, l);
  ASSERT_EQ(s.disjuncts.size(), 1u);
  EXPECT_EQ(s.disjuncts[0].atoms, p.disjuncts[0].atoms);
  const PolyFormula w = wp(p, l);
  ASSERT_EQ(w.disjuncts.size(), 1u);
  EXPECT_EQ(w.disjuncts[0].atoms, p.disjuncts[0].atoms);
}

TEST(Sp, AlgorithmFourPrimedForm) {
  Loop l = parse_loop(read_data("loops/alg4.lp"));
  const VarId x = var(l, "x"), y = var(l, "y");
  PolyFormula a0 = to_formula(l.pre, Approx::Over, 0);
  a0 = conjoin(a0, to_formula(*l.guard, Approx::Over, 0));
  std::map<VarId, VarId> primes;
  const PolyFormula a1 = sp(a0, l, &primes);
  ASSERT_EQ(a1.disjuncts.size(), 1u);
  const VarId xp = primes.at(x), yp = primes.at(y);
  EXPECT_EQ(l.space.name(xp).rfind("x'", 0), 0u);
  const Polynomial X = Polynomial::variable(x), Y = Polynomial::variable(y);
  const Polynomial Xp = Polynomial::variable(xp), Yp = Polynomial::variable(yp);
  const auto& atoms = a1.disjuncts[0].atoms;
  auto has = [&](const Polynomial& p, Relation r) {
    return std::find(atoms.begin(), atoms.end(), Atom{p, r}) != atoms.end() ||
           (r == Relation::Eq && std::find(atoms.begin(), atoms.end(), Atom{-p, r}) != atoms.end());
  };
  EXPECT_TRUE(has(X - Xp - Yp, Relation::Eq));
  EXPECT_TRUE(has(Y - Yp - Polynomial::constant(1), Relation::Eq));
  EXPECT_TRUE(has(-Xp, Relation::Ge));
  const Polynomial c = Xp + Polynomial::constant(50);
  EXPECT_TRUE(has(Polynomial::constant(100) - c * c, Relation::Ge));
  EXPECT_TRUE(has(Polynomial::constant(100) - Yp * Yp, Relation::Ge));
  EXPECT_EQ(atoms.size(), 5u);
}

// Random polynomial text over x, y, z, degree <= 2 per term.
std::string random_poly(std::mt19937_64& rng) {
  static const char* names[] = {"x", "y", "z"};
  std::uniform_int_distribution<int> coef(-3, 3), pick(0, 2), terms(1, 3), deg(0, 2);
  std::string out;
  const int n = terms(rng);
  for (int t = 0; t < n; ++t) {
    int c = coef(rng);
    if (c == 0) c = 1;
    std::string term = std::to_string(c);
    for (int d = deg(rng); d > 0; --d) term += std::string("*") + names[pick(rng)];
    out += (t ? " + " : "") + std::string("(") + term + ")";
  }
  return out;
}

TEST(SpWp, DualityOnRandomStates) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> nbody(1, 3), who(0, 2), val(-8, 8);
  static const char* names[] = {"x", "y", "z"};
  for (int trial = 0; trial < 10; ++trial) {
    std::string body;
    std::vector<std::pair<int, std::string>> assigns;
    for (int k = nbody(rng); k > 0; --k) {
      const int v = who(rng);
      const std::string rhs = random_poly(rng);
      assigns.emplace_back(v, rhs);
      body += std::string(" (assign ") + names[v] + " (" + rhs + "))";
    }
    const std::string qtext = random_poly(rng);
    const std::string text = "(loop (vars x y z) (pre (>= 100 - x^2 - y^2 - z^2 0)) (guard (>= " + qtext +
                             " 0)) (body" + body + ") (post (>= " + qtext +
                             " 0)) (compactify-b (box x -9 9) (box y -9 9) (box z -9 9)))";
    Loop l = parse_loop(text);
    const VarId ids[] = {var(l, "x"), var(l, "y"), var(l, "z")};
    const PolyFormula qf = to_formula(*l.guard, Approx::Over, 0);
    const PolyFormula w = wp(qf, l);
    std::map<VarId, VarId> primes;
    const PolyFormula s = sp(qf, l, &primes);
    for (int i = 0; i < 100; ++i) {
      State st;
      for (VarId v : ids) st[v] = q(val(rng), 2);
      State after = st;
      for (const auto& [v, rhs] : assigns) {
        VarSpace scratch = l.space;
        const Polynomial p = parse_polynomial(rhs, scratch, false);
        after[ids[v]] = p.eval(after);
      }
      EXPECT_EQ(holds_exact(w, st), holds_exact(qf, after)) << text;
      if (holds_exact(qf, st)) {
        State joint = after;
        for (VarId v : ids) {
          if (primes.count(v)) joint[primes.at(v)] = st.at(v);
        }
        EXPECT_TRUE(holds_exact(s, joint)) << text;
      }
    }
  }
}

TEST(BoundedBox, Ellipse) {
  Loop l = parse_loop(read_data("loops/car.lp"));
  const VarId vc = var(l, "vc");
  const Polynomial v = Polynomial::variable(vc);
  // 40 vc - vc^2 >= 0 on [0, 40]
  const auto box = bounded_box(v * q(40) - v * v, l.state);
  ASSERT_TRUE(box.has_value());
  EXPECT_LE(box->at(vc).lo, 0);
  EXPECT_GE(box->at(vc).hi, 40);
  EXPECT_FALSE(bounded_box(v * v - Polynomial::constant(1), l.state).has_value());
}

TEST(TightenBox, EmptyAndNarrowed) {
  Loop l = parse_loop(read_data("loops/car.lp"));
  const VarId vc = var(l, "vc");
  const Polynomial v = Polynomial::variable(vc);
  Box start;
  start.set(vc, {q(-100), q(100)});
  Conjunct c;
  c.atoms.push_back({v - Polynomial::constant(3), Relation::Ge});
  c.atoms.push_back({Polynomial::constant(5) - v, Relation::Ge});
  const auto b = tighten_box(c, start);
  ASSERT_TRUE(b.has_value());
  EXPECT_LE(b->at(vc).lo, 3);
  EXPECT_GE(b->at(vc).hi, 5);
  EXPECT_LT(b->at(vc).hi - b->at(vc).lo, 10);
  c.atoms.push_back({Polynomial::constant(-1) - v * v, Relation::Ge});
  EXPECT_FALSE(tighten_box(c, start).has_value());
}

Polynomial parse_in(Loop& l, const std::string& text) { return parse_polynomial(text, l.space, false); }

TEST(HoareCheck, EmptyBodyHolds) {
  Loop l = parse_loop(kIdle);
  const HoareResult r = hoare_check(parse_in(l, "1 - x^2"), l, InvariantOptions{});
  EXPECT_EQ(r.verdict, HoareResult::Verdict::Holds) << r.detail;
}

TEST(HoareCheck, CarInterpolants) {
  Loop l = parse_loop(read_data("loops/car.lp"));
  const InvariantOptions opt;
  const HoareResult good = hoare_check(parse_in(l, "2.2505 + 2.7267*vc - 0.063*vc^2"), l, opt);
  EXPECT_EQ(good.verdict, HoareResult::Verdict::Holds) << good.detail;
  EXPECT_FALSE(good.relative_to_domain);
  const HoareResult bad = hoare_check(parse_in(l, "1.4378 + 3.3947*vc - 0.083*vc^2"), l, opt);
  EXPECT_EQ(bad.verdict, HoareResult::Verdict::Counterexample) << bad.detail;
  ASSERT_TRUE(bad.counterexample.has_value());
}

TEST(Validation, CarInvariant) {
  Loop l = parse_loop(read_data("loops/car.lp"));
  const Validation ok = validate_invariant(parse_in(l, "2.2505 + 2.7267*vc - 0.063*vc^2"), l, 10000, 1);
  EXPECT_TRUE(ok.passed());
  EXPECT_GE(ok.pre_samples, 10000u);
  const Validation bad = validate_invariant(parse_in(l, "1.4378 + 3.3947*vc - 0.083*vc^2"), l, 10000, 1);
  EXPECT_GT(bad.step_violations, 0u);
}

const char* kBroken =
    "(loop (vars x) (pre (>= x*(1 - x) 0)) (guard (< x 0)) (body (assign x (x + 1))) (post (> x 5))"
    " (compactify-b (box x -10 10)))";

TEST(Squeeze, ReachableViolationIsNo) {
  for (int mode = 0; mode < 2; ++mode) {
    Loop l = parse_loop(kBroken);
    const InvariantResult r = mode == 0 ? squeeze_forward(l, InvariantOptions{}) : squeeze_backward(l, InvariantOptions{});
    EXPECT_EQ(r.answer, InvariantResult::Answer::No) << mode;
  }
}

TEST(Squeeze, ZeroCapIsExhausted) {
  Loop l = parse_loop(read_data("loops/car.lp"));
  InvariantOptions opt;
  opt.max_rounds = 0;
  const InvariantResult r = squeeze_forward(l, opt);
  EXPECT_EQ(r.answer, InvariantResult::Answer::Exhausted);
  EXPECT_EQ(r.rounds, 0u);
}

TEST(Squeeze, CarBothModes) {
  Loop l = parse_loop(read_data("loops/car.lp"));
  const InvariantResult f = squeeze_forward(l, InvariantOptions{});
  ASSERT_EQ(f.answer, InvariantResult::Answer::Yes) << f.message;
  ASSERT_TRUE(f.validation && f.validation->passed());
  Loop l2 = parse_loop(read_data("loops/car.lp"));
  const InvariantResult b = squeeze_backward(l2, InvariantOptions{});
  ASSERT_EQ(b.answer, InvariantResult::Answer::Yes) << b.message;
  ASSERT_TRUE(b.validation && b.validation->passed());
  // both exclude everything at or above 49.61 on a scan of the domain
  const VarId vc = var(l, "vc");
  for (int i = 0; i <= 5700; ++i) {
    const Rational v = q(-200 + i, 100);
    const bool in_f = f.invariant->eval({{vc, v}}) > 0;
    const bool in_b = b.invariant->eval({{vc, v}}) > 0;
    if (v >= q(4961, 100)) {
      EXPECT_FALSE(in_f) << to_double(v);
      EXPECT_FALSE(in_b) << to_double(v);
    }
    if (v >= 0 && v <= 40) EXPECT_TRUE(in_f && in_b) << to_double(v);
  }
}

TEST(Squeeze, AlgorithmFourForward) {
  Loop l = parse_loop(read_data("loops/alg4.lp"));
  const InvariantResult r = squeeze_forward(l, InvariantOptions{});
  ASSERT_EQ(r.answer, InvariantResult::Answer::Yes) << r.message;
  EXPECT_LE(r.rounds, 5u);
  ASSERT_TRUE(r.validation && r.validation->passed());
  EXPECT_EQ(r.trail.size(), r.rounds);
}

TEST(Squeeze, AlgorithmFourBackward) {
  Loop l = parse_loop(read_data("loops/alg4.lp"));
  const InvariantResult r = squeeze_backward(l, InvariantOptions{});
  ASSERT_EQ(r.answer, InvariantResult::Answer::Yes) << r.message;
  EXPECT_LE(r.rounds, InvariantOptions{}.max_rounds);
  ASSERT_TRUE(r.validation && r.validation->passed());
}

TEST(Report, InvariantJson) {
  Loop l = parse_loop(read_data("loops/car.lp"));
  const InvariantResult r = squeeze_forward(l, InvariantOptions{});
  const nlohmann::json j = invariant_report(r, l, 4, true);
  EXPECT_EQ(j.at("answer"), "yes");
  EXPECT_EQ(j.at("trail").size(), r.trail.size());
  EXPECT_EQ(j.dump(), invariant_report(r, l, 4, true).dump());
}

}  // namespace
}  // namespace nlitp
