#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "nlitp/formula.hpp"
#include "nlitp/sampling.hpp"

namespace nlitp {
namespace {

std::string read_data(const std::string& rel) {
  std::ifstream in(std::string(NLITP_DATA_DIR) + "/" + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Condition atom(VarSpace& space, std::string_view text) {
  return Condition::make_atom(parse_polynomial(text, space), Relation::Ge);
}

TEST(ParseProblem, ExampleWithLocals) {
  const Problem p = parse_problem(read_data("problems/ex2.nlp"));
  ASSERT_EQ(p.phi.disjuncts.size(), 1u);
  ASSERT_EQ(p.psi.disjuncts.size(), 1u);
  EXPECT_EQ(p.phi.disjuncts[0].atoms.size(), 3u);
  EXPECT_EQ(p.psi.disjuncts[0].atoms.size(), 3u);
  EXPECT_EQ(p.phi.disjuncts[0].variables().size(), 7u);
  EXPECT_EQ(p.psi.disjuncts[0].variables().size(), 7u);
  EXPECT_EQ(p.partition.common.size(), 3u);
  EXPECT_EQ(p.phi.disjuncts[0].atoms[1].poly.degree(), 4);
}

TEST(ParseProblem, RejectsStrict) {
  try {
    parse_problem(read_data("problems/strict.nlp"));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.bare_message(), "strict inequality unsupported");
    EXPECT_EQ(e.pos().line, 3);
  }
}

TEST(ParseProblem, RejectsSharedLocal) {
  const char* text = "(problem (common x) (local-a y) (local-b y) (phi (>= x 0)) (psi (>= y 0)))";
  try {
    parse_problem(text);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("both local-a and local-b"), std::string::npos);
  }
}

TEST(ParseProblem, RejectsCrossSideVariable) {
  const char* text = "(problem (common x) (local-a y) (local-b z) (phi (>= x + z 0)) (psi (>= y 0)))";
  EXPECT_THROW(parse_problem(text), ParseError);
}

TEST(ParseProblem, ReportsPosition) {
  const char* text = "(problem (common x)\n  (phi (>= x ^ 0))\n  (psi (>= x 0)))";
  try {
    parse_problem(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos().line, 2);
  }
}

TEST(Dnf, UltimateShape) {
  const Problem p = parse_problem(read_data("problems/ex5.nlp"));
  ASSERT_EQ(p.phi.disjuncts.size(), 3u);
  EXPECT_EQ(p.phi.disjuncts[0].atoms.size(), 4u);
  EXPECT_EQ(p.phi.disjuncts[1].atoms.size(), 3u);
  EXPECT_EQ(p.phi.disjuncts[2].atoms.size(), 1u);
  VarSpace space = p.space;
  const Polynomial f1 = parse_polynomial("3.8025 - x^2 - y^2", space, false);
  const Polynomial f3 = parse_polynomial("0.9025 - (x-1)^2 - y^2", space, false);
  const Polynomial f6 = parse_polynomial("0.04 - (x+1)^2 - y^2", space, false);
  EXPECT_EQ(p.phi.disjuncts[0].atoms[0].poly, f1);
  EXPECT_EQ(p.phi.disjuncts[1].atoms[0].poly, f3);
  EXPECT_EQ(p.phi.disjuncts[2].atoms[0].poly, f6);
  EXPECT_EQ(p.phi.disjuncts[0].atoms[2].poly, p.phi.disjuncts[1].atoms[1].poly);
}

TEST(Dnf, Distribution) {
  VarSpace s;
  const Condition tree = Condition::all_of({Condition::any_of({atom(s, "x"), atom(s, "y")}),
                                            Condition::any_of({atom(s, "z"), atom(s, "w")})});
  const PolyFormula f = to_dnf(tree, Side::A);
  ASSERT_EQ(f.disjuncts.size(), 4u);
  EXPECT_EQ(f.disjuncts[0].atoms[0].poly.to_string(s), "x");
  EXPECT_EQ(f.disjuncts[0].atoms[1].poly.to_string(s), "z");
  EXPECT_EQ(f.disjuncts[3].atoms[0].poly.to_string(s), "y");
  EXPECT_EQ(f.disjuncts[3].atoms[1].poly.to_string(s), "w");

  const PolyFormula single = to_dnf(atom(s, "x"), Side::A);
  ASSERT_EQ(single.disjuncts.size(), 1u);
  EXPECT_EQ(single.disjuncts[0].atoms.size(), 1u);

  const PolyFormula dup = to_dnf(Condition::all_of({atom(s, "x"), atom(s, "x")}), Side::A);
  EXPECT_EQ(dup.disjuncts[0].atoms.size(), 1u);
}

Condition random_tree(std::mt19937_64& rng, VarSpace& s, int depth) {
  static const char* atoms[] = {"1 - x^2 - y^2", "x - y", "y - x^2", "x*y + 1/4", "1/2 - x", "y + 1/3"};
  if (depth == 0 || rng() % 3 == 0) return atom(s, atoms[rng() % 6]);
  std::vector<Condition> kids;
  const int n = 2 + static_cast<int>(rng() % 2);
  for (int i = 0; i < n; ++i) kids.push_back(random_tree(rng, s, depth - 1));
  return rng() % 2 ? Condition::all_of(std::move(kids)) : Condition::any_of(std::move(kids));
}

TEST(Dnf, PreservesSatisfaction) {
  VarSpace s;
  s.add("x");
  s.add("y");
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Condition tree = random_tree(rng, s, 4);
    const PolyFormula f = to_dnf(tree, Side::A);
    for (int k = 0; k < 50; ++k) {
      const std::vector<double> pt{u(rng), u(rng)};
      EXPECT_EQ(tree.holds(pt), f.holds(pt));
    }
  }
}

TEST(Condition, NegationNormalForm) {
  VarSpace s;
  s.add("x");
  s.add("y");
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int trial = 0; trial < 20; ++trial) {
    const Condition neg = Condition::negation(random_tree(rng, s, 3));
    const Condition n = neg.nnf();
    EXPECT_FALSE(n.has_not());
    for (int k = 0; k < 50; ++k) {
      const std::vector<double> pt{u(rng), u(rng)};
      EXPECT_EQ(neg.holds(pt), n.holds(pt));
    }
  }
  const Condition eq = Condition::negation(Condition::make_atom(parse_polynomial("x", s), Relation::Eq)).nnf();
  EXPECT_EQ(eq.kind, Condition::Kind::Or);
  EXPECT_TRUE(eq.has_strict());
}

TEST(Archimedean, SyntacticBall) {
  Problem p = parse_problem(read_data("problems/ex2.nlp"));
  const auto w = check_archimedean(p.phi, p.partition.common, p.box, p.space);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_FALSE(w[0].synthesized);
  EXPECT_EQ(w[0].radius_sq, 4);
  EXPECT_EQ(p.phi.disjuncts[0].atoms.size(), 3u);
  for (const auto& [v, iv] : w[0].box.ranges()) {
    EXPECT_EQ(iv.lo, -2);
    EXPECT_EQ(iv.hi, 2);
  }
}

TEST(Archimedean, SynthesizedFromBox) {
  VarSpace s;
  const VarId vc = s.add("vc");
  PolyFormula f = to_dnf(Condition::any_of({atom(s, "(vc+2)*(-1-vc)"), atom(s, "(vc-49.61)*(55-vc)")}), Side::B);
  Box box;
  box.set(vc, {Rational(-2), Rational(55)});
  const auto w = check_archimedean(f, {vc}, box, s);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_TRUE(w[0].synthesized);
  EXPECT_EQ(w[0].radius_sq, 3025);
  EXPECT_EQ(f.disjuncts[0].atoms.back().poly, parse_polynomial("3025 - vc^2", s));
}

TEST(Archimedean, UnboundedRejected) {
  VarSpace s;
  const VarId x = s.add("x");
  PolyFormula f = to_dnf(atom(s, "x"), Side::A);
  try {
    check_archimedean(f, {x}, Box{}, s);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("cannot certify Archimedean"), std::string::npos);
  }
}

TEST(Archimedean, SampledPointsInsideBall) {
  for (const char* file : {"problems/ex2.nlp", "problems/ex4.nlp", "problems/ex5.nlp"}) {
    Problem p = parse_problem(read_data(file));
    const auto w = check_archimedean(p.phi, p.partition.common, p.box, p.space);
    std::mt19937_64 rng(31);
    for (std::size_t k = 0; k < w.size(); ++k) {
      const auto pts = sample_points(p.phi.disjuncts[k], w[k].box, p.space.size(), 1000, rng, 2000000);
      EXPECT_GT(pts.size(), 0u) << file;
      for (const auto& pt : pts) {
        double r = 0;
        for (VarId v : w[k].vars) r += pt[v.index] * pt[v.index];
        EXPECT_LE(r, to_double(w[k].radius_sq) * (1 + 1e-12));
      }
    }
  }
}

struct Prepared {
  Problem p;
  std::vector<Box> boxes_a, boxes_b;
};

Prepared prepare(const std::string& file) {
  Prepared out{parse_problem(read_data(file)), {}, {}};
  for (const auto& w : check_archimedean(out.p.phi, out.p.partition.common, out.p.box, out.p.space)) out.boxes_a.push_back(w.box);
  for (const auto& w : check_archimedean(out.p.psi, out.p.partition.common, out.p.box, out.p.space)) out.boxes_b.push_back(w.box);
  return out;
}

TEST(Falsify, OverlapFound) {
  const Prepared q = prepare("problems/overlap.nlp");
  const auto w = sample_falsify(q.p.phi, q.boxes_a, q.p.psi, q.boxes_b, q.p.partition.common, q.p.space.size(), {});
  ASSERT_TRUE(w.has_value());
  const double x = w->point[q.p.partition.common[0].index];
  EXPECT_GE(x, 0.5);
  EXPECT_LE(x, 1.0);
}

TEST(Falsify, DisjointInconclusive) {
  for (const char* file : {"problems/trivial.nlp", "problems/ex2.nlp"}) {
    const Prepared q = prepare(file);
    SamplingOptions opts;
    opts.samples = 100000;
    EXPECT_FALSE(sample_falsify(q.p.phi, q.boxes_a, q.p.psi, q.boxes_b, q.p.partition.common, q.p.space.size(), opts))
        << file;
  }
}

TEST(Falsify, EmptyPhi) {
  const char* text = "(problem (common x) (phi (and (>= 1 - x^2 0) (>= x - 2 0))) (psi (>= 1 - x^2 0)))";
  Problem p = parse_problem(text);
  std::vector<Box> a, b;
  for (const auto& w : check_archimedean(p.phi, p.partition.common, p.box, p.space)) a.push_back(w.box);
  for (const auto& w : check_archimedean(p.psi, p.partition.common, p.box, p.space)) b.push_back(w.box);
  EXPECT_FALSE(sample_falsify(p.phi, a, p.psi, b, p.partition.common, p.space.size(), {}));
}

TEST(Sampling, DefinitionsSolvedForward) {
  VarSpace s;
  const VarId x = s.add("x");
  const VarId xp = s.add("x'");
  Conjunct c;
  c.atoms.push_back({parse_polynomial("x - x'^2 - 1", s), Relation::Eq});
  c.atoms.push_back({parse_polynomial("1 - x'^2", s), Relation::Ge});
  infer_definitions(c);
  ASSERT_EQ(c.definitions.size(), 1u);
  EXPECT_EQ(c.definitions[0].var, x);
  Box box;
  box.set(xp, {Rational(-1), Rational(1)});
  std::mt19937_64 rng(3);
  const auto pts = sample_points(c, box, s.size(), 100, rng, 1000);
  ASSERT_EQ(pts.size(), 100u);
  for (const auto& pt : pts) EXPECT_NEAR(pt[x.index], pt[xp.index] * pt[xp.index] + 1, 1e-12);
}

}  // namespace
}  // namespace nlitp
