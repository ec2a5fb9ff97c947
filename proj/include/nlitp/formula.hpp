#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlitp/parse.hpp"
#include "nlitp/poly.hpp"

namespace nlitp {

enum class Side { A, B };
enum class Relation { Ge, Gt, Eq };  // poly REL 0

struct Atom {
  Polynomial poly;
  Relation rel = Relation::Ge;
  bool operator==(const Atom&) const = default;
};

// and/or/not tree over atoms.
struct Condition {
  enum class Kind { Atom, And, Or, Not };
  Kind kind = Kind::And;
  Atom atom;
  std::vector<Condition> children;

  static Condition make_atom(Polynomial p, Relation rel);
  static Condition all_of(std::vector<Condition> parts);  // empty = true
  static Condition any_of(std::vector<Condition> parts);  // empty = false
  static Condition negation(Condition c);

  bool holds(std::span<const double> point, double tol = 0.0) const;
  // Pushes negations to atoms (De Morgan; not(p=0) becomes p>0 or -p>0).
  Condition nnf() const;
  bool has_strict() const;
  bool has_not() const;
  std::vector<VarId> variables() const;
};

struct Conjunct {
  std::vector<Atom> atoms;  // Ge or Eq only
  // Sampling/witness ranges known for some variables.
  Box hint;
  // Variables fixed by an equality "v - q = 0" with q free of v, in
  // evaluation order. Samplers compute them instead of drawing them.
  struct Definition {
    VarId var;
    Polynomial value;
  };
  std::vector<Definition> definitions;

  std::vector<VarId> variables() const;
  // Atoms as "p >= 0" with equalities split in two.
  std::vector<Polynomial> inequalities() const;
  bool holds(std::span<const double> point, double tol = 0.0) const;
};

struct PolyFormula {
  Side side = Side::A;
  std::vector<Conjunct> disjuncts;

  bool holds(std::span<const double> point, double tol = 0.0) const;
};

struct VarPartition {
  std::vector<VarId> common;
  std::vector<VarId> local_a;
  std::vector<VarId> local_b;
};

struct Problem {
  VarSpace space;
  VarPartition partition;
  PolyFormula phi;
  PolyFormula psi;
  Box box;  // user boxes, possibly partial
};

// Reads a relation form "(>= P Q)" etc. or a connective; `text` is the whole
// source the expression came from.
Condition parse_condition(const SExpr& e, std::string_view text, VarSpace& space, bool allow_new_vars);

Problem parse_problem(std::string_view text);

// Flattens an and/or tree of Ge/Eq atoms into DNF, dropping duplicate atoms
// within a conjunct. Throws std::invalid_argument on Not or strict atoms.
PolyFormula to_dnf(const Condition& tree, Side side);

// Detects or synthesizes a ball atom for a disjunct, as used by the bounds.
struct ArchimedeanWitness {
  Rational radius_sq;   // N in N - sum v^2
  bool synthesized = false;
  std::vector<VarId> vars;  // variables the ball covers
  Box box;              // per-variable ranges valid on the disjunct
};

// Variables an identity for this disjunct ranges over.
std::vector<VarId> identity_variables(const Conjunct& c, const std::vector<VarId>& common);

// N when `p` is syntactically N - sum_{v in vars} v^2 with N > 0.
std::optional<Rational> ball_radius_sq(const Polynomial& p, const std::vector<VarId>& vars);

// One witness per disjunct. Synthesized balls are appended to the conjunct.
// Throws std::invalid_argument("cannot certify Archimedean ...") when a
// disjunct has neither a ball atom nor box coverage.
std::vector<ArchimedeanWitness> check_archimedean(PolyFormula& formula, const std::vector<VarId>& common,
                                                  const Box& user_box, const VarSpace& space);

// Fills `definitions` for equalities of shape +-v + q = 0.
void infer_definitions(Conjunct& c);

}  // namespace nlitp
