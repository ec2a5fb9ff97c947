#include "nlitp/formula.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <stdexcept>

namespace nlitp {

namespace {

// Value and magnitude scale of p at a point.
std::pair<double, double> eval_scaled(const Polynomial& p, std::span<const double> point) {
  double sum = 0.0;
  double scale = 0.0;
  for (const auto& [m, c] : p.terms()) {
    double t = to_double(c);
    for (const auto& pw : m.powers()) {
      for (unsigned e = 0; e < pw.exp; ++e) t *= point[pw.var.index];
    }
    sum += t;
    scale += std::abs(t);
  }
  return {sum, scale};
}

bool atom_holds(const Atom& a, std::span<const double> point, double tol) {
  const auto [v, scale] = eval_scaled(a.poly, point);
  switch (a.rel) {
    case Relation::Ge:
      return v >= -tol;
    case Relation::Gt:
      return v > -tol;
    case Relation::Eq:
      return std::abs(v) <= std::max(tol, 1e-9 * (1.0 + scale));
  }
  return false;
}

void collect_vars(const Polynomial& p, std::vector<VarId>& out) {
  for (VarId v : p.variables()) out.push_back(v);
}

void sort_unique(std::vector<VarId>& vars) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
}

}  // namespace

// ---------------------------------------------------------------------------
// Condition

Condition Condition::make_atom(Polynomial p, Relation rel) {
  Condition c;
  c.kind = Kind::Atom;
  c.atom = Atom{std::move(p), rel};
  return c;
}

Condition Condition::all_of(std::vector<Condition> parts) {
  if (parts.size() == 1) return std::move(parts.front());
  Condition c;
  c.kind = Kind::And;
  c.children = std::move(parts);
  return c;
}

Condition Condition::any_of(std::vector<Condition> parts) {
  if (parts.size() == 1) return std::move(parts.front());
  Condition c;
  c.kind = Kind::Or;
  c.children = std::move(parts);
  return c;
}

Condition Condition::negation(Condition inner) {
  Condition c;
  c.kind = Kind::Not;
  c.children.push_back(std::move(inner));
  return c;
}

bool Condition::holds(std::span<const double> point, double tol) const {
  switch (kind) {
    case Kind::Atom:
      return atom_holds(atom, point, tol);
    case Kind::And:
      return std::all_of(children.begin(), children.end(), [&](const Condition& c) { return c.holds(point, tol); });
    case Kind::Or:
      return std::any_of(children.begin(), children.end(), [&](const Condition& c) { return c.holds(point, tol); });
    case Kind::Not:
      return !children.front().holds(point, tol);
  }
  return false;
}

Condition Condition::nnf() const {
  switch (kind) {
    case Kind::Atom:
      return *this;
    case Kind::And:
    case Kind::Or: {
      Condition out;
      out.kind = kind;
      for (const Condition& c : children) out.children.push_back(c.nnf());
      return out;
    }
    case Kind::Not:
      break;
  }
  const Condition& inner = children.front();
  switch (inner.kind) {
    case Kind::Not:
      return inner.children.front().nnf();
    case Kind::Atom:
      switch (inner.atom.rel) {
        case Relation::Ge:
          return make_atom(-inner.atom.poly, Relation::Gt);
        case Relation::Gt:
          return make_atom(-inner.atom.poly, Relation::Ge);
        case Relation::Eq:
          return any_of({make_atom(inner.atom.poly, Relation::Gt), make_atom(-inner.atom.poly, Relation::Gt)});
      }
      break;
    case Kind::And:
    case Kind::Or: {
      Condition out;
      out.kind = inner.kind == Kind::And ? Kind::Or : Kind::And;
      for (const Condition& c : inner.children) out.children.push_back(negation(c).nnf());
      return out;
    }
  }
  throw std::logic_error("unreachable condition kind");
}

bool Condition::has_strict() const {
  if (kind == Kind::Atom) return atom.rel == Relation::Gt;
  return std::any_of(children.begin(), children.end(), [](const Condition& c) { return c.has_strict(); });
}

bool Condition::has_not() const {
  if (kind == Kind::Not) return true;
  return std::any_of(children.begin(), children.end(), [](const Condition& c) { return c.has_not(); });
}

std::vector<VarId> Condition::variables() const {
  std::vector<VarId> vars;
  if (kind == Kind::Atom) {
    collect_vars(atom.poly, vars);
  } else {
    for (const Condition& c : children) {
      for (VarId v : c.variables()) vars.push_back(v);
    }
  }
  sort_unique(vars);
  return vars;
}

// ---------------------------------------------------------------------------
// Conjunct / PolyFormula

std::vector<VarId> Conjunct::variables() const {
  std::vector<VarId> vars;
  for (const Atom& a : atoms) collect_vars(a.poly, vars);
  sort_unique(vars);
  return vars;
}

std::vector<Polynomial> Conjunct::inequalities() const {
  std::vector<Polynomial> out;
  for (const Atom& a : atoms) {
    if (a.rel == Relation::Gt) throw std::invalid_argument("strict inequality unsupported");
    out.push_back(a.poly);
    if (a.rel == Relation::Eq) out.push_back(-a.poly);
  }
  return out;
}

bool Conjunct::holds(std::span<const double> point, double tol) const {
  return std::all_of(atoms.begin(), atoms.end(), [&](const Atom& a) { return atom_holds(a, point, tol); });
}

bool PolyFormula::holds(std::span<const double> point, double tol) const {
  return std::any_of(disjuncts.begin(), disjuncts.end(), [&](const Conjunct& c) { return c.holds(point, tol); });
}

// ---------------------------------------------------------------------------
// Parsing

Condition parse_condition(const SExpr& e, std::string_view text, VarSpace& space, bool allow_new_vars) {
  if (!e.is_list || e.items.empty()) throw ParseError("expected a condition form", e.pos);
  const std::string_view head = e.head();
  if (head == "and" || head == "or") {
    std::vector<Condition> parts;
    for (std::size_t i = 1; i < e.items.size(); ++i) parts.push_back(parse_condition(e.items[i], text, space, allow_new_vars));
    if (parts.empty()) throw ParseError("empty '" + std::string(head) + "'", e.pos);
    return head == "and" ? Condition::all_of(std::move(parts)) : Condition::any_of(std::move(parts));
  }
  if (head == "not") {
    if (e.items.size() != 2) throw ParseError("'not' takes one condition", e.pos);
    return Condition::negation(parse_condition(e.items[1], text, space, allow_new_vars));
  }
  static const std::set<std::string_view> relations{">=", "<=", "=", ">", "<"};
  if (!relations.count(head)) throw ParseError("unknown condition '" + std::string(head) + "'", e.pos);
  if (e.items.size() < 2) throw ParseError("relation needs two operands", e.pos);

  InfixReader reader(text, e.items[1].begin, e.end - 1, space, allow_new_vars);
  Polynomial lhs = reader.read_expression();
  if (reader.at_end()) throw ParseError("relation needs two operands", e.pos);
  Polynomial rhs = reader.read_expression();
  if (!reader.at_end()) throw ParseError("relation takes exactly two operands", reader.position());

  if (head == ">=") return Condition::make_atom(lhs - rhs, Relation::Ge);
  if (head == "<=") return Condition::make_atom(rhs - lhs, Relation::Ge);
  if (head == "=") return Condition::make_atom(lhs - rhs, Relation::Eq);
  if (head == ">") return Condition::make_atom(lhs - rhs, Relation::Gt);
  return Condition::make_atom(rhs - lhs, Relation::Gt);
}

namespace {

// Finds the first source position of a strict relation or a 'not'.
const SExpr* find_form(const SExpr& e, const std::set<std::string_view>& heads) {
  if (!e.is_list) return nullptr;
  if (heads.count(e.head())) return &e;
  for (const SExpr& c : e.items) {
    if (const SExpr* hit = find_form(c, heads)) return hit;
  }
  return nullptr;
}

Rational parse_number_atom(const SExpr& e) {
  if (e.is_list) throw ParseError("expected a number", e.pos);
  try {
    return parse_decimal(e.atom);
  } catch (const std::invalid_argument&) {
    throw ParseError("malformed number '" + e.atom + "'", e.pos);
  }
}

}  // namespace

Problem parse_problem(std::string_view text) {
  const std::vector<SExpr> forms = read_sexprs(text);
  if (forms.size() != 1 || forms.front().head() != "problem") {
    throw ParseError("expected a single (problem ...) form", forms.empty() ? SourcePos{} : forms.front().pos);
  }
  const SExpr& root = forms.front();
  Problem prob;
  std::map<std::string, std::string> declared_in;

  auto declare = [&](const SExpr& form, std::vector<VarId>& into) {
    const std::string block(form.head());
    for (std::size_t i = 1; i < form.items.size(); ++i) {
      const SExpr& item = form.items[i];
      if (item.is_list) throw ParseError("expected a variable name", item.pos);
      auto [it, inserted] = declared_in.emplace(item.atom, block);
      if (!inserted) {
        throw ParseError("variable '" + item.atom + "' declared in both " + it->second + " and " + block, item.pos);
      }
      into.push_back(prob.space.add(item.atom));
    }
  };

  const SExpr* phi_form = nullptr;
  const SExpr* psi_form = nullptr;
  std::vector<const SExpr*> boxes;
  for (std::size_t i = 1; i < root.items.size(); ++i) {
    const SExpr& f = root.items[i];
    const std::string_view head = f.head();
    if (head == "common") {
      declare(f, prob.partition.common);
    } else if (head == "local-a") {
      declare(f, prob.partition.local_a);
    } else if (head == "local-b") {
      declare(f, prob.partition.local_b);
    } else if (head == "phi" || head == "psi") {
      if (f.items.size() != 2) throw ParseError("'" + std::string(head) + "' takes one condition", f.pos);
      (head == "phi" ? phi_form : psi_form) = &f.items[1];
    } else if (head == "box") {
      boxes.push_back(&f);
    } else {
      throw ParseError("unknown section '" + std::string(head) + "'", f.pos);
    }
  }
  if (!phi_form) throw ParseError("missing (phi ...)", root.pos);
  if (!psi_form) throw ParseError("missing (psi ...)", root.pos);

  for (const SExpr* b : boxes) {
    if (b->items.size() != 4 || b->items[1].is_list) throw ParseError("expected (box var lo hi)", b->pos);
    auto v = prob.space.find(b->items[1].atom);
    if (!v) throw ParseError("box for undeclared variable '" + b->items[1].atom + "'", b->items[1].pos);
    const Rational lo = parse_number_atom(b->items[2]);
    const Rational hi = parse_number_atom(b->items[3]);
    if (lo > hi) throw ParseError("box with lo > hi", b->pos);
    prob.box.set(*v, {lo, hi});
  }

  auto build = [&](const SExpr& form, Side side) {
    if (const SExpr* strict = find_form(form, {">", "<"})) throw ParseError("strict inequality unsupported", strict->pos);
    if (const SExpr* neg = find_form(form, {"not"})) throw ParseError("negation unsupported in problem formulas", neg->pos);
    const Condition tree = parse_condition(form, text, prob.space, false);
    std::set<VarId> allowed(prob.partition.common.begin(), prob.partition.common.end());
    const auto& locals = side == Side::A ? prob.partition.local_a : prob.partition.local_b;
    allowed.insert(locals.begin(), locals.end());
    for (VarId v : tree.variables()) {
      if (!allowed.count(v)) {
        throw ParseError("variable '" + prob.space.name(v) + "' is local to the other side", form.pos);
      }
    }
    PolyFormula f = to_dnf(tree, side);
    for (Conjunct& c : f.disjuncts) {
      if (c.atoms.empty()) throw ParseError("empty conjunction", form.pos);
      infer_definitions(c);
    }
    return f;
  };
  prob.phi = build(*phi_form, Side::A);
  prob.psi = build(*psi_form, Side::B);
  return prob;
}

// ---------------------------------------------------------------------------
// DNF

namespace {

std::vector<std::vector<Atom>> dnf_rec(const Condition& c) {
  switch (c.kind) {
    case Condition::Kind::Atom:
      if (c.atom.rel == Relation::Gt) throw std::invalid_argument("strict inequality unsupported");
      return {{c.atom}};
    case Condition::Kind::Or: {
      std::vector<std::vector<Atom>> out;
      for (const Condition& child : c.children) {
        for (auto& conj : dnf_rec(child)) out.push_back(std::move(conj));
      }
      return out;
    }
    case Condition::Kind::And: {
      std::vector<std::vector<Atom>> acc{{}};
      for (const Condition& child : c.children) {
        const auto part = dnf_rec(child);
        std::vector<std::vector<Atom>> next;
        for (const auto& left : acc) {
          for (const auto& right : part) {
            std::vector<Atom> merged = left;
            for (const Atom& a : right) {
              if (std::find(merged.begin(), merged.end(), a) == merged.end()) merged.push_back(a);
            }
            next.push_back(std::move(merged));
          }
        }
        acc = std::move(next);
      }
      return acc;
    }
    case Condition::Kind::Not:
      throw std::invalid_argument("negation must be eliminated before DNF conversion");
  }
  return {};
}

}  // namespace

PolyFormula to_dnf(const Condition& tree, Side side) {
  PolyFormula f;
  f.side = side;
  for (auto& atoms : dnf_rec(tree)) {
    Conjunct c;
    c.atoms = std::move(atoms);
    f.disjuncts.push_back(std::move(c));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Archimedean witnesses

std::vector<VarId> identity_variables(const Conjunct& c, const std::vector<VarId>& common) {
  std::vector<VarId> vars = c.variables();
  vars.insert(vars.end(), common.begin(), common.end());
  sort_unique(vars);
  return vars;
}

std::optional<Rational> ball_radius_sq(const Polynomial& p, const std::vector<VarId>& vars) {
  const Rational n = p.constant_term();
  if (sgn(n) <= 0) return std::nullopt;
  std::set<VarId> squares;
  for (const auto& [m, c] : p.terms()) {
    if (m.is_constant()) continue;
    if (m.powers().size() != 1 || m.powers().front().exp != 2 || c != -1) return std::nullopt;
    squares.insert(m.powers().front().var);
  }
  for (VarId v : vars) {
    if (!squares.count(v)) return std::nullopt;
  }
  return n;
}

std::vector<ArchimedeanWitness> check_archimedean(PolyFormula& formula, const std::vector<VarId>& common,
                                                  const Box& user_box, const VarSpace& space) {
  std::vector<ArchimedeanWitness> witnesses;
  for (std::size_t k = 0; k < formula.disjuncts.size(); ++k) {
    Conjunct& c = formula.disjuncts[k];
    const std::vector<VarId> vars = identity_variables(c, common);
    auto known_range = [&](VarId v) -> std::optional<Interval> {
      std::optional<Interval> r;
      auto meet = [&](const Interval& iv) {
        if (!r) {
          r = iv;
        } else {
          r->lo = std::max(r->lo, iv.lo);
          r->hi = std::min(r->hi, iv.hi);
        }
      };
      if (c.hint.has(v)) meet(c.hint.at(v));
      if (user_box.has(v)) meet(user_box.at(v));
      if (r && r->lo > r->hi) r->hi = r->lo;  // empty: the disjunct has no points in range
      return r;
    };

    ArchimedeanWitness w;
    w.vars = vars;
    std::optional<Rational> n;
    for (const Atom& a : c.atoms) {
      if (a.rel == Relation::Gt) continue;
      if ((n = ball_radius_sq(a.poly, vars))) break;
    }
    if (n) {
      w.radius_sq = *n;
      const Rational r = sqrt_upper(*n);
      for (VarId v : vars) {
        Interval iv{-r, r};
        if (auto known = known_range(v)) {
          iv.lo = std::max(iv.lo, known->lo);
          iv.hi = std::min(iv.hi, known->hi);
          if (iv.lo > iv.hi) iv.hi = iv.lo;
        }
        w.box.set(v, iv);
      }
    } else {
      Polynomial ball;
      Rational total(0);
      for (VarId v : vars) {
        auto known = known_range(v);
        if (!known) {
          throw std::invalid_argument("cannot certify Archimedean: disjunct " + std::to_string(k + 1) + " of " +
                                      (formula.side == Side::A ? "phi" : "psi") + " has no ball atom and no box for '" +
                                      space.name(v) + "'");
        }
        const Rational m = known->magnitude();
        total += m * m;
        ball -= Polynomial::variable(v).pow(2);
        w.box.set(v, *known);
      }
      if (sgn(total) == 0) total = 1;
      ball += Polynomial::constant(total);
      w.radius_sq = total;
      w.synthesized = true;
      c.atoms.push_back(Atom{ball, Relation::Ge});
    }
    witnesses.push_back(std::move(w));
  }
  return witnesses;
}

// ---------------------------------------------------------------------------
// Definitions

void infer_definitions(Conjunct& c) {
  if (!c.definitions.empty()) return;
  std::map<VarId, std::vector<VarId>> deps;
  std::map<VarId, Polynomial> value;
  for (const Atom& a : c.atoms) {
    if (a.rel != Relation::Eq) continue;
    for (const auto& [m, coef] : a.poly.terms()) {
      if (m.degree() != 1 || (coef != 1 && coef != -1)) continue;
      const VarId v = m.powers().front().var;
      if (deps.count(v)) continue;
      bool only_once = true;
      for (const auto& [m2, c2] : a.poly.terms()) {
        if (!(m2 == m) && m2.exponent(v) > 0) only_once = false;
      }
      if (!only_once) continue;
      std::vector<VarId> d;
      for (VarId u : a.poly.variables()) {
        if (u != v) d.push_back(u);
      }
      // reject choices that would close a cycle
      std::function<bool(VarId)> reaches = [&](VarId u) {
        if (u == v) return true;
        auto it = deps.find(u);
        if (it == deps.end()) return false;
        return std::any_of(it->second.begin(), it->second.end(), reaches);
      };
      if (std::any_of(d.begin(), d.end(), reaches)) continue;
      deps[v] = d;
      // a = coef*v + rest = 0  =>  v = -rest/coef
      Polynomial rest = a.poly - Polynomial::term(m, coef);
      value[v] = coef == 1 ? -rest : rest;
      break;
    }
  }
  // topological order
  std::set<VarId> done;
  std::function<void(VarId)> visit = [&](VarId v) {
    if (done.count(v) || !deps.count(v)) return;
    done.insert(v);
    for (VarId u : deps[v]) visit(u);
    c.definitions.push_back({v, value[v]});
  };
  for (const auto& [v, d] : deps) visit(v);
}

}  // namespace nlitp
