#include "nlitp/invariant.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <random>
#include <set>

namespace nlitp {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Loop files

namespace {

Rational number_atom(const SExpr& e) {
  if (e.is_list) throw ParseError("expected a number", e.pos);
  try {
    return parse_decimal(e.atom);
  } catch (const std::invalid_argument&) {
    throw ParseError("malformed number '" + e.atom + "'", e.pos);
  }
}

void read_boxes(const SExpr& form, const VarSpace& space, Box& into) {
  for (std::size_t i = 1; i < form.items.size(); ++i) {
    const SExpr& b = form.items[i];
    if (b.head() != "box" || b.items.size() != 4 || b.items[1].is_list) throw ParseError("expected (box var lo hi)", b.pos);
    auto v = space.find(b.items[1].atom);
    if (!v) throw ParseError("box for undeclared variable '" + b.items[1].atom + "'", b.items[1].pos);
    const Rational lo = number_atom(b.items[2]);
    const Rational hi = number_atom(b.items[3]);
    if (lo > hi) throw ParseError("box with lo > hi", b.pos);
    into.set(*v, {lo, hi});
  }
}

void add_vars(const Polynomial& p, std::set<VarId>& into) {
  for (VarId v : p.variables()) into.insert(v);
}

}  // namespace

std::map<VarId, Polynomial> compose_body(const std::vector<Assignment>& body, const std::vector<VarId>& vars) {
  std::map<VarId, Polynomial> sigma;
  for (VarId v : vars) sigma[v] = Polynomial::variable(v);
  for (const Assignment& a : body) sigma[a.var] = a.value.substitute(sigma);
  return sigma;
}

Loop parse_loop(std::string_view text) {
  const std::vector<SExpr> forms = read_sexprs(text);
  if (forms.size() != 1 || forms.front().head() != "loop") {
    throw ParseError("expected a single (loop ...) form", forms.empty() ? SourcePos{} : forms.front().pos);
  }
  const SExpr& root = forms.front();
  Loop loop;
  const SExpr* pre = nullptr;
  const SExpr* post = nullptr;
  const SExpr* guard = nullptr;
  const SExpr* body = nullptr;
  for (std::size_t i = 1; i < root.items.size(); ++i) {
    const SExpr& f = root.items[i];
    const std::string_view head = f.head();
    if (head == "vars") {
      for (std::size_t k = 1; k < f.items.size(); ++k) {
        if (f.items[k].is_list) throw ParseError("expected a variable name", f.items[k].pos);
        if (loop.space.find(f.items[k].atom)) throw ParseError("variable '" + f.items[k].atom + "' declared twice", f.items[k].pos);
        loop.program_vars.push_back(loop.space.add(f.items[k].atom));
      }
    } else if (head == "pre" || head == "post" || head == "guard" || head == "body") {
      const SExpr** slot = head == "pre" ? &pre : head == "post" ? &post : head == "guard" ? &guard : &body;
      if (*slot) throw ParseError("duplicate (" + std::string(head) + " ...)", f.pos);
      *slot = &f;
    } else if (head == "compactify-a" || head == "compactify-b" || head == "strict-margin") {
      // read after the variables are known
    } else {
      throw ParseError("unknown section '" + std::string(head) + "'", f.pos);
    }
  }
  if (loop.program_vars.empty()) throw ParseError("missing (vars ...)", root.pos);
  if (!pre) throw ParseError("missing (pre ...)", root.pos);
  if (!post) throw ParseError("missing (post ...)", root.pos);
  if (!body) throw ParseError("missing (body ...)", root.pos);

  auto one_condition = [&](const SExpr& f) {
    if (f.items.size() != 2) throw ParseError("'" + std::string(f.head()) + "' takes one condition", f.pos);
    return parse_condition(f.items[1], text, loop.space, false);
  };
  loop.pre = one_condition(*pre);
  loop.post = one_condition(*post);
  if (guard) {
    if (guard->items.size() != 2) throw ParseError("'guard' takes one condition", guard->pos);
    if (!guard->items[1].is_atom("unknown")) loop.guard = parse_condition(guard->items[1], text, loop.space, false);
  }
  for (std::size_t k = 1; k < body->items.size(); ++k) {
    const SExpr& a = body->items[k];
    if (a.head() != "assign" || a.items.size() < 3 || a.items[1].is_list) throw ParseError("expected (assign var expr)", a.pos);
    auto v = loop.space.find(a.items[1].atom);
    if (!v) throw ParseError("assignment to undeclared variable '" + a.items[1].atom + "'", a.items[1].pos);
    InfixReader reader(text, a.items[2].begin, a.end - 1, loop.space, false);
    Polynomial value = reader.read_expression();
    if (!reader.at_end()) throw ParseError("assignment takes one expression", reader.position());
    loop.body.push_back({*v, std::move(value)});
  }
  for (std::size_t i = 1; i < root.items.size(); ++i) {
    const SExpr& f = root.items[i];
    if (f.head() == "compactify-a") read_boxes(f, loop.space, loop.domain_a);
    if (f.head() == "compactify-b") read_boxes(f, loop.space, loop.domain_b);
    if (f.head() == "strict-margin") {
      if (f.items.size() != 2) throw ParseError("expected (strict-margin r)", f.pos);
      loop.strict_margin = number_atom(f.items[1]);
      if (sgn(loop.strict_margin) < 0) throw ParseError("strict margin must be non-negative", f.pos);
    }
  }

  const std::map<VarId, Polynomial> sigma = compose_body(loop.body, loop.program_vars);
  std::set<VarId> live;
  for (const Condition* c : {&loop.pre, &loop.post}) {
    for (VarId v : c->variables()) live.insert(v);
  }
  if (loop.guard) {
    for (VarId v : loop.guard->variables()) live.insert(v);
  }
  for (bool grew = true; grew;) {
    const std::size_t before = live.size();
    for (VarId v : std::set<VarId>(live)) add_vars(sigma.at(v), live);
    grew = live.size() != before;
  }
  loop.state.assign(live.begin(), live.end());
  for (VarId v : loop.state) loop.step[v] = sigma.at(v);

  // the precondition defaults to the bad-side domain
  for (const auto& [v, iv] : loop.domain_b.ranges()) {
    if (!loop.domain_a.has(v)) loop.domain_a.set(v, iv);
  }
  for (VarId v : loop.state) {
    if (!loop.domain_a.has(v) || !loop.domain_b.has(v)) {
      throw ParseError("state variable '" + loop.space.name(v) + "' needs a range in (compactify-b ...)", root.pos);
    }
  }
  return loop;
}

// ---------------------------------------------------------------------------
// Formula plumbing

namespace {

Condition approximate(const Condition& c, Approx approx, const Rational& margin) {
  if (c.kind != Condition::Kind::Atom) {
    Condition out = c;
    for (Condition& child : out.children) child = approximate(child, approx, margin);
    return out;
  }
  if (c.atom.rel != Relation::Gt) return c;
  Polynomial p = c.atom.poly;
  if (approx == Approx::Under) p -= Polynomial::constant(margin);
  return Condition::make_atom(std::move(p), Relation::Ge);
}

// Drops constant atoms and duplicates; false when a constant atom fails.
bool simplify(Conjunct& c) {
  std::vector<Atom> kept;
  for (Atom& a : c.atoms) {
    if (a.poly.is_zero() || a.poly.is_constant()) {
      const int s = sgn(a.poly.constant_term());
      const bool ok = a.rel == Relation::Ge ? s >= 0 : a.rel == Relation::Gt ? s > 0 : s == 0;
      if (!ok) return false;
      continue;
    }
    if (std::find(kept.begin(), kept.end(), a) == kept.end()) kept.push_back(std::move(a));
  }
  c.atoms = std::move(kept);
  return true;
}

void meet(Box& into, const Box& other) {
  for (const auto& [v, iv] : other.ranges()) {
    if (!into.has(v)) {
      into.set(v, iv);
      continue;
    }
    Interval r = into.at(v);
    r.lo = std::max(r.lo, iv.lo);
    r.hi = std::min(r.hi, iv.hi);
    if (r.lo > r.hi) r.hi = r.lo;
    into.set(v, r);
  }
}

bool same_conjunct(const Conjunct& a, const Conjunct& b) {
  if (a.atoms.size() != b.atoms.size()) return false;
  return std::all_of(a.atoms.begin(), a.atoms.end(),
                     [&](const Atom& x) { return std::find(b.atoms.begin(), b.atoms.end(), x) != b.atoms.end(); });
}

PolyFormula true_formula(Side side) {
  PolyFormula f;
  f.side = side;
  f.disjuncts.emplace_back();
  return f;
}

}  // namespace

PolyFormula to_formula(const Condition& c, Approx approx, const Rational& margin) {
  PolyFormula f = to_dnf(approximate(c.nnf(), approx, margin), approx == Approx::Over ? Side::A : Side::B);
  PolyFormula out;
  out.side = f.side;
  for (Conjunct& d : f.disjuncts) {
    if (!simplify(d)) continue;
    infer_definitions(d);
    out.disjuncts.push_back(std::move(d));
  }
  return out;
}

PolyFormula conjoin(const PolyFormula& a, const PolyFormula& b) {
  PolyFormula out;
  out.side = a.side;
  for (const Conjunct& x : a.disjuncts) {
    for (const Conjunct& y : b.disjuncts) {
      Conjunct c = x;
      c.atoms.insert(c.atoms.end(), y.atoms.begin(), y.atoms.end());
      for (const auto& d : y.definitions) {
        const bool taken = std::any_of(c.definitions.begin(), c.definitions.end(), [&](const auto& e) { return e.var == d.var; });
        if (!taken) c.definitions.push_back(d);
      }
      meet(c.hint, y.hint);
      if (simplify(c)) out.disjuncts.push_back(std::move(c));
    }
  }
  return out;
}

PolyFormula disjoin(PolyFormula a, const PolyFormula& b) {
  for (const Conjunct& c : b.disjuncts) {
    const bool dup = std::any_of(a.disjuncts.begin(), a.disjuncts.end(), [&](const Conjunct& d) { return same_conjunct(c, d); });
    if (!dup) a.disjuncts.push_back(c);
  }
  return a;
}

PolyFormula with_box(PolyFormula f, const Box& box) {
  for (Conjunct& c : f.disjuncts) {
    for (const auto& [v, iv] : box.ranges()) {
      c.atoms.push_back({Polynomial::variable(v) - Polynomial::constant(iv.lo), Relation::Ge});
      c.atoms.push_back({Polynomial::constant(iv.hi) - Polynomial::variable(v), Relation::Ge});
    }
    meet(c.hint, box);
    simplify(c);
  }
  return f;
}

PolyFormula sp(const PolyFormula& f, Loop& loop, std::map<VarId, VarId>* primes_out) {
  std::map<VarId, VarId> primes;
  std::map<VarId, Polynomial> rename;
  for (VarId v : loop.state) {
    if (loop.step.at(v) == Polynomial::variable(v)) continue;
    std::string name;
    for (int k = 1;; ++k) {
      name = loop.space.name(v) + "'" + std::to_string(k);
      if (!loop.space.find(name)) break;
    }
    const VarId p = loop.space.add(name);
    primes[v] = p;
    rename[v] = Polynomial::variable(p);
  }
  PolyFormula out;
  out.side = f.side;
  for (const Conjunct& c : f.disjuncts) {
    Conjunct n;
    for (const Atom& a : c.atoms) n.atoms.push_back({a.poly.substitute(rename), a.rel});
    for (const auto& d : c.definitions) {
      auto it = primes.find(d.var);
      n.definitions.push_back({it == primes.end() ? d.var : it->second, d.value.substitute(rename)});
    }
    for (const auto& [v, p] : primes) {
      const Polynomial value = loop.step.at(v).substitute(rename);
      n.atoms.push_back({Polynomial::variable(v) - value, Relation::Eq});
      n.definitions.push_back({v, value});
    }
    for (const auto& [v, iv] : c.hint.ranges()) {
      auto it = primes.find(v);
      n.hint.set(it == primes.end() ? v : it->second, iv);
    }
    if (simplify(n)) out.disjuncts.push_back(std::move(n));
  }
  if (primes_out) *primes_out = primes;
  return out;
}

PolyFormula wp(const PolyFormula& f, const Loop& loop) {
  std::map<VarId, Polynomial> sigma;
  for (const auto& [v, value] : loop.step) {
    if (!(value == Polynomial::variable(v))) sigma[v] = value;
  }
  PolyFormula out;
  out.side = f.side;
  for (const Conjunct& c : f.disjuncts) {
    Conjunct n;
    for (const Atom& a : c.atoms) n.atoms.push_back({a.poly.substitute(sigma), a.rel});
    for (const auto& [v, iv] : c.hint.ranges()) {
      if (!sigma.count(v)) n.hint.set(v, iv);
    }
    if (!simplify(n)) continue;
    infer_definitions(n);
    out.disjuncts.push_back(std::move(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ranges

namespace {

Rational dyadic(const Rational& r) { return from_double(to_double(r)); }

Interval outward(const Interval& iv) { return {from_double(to_double_down(iv.lo)), from_double(to_double_up(iv.hi))}; }

}  // namespace

std::optional<Box> tighten_box(const Conjunct& c, const Box& start, std::size_t leaves, int rounds) {
  std::set<VarId> defined;
  for (const auto& d : c.definitions) defined.insert(d.var);
  std::vector<VarId> free;
  {
    std::set<VarId> vars;
    for (VarId v : c.variables()) vars.insert(v);
    for (const auto& [v, iv] : start.ranges()) vars.insert(v);
    for (const auto& d : c.definitions) add_vars(d.value, vars);
    for (VarId v : vars) {
      if (defined.count(v)) continue;
      if (!start.has(v)) throw std::invalid_argument("no starting range for variable #" + std::to_string(v.index));
      free.push_back(v);
    }
  }

  auto evaluate = [&](const Box& cell) -> std::optional<Box> {
    Box full = cell;
    for (const auto& d : c.definitions) {
      Interval iv = interval_bound(d.value, full);
      if (start.has(d.var)) {
        const Interval& s = start.at(d.var);
        iv.lo = std::max(iv.lo, s.lo);
        iv.hi = std::min(iv.hi, s.hi);
        if (iv.lo > iv.hi) return std::nullopt;
      }
      full.set(d.var, iv);
    }
    for (const Atom& a : c.atoms) {
      const Interval iv = interval_bound(a.poly, full);
      if (a.rel == Relation::Eq ? (sgn(iv.lo) > 0 || sgn(iv.hi) < 0) : sgn(iv.hi) < 0) return std::nullopt;
      if (a.rel == Relation::Gt && sgn(iv.hi) <= 0) return std::nullopt;
    }
    return full;
  };

  Box cur;
  for (VarId v : free) cur.set(v, outward(start.at(v)));
  std::optional<Box> hull;
  for (int round = 0; round < rounds; ++round) {
    std::deque<Box> queue{cur};
    std::vector<Box> kept;
    while (!queue.empty()) {
      Box cell = std::move(queue.front());
      queue.pop_front();
      auto full = evaluate(cell);
      if (!full) continue;
      std::optional<VarId> widest;
      double width = 0.0;
      for (VarId v : free) {
        const double w = to_double(cell.at(v).hi) - to_double(cell.at(v).lo);
        if (w > width) {
          width = w;
          widest = v;
        }
      }
      if (!widest || queue.size() + kept.size() + 2 > leaves) {
        kept.push_back(std::move(*full));
        continue;
      }
      const Interval& iv = cell.at(*widest);
      const Rational mid = dyadic((iv.lo + iv.hi) / 2);
      if (mid <= iv.lo || mid >= iv.hi) {
        kept.push_back(std::move(*full));
        continue;
      }
      Box left = cell, right = cell;
      left.set(*widest, {iv.lo, mid});
      right.set(*widest, {mid, iv.hi});
      queue.push_back(std::move(left));
      queue.push_back(std::move(right));
    }
    if (kept.empty()) return std::nullopt;
    Box next;
    for (const Box& b : kept) {
      for (const auto& [v, iv] : b.ranges()) {
        if (!next.has(v)) {
          next.set(v, iv);
        } else {
          next.set(v, {std::min(next.at(v).lo, iv.lo), std::max(next.at(v).hi, iv.hi)});
        }
      }
    }
    for (const auto& [v, iv] : next.ranges()) next.set(v, outward(iv));
    bool shrunk = false;
    for (VarId v : free) {
      const double before = to_double(cur.at(v).hi - cur.at(v).lo);
      const double after = to_double(next.at(v).hi - next.at(v).lo);
      if (after < 0.98 * before) shrunk = true;
    }
    hull = next;
    if (!shrunk) break;
    for (VarId v : free) cur.set(v, next.at(v));
  }
  return hull;
}

std::optional<Box> bounded_box(const Polynomial& g, const std::vector<VarId>& vars) {
  if (g.degree() != 2) return std::nullopt;
  const auto n = static_cast<Eigen::Index>(vars.size());
  auto index = [&](VarId v) -> Eigen::Index {
    auto it = std::find(vars.begin(), vars.end(), v);
    if (it == vars.end()) return -1;
    return it - vars.begin();
  };
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  double c0 = 0.0;
  for (const auto& [m, coef] : g.terms()) {
    const double value = to_double(coef);
    if (m.is_constant()) {
      c0 = value;
      continue;
    }
    const auto& pw = m.powers();
    const Eigen::Index i = index(pw[0].var);
    if (i < 0) return std::nullopt;
    if (m.degree() == 1) {
      b(i) = value;
    } else if (pw.size() == 1) {
      q(i, i) = value;
    } else {
      const Eigen::Index j = index(pw[1].var);
      if (j < 0) return std::nullopt;
      q(i, j) = q(j, i) = value / 2;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  if (es.info() != Eigen::Success || es.eigenvalues().maxCoeff() >= -1e-12 * (1.0 + q.cwiseAbs().maxCoeff())) {
    return std::nullopt;
  }
  // g = c0 + b'x + x'Qx peaks at x* = -Q^{-1} b / 2
  const Eigen::MatrixXd neg_inv = (-q).inverse();
  const Eigen::VectorXd center = 0.5 * neg_inv * b;
  const double peak = c0 + b.dot(center) + center.dot(q * center);
  Box box;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::sqrt(std::max(peak, 0.0) * neg_inv(i, i));
    const double pad = 0.01 * r + 1e-9 * (1.0 + std::abs(center(i)));
    box.set(vars[static_cast<std::size_t>(i)], {from_double(to_double_down(from_double(center(i) - r - pad))),
                                                 from_double(to_double_up(from_double(center(i) + r + pad)))});
  }
  return box;
}

// ---------------------------------------------------------------------------
// Hoare check, validation

const char* to_string(HoareResult::Verdict v) {
  switch (v) {
    case HoareResult::Verdict::Holds: return "holds";
    case HoareResult::Verdict::Counterexample: return "counterexample";
    case HoareResult::Verdict::Unknown: return "unknown";
  }
  return "unknown";
}

const char* to_string(InvariantResult::Answer a) {
  switch (a) {
    case InvariantResult::Answer::Yes: return "yes";
    case InvariantResult::Answer::No: return "no";
    case InvariantResult::Answer::Exhausted: return "exhausted";
  }
  return "exhausted";
}

namespace {

// Tightens every disjunct from its hint; drops disjuncts proved empty.
PolyFormula bound(PolyFormula f, std::size_t leaves) {
  PolyFormula out;
  out.side = f.side;
  for (Conjunct& c : f.disjuncts) {
    auto box = tighten_box(c, c.hint, leaves);
    if (!box) continue;
    c.hint = std::move(*box);
    out.disjuncts.push_back(std::move(c));
  }
  return out;
}

// Conjunct c lies inside d when d mentions only state variables and each
// atom of d holds on all of c's box.
bool covers(const Conjunct& d, const Conjunct& c, const std::vector<VarId>& state) {
  for (const Atom& a : d.atoms) {
    for (VarId v : a.poly.variables()) {
      if (!c.hint.has(v) || std::find(state.begin(), state.end(), v) == state.end()) return false;
    }
    const Interval iv = interval_bound(a.poly, c.hint);
    const bool ok = a.rel == Relation::Ge ? sgn(iv.lo) >= 0 : a.rel == Relation::Gt ? sgn(iv.lo) > 0 : sgn(iv.lo) == 0 && sgn(iv.hi) == 0;
    if (!ok) return false;
  }
  return true;
}

// a or b, leaving out disjuncts of b already inside one of a
PolyFormula absorb(PolyFormula a, const PolyFormula& b, const std::vector<VarId>& state) {
  const std::size_t n = a.disjuncts.size();
  for (const Conjunct& c : b.disjuncts) {
    const bool inside = std::any_of(a.disjuncts.begin(), a.disjuncts.begin() + static_cast<std::ptrdiff_t>(n),
                                    [&](const Conjunct& d) { return same_conjunct(c, d) || covers(d, c, state); });
    if (!inside) a.disjuncts.push_back(c);
  }
  return a;
}

PolyFormula positive_region(const Polynomial& g, Approx approx, const Rational& margin, const Box& hint) {
  PolyFormula f = to_formula(Condition::make_atom(g, Relation::Gt), approx, margin);
  for (Conjunct& c : f.disjuncts) c.hint = hint;
  return f;
}

struct Outcome {
  InterpolateResult result;
  std::vector<std::size_t> owner_first;  // region index per disjunct of the first side
  std::vector<std::size_t> owner_second;
};

// Interpolates (first regions) against (second regions) over the state
// variables; locals are whatever else the disjuncts mention.
Outcome interpolate_regions(const Loop& loop, const std::vector<const PolyFormula*>& first,
                            const std::vector<const PolyFormula*>& second, const InterpolateOptions& opt) {
  Outcome out;
  Problem p;
  p.space = loop.space;
  p.partition.common = loop.state;
  p.phi.side = Side::A;
  p.psi.side = Side::B;
  std::set<VarId> state(loop.state.begin(), loop.state.end()), la, lb;
  for (std::size_t r = 0; r < first.size(); ++r) {
    for (const Conjunct& c : first[r]->disjuncts) {
      p.phi.disjuncts.push_back(c);
      out.owner_first.push_back(r);
      for (VarId v : c.variables()) {
        if (!state.count(v)) la.insert(v);
      }
    }
  }
  for (std::size_t r = 0; r < second.size(); ++r) {
    for (const Conjunct& c : second[r]->disjuncts) {
      p.psi.disjuncts.push_back(c);
      out.owner_second.push_back(r);
      for (VarId v : c.variables()) {
        if (!state.count(v)) lb.insert(v);
      }
    }
  }
  for (VarId v : la) {
    if (lb.count(v)) throw std::logic_error("a local variable appears on both sides");
  }
  p.partition.local_a.assign(la.begin(), la.end());
  p.partition.local_b.assign(lb.begin(), lb.end());
  if (p.phi.disjuncts.empty() || p.psi.disjuncts.empty()) {
    out.result.status = InterpolateResult::Status::Sound;
    out.result.h = Polynomial::constant(p.phi.disjuncts.empty() ? -1 : 1);
    return out;
  }
  out.result = interpolate(p, opt);
  return out;
}

std::vector<double> exec_step(const Loop& loop, const std::vector<CompiledPolynomial>& step, const std::vector<double>& x) {
  std::vector<double> y = x;
  for (std::size_t k = 0; k < loop.state.size(); ++k) y[loop.state[k].index] = step[k](x);
  return y;
}

bool positive_exact(const Polynomial& g, const std::vector<double>& x, const Loop& loop, bool after_step) {
  std::map<VarId, Rational> point;
  for (VarId v : loop.state) point[v] = from_double(x[v.index]);
  if (after_step) {
    std::map<VarId, Rational> next;
    for (VarId v : loop.state) next[v] = loop.step.at(v).eval(point);
    point = std::move(next);
  }
  return sgn(g.eval(point)) > 0;
}

}  // namespace

HoareResult hoare_check(const Polynomial& g, Loop& loop, const InvariantOptions& opt) {
  HoareResult res;
  if (std::all_of(loop.step.begin(), loop.step.end(), [](const auto& kv) { return kv.second == Polynomial::variable(kv.first); })) {
    res.verdict = HoareResult::Verdict::Holds;
    res.detail = "empty body";
    return res;
  }
  Box dom;
  if (auto eb = bounded_box(g, loop.state)) {
    dom = *eb;
  } else {
    dom = loop.domain_a;
    res.relative_to_domain = true;
  }
  const PolyFormula rho = loop.guard ? to_formula(*loop.guard, Approx::Over, 0) : true_formula(Side::A);
  PolyFormula a = bound(with_box(conjoin(positive_region(g, Approx::Over, 0, dom), rho), dom), opt.pave_leaves);
  std::map<VarId, Polynomial> sigma(loop.step.begin(), loop.step.end());
  PolyFormula b = to_formula(Condition::make_atom(-g.substitute(sigma), Relation::Ge), Approx::Under, 0);
  b = bound(with_box(std::move(b), dom), opt.pave_leaves);
  if (a.disjuncts.empty() || b.disjuncts.empty()) {
    res.verdict = HoareResult::Verdict::Holds;
    res.detail = a.disjuncts.empty() ? "no state satisfies the invariant and the guard" : "no step leaves the invariant";
    return res;
  }
  InterpolateOptions io = opt.interpolation;
  io.verbose = false;
  const Outcome o = interpolate_regions(loop, {&a}, {&b}, io);
  switch (o.result.status) {
    case InterpolateResult::Status::Sound:
      res.verdict = HoareResult::Verdict::Holds;
      res.detail = std::string("refuted by a ") + to_string(o.result.report->verdict) + " certificate";
      break;
    case InterpolateResult::Status::Satisfiable:
      res.verdict = HoareResult::Verdict::Counterexample;
      res.counterexample = o.result.witness->point;
      res.detail = "sampled state leaves the invariant";
      break;
    case InterpolateResult::Status::Exhausted:
      res.verdict = HoareResult::Verdict::Unknown;
      res.detail = "no refutation certificate within the degree bounds";
      break;
  }
  return res;
}

Validation validate_invariant(const Polynomial& g, const Loop& loop, std::size_t samples, std::uint64_t seed) {
  Validation val;
  std::mt19937_64 rng(seed);
  const std::size_t dim = loop.space.size();
  const CompiledPolynomial cg(g);
  std::vector<CompiledPolynomial> step;
  for (VarId v : loop.state) step.emplace_back(loop.step.at(v));

  auto draw_in = [&](const Box& box, auto&& accept, auto&& check, std::size_t& count, std::size_t& bad) {
    std::vector<double> x(dim, 0.0);
    const std::size_t budget = samples * 2000;
    for (std::size_t t = 0; t < budget && count < samples; ++t) {
      for (VarId v : loop.state) {
        std::uniform_real_distribution<double> u(to_double(box.at(v).lo), to_double(box.at(v).hi));
        x[v.index] = u(rng);
      }
      if (!accept(x)) continue;
      ++count;
      if (!check(x)) ++bad;
    }
  };

  const PolyFormula pre = bound(with_box(to_formula(loop.pre, Approx::Over, 0), loop.domain_a), 256);
  Box pre_box;
  for (const Conjunct& c : pre.disjuncts) {
    for (VarId v : loop.state) {
      const Interval& iv = c.hint.at(v);
      pre_box.set(v, pre_box.has(v) ? Interval{std::min(pre_box.at(v).lo, iv.lo), std::max(pre_box.at(v).hi, iv.hi)} : iv);
    }
  }
  if (!pre_box.empty()) {
    draw_in(
        pre_box, [&](const std::vector<double>& x) { return loop.pre.holds(x); },
        [&](const std::vector<double>& x) { return cg(x) > 0 || positive_exact(g, x, loop, false); }, val.pre_samples,
        val.pre_violations);
  }

  const Box dom = bounded_box(g, loop.state).value_or(loop.domain_a);
  draw_in(
      dom, [&](const std::vector<double>& x) { return cg(x) > 0 && (!loop.guard || loop.guard->holds(x)); },
      [&](const std::vector<double>& x) { return cg(exec_step(loop, step, x)) > 0 || positive_exact(g, x, loop, true); },
      val.step_samples, val.step_violations);
  draw_in(
      dom, [&](const std::vector<double>& x) { return cg(x) > 0 && (!loop.guard || !loop.guard->holds(x)); },
      [&](const std::vector<double>& x) { return loop.post.holds(x); }, val.exit_samples, val.exit_violations);
  return val;
}

std::string InvariantResult::invariant_text(const VarSpace& space, int decimals) const {
  if (!invariant) return "";
  return invariant->to_decimal_string(space, decimals) + " > 0";
}

// ---------------------------------------------------------------------------
// Squeezing

namespace {

struct Region {
  PolyFormula f;
  bool concrete = true;
};

std::size_t disjunct_count(const std::vector<Region>& r, std::size_t upto) {
  std::size_t n = 0;
  for (std::size_t k = 0; k <= upto && k < r.size(); ++k) n += r[k].f.disjuncts.size();
  return n;
}

class Squeezer {
 public:
  Squeezer(Loop& loop, const InvariantOptions& opt) : loop_(loop), opt_(opt) {
    const Rational& delta = loop.strict_margin;
    rho_over_ = loop.guard ? to_formula(*loop.guard, Approx::Over, 0) : true_formula(Side::A);
    rho_under_ = loop.guard ? to_formula(*loop.guard, Approx::Under, delta) : true_formula(Side::B);
    const PolyFormula exit_under =
        loop.guard ? to_formula(Condition::negation(*loop.guard), Approx::Under, delta) : true_formula(Side::B);
    pre_ = bound(with_box(to_formula(loop.pre, Approx::Over, 0), loop.domain_a), opt.pave_leaves);
    bad0_ = bound(with_box(conjoin(exit_under, to_formula(Condition::negation(loop.post), Approx::Under, delta)), loop.domain_b),
                  opt.pave_leaves);
  }

  InvariantResult forward();
  InvariantResult backward();

 private:
  PolyFormula step_reachable(const PolyFormula& from) {
    return bound(sp(conjoin(from, rho_over_), loop_), opt_.pave_leaves);
  }
  PolyFormula step_bad(const PolyFormula& to) {
    return bound(with_box(conjoin(rho_under_, wp(to, loop_)), loop_.domain_b), opt_.pave_leaves);
  }
  void log(const TrailEntry& e) const {
    if (!opt_.verbose) return;
    std::fprintf(stderr, "round %zu: %zu+%zu disjuncts, %s, %s, %s\n", e.round, e.a_disjuncts, e.b_disjuncts,
                 e.interpolation.c_str(), e.hoare ? to_string(e.hoare->verdict) : "-", e.action.c_str());
    if (e.h) std::fprintf(stderr, "  h = %s\n", e.h->to_decimal_string(loop_.space, 4).c_str());
  }
  bool accept(InvariantResult& r, const Polynomial& g, const HoareResult& hc) {
    r.answer = InvariantResult::Answer::Yes;
    r.invariant = g;
    r.relative_to_domain = hc.relative_to_domain;
    r.validation = validate_invariant(g, loop_, opt_.validation_samples, opt_.interpolation.sampling.seed);
    return true;
  }

  Loop& loop_;
  const InvariantOptions& opt_;
  PolyFormula rho_over_, rho_under_, pre_, bad0_;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

InvariantResult Squeezer::forward() {
  InvariantResult r;
  std::vector<Region> a{{pre_, true}};
  std::vector<Region> b{{bad0_, true}};
  std::size_t i = 0, j = 0;
  for (std::size_t round = 0; round < opt_.max_rounds; ++round) {
    const auto t0 = Clock::now();
    r.rounds = round + 1;
    TrailEntry e;
    e.round = round;
    e.a_sets = i + 1;
    e.a_disjuncts = disjunct_count(a, i);
    e.b_sets = j + 1;
    e.b_disjuncts = b[j].f.disjuncts.size();
    std::vector<const PolyFormula*> first;
    for (std::size_t k = 0; k <= i; ++k) first.push_back(&a[k].f);
    InterpolateOptions io = opt_.interpolation;
    io.scale_b = opt_.bias;
    io.weight_b = opt_.bad_weight;
    const Outcome o = interpolate_regions(loop_, first, {&b[j].f}, io);
    e.interpolation = to_string(o.result.status);

    if (o.result.status == InterpolateResult::Status::Sound) {
      const Polynomial g = o.result.h;
      e.h = g;
      const HoareResult hc = hoare_check(g, loop_, opt_);
      e.hoare = hc;
      if (hc.verdict == HoareResult::Verdict::Holds) {
        e.action = "accept";
        e.seconds = since(t0);
        log(e);
        r.trail.push_back(std::move(e));
        accept(r, g, hc);
        return r;
      }
      Region next;
      if (auto eb = bounded_box(g, loop_.state)) {
        next = {step_reachable(bound(positive_region(g, Approx::Over, 0, *eb), opt_.pave_leaves)), false};
        e.action = "advance from the bounded interpolant";
      } else {
        next = {step_reachable(a[i].f), a[i].concrete};
        e.action = "advance from the last reachable set";
      }
      a.resize(i + 1);
      a.push_back(std::move(next));
      ++i;
      b.push_back({absorb(bad0_, step_bad(b[j].f), loop_.state), true});
      ++j;
    } else if (o.result.status == InterpolateResult::Status::Satisfiable) {
      const std::size_t k = o.owner_first.at(o.result.witness->disjunct_a);
      if (a[k].concrete) {
        e.action = "reachable bad state";
        e.seconds = since(t0);
        log(e);
        r.trail.push_back(std::move(e));
        r.answer = InvariantResult::Answer::No;
        r.message = "a sampled state is reachable and violates the postcondition";
        return r;
      }
      while (!a[i].concrete) --i;
      a.resize(i + 1);
      a.push_back({step_reachable(a[i].f), true});
      ++i;
      e.action = "backtrack to the last concrete set";
    } else {
      e.action = "stop";
      e.seconds = since(t0);
      log(e);
      r.trail.push_back(std::move(e));
      r.message = "no interpolant within the degree bounds";
      return r;
    }
    e.seconds = since(t0);
    log(e);
    r.trail.push_back(std::move(e));
  }
  r.message = "round cap reached";
  return r;
}

InvariantResult Squeezer::backward() {
  InvariantResult r;
  std::vector<Region> a{{pre_, true}};
  std::vector<Region> b{{bad0_, true}};
  std::size_t i = 0, j = 0;
  for (std::size_t round = 0; round < opt_.max_rounds; ++round) {
    const auto t0 = Clock::now();
    r.rounds = round + 1;
    TrailEntry e;
    e.round = round;
    e.a_sets = i + 1;
    e.a_disjuncts = disjunct_count(a, i);
    e.b_sets = j + 1;
    e.b_disjuncts = b[j].f.disjuncts.size();
    std::vector<const PolyFormula*> second;
    for (std::size_t k = 0; k <= i; ++k) second.push_back(&a[k].f);
    InterpolateOptions io = opt_.interpolation;
    io.scale_a = opt_.bias;
    io.weight_a = opt_.bad_weight;
    const Outcome o = interpolate_regions(loop_, {&b[j].f}, second, io);
    e.interpolation = to_string(o.result.status);

    if (o.result.status == InterpolateResult::Status::Sound) {
      const Polynomial h = o.result.h;
      e.h = h;
      // bad states lie in h > 0, reachable ones in h < 0
      const Polynomial g = -h;
      const HoareResult hc = hoare_check(g, loop_, opt_);
      e.hoare = hc;
      if (hc.verdict == HoareResult::Verdict::Holds) {
        e.action = "accept";
        e.seconds = since(t0);
        log(e);
        r.trail.push_back(std::move(e));
        accept(r, g, hc);
        return r;
      }
      Region next;
      if (auto eb = bounded_box(h, loop_.state)) {
        const PolyFormula over =
            bound(with_box(positive_region(h, Approx::Under, loop_.strict_margin, *eb), loop_.domain_b), opt_.pave_leaves);
        next = {absorb(over, step_bad(over), loop_.state), false};
        e.action = "grow from the bounded interpolant";
      } else {
        next = {absorb(b[j].f, step_bad(b[j].f), loop_.state), b[j].concrete};
        e.action = "grow from the last bad set";
      }
      b.resize(j + 1);
      b.push_back(std::move(next));
      ++j;
      a.push_back({step_reachable(a[i].f), true});
      ++i;
    } else if (o.result.status == InterpolateResult::Status::Satisfiable) {
      if (b[j].concrete) {
        e.action = "reachable bad state";
        e.seconds = since(t0);
        log(e);
        r.trail.push_back(std::move(e));
        r.answer = InvariantResult::Answer::No;
        r.message = "a sampled state is reachable and violates the postcondition";
        return r;
      }
      while (!b[j].concrete) --j;
      b.resize(j + 1);
      b.push_back({absorb(bad0_, step_bad(b[j].f), loop_.state), true});
      ++j;
      e.action = "backtrack to the last concrete set";
    } else {
      e.action = "stop";
      e.seconds = since(t0);
      log(e);
      r.trail.push_back(std::move(e));
      r.message = "no interpolant within the degree bounds";
      return r;
    }
    e.seconds = since(t0);
    log(e);
    r.trail.push_back(std::move(e));
  }
  r.message = "round cap reached";
  return r;
}

}  // namespace

InvariantResult squeeze_forward(Loop& loop, const InvariantOptions& opt) { return Squeezer(loop, opt).forward(); }

InvariantResult squeeze_backward(Loop& loop, const InvariantOptions& opt) { return Squeezer(loop, opt).backward(); }

json invariant_report(const InvariantResult& r, const Loop& loop, int decimals, bool reproducible) {
  json trail = json::array();
  for (const TrailEntry& e : r.trail) {
    json j{{"round", e.round},
           {"a_sets", e.a_sets},
           {"a_disjuncts", e.a_disjuncts},
           {"b_sets", e.b_sets},
           {"b_disjuncts", e.b_disjuncts},
           {"interpolation", e.interpolation},
           {"action", e.action}};
    if (e.h) j["h"] = e.h->to_decimal_string(loop.space, decimals);
    if (e.hoare) {
      j["hoare"] = {{"verdict", to_string(e.hoare->verdict)},
                    {"detail", e.hoare->detail},
                    {"relative_to_domain", e.hoare->relative_to_domain}};
    }
    if (!reproducible) j["seconds"] = e.seconds;
    trail.push_back(std::move(j));
  }
  json state = json::array();
  for (VarId v : loop.state) state.push_back(loop.space.name(v));
  json out{{"answer", to_string(r.answer)}, {"rounds", r.rounds}, {"state", state}, {"trail", trail}, {"message", r.message}};
  if (r.invariant) {
    out["invariant"] = {{"g", r.invariant->to_decimal_string(loop.space, decimals)},
                        {"g_exact", r.invariant->to_string(loop.space)},
                        {"relation", "g > 0"},
                        {"relative_to_domain", r.relative_to_domain}};
  }
  if (r.validation) {
    const Validation& v = *r.validation;
    out["validation"] = {{"pre", {{"samples", v.pre_samples}, {"violations", v.pre_violations}}},
                         {"step", {{"samples", v.step_samples}, {"violations", v.step_violations}}},
                         {"exit", {{"samples", v.exit_samples}, {"violations", v.exit_violations}}},
                         {"passed", v.passed()}};
  }
  return out;
}

}  // namespace nlitp
