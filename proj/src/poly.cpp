#include "nlitp/poly.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace nlitp {

VarId VarSpace::add(std::string name) {
  if (index_.count(name) > 0) throw std::invalid_argument("duplicate variable '" + name + "'");
  const VarId id{static_cast<std::uint32_t>(names_.size())};
  index_.emplace(name, id.index);
  names_.push_back(std::move(name));
  return id;
}

VarId VarSpace::intern(std::string_view name) {
  if (auto found = find(name)) return *found;
  return add(std::string(name));
}

std::optional<VarId> VarSpace::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return VarId{it->second};
}

// ---------------------------------------------------------------------------
// Monomial

Monomial::Monomial(std::vector<Power> powers) {
  std::sort(powers.begin(), powers.end(), [](const Power& a, const Power& b) { return a.var < b.var; });
  for (const Power& p : powers) {
    if (p.exp == 0) continue;
    if (!powers_.empty() && powers_.back().var == p.var) {
      powers_.back().exp += p.exp;
    } else {
      powers_.push_back(p);
    }
    degree_ += p.exp;
  }
}

Monomial Monomial::variable(VarId v, unsigned exp) { return Monomial({Power{v, exp}}); }

unsigned Monomial::exponent(VarId v) const {
  for (const Power& p : powers_) {
    if (p.var == v) return p.exp;
  }
  return 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.powers_.reserve(powers_.size() + other.powers_.size());
  auto a = powers_.begin();
  auto b = other.powers_.begin();
  while (a != powers_.end() || b != other.powers_.end()) {
    if (b == other.powers_.end() || (a != powers_.end() && a->var < b->var)) {
      out.powers_.push_back(*a++);
    } else if (a == powers_.end() || b->var < a->var) {
      out.powers_.push_back(*b++);
    } else {
      out.powers_.push_back(Power{a->var, a->exp + b->exp});
      ++a;
      ++b;
    }
  }
  out.degree_ = degree_ + other.degree_;
  return out;
}

std::optional<Monomial> Monomial::divide(const Monomial& divisor) const {
  std::vector<Power> out;
  auto a = powers_.begin();
  for (const Power& d : divisor.powers_) {
    while (a != powers_.end() && a->var < d.var) out.push_back(*a++);
    if (a == powers_.end() || a->var != d.var || a->exp < d.exp) return std::nullopt;
    if (a->exp > d.exp) out.push_back(Power{d.var, a->exp - d.exp});
    ++a;
  }
  while (a != powers_.end()) out.push_back(*a++);
  return Monomial(std::move(out));
}

std::string Monomial::to_string(const VarSpace& space) const {
  if (powers_.empty()) return "1";
  std::string s;
  for (const Power& p : powers_) {
    if (!s.empty()) s += "*";
    s += space.name(p.var);
    if (p.exp > 1) s += "^" + std::to_string(p.exp);
  }
  return s;
}

bool GradedLex::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  const auto& pa = a.powers();
  const auto& pb = b.powers();
  std::size_t i = 0, j = 0;
  while (i < pa.size() && j < pb.size()) {
    if (pa[i].var == pb[j].var) {
      if (pa[i].exp != pb[j].exp) return pa[i].exp < pb[j].exp;
      ++i;
      ++j;
    } else if (pa[i].var < pb[j].var) {
      return false;  // a has the earlier variable with a positive exponent
    } else {
      return true;
    }
  }
  return i == pa.size() && j < pb.size();
}

std::size_t MonomialHash::operator()(const Monomial& m) const {
  std::size_t h = 1469598103934665603ULL;
  for (const auto& p : m.powers()) {
    h ^= (static_cast<std::size_t>(p.var.index) << 16U) ^ p.exp;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::constant(const Rational& c) {
  Polynomial p;
  p.add_term(Monomial(), c);
  return p;
}

Polynomial Polynomial::variable(VarId v) { return term(Monomial::variable(v), Rational(1)); }

Polynomial Polynomial::term(const Monomial& m, const Rational& c) {
  Polynomial p;
  p.add_term(m, c);
  return p;
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_constant());
}

int Polynomial::degree() const {
  if (terms_.empty()) return -1;
  return static_cast<int>(terms_.rbegin()->first.degree());
}

Rational Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Rational(0) : it->second;
}

std::vector<VarId> Polynomial::variables() const {
  std::vector<VarId> vars;
  for (const auto& [m, c] : terms_) {
    for (const auto& p : m.powers()) vars.push_back(p.var);
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  return vars;
}

void Polynomial::add_term(const Monomial& m, const Rational& c) {
  if (sgn(c) == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (sgn(it->second) == 0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(const Rational& factor) {
  if (sgn(factor) == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= factor;
  return *this;
}

Polynomial Polynomial::operator-() const {
  Polynomial out = *this;
  for (auto& [m, c] : out.terms_) c = -c;
  return out;
}

Polynomial Polynomial::pow(unsigned exponent) const {
  Polynomial result = constant(Rational(1));
  Polynomial base = *this;
  while (exponent > 0) {
    if (exponent & 1U) result = result * base;
    exponent >>= 1U;
    if (exponent > 0) base = base * base;
  }
  return result;
}

Rational Polynomial::eval(const std::map<VarId, Rational>& point) const {
  Rational sum(0);
  for (const auto& [m, c] : terms_) {
    Rational t = c;
    for (const auto& p : m.powers()) {
      auto it = point.find(p.var);
      if (it == point.end()) throw std::invalid_argument("missing assignment for variable #" + std::to_string(p.var.index));
      t *= nlitp::pow(it->second, p.exp);
    }
    sum += t;
  }
  return sum;
}

double Polynomial::eval(std::span<const double> point) const {
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = to_double(c);
    for (const auto& p : m.powers()) {
      if (p.var.index >= point.size()) throw std::invalid_argument("missing assignment for variable #" + std::to_string(p.var.index));
      for (unsigned e = 0; e < p.exp; ++e) t *= point[p.var.index];
    }
    sum += t;
  }
  return sum;
}

Polynomial Polynomial::substitute(const std::map<VarId, Polynomial>& bindings) const {
  std::map<std::pair<VarId, unsigned>, Polynomial> power_cache;
  auto power_of = [&](VarId v, unsigned e) -> const Polynomial& {
    auto key = std::make_pair(v, e);
    auto it = power_cache.find(key);
    if (it != power_cache.end()) return it->second;
    auto b = bindings.find(v);
    Polynomial base = b == bindings.end() ? Polynomial::variable(v) : b->second;
    return power_cache.emplace(key, base.pow(e)).first->second;
  };
  Polynomial out;
  for (const auto& [m, c] : terms_) {
    Polynomial t = constant(c);
    for (const auto& p : m.powers()) t = t * power_of(p.var, p.exp);
    out += t;
  }
  return out;
}

namespace {

std::string join_terms(const Polynomial::Terms& terms, const VarSpace& space,
                       const std::function<std::string(const Rational&)>& render) {
  if (terms.empty()) return "0";
  std::string s;
  for (const auto& [m, c] : terms) {
    const bool negative = sgn(c) < 0;
    const Rational magnitude = abs(c);
    std::string coef = render(magnitude);
    std::string body;
    if (m.is_constant()) {
      body = coef;
    } else if (magnitude == 1) {
      body = m.to_string(space);
    } else {
      body = coef + "*" + m.to_string(space);
    }
    if (s.empty()) {
      s = negative ? "-" + body : body;
    } else {
      s += negative ? " - " : " + ";
      s += body;
    }
  }
  return s;
}

}  // namespace

std::string Polynomial::to_string(const VarSpace& space) const {
  return join_terms(terms_, space, [](const Rational& r) { return r.get_str(); });
}

std::string Polynomial::to_decimal_string(const VarSpace& space, int decimals) const {
  // terms that round to zero are left out of the display
  Terms shown;
  for (const auto& [m, c] : terms_) {
    if (to_fixed(abs(c), decimals).find_first_not_of("0.") != std::string::npos) shown.emplace(m, c);
  }
  if (shown.empty()) return to_fixed(Rational(0), decimals);
  return join_terms(shown, space, [decimals](const Rational& r) { return to_fixed(r, decimals); });
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
Polynomial operator*(Polynomial a, const Rational& c) { return a *= c; }
Polynomial operator*(const Rational& c, Polynomial a) { return a *= c; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) out.add_term(ma * mb, ca * cb);
  }
  return out;
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) {
  for (const auto& [m, c] : p.terms()) {
    Term t{to_double(c), {}};
    for (const auto& pw : m.powers()) t.powers.emplace_back(pw.var.index, pw.exp);
    terms_.push_back(std::move(t));
  }
}

double CompiledPolynomial::operator()(std::span<const double> point) const {
  double sum = 0.0;
  for (const Term& t : terms_) {
    double v = t.coefficient;
    for (const auto& [idx, e] : t.powers) {
      const double x = point[idx];
      for (unsigned k = 0; k < e; ++k) v *= x;
    }
    sum += v;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Bases and boxes

MonomialBasis monomial_basis(std::vector<VarId> vars, unsigned d) {
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  MonomialBasis basis;
  basis.vars = vars;
  basis.degree = d;
  std::vector<Monomial::Power> current;
  std::function<void(std::size_t, unsigned)> enumerate = [&](std::size_t k, unsigned remaining) {
    if (k == vars.size()) {
      basis.entries.emplace_back(current);
      return;
    }
    for (unsigned e = 0; e <= remaining; ++e) {
      if (e > 0) current.push_back({vars[k], e});
      enumerate(k + 1, remaining - e);
      if (e > 0) current.pop_back();
    }
  };
  enumerate(0, d);
  std::sort(basis.entries.begin(), basis.entries.end(), GradedLex{});
  return basis;
}

std::uint64_t basis_size(unsigned n, unsigned d) {
  // C(n + d, d) computed incrementally; exact for the sizes used here.
  std::uint64_t result = 1;
  for (unsigned k = 1; k <= d; ++k) result = result * (n + k) / k;
  return result;
}

Rational Interval::magnitude() const { return std::max(abs(lo), abs(hi)); }

Interval operator+(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }

Interval operator*(const Interval& a, const Interval& b) {
  const Rational p[] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  return {*std::min_element(std::begin(p), std::end(p)), *std::max_element(std::begin(p), std::end(p))};
}

Interval interval_pow(const Interval& a, unsigned exponent) {
  if (exponent == 0) return {Rational(1), Rational(1)};
  const Rational lo = pow(a.lo, exponent);
  const Rational hi = pow(a.hi, exponent);
  if (exponent % 2 == 1) return {lo, hi};
  if (sgn(a.lo) <= 0 && sgn(a.hi) >= 0) return {Rational(0), std::max(lo, hi)};
  return {std::min(lo, hi), std::max(lo, hi)};
}

void Box::set(VarId v, Interval range) {
  if (range.lo > range.hi) throw std::invalid_argument("box interval with lo > hi");
  ranges_[v] = std::move(range);
}

const Interval& Box::at(VarId v) const {
  auto it = ranges_.find(v);
  if (it == ranges_.end()) throw std::invalid_argument("box does not cover variable #" + std::to_string(v.index));
  return it->second;
}

Interval interval_bound(const Polynomial& p, const Box& box) {
  Interval total{Rational(0), Rational(0)};
  for (const auto& [m, c] : p.terms()) {
    Interval t{c, c};
    for (const auto& pw : m.powers()) t = t * interval_pow(box.at(pw.var), pw.exp);
    total = total + t;
  }
  return total;
}

namespace {

// sum over |a| <= degree of prod_i w_i^{a_i}, for non-negative weights
Rational weighted_monomial_sum(const std::vector<Rational>& weights, unsigned degree) {
  // by_degree[k] = complete homogeneous symmetric polynomial h_k(weights)
  std::vector<Rational> by_degree(degree + 1, Rational(0));
  by_degree[0] = 1;
  for (const Rational& w : weights) {
    for (unsigned k = 1; k <= degree; ++k) by_degree[k] += w * by_degree[k - 1];
  }
  Rational total(0);
  for (const Rational& v : by_degree) total += v;
  return total;
}

}  // namespace

Rational abs_monomial_sum_bound(const std::vector<VarId>& vars, unsigned degree, const Box& box) {
  std::vector<Rational> weights;
  for (VarId v : vars) weights.push_back(box.at(v).magnitude());
  return weighted_monomial_sum(weights, degree);
}

Rational basis_square_sum_bound(const std::vector<VarId>& vars, unsigned d, const Box& box) {
  std::vector<Rational> weights;
  for (VarId v : vars) {
    const Rational m = box.at(v).magnitude();
    weights.push_back(m * m);
  }
  return weighted_monomial_sum(weights, d);
}

}  // namespace nlitp
