#include "nlitp/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlitp {

namespace {

Polynomial abs_terms(const Polynomial& p) {
  Polynomial out;
  for (const auto& [m, c] : p.terms()) out.add_term(m, abs(c));
  return out;
}

// |p| evaluated term-wise on |x|, an upper bound on the rounding scale.
double magnitude_at(const CompiledPolynomial& mag, const std::vector<double>& point) {
  std::vector<double> a(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) a[i] = std::abs(point[i]);
  return mag(a);
}

}  // namespace

ConjunctSampler::ConjunctSampler(const Conjunct& c, const Box& box, std::size_t dim) : dim_(dim) {
  std::vector<VarId> defined;
  for (const auto& d : c.definitions) {
    definitions_.emplace_back(d.var, CompiledPolynomial(d.value));
    defined.push_back(d.var);
  }
  std::vector<VarId> vars = c.variables();
  for (const auto& [v, range] : box.ranges()) vars.push_back(v);
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  for (VarId v : vars) {
    if (std::find(defined.begin(), defined.end(), v) != defined.end()) continue;
    if (!box.has(v)) throw std::invalid_argument("sampling box misses variable #" + std::to_string(v.index));
    free_.push_back(v);
    ranges_.emplace_back(to_double(box.at(v).lo), to_double(box.at(v).hi));
  }
  for (const Atom& a : c.atoms) atoms_.push_back({CompiledPolynomial(a.poly), CompiledPolynomial(abs_terms(a.poly)), a.rel});
}

bool ConjunctSampler::defines(VarId v) const {
  return std::any_of(definitions_.begin(), definitions_.end(), [v](const auto& d) { return d.first == v; });
}

bool ConjunctSampler::holds(const std::vector<double>& point) const {
  for (const CompiledAtom& a : atoms_) {
    const double v = a.poly(point);
    switch (a.rel) {
      case Relation::Ge:
        if (!(v >= 0.0)) return false;
        break;
      case Relation::Gt:
        if (!(v > 0.0)) return false;
        break;
      case Relation::Eq:
        if (!(std::abs(v) <= 1e-9 * (1.0 + magnitude_at(a.magnitude, point)))) return false;
        break;
    }
  }
  return true;
}

bool ConjunctSampler::draw(std::mt19937_64& rng, std::vector<double>& point, const std::vector<bool>& fixed) const {
  point.resize(dim_, 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < free_.size(); ++k) {
    const std::size_t idx = free_[k].index;
    if (idx < fixed.size() && fixed[idx]) continue;
    const auto [lo, hi] = ranges_[k];
    point[idx] = lo + (hi - lo) * unit(rng);
  }
  for (const auto& [v, q] : definitions_) {
    if (v.index < fixed.size() && fixed[v.index]) continue;
    point[v.index] = q(point);
  }
  return holds(point);
}

bool ConjunctSampler::draw(std::mt19937_64& rng, std::vector<double>& point) const { return draw(rng, point, {}); }

std::optional<std::vector<double>> ConjunctSampler::sample(std::mt19937_64& rng, std::size_t tries) const {
  std::vector<double> point(dim_, 0.0);
  for (std::size_t t = 0; t < tries; ++t) {
    if (draw(rng, point)) return point;
  }
  return std::nullopt;
}

std::vector<std::vector<double>> sample_points(const Conjunct& c, const Box& box, std::size_t dim, std::size_t n,
                                               std::mt19937_64& rng, std::size_t max_tries) {
  const ConjunctSampler sampler(c, box, dim);
  std::vector<std::vector<double>> out;
  std::vector<double> point(dim, 0.0);
  for (std::size_t t = 0; t < max_tries && out.size() < n; ++t) {
    if (sampler.draw(rng, point)) out.push_back(point);
  }
  return out;
}

namespace {

struct SideSamplers {
  std::vector<ConjunctSampler> samplers;
};

SideSamplers make_side(const PolyFormula& f, const std::vector<Box>& boxes, std::size_t dim) {
  if (boxes.size() != f.disjuncts.size()) throw std::invalid_argument("one sampling box per disjunct required");
  SideSamplers s;
  for (std::size_t k = 0; k < f.disjuncts.size(); ++k) s.samplers.emplace_back(f.disjuncts[k], boxes[k], dim);
  return s;
}

// Tries to extend a point fixed on `common` into the other side.
std::optional<std::size_t> complete_other(const SideSamplers& other, std::vector<double>& point,
                                          const std::vector<bool>& fixed, std::mt19937_64& rng, std::size_t tries) {
  for (std::size_t k = 0; k < other.samplers.size(); ++k) {
    const ConjunctSampler& s = other.samplers[k];
    bool needs_draw = false;
    for (VarId v : s.free_vars()) {
      if (!fixed[v.index]) needs_draw = true;
    }
    const std::size_t n = needs_draw ? tries : 1;
    std::vector<double> candidate = point;
    for (std::size_t t = 0; t < n; ++t) {
      if (s.draw(rng, candidate, fixed)) {
        point = candidate;
        return k;
      }
    }
  }
  return std::nullopt;
}

std::optional<FalsifyWitness> one_direction(const SideSamplers& from, const SideSamplers& to,
                                            const std::vector<VarId>& common, std::size_t dim,
                                            const SamplingOptions& opts, std::mt19937_64& rng, bool from_is_a) {
  std::vector<bool> fixed(dim, false);
  for (VarId v : common) fixed[v.index] = true;
  const std::size_t per = std::max<std::size_t>(1, opts.samples / std::max<std::size_t>(1, from.samplers.size()));
  std::vector<double> point(dim, 0.0);
  for (std::size_t k = 0; k < from.samplers.size(); ++k) {
    for (std::size_t t = 0; t < per; ++t) {
      if (!from.samplers[k].draw(rng, point)) continue;
      std::vector<double> joined = point;
      if (auto j = complete_other(to, joined, fixed, rng, opts.local_tries)) {
        FalsifyWitness w;
        w.point = joined;
        w.disjunct_a = from_is_a ? k : *j;
        w.disjunct_b = from_is_a ? *j : k;
        return w;
      }
    }
  }
  return std::nullopt;
}

// Dense scan when every variable involved is common and there are at most two.
std::optional<FalsifyWitness> grid_scan(const PolyFormula& phi, const std::vector<Box>& boxes_a, const PolyFormula& psi,
                                        const SideSamplers& sa, const SideSamplers& sb,
                                        const std::vector<VarId>& common, std::size_t dim, std::size_t per_axis) {
  if (common.empty() || common.size() > 2 || per_axis < 2) return std::nullopt;
  auto only_common = [&](const PolyFormula& f) {
    for (const Conjunct& c : f.disjuncts) {
      for (VarId v : c.variables()) {
        if (std::find(common.begin(), common.end(), v) == common.end()) return false;
      }
    }
    return true;
  };
  if (!only_common(phi) || !only_common(psi)) return std::nullopt;
  std::vector<std::pair<double, double>> hull;
  for (VarId v : common) {
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const Box& b : boxes_a) {
      if (!b.has(v)) return std::nullopt;
      lo = std::min(lo, to_double(b.at(v).lo));
      hi = std::max(hi, to_double(b.at(v).hi));
    }
    hull.emplace_back(lo, hi);
  }
  const std::size_t n = common.size() == 1 ? per_axis : std::min<std::size_t>(per_axis, 401);
  std::vector<double> point(dim, 0.0);
  std::vector<std::size_t> idx(common.size(), 0);
  while (true) {
    for (std::size_t a = 0; a < common.size(); ++a) {
      const auto [lo, hi] = hull[a];
      point[common[a].index] = lo + (hi - lo) * static_cast<double>(idx[a]) / static_cast<double>(n - 1);
    }
    for (std::size_t i = 0; i < sa.samplers.size(); ++i) {
      if (!sa.samplers[i].holds(point)) continue;
      for (std::size_t j = 0; j < sb.samplers.size(); ++j) {
        if (sb.samplers[j].holds(point)) return FalsifyWitness{point, i, j};
      }
    }
    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == n) idx[a++] = 0;
    if (a == idx.size()) break;
  }
  return std::nullopt;
}

}  // namespace

std::optional<FalsifyWitness> sample_falsify(const PolyFormula& phi, const std::vector<Box>& boxes_a,
                                             const PolyFormula& psi, const std::vector<Box>& boxes_b,
                                             const std::vector<VarId>& common, std::size_t dim,
                                             const SamplingOptions& opts) {
  const SideSamplers a = make_side(phi, boxes_a, dim);
  const SideSamplers b = make_side(psi, boxes_b, dim);
  if (auto w = grid_scan(phi, boxes_a, psi, a, b, common, dim, opts.grid)) return w;
  std::mt19937_64 rng(opts.seed);
  if (auto w = one_direction(a, b, common, dim, opts, rng, true)) return w;
  return one_direction(b, a, common, dim, opts, rng, false);
}

}  // namespace nlitp
