#include "nlitp/sos.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "nlitp/rational.hpp"

namespace nlitp {

RationalMatrix RationalMatrix::from_double(const Eigen::MatrixXd& m) {
  RationalMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = nlitp::from_double(m(i, j));
  }
  return out;
}

namespace {

unsigned even_ceil(unsigned n) { return n + (n % 2); }

}  // namespace

SosTemplate build_template(const PolyFormula& phi, const PolyFormula& psi, const std::vector<VarId>& common,
                           unsigned h_degree, unsigned relaxation_degree, const Rational& scale_a,
                           const Rational& scale_b) {
  if (scale_a <= 0 || scale_b <= 0) throw std::invalid_argument("identity scale must be positive");
  unsigned max_atom = 0;
  for (const PolyFormula* f : {&phi, &psi}) {
    for (const Conjunct& c : f->disjuncts) {
      for (const Polynomial& p : c.inequalities()) max_atom = std::max(max_atom, static_cast<unsigned>(std::max(0, p.degree())));
    }
  }
  unsigned two_d = even_ceil(std::max(h_degree, max_atom));
  if (relaxation_degree != 0) {
    if (relaxation_degree % 2 != 0) throw std::invalid_argument("relaxation degree must be even");
    if (relaxation_degree < two_d) {
      throw std::invalid_argument("degree bound " + std::to_string(relaxation_degree) + " is below the atom degree " +
                                  std::to_string(two_d));
    }
    two_d = relaxation_degree;
  }

  SosTemplate t;
  t.common = common;
  std::sort(t.common.begin(), t.common.end());
  t.h_degree = h_degree;
  t.relaxation_degree = two_d;
  t.h_basis = monomial_basis(t.common, h_degree);

  for (const PolyFormula* f : {&phi, &psi}) {
    for (std::size_t k = 0; k < f->disjuncts.size(); ++k) {
      const Conjunct& c = f->disjuncts[k];
      SosIdentity id;
      id.side = f->side;
      id.scale = f->side == Side::A ? scale_a : scale_b;
      id.disjunct = k;
      id.vars = identity_variables(c, t.common);
      id.atoms = c.inequalities();
      const std::size_t index = t.identities.size();
      for (std::size_t a = 0; a < id.atoms.size(); ++a) {
        const unsigned deg = static_cast<unsigned>(std::max(0, id.atoms[a].degree()));
        GramBlock b;
        b.role = GramBlock::Role::Multiplier;
        b.identity = index;
        b.atom = a;
        b.basis = monomial_basis(id.vars, (two_d - deg) / 2);
        id.multiplier_blocks.push_back(t.blocks.size());
        t.blocks.push_back(std::move(b));
      }
      GramBlock r;
      r.role = GramBlock::Role::Remainder;
      r.identity = index;
      r.basis = monomial_basis(id.vars, two_d / 2);
      id.remainder_block = t.blocks.size();
      t.blocks.push_back(std::move(r));
      t.identities.push_back(std::move(id));
    }
  }
  return t;
}

SdpProblem flatten(const SosTemplate& t, double weight_a, double weight_b) {
  SdpProblem p;
  for (const GramBlock& b : t.blocks) p.block_dims.push_back(b.basis.size());
  if (weight_a != 1.0 || weight_b != 1.0) {
    for (const GramBlock& b : t.blocks) p.block_weights.push_back(t.identities[b.identity].side == Side::A ? weight_a : weight_b);
  }
  p.num_free = t.h_basis.size();

  for (const SosIdentity& id : t.identities) {
    const MonomialBasis rows = monomial_basis(id.vars, t.relaxation_degree);
    std::unordered_map<Monomial, std::size_t, MonomialHash> row_of;
    const std::size_t first = p.rows.size();
    for (std::size_t r = 0; r < rows.size(); ++r) row_of.emplace(rows.entries[r], first + r);
    p.rows.resize(first + rows.size());
    p.rows[first].rhs = -1.0;  // constant monomial is first in graded-lex order

    auto add_block = [&](std::size_t block, const Polynomial& factor) {
      const MonomialBasis& basis = t.blocks[block].basis;
      for (std::size_t a = 0; a < basis.size(); ++a) {
        for (std::size_t b = a; b < basis.size(); ++b) {
          const Monomial ab = basis.entries[a] * basis.entries[b];
          for (const auto& [m, c] : factor.terms()) {
            const auto it = row_of.find(ab * m);
            if (it == row_of.end()) throw std::logic_error("product exceeds the relaxation degree");
            p.rows[it->second].entries.push_back(
                {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), to_double(c)});
          }
        }
      }
    };
    for (std::size_t a = 0; a < id.atoms.size(); ++a) add_block(id.multiplier_blocks[a], id.atoms[a]);
    add_block(id.remainder_block, Polynomial::constant(1));
    for (std::size_t f = 0; f < t.h_basis.size(); ++f) {
      p.rows[row_of.at(t.h_basis.entries[f])].free_terms.emplace_back(static_cast<std::uint32_t>(f),
                                                                      -to_double(id.factor()));
    }
  }
  // Merge duplicate coordinates so every (block, i, j) appears once per row.
  for (SdpRow& row : p.rows) {
    std::sort(row.entries.begin(), row.entries.end(), [](const SdpEntry& x, const SdpEntry& y) {
      return std::tie(x.block, x.i, x.j) < std::tie(y.block, y.i, y.j);
    });
    std::vector<SdpEntry> merged;
    for (const SdpEntry& e : row.entries) {
      if (!merged.empty() && merged.back().block == e.block && merged.back().i == e.i && merged.back().j == e.j) {
        merged.back().value += e.value;
      } else {
        merged.push_back(e);
      }
    }
    std::erase_if(merged, [](const SdpEntry& e) { return e.value == 0.0; });
    row.entries = std::move(merged);
  }
  return p;
}

Polynomial gram_polynomial(const RationalMatrix& gram, const MonomialBasis& basis) {
  if (gram.rows != basis.size() || gram.cols != basis.size()) throw std::invalid_argument("Gram matrix does not match its basis");
  Polynomial out;
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = 0; b < basis.size(); ++b) {
      if (sgn(gram(a, b)) == 0) continue;
      out.add_term(basis.entries[a] * basis.entries[b], gram(a, b));
    }
  }
  return out;
}

namespace {

Certificate assemble(const std::vector<RationalMatrix>& grams, const std::vector<Rational>& h_coefficients,
                     const SosTemplate& t) {
  if (grams.size() != t.blocks.size() || h_coefficients.size() != t.h_basis.size()) {
    throw std::invalid_argument("solution does not match the template");
  }
  Certificate cert;
  cert.h_degree = t.h_degree;
  cert.relaxation_degree = t.relaxation_degree;
  for (std::size_t f = 0; f < t.h_basis.size(); ++f) cert.h.add_term(t.h_basis.entries[f], h_coefficients[f]);
  cert.epsilon = 0;
  for (const SosIdentity& id : t.identities) {
    std::vector<Polynomial> us;
    Polynomial residual = cert.h * id.factor() - Polynomial::constant(1);
    for (std::size_t a = 0; a < id.atoms.size(); ++a) {
      const std::size_t block = id.multiplier_blocks[a];
      us.push_back(gram_polynomial(grams[block], t.blocks[block].basis));
      residual -= us.back() * id.atoms[a];
    }
    Polynomial s = gram_polynomial(grams[id.remainder_block], t.blocks[id.remainder_block].basis);
    residual -= s;
    for (const auto& [m, c] : residual.terms()) cert.epsilon = std::max(cert.epsilon, abs(c));
    cert.multipliers.push_back(std::move(us));
    cert.remainders.push_back(std::move(s));
    cert.residuals.push_back(std::move(residual));
  }
  return cert;
}

}  // namespace

Certificate extract(const SdpSolution& solution, const SosTemplate& t, const SdpProblem& problem) {
  std::vector<RationalMatrix> grams;
  for (const Eigen::MatrixXd& g : solution.blocks) {
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    grams.push_back(RationalMatrix::from_double(sym));
  }
  std::vector<Rational> h;
  for (double w : solution.free) h.push_back(from_double(w));
  Certificate cert = assemble(grams, h, t);
  for (const Eigen::MatrixXd& g : solution.blocks) cert.grams.push_back(0.5 * (g + g.transpose()));
  cert.h_coefficients = solution.free;
  cert.row_residual = max_row_residual(problem, solution);
  return cert;
}

Certificate extract_exact(const std::vector<RationalMatrix>& grams, const std::vector<Rational>& h_coefficients,
                          const SosTemplate& t) {
  Certificate cert = assemble(grams, h_coefficients, t);
  for (const RationalMatrix& g : grams) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(g.rows), static_cast<Eigen::Index>(g.cols));
    for (std::size_t i = 0; i < g.rows; ++i) {
      for (std::size_t j = 0; j < g.cols; ++j) d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = to_double(g(i, j));
    }
    cert.grams.push_back(std::move(d));
  }
  for (const Rational& c : h_coefficients) cert.h_coefficients.push_back(to_double(c));
  cert.row_residual = to_double(cert.epsilon);
  return cert;
}

}  // namespace nlitp
