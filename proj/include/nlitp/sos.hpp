#pragma once

#include <vector>

#include "nlitp/formula.hpp"
#include "nlitp/sdp.hpp"

namespace nlitp {

// Dense rational matrix, row-major.
struct RationalMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Rational> data;

  RationalMatrix() = default;
  RationalMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  Rational& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static RationalMatrix from_double(const Eigen::MatrixXd& m);
};

struct GramBlock {
  enum class Role { Multiplier, Remainder };
  Role role = Role::Multiplier;
  std::size_t identity = 0;
  std::size_t atom = 0;  // index into the identity's atoms (multipliers only)
  MonomialBasis basis;
};

// sign * h - 1 = sum_k u_k * atoms[k] + s, with sign +1 for side A and -1
// for side B.
struct SosIdentity {
  Side side = Side::A;
  std::size_t disjunct = 0;
  std::vector<VarId> vars;
  std::vector<Polynomial> atoms;  // as p >= 0
  std::vector<std::size_t> multiplier_blocks;  // parallel to atoms
  std::size_t remainder_block = 0;

  Rational scale{1};  // sign * scale * h - 1 = sum u f + s

  int sign() const { return side == Side::A ? 1 : -1; }
  Rational factor() const { return scale * sign(); }
};

struct SosTemplate {
  std::vector<VarId> common;
  unsigned h_degree = 0;
  unsigned relaxation_degree = 0;  // 2d, even
  MonomialBasis h_basis;
  std::vector<SosIdentity> identities;
  std::vector<GramBlock> blocks;

  std::size_t sos_unknowns() const { return blocks.size(); }
};

// 2d is the smallest even number >= max(h_degree, atom degrees), or
// `relaxation_degree` when given (must be even and large enough). The scales
// weight h in the A and B identities.
SosTemplate build_template(const PolyFormula& phi, const PolyFormula& psi, const std::vector<VarId>& common,
                           unsigned h_degree, unsigned relaxation_degree = 0, const Rational& scale_a = Rational(1),
                           const Rational& scale_b = Rational(1));

// Free scalars are h's coefficients in h_basis order.
// Objective: weighted trace of the Gram blocks, by side.
SdpProblem flatten(const SosTemplate& t, double weight_a = 1.0, double weight_b = 1.0);

// sum_{a,b} G(a,b) basis[a] basis[b], exactly.
Polynomial gram_polynomial(const RationalMatrix& gram, const MonomialBasis& basis);

struct Certificate {
  unsigned h_degree = 0;
  unsigned relaxation_degree = 0;
  std::vector<Eigen::MatrixXd> grams;  // one per template block
  std::vector<double> h_coefficients;
  Polynomial h;  // exact image of the float coefficients
  std::vector<std::vector<Polynomial>> multipliers;  // [identity][atom]
  std::vector<Polynomial> remainders;                // [identity]
  std::vector<Polynomial> residuals;                 // sign*scale*h - 1 - sum u f - s
  Rational epsilon;  // max |coefficient| over all residuals
  double row_residual = 0.0;  // max row violation of the flattened system
};

Certificate extract(const SdpSolution& solution, const SosTemplate& t, const SdpProblem& problem);

// Same, with exact rational Gram matrices and h coefficients.
Certificate extract_exact(const std::vector<RationalMatrix>& grams, const std::vector<Rational>& h_coefficients,
                          const SosTemplate& t);

}  // namespace nlitp
