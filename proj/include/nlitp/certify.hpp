#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlitp/formula.hpp"
#include "nlitp/sos.hpp"

namespace nlitp {

struct FloatFormat {
  std::string name;
  Rational kappa;  // unit roundoff
  Rational eta;    // underflow unit

  static FloatFormat binary64();
  static FloatFormat binary32();
  static FloatFormat parse(const std::string& name);
};

// Shift of a dimension-D matrix with the given trace and largest diagonal:
//   (D+1)k/(1-(2D+2)k) tr + 4(D+1)(2(D+2) + max_i C_ii) eta
Rational cholesky_shift(std::size_t dim, const Rational& trace, const Rational& max_diagonal, const FloatFormat& fmt);

// (D+1)D k/(1-(2D+2)k) + 4(D+1) eta <= 1/2
bool shift_precondition(std::size_t dim, const FloatFormat& fmt);

// Cholesky in the format's arithmetic; true when every pivot is positive.
// For binary32 the matrix is first rounded to a float matrix below it in
// the Loewner order, so success still speaks about the given matrix.
bool float_cholesky(const Eigen::MatrixXd& c, const FloatFormat& fmt);

// Passes only if c is positive semidefinite: shifts the diagonal down by the
// Cholesky shift of c and runs float_cholesky on the result.
bool verified_cholesky(const Eigen::MatrixXd& c, const FloatFormat& fmt);

// beta for the block-diagonal matrix formed by the blocks.
Rational beta_bound(const std::vector<Eigen::MatrixXd>& blocks, const FloatFormat& fmt);

// Exact symmetric LDL^T with diagonal pivoting.
bool rational_psd(const RationalMatrix& m);

struct IdentityBounds {
  Side side = Side::A;
  std::size_t disjunct = 0;
  Rational monomial_sum;  // bound on R_{2d} (M1 / M3)
  Rational basis_norm;    // bound on E_d^T E_d (M2 / M4)
  std::vector<Rational> atom_bounds;  // M_f per atom
  Rational gamma1;
  Rational gamma2;
};

struct SoundnessReport {
  enum class Verdict { Sound, UnsoundRetry, ExactVerified };
  std::string format;
  std::size_t dimension = 0;  // D
  Rational epsilon;
  Rational beta;
  std::vector<IdentityBounds> identities;
  Rational gamma1;
  Rational gamma2;
  Rational margin_a;  // 1 - gamma1 eps - gamma2 beta over side A
  Rational margin_b;
  bool precondition = false;
  bool cholesky = false;
  std::optional<std::size_t> failed_block;
  Verdict verdict = Verdict::UnsoundRetry;
  std::string reason;
};

const char* to_string(SoundnessReport::Verdict v);

// gamma * error < 1/2
bool residual_term_ok(const Rational& gamma, const Rational& error);

// witnesses[k] belongs to template identity k (side A disjuncts first).
SoundnessReport margin_check(const Certificate& cert, const SosTemplate& t,
                             const std::vector<ArchimedeanWitness>& witnesses, const FloatFormat& fmt);

struct ExactResult {
  bool verified = false;
  std::optional<std::size_t> failed_block;
  std::string reason;
  std::vector<RationalMatrix> grams;  // after rounding and residual absorption
  Polynomial h;
};

// Rounds h and the Gram matrices to rationals with bounded denominators,
// spreads each identity residual over the remainder block, then checks
// every block for exact positive semidefiniteness.
ExactResult exact_verify(const Certificate& cert, const SosTemplate& t, const mpz_class& max_denominator);

}  // namespace nlitp
