#include "nlitp/certify.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <unordered_map>

#include "nlitp/rational.hpp"

// Built with -ffp-contract=off: the Cholesky error analysis assumes every
// multiply and add is rounded separately.

namespace nlitp {

namespace {

Rational pow2(int e) {
  mpz_class one = 1;
  Rational r;
  if (e >= 0) {
    mpz_class n = one << e;
    r = Rational(n);
  } else {
    mpz_class d = one << (-e);
    r = Rational(one, d);
  }
  r.canonicalize();
  return r;
}

Rational sized(std::size_t n) { return Rational(static_cast<unsigned long>(n)); }

template <typename T>
bool cholesky_pivots(const std::vector<T>& a, std::size_t n) {
  std::vector<T> l(n * n, T(0));
  for (std::size_t j = 0; j < n; ++j) {
    T s = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) s = s - l[j * n + k] * l[j * n + k];
    if (!(s > T(0))) return false;
    const T d = std::sqrt(s);
    l[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      T t = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) t = t - l[i * n + k] * l[j * n + k];
      l[i * n + j] = t / d;
    }
  }
  return true;
}

bool finite(const Eigen::MatrixXd& c) { return c.allFinite(); }

// Float matrix F with C - F diagonally dominant (hence C >= F); nullopt when
// an entry does not fit.
std::optional<std::vector<float>> float_below(const std::vector<Rational>& c, std::size_t n) {
  std::vector<float> f(n * n);
  std::vector<Rational> slack(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const float v = static_cast<float>(to_double(c[i * n + j]));
      if (!std::isfinite(v)) return std::nullopt;
      f[i * n + j] = v;
      slack[i] += abs(c[i * n + j] - from_double(static_cast<double>(v)));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Rational target = c[i * n + i] - slack[i];
    float v = static_cast<float>(to_double_down(target));
    while (from_double(static_cast<double>(v)) > target) v = std::nextafter(v, -HUGE_VALF);
    if (!std::isfinite(v)) return std::nullopt;
    f[i * n + i] = v;
  }
  return f;
}

std::vector<Rational> to_rationals(const Eigen::MatrixXd& c) {
  const auto n = static_cast<std::size_t>(c.rows());
  std::vector<Rational> out(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = from_double(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  }
  return out;
}

bool cholesky_on(const std::vector<Rational>& c, std::size_t n, const FloatFormat& fmt) {
  if (fmt.name == "binary32") {
    const auto f = float_below(c, n);
    return f && cholesky_pivots(*f, n);
  }
  std::vector<double> d(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    d[k] = to_double(c[k]);
    if (from_double(d[k]) != c[k]) {
      // only diagonals are ever shifted; round those down, the rest is exact
      if (k / n != k % n) return false;
      d[k] = to_double_down(c[k]);
    }
  }
  return cholesky_pivots(d, n);
}

}  // namespace

FloatFormat FloatFormat::binary64() { return {"binary64", pow2(-53), pow2(-1075)}; }
FloatFormat FloatFormat::binary32() { return {"binary32", pow2(-24), pow2(-150)}; }

FloatFormat FloatFormat::parse(const std::string& name) {
  if (name == "binary64") return binary64();
  if (name == "binary32") return binary32();
  throw std::invalid_argument("unknown float format '" + name + "'");
}

Rational cholesky_shift(std::size_t dim, const Rational& trace, const Rational& max_diagonal, const FloatFormat& fmt) {
  const Rational d = sized(dim);
  const Rational denom = Rational(1) - (2 * d + 2) * fmt.kappa;
  if (sgn(denom) <= 0) throw std::invalid_argument("dimension too large for the float format");
  Rational a = (d + 1) * fmt.kappa / denom * trace + 4 * (d + 1) * (2 * (d + 2) + max_diagonal) * fmt.eta;
  a.canonicalize();
  return a;
}

bool shift_precondition(std::size_t dim, const FloatFormat& fmt) {
  const Rational d = sized(dim);
  const Rational denom = Rational(1) - (2 * d + 2) * fmt.kappa;
  if (sgn(denom) <= 0) return false;
  const Rational lhs = (d + 1) * d * fmt.kappa / denom + 4 * (d + 1) * fmt.eta;
  return lhs <= Rational(1, 2);
}

bool float_cholesky(const Eigen::MatrixXd& c, const FloatFormat& fmt) {
  if (!finite(c)) throw std::invalid_argument("matrix has non-finite entries");
  if (c.rows() == 0) return true;
  return cholesky_on(to_rationals(c), static_cast<std::size_t>(c.rows()), fmt);
}

bool verified_cholesky(const Eigen::MatrixXd& c, const FloatFormat& fmt) {
  if (!finite(c)) throw std::invalid_argument("matrix has non-finite entries");
  const auto n = static_cast<std::size_t>(c.rows());
  if (n == 0) return true;
  std::vector<Rational> r = to_rationals(c);
  Rational trace = 0, max_diag = r[0];
  for (std::size_t i = 0; i < n; ++i) {
    trace += r[i * n + i];
    max_diag = std::max(max_diag, r[i * n + i]);
  }
  const Rational alpha = cholesky_shift(n, trace, max_diag, fmt);
  for (std::size_t i = 0; i < n; ++i) r[i * n + i] -= alpha;
  return cholesky_on(r, n, fmt);
}

Rational beta_bound(const std::vector<Eigen::MatrixXd>& blocks, const FloatFormat& fmt) {
  std::size_t dim = 0;
  Rational trace = 0;
  std::optional<Rational> max_diag;
  for (const Eigen::MatrixXd& b : blocks) {
    if (!finite(b)) throw std::invalid_argument("matrix has non-finite entries");
    dim += static_cast<std::size_t>(b.rows());
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      const Rational v = from_double(b(i, i));
      trace += v;
      if (!max_diag || v > *max_diag) max_diag = v;
    }
  }
  return cholesky_shift(dim, trace, max_diag.value_or(Rational(0)), fmt);
}

bool rational_psd(const RationalMatrix& input) {
  if (input.rows != input.cols) throw std::invalid_argument("square matrix required");
  RationalMatrix a = input;
  const std::size_t n = a.rows;
  std::vector<bool> done(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    // largest remaining diagonal as pivot
    std::optional<std::size_t> p;
    for (std::size_t i = 0; i < n; ++i) {
      if (!done[i] && (!p || a(i, i) > a(*p, *p))) p = i;
    }
    const std::size_t k = *p;
    const Rational pivot = a(k, k);
    if (sgn(pivot) < 0) return false;
    if (sgn(pivot) == 0) {
      // the largest diagonal is zero: the rest must vanish entirely
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (!done[i] && !done[j] && sgn(a(i, j)) != 0) return false;
        }
      }
      return true;
    }
    done[k] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || sgn(a(i, k)) == 0) continue;
      const Rational f = a(i, k) / pivot;
      for (std::size_t j = 0; j < n; ++j) {
        if (!done[j]) a(i, j) -= f * a(k, j);
      }
    }
  }
  return true;
}

bool residual_term_ok(const Rational& gamma, const Rational& error) { return gamma * error < Rational(1, 2); }

const char* to_string(SoundnessReport::Verdict v) {
  switch (v) {
    case SoundnessReport::Verdict::Sound: return "sound";
    case SoundnessReport::Verdict::UnsoundRetry: return "unsound-retry";
    case SoundnessReport::Verdict::ExactVerified: return "exact-verified";
  }
  return "unsound-retry";
}

SoundnessReport margin_check(const Certificate& cert, const SosTemplate& t,
                             const std::vector<ArchimedeanWitness>& witnesses, const FloatFormat& fmt) {
  if (witnesses.size() != t.identities.size()) throw std::invalid_argument("missing Archimedean witness for some disjunct");
  SoundnessReport rep;
  rep.format = fmt.name;
  rep.epsilon = cert.epsilon;
  for (const Eigen::MatrixXd& g : cert.grams) rep.dimension += static_cast<std::size_t>(g.rows());
  rep.beta = beta_bound(cert.grams, fmt);
  rep.precondition = shift_precondition(rep.dimension, fmt);
  rep.cholesky = true;
  for (std::size_t b = 0; b < cert.grams.size(); ++b) {
    if (!float_cholesky(cert.grams[b], fmt)) {
      rep.cholesky = false;
      rep.failed_block = b;
      break;
    }
  }

  const unsigned two_d = t.relaxation_degree;
  bool have_a = false, have_b = false;
  rep.margin_a = 1;
  rep.margin_b = 1;
  for (std::size_t k = 0; k < t.identities.size(); ++k) {
    const SosIdentity& id = t.identities[k];
    const Box& box = witnesses[k].box;
    for (VarId v : id.vars) {
      if (!box.has(v)) throw std::invalid_argument("witness box misses a variable of disjunct " + std::to_string(id.disjunct));
    }
    IdentityBounds ib;
    ib.side = id.side;
    ib.disjunct = id.disjunct;
    ib.monomial_sum = abs_monomial_sum_bound(id.vars, two_d, box);
    ib.basis_norm = basis_square_sum_bound(id.vars, two_d / 2, box);
    Rational sum_f = 0;
    for (const Polynomial& f : id.atoms) {
      Rational m = interval_bound(f, box).hi;
      if (sgn(m) < 0) m = 0;
      ib.atom_bounds.push_back(m);
      sum_f += m;
    }
    ib.gamma1 = (2 * sum_f + 1) * ib.monomial_sum;
    ib.gamma2 = 2 * (sum_f + 1) * ib.basis_norm;
    ib.gamma1.canonicalize();
    ib.gamma2.canonicalize();
    const Rational margin = Rational(1) - ib.gamma1 * rep.epsilon - ib.gamma2 * rep.beta;
    if (id.side == Side::A) {
      rep.margin_a = have_a ? std::min(rep.margin_a, margin) : margin;
      have_a = true;
    } else {
      rep.margin_b = have_b ? std::min(rep.margin_b, margin) : margin;
      have_b = true;
    }
    if (k == 0 || ib.gamma1 > rep.gamma1) rep.gamma1 = ib.gamma1;
    if (k == 0 || ib.gamma2 > rep.gamma2) rep.gamma2 = ib.gamma2;
    rep.identities.push_back(std::move(ib));
  }
  rep.margin_a.canonicalize();
  rep.margin_b.canonicalize();

  const bool eps_ok = residual_term_ok(rep.gamma1, rep.epsilon);
  const bool beta_ok = residual_term_ok(rep.gamma2, rep.beta);
  if (!rep.precondition) {
    rep.reason = "shift precondition fails for D = " + std::to_string(rep.dimension);
  } else if (!rep.cholesky) {
    rep.reason = "floating-point Cholesky fails on block " + std::to_string(*rep.failed_block);
  } else if (!eps_ok) {
    rep.reason = "gamma1 * eps >= 1/2";
  } else if (!beta_ok) {
    rep.reason = "gamma2 * beta >= 1/2";
  }
  rep.verdict = rep.reason.empty() ? SoundnessReport::Verdict::Sound : SoundnessReport::Verdict::UnsoundRetry;
  return rep;
}

ExactResult exact_verify(const Certificate& cert, const SosTemplate& t, const mpz_class& max_denominator) {
  ExactResult out;
  if (cert.grams.size() != t.blocks.size()) throw std::invalid_argument("certificate does not match the template");
  for (const Eigen::MatrixXd& g : cert.grams) {
    RationalMatrix r(static_cast<std::size_t>(g.rows()), static_cast<std::size_t>(g.cols()));
    for (std::size_t i = 0; i < r.rows; ++i) {
      for (std::size_t j = i; j < r.cols; ++j) {
        const double v = 0.5 * (g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) +
                                g(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
        // a shared grid keeps the exact elimination cheap
        r(i, j) = round_to_grid(from_double(v), max_denominator);
        r(j, i) = r(i, j);
      }
    }
    out.grams.push_back(std::move(r));
  }
  std::vector<Rational> h;
  for (double c : cert.h_coefficients) h.push_back(best_approximation(from_double(c), max_denominator));

  Certificate rounded = extract_exact(out.grams, h, t);
  for (std::size_t k = 0; k < t.identities.size(); ++k) {
    const SosIdentity& id = t.identities[k];
    const GramBlock& rb = t.blocks[id.remainder_block];
    RationalMatrix& g = out.grams[id.remainder_block];
    std::unordered_map<Monomial, std::vector<std::pair<std::size_t, std::size_t>>, MonomialHash> pairs;
    for (std::size_t a = 0; a < rb.basis.size(); ++a) {
      for (std::size_t b = 0; b < rb.basis.size(); ++b) pairs[rb.basis.entries[a] * rb.basis.entries[b]].emplace_back(a, b);
    }
    // s' = s + r makes sign*scale*h - 1 - sum u f - s' vanish
    for (const auto& [m, c] : rounded.residuals[k].terms()) {
      const auto it = pairs.find(m);
      if (it == pairs.end()) {
        out.reason = "residual monomial outside the remainder basis in identity " + std::to_string(k);
        out.failed_block = id.remainder_block;
        return out;
      }
      Rational share = c / Rational(static_cast<unsigned long>(it->second.size()));
      share.canonicalize();
      for (const auto& [a, b] : it->second) g(a, b) += share;
    }
  }
  const Certificate fixed = extract_exact(out.grams, h, t);
  out.h = fixed.h;
  if (sgn(fixed.epsilon) != 0) {
    out.reason = "identity does not hold exactly after absorption";
    return out;
  }
  for (std::size_t b = 0; b < out.grams.size(); ++b) {
    if (!rational_psd(out.grams[b])) {
      out.failed_block = b;
      out.reason = "block " + std::to_string(b) + " is not positive semidefinite after rounding";
      return out;
    }
  }
  out.verified = true;
  return out;
}

}  // namespace nlitp
