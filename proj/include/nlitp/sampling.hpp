#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "nlitp/formula.hpp"

namespace nlitp {

// Rejection sampler for one conjunct. Variables with a definition are
// computed from the others; every other variable is drawn uniformly from
// its range in the box.
class ConjunctSampler {
 public:
  ConjunctSampler(const Conjunct& c, const Box& box, std::size_t dim);

  // Draws all non-fixed variables once; true when the point satisfies the
  // conjunct. `point` has one slot per VarSpace variable.
  bool draw(std::mt19937_64& rng, std::vector<double>& point, const std::vector<bool>& fixed) const;
  bool draw(std::mt19937_64& rng, std::vector<double>& point) const;

  // Up to `tries` draws; the first satisfying point.
  std::optional<std::vector<double>> sample(std::mt19937_64& rng, std::size_t tries) const;

  bool holds(const std::vector<double>& point) const;
  // Variables drawn rather than computed.
  const std::vector<VarId>& free_vars() const { return free_; }
  bool defines(VarId v) const;

 private:
  struct CompiledAtom {
    CompiledPolynomial poly;
    CompiledPolynomial magnitude;  // sum of |terms|, for equality tolerance
    Relation rel;
  };
  std::size_t dim_;
  std::vector<VarId> free_;
  std::vector<std::pair<double, double>> ranges_;
  std::vector<std::pair<VarId, CompiledPolynomial>> definitions_;
  std::vector<CompiledAtom> atoms_;
};

struct SamplingOptions {
  std::uint64_t seed = 1;
  std::size_t samples = 100000;  // candidate draws per side
  std::size_t local_tries = 32;  // completions tried per projected point
  std::size_t grid = 2001;       // points per axis for low-dimensional scans
};

struct FalsifyWitness {
  std::vector<double> point;  // one slot per VarSpace variable
  std::size_t disjunct_a = 0;
  std::size_t disjunct_b = 0;
};

// Searches for x with (x, y) |= phi and (x, z) |= psi. `boxes_a[k]` gives
// the sampling ranges for phi's k-th disjunct (likewise for psi).
std::optional<FalsifyWitness> sample_falsify(const PolyFormula& phi, const std::vector<Box>& boxes_a,
                                             const PolyFormula& psi, const std::vector<Box>& boxes_b,
                                             const std::vector<VarId>& common, std::size_t dim,
                                             const SamplingOptions& opts);

// Up to n satisfying points of one conjunct (fewer when the budget runs out).
std::vector<std::vector<double>> sample_points(const Conjunct& c, const Box& box, std::size_t dim, std::size_t n,
                                               std::mt19937_64& rng, std::size_t max_tries);

}  // namespace nlitp
