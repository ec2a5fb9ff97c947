#pragma once

#include <json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlitp/pipeline.hpp"

namespace nlitp {

struct Assignment {
  VarId var;
  Polynomial value;
};

// {pre} while guard do body {post}
struct Loop {
  VarSpace space;
  std::vector<VarId> program_vars;
  std::vector<VarId> state;  // variables live at the loop head
  Condition pre;
  std::optional<Condition> guard;  // empty: unknown, the loop may exit or continue anywhere
  std::vector<Assignment> body;
  Condition post;
  Box domain_a;  // conjoined with the precondition
  Box domain_b;  // conjoined with every bad-state set
  Rational strict_margin{0};
  std::map<VarId, Polynomial> step;  // body as one simultaneous substitution on `state`
};

Loop parse_loop(std::string_view text);

// Composes assignments into a simultaneous substitution over all program
// variables, in order.
std::map<VarId, Polynomial> compose_body(const std::vector<Assignment>& body, const std::vector<VarId>& vars);

// Strict atoms become p >= 0 on the reachable side and p - margin >= 0 on
// the bad side.
enum class Approx { Over, Under };
PolyFormula to_formula(const Condition& c, Approx approx, const Rational& margin);

PolyFormula conjoin(const PolyFormula& a, const PolyFormula& b);
PolyFormula disjoin(PolyFormula a, const PolyFormula& b);
PolyFormula with_box(PolyFormula f, const Box& box);

// Strongest postcondition: fresh primed copies of the assigned variables,
// with definitions v = step(v'). `primes` receives v -> v'.
PolyFormula sp(const PolyFormula& f, Loop& loop, std::map<VarId, VarId>* primes = nullptr);
// Weakest precondition by substitution.
PolyFormula wp(const PolyFormula& f, const Loop& loop);

// Sound range narrowing by interval paving, starting from `start` (which
// must bound every non-defined variable of the conjunct). Returns nullopt
// when the conjunct has no point in the start box.
std::optional<Box> tighten_box(const Conjunct& c, const Box& start, std::size_t leaves = 256, int rounds = 6);

// For quadratic g with negative definite quadratic part, a box containing
// {g >= 0}; nullopt otherwise.
std::optional<Box> bounded_box(const Polynomial& g, const std::vector<VarId>& vars);

struct InvariantOptions {
  std::size_t max_rounds = 10;
  std::size_t validation_samples = 10000;
  std::size_t pave_leaves = 256;
  // Interpolation toward the bad states: identity scale on the bad side and
  // a light solver objective there.
  Rational bias{16};
  double bad_weight = 1e-3;
  InterpolateOptions interpolation = defaults();
  bool verbose = false;

  static InterpolateOptions defaults() {
    InterpolateOptions o;
    o.degree_min = 2;
    o.degree_max = 2;
    o.relaxation_steps = 2;
    o.exact = true;
    return o;
  }
};

struct HoareResult {
  enum class Verdict { Holds, Counterexample, Unknown };
  Verdict verdict = Verdict::Unknown;
  std::optional<std::vector<double>> counterexample;  // state before the step
  bool relative_to_domain = false;  // g was unbounded: checked inside domain_a only
  std::string detail;
};
const char* to_string(HoareResult::Verdict v);

// {g > 0 and guard} body {g > 0}
HoareResult hoare_check(const Polynomial& g, Loop& loop, const InvariantOptions& opt);

struct Validation {
  std::size_t pre_samples = 0, pre_violations = 0;
  std::size_t step_samples = 0, step_violations = 0;
  std::size_t exit_samples = 0, exit_violations = 0;
  bool passed() const { return pre_violations + step_violations + exit_violations == 0; }
};
// Sampled Pre => g > 0, preservation by one step, and g > 0 and not guard => post.
Validation validate_invariant(const Polynomial& g, const Loop& loop, std::size_t samples, std::uint64_t seed);

struct TrailEntry {
  std::size_t round = 0;
  std::size_t a_sets = 0, a_disjuncts = 0, b_sets = 0, b_disjuncts = 0;
  std::string interpolation;
  std::optional<Polynomial> h;
  std::optional<HoareResult> hoare;
  std::string action;
  double seconds = 0.0;
};

struct InvariantResult {
  enum class Answer { Yes, No, Exhausted };
  Answer answer = Answer::Exhausted;
  std::size_t rounds = 0;
  std::optional<Polynomial> invariant;  // the invariant is invariant > 0
  bool relative_to_domain = false;
  std::optional<Validation> validation;
  std::vector<TrailEntry> trail;
  std::string message;

  std::string invariant_text(const VarSpace& space, int decimals) const;
};
const char* to_string(InvariantResult::Answer a);

InvariantResult squeeze_forward(Loop& loop, const InvariantOptions& opt);
InvariantResult squeeze_backward(Loop& loop, const InvariantOptions& opt);

nlohmann::json invariant_report(const InvariantResult& r, const Loop& loop, int decimals, bool reproducible);

}  // namespace nlitp
