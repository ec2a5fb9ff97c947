#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlitp/certify.hpp"
#include "nlitp/sampling.hpp"
#include "nlitp/solver.hpp"

namespace nlitp {

struct InterpolateOptions {
  unsigned degree_min = 2;  // bounds on deg h, tried in steps of 2
  unsigned degree_max = 10;
  unsigned relaxation_steps = 0;  // extra tries at 2d+2, 2d+4, ... per deg h
  Rational scale_a{1}, scale_b{1};  // h >= 1/scale_a on A, h <= -1/scale_b on B
  double weight_a = 1.0, weight_b = 1.0;  // solver objective on each side's Gram blocks
  std::string solver = "native";
  SolverOptions solver_options;
  FloatFormat format = FloatFormat::binary64();
  bool exact = false;
  mpz_class max_denominator = mpz_class(1) << 32;
  bool falsify = true;
  SamplingOptions sampling;
  bool verbose = false;
};

struct DegreeAttempt {
  unsigned h_degree = 0;
  unsigned relaxation_degree = 0;
  double tolerance = 0.0;
  SolveStatus status = SolveStatus::Error;
  int iterations = 0;
  double seconds = 0.0;
  std::string solver_message;
  std::optional<SoundnessReport::Verdict> verdict;
  std::string verdict_reason;
};

struct InterpolateResult {
  enum class Status { Sound, Satisfiable, Exhausted };
  Status status = Status::Exhausted;
  std::optional<FalsifyWitness> witness;
  std::vector<ArchimedeanWitness> witnesses;  // per identity, A side first
  std::vector<DegreeAttempt> attempts;
  std::optional<SosTemplate> tmpl;
  std::optional<Certificate> certificate;
  std::optional<SoundnessReport> report;
  std::optional<ExactResult> exact;
  Polynomial h;  // the accepted interpolant is h > 0
};

const char* to_string(InterpolateResult::Status s);

// Compactifies the problem's formulas in place (synthesized balls) and
// returns one witness per disjunct, phi's first.
std::vector<ArchimedeanWitness> prepare_problem(Problem& problem);

InterpolateResult interpolate(Problem& problem, const InterpolateOptions& options);

// Certifies a given numeric solution against a template; runs exact_verify
// when requested. Used by interpolate and by re-verification of stored
// certificates.
struct Verification {
  Certificate certificate;
  SoundnessReport report;
  std::optional<ExactResult> exact;
  bool accepted = false;
  Polynomial h;
};
Verification certify_solution(const SdpSolution& solution, const SosTemplate& t, const SdpProblem& sdp,
                              const std::vector<ArchimedeanWitness>& witnesses, const InterpolateOptions& options);

}  // namespace nlitp
