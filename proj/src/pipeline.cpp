#include "nlitp/pipeline.hpp"

#include <cstdio>

namespace nlitp {

const char* to_string(InterpolateResult::Status s) {
  switch (s) {
    case InterpolateResult::Status::Sound: return "sound";
    case InterpolateResult::Status::Satisfiable: return "satisfiable";
    case InterpolateResult::Status::Exhausted: return "exhausted";
  }
  return "exhausted";
}

std::vector<ArchimedeanWitness> prepare_problem(Problem& problem) {
  std::vector<ArchimedeanWitness> w = check_archimedean(problem.phi, problem.partition.common, problem.box, problem.space);
  std::vector<ArchimedeanWitness> b = check_archimedean(problem.psi, problem.partition.common, problem.box, problem.space);
  w.insert(w.end(), b.begin(), b.end());
  return w;
}

Verification certify_solution(const SdpSolution& solution, const SosTemplate& t, const SdpProblem& sdp,
                              const std::vector<ArchimedeanWitness>& witnesses, const InterpolateOptions& options) {
  Verification v{extract(solution, t, sdp), {}, std::nullopt, false, {}};
  v.report = margin_check(v.certificate, t, witnesses, options.format);
  v.h = v.certificate.h;
  v.accepted = v.report.verdict == SoundnessReport::Verdict::Sound;
  if (options.exact) {
    v.exact = exact_verify(v.certificate, t, options.max_denominator);
    if (v.exact->verified) {
      v.report.verdict = SoundnessReport::Verdict::ExactVerified;
      v.h = v.exact->h;
      v.accepted = true;
    }
  }
  return v;
}

InterpolateResult interpolate(Problem& problem, const InterpolateOptions& opt) {
  InterpolateResult result;
  result.witnesses = prepare_problem(problem);
  if (opt.falsify) {
    std::vector<Box> boxes_a, boxes_b;
    const std::size_t na = problem.phi.disjuncts.size();
    for (std::size_t k = 0; k < result.witnesses.size(); ++k) (k < na ? boxes_a : boxes_b).push_back(result.witnesses[k].box);
    result.witness = sample_falsify(problem.phi, boxes_a, problem.psi, boxes_b, problem.partition.common,
                                    problem.space.size(), opt.sampling);
    if (result.witness) {
      result.status = InterpolateResult::Status::Satisfiable;
      return result;
    }
  }

  auto solver = make_solver(opt.solver);
  for (unsigned dh = opt.degree_min; dh <= opt.degree_max; dh += 2) {
    const unsigned base = build_template(problem.phi, problem.psi, problem.partition.common, dh).relaxation_degree;
    for (unsigned extra = 0; extra <= opt.relaxation_steps; ++extra) {
      SosTemplate t = build_template(problem.phi, problem.psi, problem.partition.common, dh, base + 2 * extra,
                                     opt.scale_a, opt.scale_b);
      const SdpProblem sdp = flatten(t, opt.weight_a, opt.weight_b);
      // on an unsound verdict, one retry with a tighter tolerance before moving on
      SolverOptions so = opt.solver_options;
      for (int round = 0; round < 2; ++round) {
        DegreeAttempt attempt;
        attempt.h_degree = dh;
        attempt.relaxation_degree = t.relaxation_degree;
        attempt.tolerance = so.tolerance;
        const SolverResult sr = solver->solve(sdp, so);
        attempt.status = sr.status;
        attempt.iterations = sr.iterations;
        attempt.seconds = sr.seconds;
        attempt.solver_message = sr.message;
        if (opt.verbose) {
          std::fprintf(stderr, "deg h %u (2d = %u), tol %.1e: %s after %d iterations, %.2fs\n", dh, t.relaxation_degree,
                       so.tolerance, to_string(sr.status), sr.iterations, sr.seconds);
        }
        if (sr.status != SolveStatus::Feasible && sr.status != SolveStatus::Inaccurate) {
          result.attempts.push_back(std::move(attempt));
          break;
        }
        Verification v = certify_solution(sr.solution, t, sdp, result.witnesses, opt);
        attempt.verdict = v.report.verdict;
        attempt.verdict_reason = v.report.reason;
        if (opt.verbose && !v.accepted) {
          std::fprintf(stderr, "  rejected: %s%s%s\n", v.report.reason.c_str(), v.exact ? "; exact: " : "",
                       v.exact ? v.exact->reason.c_str() : "");
        }
        result.attempts.push_back(std::move(attempt));
        if (v.accepted) {
          result.status = InterpolateResult::Status::Sound;
          result.h = std::move(v.h);
          result.certificate = std::move(v.certificate);
          result.report = std::move(v.report);
          result.exact = std::move(v.exact);
          result.tmpl = std::move(t);
          return result;
        }
        so.tolerance /= 10.0;
      }
    }
  }
  result.status = InterpolateResult::Status::Exhausted;
  return result;
}

}  // namespace nlitp
