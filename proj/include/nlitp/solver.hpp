#pragma once

#include <memory>
#include <string>

#include "nlitp/sdp.hpp"

namespace nlitp {

enum class SolveStatus { Feasible, Infeasible, Inaccurate, Timeout, Error };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double tolerance = 1e-8;  // relative primal residual accepted as feasible
  int max_iterations = 150;
  double time_limit = 600.0;  // seconds
  int refinement_steps = 3;
  // Complementarity is not pushed below centering * initial mu, so the
  // returned X keeps its eigenvalues away from zero.
  double centering = 1e-6;
  bool verbose = false;
};

struct SolverResult {
  SolveStatus status = SolveStatus::Error;
  SdpSolution solution;
  int iterations = 0;
  double seconds = 0.0;
  double residual = 0.0;  // max absolute row violation of the returned point
  std::string message;
};

class SdpSolver {
 public:
  virtual ~SdpSolver() = default;
  virtual SolverResult solve(const SdpProblem& problem, const SolverOptions& options) = 0;
  virtual std::string name() const = 0;
};

// Primal-dual interior point method (HKM direction, Mehrotra corrector) for
//   min tr X  s.t.  A(X) + B w = b,  X psd,  w free.
// The point returned for a feasible problem is strictly interior.
class NativeSolver final : public SdpSolver {
 public:
  SolverResult solve(const SdpProblem& problem, const SolverOptions& options) override;
  std::string name() const override { return "native"; }
};

// Writes problem.dat-s into a directory, optionally runs an external command
// on it, and reads the solution file back. With `command` empty, a
// pre-existing solution file is read (offline workflow).
class SdpaFileSolver final : public SdpSolver {
 public:
  SdpaFileSolver(std::string directory, std::string command);
  SolverResult solve(const SdpProblem& problem, const SolverOptions& options) override;
  std::string name() const override { return "sdpa-file"; }

 private:
  std::string directory_;
  std::string command_;
};

// "native" or "sdpa-file:<dir>". For sdpa-file, NLITP_SOLVER_CMD names the
// command to run; "{in}" and "{out}" in it are replaced by the file paths.
std::unique_ptr<SdpSolver> make_solver(const std::string& spec);

}  // namespace nlitp
