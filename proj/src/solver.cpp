#include "nlitp/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nlitp {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::Timeout: return "timeout";
    case SolveStatus::Error: return "error";
  }
  return "error";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Blocks = std::vector<MatrixXd>;

struct Tri {
  Eigen::Index a, b;
  double v;
};

struct BlockRow {
  Eigen::Index row;
  std::vector<Tri> entries;
};

// Row-scaled copy of the problem, indexed by block for the Schur complement.
struct Scaled {
  std::vector<Eigen::Index> dims;
  Eigen::Index m = 0;
  Eigen::Index nf = 0;
  std::vector<std::vector<BlockRow>> by_block;
  MatrixXd B;  // m x nf
  VectorXd b;

  VectorXd apply(const Blocks& X, const VectorXd& w) const {
    VectorXd out = VectorXd::Zero(m);
    for (std::size_t j = 0; j < dims.size(); ++j) {
      for (const BlockRow& r : by_block[j]) {
        double acc = 0.0;
        for (const Tri& t : r.entries) acc += (t.a == t.b ? 1.0 : 2.0) * t.v * X[j](t.a, t.b);
        out(r.row) += acc;
      }
    }
    if (nf > 0) out += B * w;
    return out;
  }

  Blocks adjoint(const VectorXd& y) const {
    Blocks out;
    for (std::size_t j = 0; j < dims.size(); ++j) {
      MatrixXd S = MatrixXd::Zero(dims[j], dims[j]);
      for (const BlockRow& r : by_block[j]) {
        const double yr = y(r.row);
        if (yr == 0.0) continue;
        for (const Tri& t : r.entries) {
          S(t.a, t.b) += yr * t.v;
          if (t.a != t.b) S(t.b, t.a) += yr * t.v;
        }
      }
      out.push_back(std::move(S));
    }
    return out;
  }

  // b - A(X) - B w accumulated in long double.
  VectorXd precise_residual(const Blocks& X, const VectorXd& w) const {
    std::vector<long double> acc(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      acc[i] = b(i);
      for (Eigen::Index f = 0; f < nf; ++f) acc[i] -= static_cast<long double>(B(i, f)) * w(f);
    }
    for (std::size_t j = 0; j < dims.size(); ++j) {
      for (const BlockRow& r : by_block[j]) {
        for (const Tri& t : r.entries) {
          acc[r.row] -= (t.a == t.b ? 1.0L : 2.0L) * static_cast<long double>(t.v) * X[j](t.a, t.b);
        }
      }
    }
    VectorXd out(m);
    for (Eigen::Index i = 0; i < m; ++i) out(i) = static_cast<double>(acc[i]);
    return out;
  }
};

Scaled scale_problem(const SdpProblem& p, std::vector<double>& row_scale) {
  Scaled s;
  for (std::size_t n : p.block_dims) s.dims.push_back(static_cast<Eigen::Index>(n));
  s.m = static_cast<Eigen::Index>(p.rows.size());
  s.nf = static_cast<Eigen::Index>(p.num_free);
  s.by_block.resize(p.block_dims.size());
  s.B = MatrixXd::Zero(s.m, s.nf);
  s.b = VectorXd::Zero(s.m);
  row_scale.assign(p.rows.size(), 1.0);
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    const SdpRow& row = p.rows[i];
    double norm2 = 0.0;
    for (const SdpEntry& e : row.entries) norm2 += (e.i == e.j ? 1.0 : 2.0) * e.value * e.value;
    for (const auto& [f, c] : row.free_terms) norm2 += c * c;
    const double scale = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 1.0;
    row_scale[i] = scale;
    s.b(static_cast<Eigen::Index>(i)) = scale * row.rhs;
    for (const auto& [f, c] : row.free_terms) s.B(static_cast<Eigen::Index>(i), f) += scale * c;
    for (const SdpEntry& e : row.entries) {
      auto& list = s.by_block[e.block];
      if (list.empty() || list.back().row != static_cast<Eigen::Index>(i)) list.push_back({static_cast<Eigen::Index>(i), {}});
      list.back().entries.push_back({e.i, e.j, scale * e.value});
    }
  }
  return s;
}

double inner(const Blocks& a, const Blocks& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += a[j].cwiseProduct(b[j]).sum();
  return acc;
}

void symmetrize(MatrixXd& m) { m = (0.5 * (m + m.transpose())).eval(); }

// Largest a in (0, 1] with X + a dX psd, scaled by tau.
double step_length(const Blocks& X, const Blocks& dX, double tau) {
  double alpha = 1.0;
  for (std::size_t j = 0; j < X.size(); ++j) {
    if (X[j].rows() == 0) continue;
    Eigen::LLT<MatrixXd> llt(X[j]);
    if (llt.info() != Eigen::Success) return 0.0;
    MatrixXd W = llt.matrixL().solve(dX[j]);
    W = llt.matrixL().solve(W.transpose()).transpose();
    symmetrize(W);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (lmin < 0.0) alpha = std::min(alpha, -tau / lmin);
  }
  return std::min(alpha, 1.0);
}

bool positive_definite(const Blocks& X) {
  for (const MatrixXd& x : X) {
    if (x.rows() == 0) continue;
    Eigen::LLT<MatrixXd> llt(x);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

class SaddleSystem {
 public:
  SaddleSystem(const MatrixXd& M, const MatrixXd& B) : B_(B) {
    ldlt_.compute(M);
    if (B.cols() > 0) {
      MinvB_ = ldlt_.solve(B);
      schur_.compute(B.transpose() * MinvB_);
    }
  }

  bool ok() const { return ldlt_.info() == Eigen::Success; }

  // [M B; B^T 0] [dy; dw] = [r1; r2]
  void solve(const VectorXd& r1, const VectorXd& r2, VectorXd& dy, VectorXd& dw) const {
    if (B_.cols() == 0) {
      dy = ldlt_.solve(r1);
      dw = VectorXd();
      return;
    }
    const VectorXd Minv_r1 = ldlt_.solve(r1);
    dw = schur_.solve(B_.transpose() * Minv_r1 - r2);
    dy = Minv_r1 - MinvB_ * dw;
  }

 private:
  const MatrixXd& B_;
  Eigen::LDLT<MatrixXd> ldlt_;
  MatrixXd MinvB_;
  Eigen::LDLT<MatrixXd> schur_;
};

MatrixXd schur_matrix(const Scaled& s, const Blocks& X, const Blocks& Zinv) {
  MatrixXd M = MatrixXd::Zero(s.m, s.m);
  for (std::size_t j = 0; j < s.dims.size(); ++j) {
    const Eigen::Index n = s.dims[j];
    const auto& rows = s.by_block[j];
    for (const BlockRow& rk : rows) {
      MatrixXd P = MatrixXd::Zero(n, n);  // X A_k
      for (const Tri& t : rk.entries) {
        P.col(t.b) += t.v * X[j].col(t.a);
        if (t.a != t.b) P.col(t.a) += t.v * X[j].col(t.b);
      }
      const MatrixXd G = P * Zinv[j];
      for (const BlockRow& ri : rows) {
        double acc = 0.0;
        for (const Tri& t : ri.entries) acc += t.a == t.b ? t.v * G(t.a, t.a) : t.v * (G(t.a, t.b) + G(t.b, t.a));
        M(ri.row, rk.row) += acc;
      }
    }
  }
  return 0.5 * (M + M.transpose());
}

// Least-norm correction of the equality residual, keeping X positive definite.
void refine(const Scaled& s, Blocks& X, VectorXd& w, int steps) {
  if (s.m == 0 || steps <= 0) return;
  MatrixXd K = MatrixXd::Zero(s.m, s.m);
  for (std::size_t j = 0; j < s.dims.size(); ++j) {
    // rows sharing a coordinate interact
    std::vector<std::vector<std::pair<Eigen::Index, double>>> at(static_cast<std::size_t>(s.dims[j] * s.dims[j]));
    for (const BlockRow& r : s.by_block[j]) {
      for (const Tri& t : r.entries) at[static_cast<std::size_t>(t.a * s.dims[j] + t.b)].emplace_back(r.row, t.v);
    }
    for (std::size_t c = 0; c < at.size(); ++c) {
      const bool diag = c / static_cast<std::size_t>(s.dims[j]) == c % static_cast<std::size_t>(s.dims[j]);
      const double weight = diag ? 1.0 : 2.0;
      for (const auto& [r1, v1] : at[c]) {
        for (const auto& [r2, v2] : at[c]) K(r1, r2) += weight * v1 * v2;
      }
    }
  }
  if (s.nf > 0) K += s.B * s.B.transpose();
  Eigen::LDLT<MatrixXd> ldlt(K);
  if (ldlt.info() != Eigen::Success) return;
  for (int k = 0; k < steps; ++k) {
    const VectorXd r = s.precise_residual(X, w);
    const VectorXd v = ldlt.solve(r);
    Blocks trial = X;
    const Blocks dX = s.adjoint(v);
    for (std::size_t j = 0; j < trial.size(); ++j) trial[j] += dX[j];
    if (!positive_definite(trial)) return;
    const VectorXd trial_w = s.nf > 0 ? VectorXd(w + s.B.transpose() * v) : w;
    if (s.precise_residual(trial, trial_w).lpNorm<Eigen::Infinity>() >= r.lpNorm<Eigen::Infinity>()) return;
    X = std::move(trial);
    w = trial_w;
  }
}

}  // namespace

SolverResult NativeSolver::solve(const SdpProblem& problem, const SolverOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  SolverResult result;

  std::vector<double> row_scale;
  const Scaled s = scale_problem(problem, row_scale);
  double D = 0.0;
  for (Eigen::Index n : s.dims) D += static_cast<double>(n);

  double xi = std::max(10.0, std::sqrt(std::max(D, 1.0)));
  for (Eigen::Index i = 0; i < s.m; ++i) xi = std::max(xi, D * (1.0 + std::abs(s.b(i))) / 2.0);

  Blocks X, Z, C;
  for (std::size_t j = 0; j < s.dims.size(); ++j) {
    const Eigen::Index n = s.dims[j];
    const double weight = problem.block_weights.empty() ? 1.0 : problem.block_weights[j];
    X.push_back(xi * MatrixXd::Identity(n, n));
    Z.push_back(MatrixXd::Identity(n, n));
    C.push_back(weight * MatrixXd::Identity(n, n));
  }
  VectorXd y = VectorXd::Zero(s.m);
  VectorXd w = VectorXd::Zero(s.nf);
  const double bnorm = s.b.lpNorm<Eigen::Infinity>();
  const double mu_floor = opt.centering * xi;

  auto finish = [&](SolveStatus status, std::string message) {
    result.status = status;
    result.message = std::move(message);
    result.solution.blocks = X;
    result.solution.free.assign(w.data(), w.data() + w.size());
    result.residual = max_row_residual(problem, result.solution);
    result.seconds = elapsed();
    return result;
  };

  if (D == 0.0 && s.nf == 0) {
    return finish(bnorm == 0.0 ? SolveStatus::Feasible : SolveStatus::Infeasible, "empty problem");
  }

  for (int it = 0; it < opt.max_iterations; ++it) {
    result.iterations = it;
    if (elapsed() > opt.time_limit) return finish(SolveStatus::Timeout, "time limit reached");

    const VectorXd rp = s.b - s.apply(X, w);
    const Blocks Aty = s.adjoint(y);
    Blocks Rd;
    for (std::size_t j = 0; j < X.size(); ++j) Rd.push_back(C[j] - Aty[j] - Z[j]);
    const VectorXd rf = s.nf > 0 ? VectorXd(-s.B.transpose() * y) : VectorXd();
    const double gap = inner(X, Z);
    const double mu = D > 0 ? gap / D : 0.0;
    const double relp = rp.lpNorm<Eigen::Infinity>() / (1.0 + bnorm);
    const double dual_obj = s.b.dot(y);
    if (opt.verbose) {
      std::fprintf(stderr, "ipm %3d relp %.3e mu %.3e by %.6e\n", it, relp, mu, dual_obj);
    }
    if (relp <= opt.tolerance) {
      refine(s, X, w, opt.refinement_steps);
      return finish(SolveStatus::Feasible, "primal feasible");
    }
    if (dual_obj > 1e10) {
      // y / b.y certifies infeasibility: A*(y) <= I / b.y and B^T y = 0
      return finish(SolveStatus::Infeasible, "dual objective unbounded");
    }

    Blocks Zinv;
    for (const MatrixXd& z : Z) {
      Eigen::LLT<MatrixXd> llt(z);
      if (llt.info() != Eigen::Success) return finish(SolveStatus::Inaccurate, "dual matrix lost definiteness");
      MatrixXd inv = llt.solve(MatrixXd::Identity(z.rows(), z.cols()));
      symmetrize(inv);
      Zinv.push_back(std::move(inv));
    }
    const MatrixXd M = schur_matrix(s, X, Zinv);
    const SaddleSystem K(M, s.B);
    if (!K.ok()) return finish(SolveStatus::Inaccurate, "Schur complement factorization failed");

    // X Rd Z^-1, symmetrized
    Blocks XRZ;
    for (std::size_t j = 0; j < X.size(); ++j) {
      MatrixXd t = X[j] * Rd[j] * Zinv[j];
      symmetrize(t);
      XRZ.push_back(std::move(t));
    }

    auto direction = [&](const Blocks& T, VectorXd& dy, VectorXd& dw, Blocks& dX, Blocks& dZ) {
      Blocks rhs_blocks;
      for (std::size_t j = 0; j < X.size(); ++j) rhs_blocks.push_back(T[j] - X[j] - XRZ[j]);
      const VectorXd r1 = rp - s.apply(rhs_blocks, VectorXd::Zero(s.nf));
      K.solve(r1, rf, dy, dw);
      const Blocks Atdy = s.adjoint(dy);
      dZ.clear();
      dX.clear();
      for (std::size_t j = 0; j < X.size(); ++j) {
        MatrixXd dz = Rd[j] - Atdy[j];
        symmetrize(dz);
        MatrixXd dx = T[j] - X[j] - X[j] * dz * Zinv[j];
        symmetrize(dx);
        dZ.push_back(std::move(dz));
        dX.push_back(std::move(dx));
      }
    };

    // predictor
    Blocks T0;
    for (std::size_t j = 0; j < X.size(); ++j) T0.push_back(MatrixXd::Zero(s.dims[j], s.dims[j]));
    VectorXd dy, dw;
    Blocks dX, dZ;
    direction(T0, dy, dw, dX, dZ);
    const double ap = step_length(X, dX, 1.0);
    const double ad = step_length(Z, dZ, 1.0);
    Blocks Xa = X, Za = Z;
    for (std::size_t j = 0; j < X.size(); ++j) {
      Xa[j] += ap * dX[j];
      Za[j] += ad * dZ[j];
    }
    const double mu_aff = D > 0 ? inner(Xa, Za) / D : 0.0;
    const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
    const double sigma = std::min(1.0, std::pow(std::max(mu_aff, 0.0) / std::max(mu, 1e-300), expon));
    // Never aim below the floor: the point we want is centered, not optimal.
    const double target = std::max(sigma * mu, mu_floor);

    // corrector: (sigma mu I - dXa dZa) Z^-1
    Blocks T;
    for (std::size_t j = 0; j < X.size(); ++j) {
      MatrixXd t = (target * MatrixXd::Identity(s.dims[j], s.dims[j]) - dX[j] * dZ[j]) * Zinv[j];
      symmetrize(t);
      T.push_back(std::move(t));
    }
    direction(T, dy, dw, dX, dZ);
    const double tau = 0.95;
    const double alpha_p = step_length(X, dX, tau);
    const double alpha_d = step_length(Z, dZ, tau);
    if (alpha_p <= 0.0 && alpha_d <= 0.0) return finish(SolveStatus::Inaccurate, "step length collapsed");
    for (std::size_t j = 0; j < X.size(); ++j) {
      X[j] += alpha_p * dX[j];
      symmetrize(X[j]);
      Z[j] += alpha_d * dZ[j];
      symmetrize(Z[j]);
    }
    if (s.nf > 0) w += alpha_p * dw;
    y += alpha_d * dy;
  }
  result.iterations = opt.max_iterations;
  refine(s, X, w, opt.refinement_steps);
  const double relp = (s.b - s.apply(X, w)).lpNorm<Eigen::Infinity>() / (1.0 + bnorm);
  if (relp <= opt.tolerance) return finish(SolveStatus::Feasible, "primal feasible after refinement");
  return finish(SolveStatus::Inaccurate, "iteration limit reached");
}

SdpaFileSolver::SdpaFileSolver(std::string directory, std::string command)
    : directory_(std::move(directory)), command_(std::move(command)) {}

SolverResult SdpaFileSolver::solve(const SdpProblem& problem, const SolverOptions& opt) {
  namespace fs = std::filesystem;
  const auto start = std::chrono::steady_clock::now();
  SolverResult result;
  auto done = [&](SolveStatus status, std::string message) {
    result.status = status;
    result.message = std::move(message);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  };
  std::error_code ec;
  fs::create_directories(directory_, ec);
  const fs::path in = fs::path(directory_) / "problem.dat-s";
  const fs::path out = fs::path(directory_) / "problem.sol";
  {
    std::ofstream f(in);
    if (!f) return done(SolveStatus::Error, "cannot write " + in.string());
    f << export_sdpa(problem);
  }
  if (!command_.empty()) {
    std::string cmd = command_;
    auto replace = [&cmd](const std::string& key, const std::string& value) {
      for (std::size_t pos = cmd.find(key); pos != std::string::npos; pos = cmd.find(key, pos + value.size())) {
        cmd.replace(pos, key.size(), value);
      }
    };
    replace("{in}", in.string());
    replace("{out}", out.string());
    if (command_.find("{in}") == std::string::npos) cmd += " " + in.string() + " " + out.string();
    fs::remove(out, ec);
    const int rc = std::system(cmd.c_str());
    if (rc != 0 && !fs::exists(out)) return done(SolveStatus::Error, "solver command failed with status " + std::to_string(rc));
  }
  std::ifstream f(out);
  if (!f) return done(SolveStatus::Error, "no solution file at " + out.string());
  std::stringstream buf;
  buf << f.rdbuf();
  const std::string text = buf.str();
  if (text.find("infeasible") != std::string::npos || text.find("INFEASIBLE") != std::string::npos) {
    return done(SolveStatus::Infeasible, "solver reported infeasibility");
  }
  try {
    result.solution = import_solution(text, problem);
  } catch (const std::exception& e) {
    return done(SolveStatus::Error, std::string("unreadable solution: ") + e.what());
  }
  result.residual = max_row_residual(problem, result.solution);
  double bnorm = 0.0;
  for (const SdpRow& r : problem.rows) bnorm = std::max(bnorm, std::abs(r.rhs));
  const bool close = result.residual <= std::max(opt.tolerance, 1e-7) * (1.0 + bnorm);
  return done(close ? SolveStatus::Feasible : SolveStatus::Inaccurate, close ? "solution read" : "solution violates rows");
}

std::unique_ptr<SdpSolver> make_solver(const std::string& spec) {
  if (spec.empty() || spec == "native") return std::make_unique<NativeSolver>();
  const std::string prefix = "sdpa-file:";
  if (spec.rfind(prefix, 0) == 0) {
    const char* cmd = std::getenv("NLITP_SOLVER_CMD");
    return std::make_unique<SdpaFileSolver>(spec.substr(prefix.size()), cmd ? cmd : "");
  }
  if (spec == "sdpa-file") {
    const char* dir = std::getenv("NLITP_SOLVER_DIR");
    const char* cmd = std::getenv("NLITP_SOLVER_CMD");
    if (!dir) throw std::invalid_argument("sdpa-file solver needs a directory (sdpa-file:<dir> or NLITP_SOLVER_DIR)");
    return std::make_unique<SdpaFileSolver>(dir, cmd ? cmd : "");
  }
  throw std::invalid_argument("unknown solver '" + spec + "'");
}

}  // namespace nlitp
