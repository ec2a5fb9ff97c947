#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nlitp {

// Upper-triangle entry (i <= j) of a symmetric coefficient matrix. The
// inner product with a symmetric X sums both triangles, so an off-diagonal
// entry contributes 2 * value * X(i, j).
struct SdpEntry {
  std::uint32_t block = 0;
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double value = 0.0;
};

// sum_k <A_k, X_k> + sum_f c_f w_f = rhs
struct SdpRow {
  std::vector<SdpEntry> entries;
  std::vector<std::pair<std::uint32_t, double>> free_terms;
  double rhs = 0.0;
};

// Feasibility problem over a block-diagonal PSD matrix and free scalars.
struct SdpProblem {
  std::vector<std::size_t> block_dims;
  std::size_t num_free = 0;
  std::vector<SdpRow> rows;
  std::vector<double> block_weights;  // objective weight per block, empty means all 1

  std::size_t total_dim() const;
};

struct SdpSolution {
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<double> free;
};

// Max over rows of |<A, X> + c.w - rhs|, accumulated in long double.
double max_row_residual(const SdpProblem& problem, const SdpSolution& solution);

// Sparse SDPA text. The rows become the equality constraints F_i . Y = c_i
// of SDPA's dual form; free scalars are split into w+ and w- on one
// trailing diagonal (LP) block of size 2 * num_free. F_0 is empty.
std::string export_sdpa(const SdpProblem& problem);
SdpProblem import_sdpa(std::string_view text);

// Solution for the layout produced by export_sdpa. Accepts CSDP-style
// sparse output ("y" line, then "matno blk i j value" with matno 2 for the
// primal matrix) and SDPA-style dense output (a "yMat" section).
SdpSolution import_solution(std::string_view text, const SdpProblem& problem);

// CSDP-style sparse solution text, mainly for tests and tools.
std::string export_solution(const SdpSolution& solution, const SdpProblem& problem);

}  // namespace nlitp
