#include "nlitp/sdp.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

#include "nlitp/rational.hpp"

namespace nlitp {

std::size_t SdpProblem::total_dim() const {
  std::size_t d = 0;
  for (std::size_t n : block_dims) d += n;
  return d;
}

double max_row_residual(const SdpProblem& problem, const SdpSolution& solution) {
  long double worst = 0.0L;
  for (const SdpRow& row : problem.rows) {
    long double acc = -static_cast<long double>(row.rhs);
    for (const SdpEntry& e : row.entries) {
      const long double x = solution.blocks[e.block](e.i, e.j);
      acc += (e.i == e.j ? 1.0L : 2.0L) * static_cast<long double>(e.value) * x;
    }
    for (const auto& [f, c] : row.free_terms) acc += static_cast<long double>(c) * solution.free[f];
    worst = std::max(worst, std::fabs(acc));
  }
  return static_cast<double>(worst);
}

std::string export_sdpa(const SdpProblem& problem) {
  std::ostringstream out;
  out << "\"nlitp feasibility problem\"\n";
  const std::size_t nblocks = problem.block_dims.size() + (problem.num_free > 0 ? 1 : 0);
  out << problem.rows.size() << "\n" << nblocks << "\n";
  for (std::size_t k = 0; k < problem.block_dims.size(); ++k) out << (k ? " " : "") << problem.block_dims[k];
  if (problem.num_free > 0) out << (problem.block_dims.empty() ? "" : " ") << "-" << 2 * problem.num_free;
  out << "\n";
  for (std::size_t r = 0; r < problem.rows.size(); ++r) out << (r ? " " : "") << format_double(problem.rows[r].rhs);
  out << "\n";
  const std::size_t lp_block = problem.block_dims.size() + 1;
  for (std::size_t r = 0; r < problem.rows.size(); ++r) {
    const SdpRow& row = problem.rows[r];
    for (const SdpEntry& e : row.entries) {
      out << r + 1 << " " << e.block + 1 << " " << e.i + 1 << " " << e.j + 1 << " " << format_double(e.value) << "\n";
    }
    for (const auto& [f, c] : row.free_terms) {
      out << r + 1 << " " << lp_block << " " << f + 1 << " " << f + 1 << " " << format_double(c) << "\n";
      out << r + 1 << " " << lp_block << " " << problem.num_free + f + 1 << " " << problem.num_free + f + 1 << " "
          << format_double(-c) << "\n";
    }
  }
  return out.str();
}

namespace {

// Whitespace/punctuation tokenizer shared by the readers.
class NumberStream {
 public:
  explicit NumberStream(std::string_view text) : text_(text) {}

  void skip_separators() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '"' ) {
        const std::size_t close = text_.find('"', pos_ + 1);
        pos_ = close == std::string_view::npos ? text_.size() : close + 1;
      } else if (c == '*') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '{' || c == '}' || c == '(' || c == ')') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  bool at_end() {
    skip_separators();
    return pos_ >= text_.size();
  }

  double next_double() {
    skip_separators();
    if (pos_ >= text_.size()) throw std::runtime_error("truncated numeric data");
    const std::string token = next_token();
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw std::runtime_error("malformed number '" + token + "'");
    return v;
  }

  long next_long() {
    const double v = next_double();
    if (v != std::floor(v)) throw std::runtime_error("expected an integer");
    return static_cast<long>(v);
  }

 private:
  std::string next_token() {
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '{' || c == '}' || c == '(' || c == ')') break;
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string strip_comment_lines(std::string_view text) {
  std::string out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && (line[first] == '"' || line[first] == '*')) continue;
    out += line;
    out += "\n";
  }
  return out;
}

}  // namespace

SdpProblem import_sdpa(std::string_view text) {
  const std::string body = strip_comment_lines(text);
  NumberStream in(body);
  SdpProblem problem;
  const long m = in.next_long();
  const long nblocks = in.next_long();
  if (m < 0 || nblocks < 0) throw std::runtime_error("negative SDPA sizes");
  std::vector<long> dims;
  for (long k = 0; k < nblocks; ++k) dims.push_back(in.next_long());
  long lp_block = -1;
  for (long k = 0; k < nblocks; ++k) {
    if (dims[k] < 0) {
      if (lp_block >= 0 || -dims[k] % 2 != 0) throw std::runtime_error("unsupported LP block layout");
      lp_block = k;
      problem.num_free = static_cast<std::size_t>(-dims[k] / 2);
    } else {
      problem.block_dims.push_back(static_cast<std::size_t>(dims[k]));
    }
  }
  problem.rows.resize(static_cast<std::size_t>(m));
  for (long r = 0; r < m; ++r) problem.rows[r].rhs = in.next_double();
  while (!in.at_end()) {
    const long mat = in.next_long();
    const long blk = in.next_long() - 1;
    const long i = in.next_long() - 1;
    const long j = in.next_long() - 1;
    const double v = in.next_double();
    if (mat == 0) {
      if (v != 0.0) throw std::runtime_error("non-zero objective is not supported");
      continue;
    }
    if (mat < 1 || mat > m || blk < 0 || blk >= nblocks || i < 0 || j < 0) throw std::runtime_error("SDPA entry out of range");
    SdpRow& row = problem.rows[static_cast<std::size_t>(mat - 1)];
    if (blk == lp_block) {
      if (i != j) throw std::runtime_error("off-diagonal entry in LP block");
      if (static_cast<std::size_t>(i) < problem.num_free) row.free_terms.emplace_back(static_cast<std::uint32_t>(i), v);
      continue;
    }
    const std::uint32_t block = static_cast<std::uint32_t>(blk > lp_block && lp_block >= 0 ? blk - 1 : blk);
    if (static_cast<std::size_t>(std::max(i, j)) >= problem.block_dims[block]) throw std::runtime_error("SDPA index out of range");
    row.entries.push_back({block, static_cast<std::uint32_t>(std::min(i, j)), static_cast<std::uint32_t>(std::max(i, j)), v});
  }
  return problem;
}

SdpSolution import_solution(std::string_view text, const SdpProblem& problem) {
  SdpSolution sol;
  for (std::size_t n : problem.block_dims) sol.blocks.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  std::vector<double> lp(2 * problem.num_free, 0.0);
  const std::size_t lp_index = problem.block_dims.size();  // 0-based SDPA block of the LP part

  const std::size_t ymat = text.find("yMat");
  if (ymat != std::string_view::npos) {
    // dense layout: nested braces, one group per block, LP blocks as a flat list
    std::string_view rest = text.substr(ymat + 4);
    const std::size_t eq = rest.find('=');
    if (eq != std::string_view::npos) rest = rest.substr(eq + 1);
    NumberStream in(rest);
    for (std::size_t k = 0; k < problem.block_dims.size(); ++k) {
      const auto n = static_cast<Eigen::Index>(problem.block_dims[k]);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) sol.blocks[k](i, j) = in.next_double();
      }
    }
    for (double& v : lp) v = in.next_double();
  } else {
    NumberStream in(text);
    for (std::size_t r = 0; r < problem.rows.size(); ++r) in.next_double();  // dual vector
    bool any = false;
    while (!in.at_end()) {
      const long mat = in.next_long();
      const long blk = in.next_long() - 1;
      const long i = in.next_long() - 1;
      const long j = in.next_long() - 1;
      const double v = in.next_double();
      if (mat != 1 && mat != 2) throw std::runtime_error("malformed solution entry");
      if (mat == 1) continue;
      any = true;
      if (blk < 0 || i < 0 || j < 0) throw std::runtime_error("solution index out of range");
      if (static_cast<std::size_t>(blk) == lp_index && problem.num_free > 0) {
        if (static_cast<std::size_t>(i) >= lp.size()) throw std::runtime_error("solution index out of range");
        lp[static_cast<std::size_t>(i)] = v;
        continue;
      }
      if (static_cast<std::size_t>(blk) >= problem.block_dims.size()) throw std::runtime_error("solution block out of range");
      auto& b = sol.blocks[static_cast<std::size_t>(blk)];
      if (i >= b.rows() || j >= b.cols()) throw std::runtime_error("solution index out of range");
      b(i, j) = v;
      b(j, i) = v;
    }
    if (!any && problem.total_dim() > 0) throw std::runtime_error("solution file has no primal matrix");
  }
  for (auto& b : sol.blocks) b = (0.5 * (b + b.transpose())).eval();
  sol.free.resize(problem.num_free);
  for (std::size_t f = 0; f < problem.num_free; ++f) sol.free[f] = lp[f] - lp[problem.num_free + f];
  return sol;
}

std::string export_solution(const SdpSolution& solution, const SdpProblem& problem) {
  std::ostringstream out;
  for (std::size_t r = 0; r < problem.rows.size(); ++r) out << (r ? " " : "") << "0";
  out << "\n";
  for (std::size_t k = 0; k < solution.blocks.size(); ++k) {
    const auto& b = solution.blocks[k];
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      for (Eigen::Index j = i; j < b.cols(); ++j) {
        if (b(i, j) != 0.0) out << "2 " << k + 1 << " " << i + 1 << " " << j + 1 << " " << format_double(b(i, j)) << "\n";
      }
    }
  }
  const std::size_t lp_block = solution.blocks.size() + 1;
  for (std::size_t f = 0; f < solution.free.size(); ++f) {
    const double w = solution.free[f];
    const std::size_t idx = w >= 0 ? f : problem.num_free + f;
    if (w != 0.0) out << "2 " << lp_block << " " << idx + 1 << " " << idx + 1 << " " << format_double(std::abs(w)) << "\n";
  }
  return out.str();
}

}  // namespace nlitp
