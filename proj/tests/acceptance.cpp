#include <CLI11.hpp>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "nlitp/certify.hpp"
#include "nlitp/invariant.hpp"
#include "nlitp/pipeline.hpp"
#include "nlitp/rational.hpp"
#include "nlitp/report.hpp"
#include "nlitp/sampling.hpp"
#include "nlitp/sdp.hpp"

using namespace nlitp;

namespace {

std::string data_dir = NLITP_DATA_DIR;

std::string read_data(const std::string& rel) {
  std::ifstream in(data_dir + "/" + rel);
  if (!in) throw std::runtime_error("cannot read " + rel);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Rejection-sampled points of every disjunct; counts those on the wrong side of h.
void sampled_separation(Outcome& out, const Problem& p, const InterpolateResult& r, std::size_t n) {
  std::mt19937_64 rng(2024);
  std::size_t k = 0, total = 0, bad = 0;
  for (const PolyFormula* f : {&p.phi, &p.psi}) {
    for (const Conjunct& c : f->disjuncts) {
      const auto pts = sample_points(c, r.witnesses.at(k++).box, p.space.size(), n, rng, 100 * n * 1000);
      out.require(pts.size() == n, "only " + std::to_string(pts.size()) + " samples in a disjunct");
      for (const auto& pt : pts) {
        const double v = r.h.eval(pt);
        bad += f->side == Side::A ? !(v > 0) : !(v < 0);
      }
      total += pts.size();
    }
  }
  out.require(bad == 0, std::to_string(bad) + " sampled violations");
  out.note(std::to_string(total) + " samples, " + std::to_string(bad) + " violations");
}

InterpolateResult run_interpolation(Problem& p, InterpolateOptions opt, Outcome& out) {
  const InterpolateResult r = interpolate(p, opt);
  out.require(r.status == InterpolateResult::Status::Sound, std::string("status ") + to_string(r.status));
  if (r.report) {
    out.require(r.report->verdict != SoundnessReport::Verdict::UnsoundRetry, "verdict unsound");
  }
  return r;
}

Outcome criterion1() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Problem p = parse_problem(read_data("problems/trivial.nlp"));
  InterpolateOptions opt;
  opt.exact = true;
  const InterpolateResult r = run_interpolation(p, opt, out);
  if (!r.tmpl || !r.exact) {
    out.require(false, "no certificate");
    return out;
  }
  const unsigned two_d = r.tmpl->relaxation_degree;
  out.require(two_d <= 4, "2d = " + std::to_string(two_d));
  out.require(r.exact->verified, "exact_verify: " + r.exact->reason);
  const Polynomial& h = r.exact->h;
  const VarId x = p.partition.common.at(0);
  const Rational half(1, 2);
  out.require(h.eval({{x, half}}) > 0 && h.eval({{x, -half}}) < 0, "sign at +-1/2");
  // every grid point of [-1, 1] inside phi or psi gets the right sign
  std::size_t bad = 0;
  const long n = 10000;
  for (long i = 0; i < n; ++i) {
    Rational v(2 * i - (n - 1), n - 1);
    v.canonicalize();
    const Rational hv = h.eval({{x, v}});
    if (v >= half && !(hv > 0)) ++bad;
    if (v <= -half && !(hv < 0)) ++bad;
  }
  out.require(bad == 0, std::to_string(bad) + " grid violations");
  const double s = seconds_since(t0);
  out.require(s < 5.0, "runtime");
  out.note("2d = " + std::to_string(two_d) + ", h = " + h.to_string(p.space) + ", grid 1e4 ok, " + fmt(s) + " s");
  return out;
}

Outcome criterion2() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Problem p = parse_problem(read_data("problems/ex2.nlp"));
  InterpolateOptions opt;
  const InterpolateResult r = run_interpolation(p, opt, out);
  if (!r.report) {
    out.require(false, "no report");
    return out;
  }
  const SoundnessReport& rep = *r.report;
  out.require(r.h.degree() == 2, "deg h = " + std::to_string(r.h.degree()));
  out.require(residual_term_ok(rep.gamma1, rep.epsilon), "gamma1 eps < 1/2");
  out.require(residual_term_ok(rep.gamma2, rep.beta), "gamma2 beta < 1/2");
  out.require(rep.gamma1 <= 6557, "gamma1 = " + fmt(to_double(rep.gamma1)) + " > 6557");
  out.require(rep.gamma2 <= 2320, "gamma2 = " + fmt(to_double(rep.gamma2)) + " > 2320");
  sampled_separation(out, p, r, 10000);
  const double s = seconds_since(t0);
  out.require(s < 120.0, "runtime");
  out.note("gamma1 eps = " + fmt(to_double(rep.gamma1 * rep.epsilon)) +
           ", gamma2 beta = " + fmt(to_double(rep.gamma2 * rep.beta)) + ", " + fmt(s) + " s");
  return out;
}

Outcome criterion3() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Problem p = parse_problem(read_data("problems/ex4.nlp"));
  InterpolateOptions opt;
  opt.degree_max = 2;
  const InterpolateResult r = run_interpolation(p, opt, out);
  out.require(p.phi.disjuncts.size() == 2 && p.psi.disjuncts.size() == 2, "two disjuncts per side");
  out.require(r.h.degree() == 2, "deg h = " + std::to_string(r.h.degree()));
  if (r.status == InterpolateResult::Status::Sound) sampled_separation(out, p, r, 10000);
  const double s = seconds_since(t0);
  out.require(s < 120.0, "runtime");
  out.note(fmt(s) + " s");
  return out;
}

Outcome criterion4() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Problem p = parse_problem(read_data("problems/ex5.nlp"));
  InterpolateOptions opt;
  opt.degree_min = 7;
  opt.degree_max = 7;
  const InterpolateResult r = run_interpolation(p, opt, out);
  out.require(r.h.degree() == 7, "deg h = " + std::to_string(r.h.degree()));
  if (r.status == InterpolateResult::Status::Sound) sampled_separation(out, p, r, 10000);
  const double s = seconds_since(t0);
  out.require(s < 600.0, "runtime");
  out.note(fmt(s) + " s");
  return out;
}

Outcome criterion5() {
  Outcome out;
  const Rational beta = cholesky_shift(1000, Rational(1000000), Rational(1000), FloatFormat::binary64());
  out.require(beta <= Rational(1, 1000000), "beta = " + fmt(to_double(beta)));
  out.note("beta = " + fmt(to_double(beta)));
  return out;
}

Eigen::MatrixXd with_spectrum(const Eigen::VectorXd& eig, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  const auto n = eig.size();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = n01(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  const Eigen::MatrixXd m = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

Outcome criterion6() {
  Outcome out;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t passes = 0, false_passes = 0;
  for (int k = 0; k < 500; ++k) {
    // eigenvalues near zero so that both outcomes occur
    Eigen::VectorXd eig(5);
    for (int i = 0; i < 5; ++i) eig(i) = i < 2 ? 1e-4 * u(rng) : std::abs(u(rng));
    const Eigen::MatrixXd m = with_spectrum(eig, rng);
    RationalMatrix exact(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) exact(i, j) = from_double(m(i, j));
    if (verified_cholesky(m, FloatFormat::binary64())) {
      ++passes;
      false_passes += !rational_psd(exact);
    }
  }
  out.require(false_passes == 0, std::to_string(false_passes) + " false passes");
  out.require(passes > 0 && passes < 500, "one-sided random suite");
  std::size_t rejected = 0, tried = 0;
  for (int dim : {1, 2, 5, 10, 20, 35, 50}) {
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd eig(dim);
      for (int i = 0; i < dim; ++i) eig(i) = 1.0001e-3 + std::abs(u(rng)) * (k % 2 ? 1e-2 : 10.0);
      ++tried;
      rejected += !verified_cholesky(with_spectrum(eig, rng), FloatFormat::binary64());
    }
  }
  out.require(rejected == 0, std::to_string(rejected) + " definite matrices rejected");
  out.note(std::to_string(passes) + "/500 random passes, all exact PSD; " + std::to_string(tried) +
           " matrices with min eigenvalue > 1e-3 up to dim 50 pass");
  return out;
}

void invariant_case(Outcome& out, const std::string& file, const std::function<void(const Loop&, const Polynomial&)>& extra) {
  const auto t0 = std::chrono::steady_clock::now();
  Loop loop = parse_loop(read_data(file));
  const InvariantResult r = squeeze_forward(loop, InvariantOptions{});
  out.require(r.answer == InvariantResult::Answer::Yes, file + ": " + to_string(r.answer) + " " + r.message);
  out.require(r.rounds <= 5, file + ": " + std::to_string(r.rounds) + " rounds");
  if (!r.invariant) return;
  const Validation v = validate_invariant(*r.invariant, loop, 10000, 77);
  out.require(v.passed() && v.pre_samples == 10000 && v.step_samples == 10000 && v.exit_samples == 10000,
              file + ": validation");
  extra(loop, *r.invariant);
  const double s = seconds_since(t0);
  out.require(s < 300.0, file + ": runtime");
  out.note(file + " yes after " + std::to_string(r.rounds) + " rounds, validated, " + fmt(s) + " s");
}

Outcome criterion7() {
  Outcome out;
  invariant_case(out, "loops/alg4.lp", [](const Loop&, const Polynomial&) {});
  invariant_case(out, "loops/car.lp", [&out](const Loop& loop, const Polynomial& g) {
    const VarId vc = *loop.space.find("vc");
    const long n = 100000;
    std::size_t bad = 0;
    for (long i = 0; i < n; ++i) {
      Rational v = Rational(-2) + Rational(57 * i, n - 1);
      v.canonicalize();
      if (g.eval({{vc, v}}) > 0 && !(v < Rational(4961, 100))) ++bad;
    }
    out.require(bad == 0, std::to_string(bad) + " scan points with vc >= 49.61 inside the invariant");
  });
  return out;
}

bool within_ulp(double a, double b) { return a == b || std::nextafter(a, b) == b; }

Outcome criterion8() {
  Outcome out;
  // the same input and seed twice
  std::string sdp_text[2], report_text[2];
  for (int k = 0; k < 2; ++k) {
    const std::string text = read_data("problems/ex4.nlp");
    Problem p = parse_problem(text);
    InterpolateOptions opt;
    opt.sampling.seed = 9;
    const InterpolateResult r = interpolate(p, opt);
    if (!r.tmpl) {
      out.require(false, "no template");
      return out;
    }
    sdp_text[k] = export_sdpa(flatten(*r.tmpl));
    RunContext ctx;
    ctx.input_path = "ex4.nlp";
    ctx.input_text = text;
    ctx.reproducible = true;
    report_text[k] = run_report(r, p, opt, ctx).dump(2);
  }
  out.require(sdp_text[0] == sdp_text[1], "SDPA text differs between runs");
  out.require(report_text[0] == report_text[1], "report differs between runs");

  const SdpProblem a = import_sdpa(sdp_text[0]);
  const SdpProblem b = import_sdpa(export_sdpa(a));
  out.require(a.block_dims == b.block_dims && a.num_free == b.num_free && a.rows.size() == b.rows.size(),
              "shape after round trip");
  std::size_t off = 0, compared = 0;
  using Key = std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>;
  for (std::size_t r = 0; r < std::min(a.rows.size(), b.rows.size()); ++r) {
    std::map<Key, double> ea, eb;
    for (const SdpEntry& e : a.rows[r].entries) ea[{e.block, std::min(e.i, e.j), std::max(e.i, e.j)}] += e.value;
    for (const SdpEntry& e : b.rows[r].entries) eb[{e.block, std::min(e.i, e.j), std::max(e.i, e.j)}] += e.value;
    std::map<std::uint32_t, double> fa(a.rows[r].free_terms.begin(), a.rows[r].free_terms.end());
    std::map<std::uint32_t, double> fb(b.rows[r].free_terms.begin(), b.rows[r].free_terms.end());
    if (ea.size() != eb.size() || fa.size() != fb.size()) {
      ++off;
      continue;
    }
    for (const auto& [key, v] : ea) {
      ++compared;
      const auto it = eb.find(key);
      off += it == eb.end() || !within_ulp(v, it->second);
    }
    for (const auto& [key, v] : fa) {
      ++compared;
      const auto it = fb.find(key);
      off += it == fb.end() || !within_ulp(v, it->second);
    }
    ++compared;
    off += !within_ulp(a.rows[r].rhs, b.rows[r].rhs);
  }
  out.require(off == 0, std::to_string(off) + " values beyond 1 ulp");
  out.note(std::to_string(compared) + " values round-trip within 1 ulp; SDPA text and reports byte-identical");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "run these criteria");
  app.add_option("--expect-fail", expect_fail, "criteria known to fail; they do not change the exit code");
  app.add_option("--data", data_dir, "data directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8};
  const std::set<int> selected(only.begin(), only.end());
  const std::set<int> known(expect_fail.begin(), expect_fail.end());
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const bool expected_red = known.count(id) > 0;
    std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : expected_red ? "FAIL (known)" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    if (o.pass == expected_red) ++unexpected;
  }
  return unexpected == 0 ? 0 : 1;
}
