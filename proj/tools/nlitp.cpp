#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nlitp/invariant.hpp"
#include "nlitp/pipeline.hpp"
#include "nlitp/rational.hpp"
#include "nlitp/report.hpp"

using namespace nlitp;
using nlohmann::json;

namespace {

constexpr int kSound = 0;
constexpr int kUnsound = 1;
constexpr int kSatisfiable = 2;
constexpr int kExhausted = 3;
constexpr int kInputError = 4;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::pair<unsigned, unsigned> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const unsigned d = static_cast<unsigned>(std::stoul(text));
      return {d, d};
    }
    const unsigned lo = static_cast<unsigned>(std::stoul(text.substr(0, dots)));
    const unsigned hi = static_cast<unsigned>(std::stoul(text.substr(dots + 2)));
    if (lo > hi) throw InputError("empty degree range " + text);
    return {lo, hi};
  } catch (const std::logic_error&) {
    throw InputError("malformed degree range '" + text + "'");
  }
}

struct CommonFlags {
  std::string degree = "2..10";
  double tolerance = 1e-8;
  std::string solver = "native";
  bool exact = false;
  std::uint64_t seed = 1;
  std::size_t samples = 100000;
  double time_limit = 600.0;
  std::string report;
  int decimals = 4;
  std::string float_format = "binary64";
  bool reproducible = false;
  bool verbose = false;

  void attach(CLI::App* app) {
    app->add_option("--degree", degree, "Bounds on deg h, LO..HI, tried in steps of 2");
    app->add_option("--tolerance", tolerance, "Relative feasibility tolerance of the SDP solve");
    app->add_option("--solver", solver, "native | sdpa-file:<dir>");
    app->add_flag("--exact", exact, "Also verify the rounded certificate in exact arithmetic");
    app->add_option("--seed", seed, "Seed for all sampling");
    app->add_option("--samples", samples, "Falsification samples per side");
    app->add_option("--time-limit", time_limit, "Seconds per SDP solve");
    app->add_option("--report", report, "Write the JSON report here");
    app->add_option("--decimals", decimals, "Decimal places when printing h");
    app->add_option("--float-format", float_format, "binary64 | binary32");
    app->add_flag("--reproducible", reproducible, "Leave wall times out of the report");
    app->add_flag("-v,--verbose", verbose, "Progress on stderr");
  }

  InterpolateOptions options() const {
    InterpolateOptions o;
    std::tie(o.degree_min, o.degree_max) = parse_range(degree);
    if (tolerance <= 0) throw InputError("tolerance must be positive");
    o.solver_options.tolerance = tolerance;
    o.solver_options.time_limit = time_limit;
    o.solver = solver;
    if (solver == "sdpa-file" && !std::getenv("NLITP_SOLVER_DIR")) throw InputError("sdpa-file needs NLITP_SOLVER_DIR");
    o.exact = exact;
    o.format = FloatFormat::parse(float_format);
    o.sampling.seed = seed;
    o.sampling.samples = samples;
    o.verbose = verbose;
    return o;
  }
};

int cmd_interpolate(const std::string& path, const CommonFlags& flags) {
  const std::string text = slurp(path);
  Problem problem = parse_problem(text);
  const InterpolateOptions opt = flags.options();
  const InterpolateResult result = interpolate(problem, opt);
  const json rep = run_report(result, problem, opt, {path, text, flags.reproducible, flags.decimals});
  if (!flags.report.empty()) write_file(flags.report, rep.dump(2) + "\n");
  switch (result.status) {
    case InterpolateResult::Status::Sound: {
      std::printf("%s: h > 0 with\nh = %s\n", to_string(result.report->verdict),
                  result.h.to_decimal_string(problem.space, flags.decimals).c_str());
      std::printf("deg h <= %u, 2d = %u, eps = %s, beta = %s\n", result.tmpl->h_degree, result.tmpl->relaxation_degree,
                  format_double(to_double(result.report->epsilon)).c_str(), format_double(to_double(result.report->beta)).c_str());
      return kSound;
    }
    case InterpolateResult::Status::Satisfiable: {
      std::printf("satisfiable: phi and psi share a point\n");
      for (VarId v : problem.partition.common) {
        std::printf("  %s = %s\n", problem.space.name(v).c_str(), format_double(result.witness->point[v.index]).c_str());
      }
      return kSatisfiable;
    }
    case InterpolateResult::Status::Exhausted:
      std::printf("exhausted: no certified interpolant for deg h in %u..%u\n", opt.degree_min, opt.degree_max);
      for (const DegreeAttempt& a : result.attempts) {
        std::printf("  deg h %u (2d = %u): %s%s%s\n", a.h_degree, a.relaxation_degree, to_string(a.status),
                    a.verdict ? ", " : "", a.verdict ? to_string(*a.verdict) : "");
      }
      return kExhausted;
  }
  return kExhausted;
}

int cmd_verify(const std::string& cert_path, const std::string& problem_path, const CommonFlags& flags) {
  const json doc = json::parse(slurp(cert_path));
  const json& cj = doc.contains("certificate") ? doc.at("certificate") : doc;
  Problem problem = parse_problem(slurp(problem_path));
  InterpolateOptions opt = flags.options();
  const std::vector<ArchimedeanWitness> witnesses = prepare_problem(problem);
  StoredCertificate stored;
  try {
    stored = certificate_from_json(cj);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed certificate: ") + e.what());
  }
  const SosTemplate t =
      build_template(problem.phi, problem.psi, problem.partition.common, stored.h_degree, stored.relaxation_degree,
                     stored.scale_a, stored.scale_b);
  const SdpProblem sdp = flatten(t);
  if (stored.solution.blocks.size() != t.blocks.size() || stored.solution.free.size() != t.h_basis.size()) {
    throw InputError("certificate does not match the problem's template");
  }
  for (std::size_t b = 0; b < t.blocks.size(); ++b) {
    if (static_cast<std::size_t>(stored.solution.blocks[b].rows()) != t.blocks[b].basis.size()) {
      throw InputError("Gram block " + std::to_string(b) + " has the wrong size");
    }
  }
  const Verification v = certify_solution(stored.solution, t, sdp, witnesses, opt);
  json out{{"soundness", soundness_json(v.report)}};
  if (v.exact) out["exact"] = {{"verified", v.exact->verified}, {"reason", v.exact->reason}};
  if (!flags.report.empty()) write_file(flags.report, out.dump(2) + "\n");
  const std::string why = v.report.verdict == SoundnessReport::Verdict::ExactVerified
                              ? "margin check: " + (v.report.reason.empty() ? std::string("passed") : v.report.reason)
                              : v.report.reason;
  std::printf("%s%s%s\n", to_string(v.report.verdict), why.empty() ? "" : ": ", why.c_str());
  if (v.exact && !v.exact->verified) std::printf("exact check: %s\n", v.exact->reason.c_str());
  std::printf("eps = %s, beta = %s, gamma1 = %s, gamma2 = %s\n", format_double(to_double(v.report.epsilon)).c_str(),
              format_double(to_double(v.report.beta)).c_str(), format_double(to_double(v.report.gamma1)).c_str(),
              format_double(to_double(v.report.gamma2)).c_str());
  return v.accepted ? kSound : kUnsound;
}

std::vector<std::size_t> parse_grid(const std::string& spec, std::size_t dims) {
  std::vector<std::size_t> n;
  if (spec.empty()) return n;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      n.push_back(std::stoul(part));
    } catch (const std::logic_error&) {
      throw InputError("malformed grid spec '" + spec + "'");
    }
  }
  if (n.size() == 1) n.assign(dims, n[0]);
  if (n.size() != dims) throw InputError("grid spec needs one count per common variable");
  return n;
}

int cmd_grid(const std::string& problem_path, const std::string& cert_path, const std::string& grid_spec,
             const std::string& range, std::size_t local_tries, std::uint64_t seed, const std::string& out_path) {
  Problem problem = parse_problem(slurp(problem_path));
  const std::vector<ArchimedeanWitness> witnesses = prepare_problem(problem);
  const json doc = json::parse(slurp(cert_path));
  Polynomial h;
  if (doc.contains("interpolant")) {
    h = parse_polynomial(doc.at("interpolant").at("h_exact").get<std::string>(), problem.space, false);
  } else {
    const json& cj = doc.contains("certificate") ? doc.at("certificate") : doc;
    const StoredCertificate stored = certificate_from_json(cj);
    const MonomialBasis basis = monomial_basis(problem.partition.common, stored.h_degree);
    if (basis.size() != stored.solution.free.size()) throw InputError("certificate does not match the problem");
    for (std::size_t f = 0; f < basis.size(); ++f) h.add_term(basis.entries[f], from_double(stored.solution.free[f]));
  }
  const std::vector<VarId>& common = problem.partition.common;
  const std::vector<std::size_t> counts = parse_grid(grid_spec, common.size());

  std::ostringstream csv;
  for (VarId v : common) csv << problem.space.name(v) << ",";
  for (std::size_t k = 0; k < problem.phi.disjuncts.size(); ++k) csv << "phi_" << k + 1 << ",";
  for (std::size_t k = 0; k < problem.psi.disjuncts.size(); ++k) csv << "psi_" << k + 1 << ",";
  csv << "h_sign\n";

  if (!counts.empty()) {
    std::vector<std::pair<Rational, Rational>> bounds;
    for (VarId v : common) {
      if (!range.empty()) {
        const auto dots = range.find("..");
        if (dots == std::string::npos) throw InputError("range must be LO..HI");
        bounds.emplace_back(parse_decimal(range.substr(0, dots)), parse_decimal(range.substr(dots + 2)));
        continue;
      }
      std::optional<std::pair<Rational, Rational>> hull;
      for (const ArchimedeanWitness& w : witnesses) {
        if (!w.box.has(v)) continue;
        const Interval& iv = w.box.at(v);
        hull = hull ? std::make_pair(std::min(hull->first, iv.lo), std::max(hull->second, iv.hi)) : std::make_pair(iv.lo, iv.hi);
      }
      if (!hull) throw InputError("no range known for " + problem.space.name(v));
      bounds.push_back(*hull);
    }
    std::vector<ConjunctSampler> samplers;
    for (std::size_t k = 0; k < witnesses.size(); ++k) {
      const std::size_t na = problem.phi.disjuncts.size();
      const Conjunct& c = k < na ? problem.phi.disjuncts[k] : problem.psi.disjuncts[k - na];
      samplers.emplace_back(c, witnesses[k].box, problem.space.size());
    }
    std::vector<bool> fixed(problem.space.size(), false);
    for (VarId v : common) fixed[v.index] = true;
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(common.size(), 0);
    std::vector<double> point(problem.space.size(), 0.0);
    bool more = std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    while (more) {
      std::map<VarId, Rational> exact_point;
      for (std::size_t a = 0; a < common.size(); ++a) {
        const auto& [lo, hi] = bounds[a];
        Rational x = counts[a] == 1 ? lo : lo + (hi - lo) * Rational(static_cast<long>(idx[a])) / Rational(static_cast<long>(counts[a] - 1));
        x.canonicalize();
        point[common[a].index] = to_double(x);
        exact_point[common[a]] = x;
        csv << format_double(point[common[a].index]) << ",";
      }
      for (const ConjunctSampler& s : samplers) {
        bool member = false;
        const bool needs_draw =
            std::any_of(s.free_vars().begin(), s.free_vars().end(), [&](VarId v) { return !fixed[v.index]; });
        std::vector<double> candidate = point;
        for (std::size_t t = 0; t < (needs_draw ? local_tries : 1) && !member; ++t) member = s.draw(rng, candidate, fixed);
        csv << (member ? 1 : 0) << ",";
      }
      csv << sgn(h.eval(exact_point)) << "\n";
      std::size_t a = 0;
      while (a < idx.size() && ++idx[a] == counts[a]) idx[a++] = 0;
      more = a < idx.size();
    }
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    write_file(out_path, csv.str());
  }
  return 0;
}

int cmd_invariant(const std::string& path, const InvariantOptions& iopt, const CommonFlags& flags, const std::string& mode) {
  const std::string text = slurp(path);
  Loop loop = parse_loop(text);
  InvariantOptions o = iopt;
  o.interpolation = flags.options();
  o.interpolation.exact = true;
  o.interpolation.relaxation_steps = iopt.interpolation.relaxation_steps;
  o.verbose = flags.verbose;
  const InvariantResult r = mode == "backward" ? squeeze_backward(loop, o) : squeeze_forward(loop, o);
  const json rep = invariant_report(r, loop, flags.decimals, flags.reproducible);
  if (!flags.report.empty()) write_file(flags.report, rep.dump(2) + "\n");
  if (r.answer == InvariantResult::Answer::Yes) {
    std::printf("yes after %zu rounds: invariant\n%s\n", r.rounds, r.invariant_text(loop.space, flags.decimals).c_str());
    return kSound;
  }
  std::printf("%s after %zu rounds%s%s\n", to_string(r.answer), r.rounds, r.message.empty() ? "" : ": ", r.message.c_str());
  return r.answer == InvariantResult::Answer::No ? kUnsound : kExhausted;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polynomial interpolants from sum-of-squares certificates"};
  app.require_subcommand(1);

  CommonFlags interp_flags;
  std::string problem_path;
  auto* interp = app.add_subcommand("interpolate", "Synthesize and certify an interpolant h > 0");
  interp->add_option("problem", problem_path, "Problem file")->required();
  interp_flags.attach(interp);

  CommonFlags verify_flags;
  std::string cert_path, verify_problem;
  auto* verify = app.add_subcommand("verify", "Re-certify a stored certificate");
  verify->add_option("certificate", cert_path, "Report or certificate JSON")->required();
  verify->add_option("problem", verify_problem, "Problem file")->required();
  verify_flags.attach(verify);

  std::string grid_problem, grid_cert, grid_spec = "100", grid_range, grid_out;
  std::size_t grid_tries = 200;
  std::uint64_t grid_seed = 1;
  auto* grid = app.add_subcommand("grid", "CSV of region membership and the sign of h over a grid");
  grid->add_option("problem", grid_problem, "Problem file")->required();
  grid->add_option("certificate", grid_cert, "Report or certificate JSON")->required();
  grid->add_option("--grid", grid_spec, "Points per axis, N or NxM; empty for the header only")->expected(0, 1);
  grid->add_option("--range", grid_range, "LO..HI for every axis (default: witness boxes)");
  grid->add_option("--local-tries", grid_tries, "Draws of local variables per point and disjunct");
  grid->add_option("--seed", grid_seed, "Seed for the local draws");
  grid->add_option("-o,--output", grid_out, "CSV path (default stdout)");

  CommonFlags inv_flags;
  inv_flags.degree = "2..2";
  std::string loop_path, inv_mode = "forward";
  InvariantOptions inv_opt;
  auto* inv = app.add_subcommand("invariant", "Squeeze an inductive invariant for a loop");
  inv->add_option("loop", loop_path, "Loop file")->required();
  inv->add_option("--mode", inv_mode, "forward | backward")->check(CLI::IsMember({"forward", "backward"}));
  inv->add_option("--max-iters", inv_opt.max_rounds, "Round cap");
  inv->add_option("--check-samples", inv_opt.validation_samples, "Samples per post-hoc check");
  inv_flags.attach(inv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  try {
    if (*interp) return cmd_interpolate(problem_path, interp_flags);
    if (*verify) return cmd_verify(cert_path, verify_problem, verify_flags);
    if (*grid) return cmd_grid(grid_problem, grid_cert, grid_spec, grid_range, grid_tries, grid_seed, grid_out);
    if (*inv) return cmd_invariant(loop_path, inv_opt, inv_flags, inv_mode);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kInputError;
  }
  return kInputError;
}
