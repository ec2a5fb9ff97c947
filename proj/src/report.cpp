#include "nlitp/report.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <stdexcept>

#include "nlitp/rational.hpp"

namespace nlitp {

using nlohmann::json;

json rational_json(const Rational& r) {
  Rational c = r;
  c.canonicalize();
  return json{{"decimal", format_double(to_double(c))}, {"num", c.get_num().get_str()}, {"den", c.get_den().get_str()}};
}

Rational rational_from_json(const json& j) {
  Rational r(mpz_class(j.at("num").get<std::string>()), mpz_class(j.at("den").get<std::string>()));
  r.canonicalize();
  return r;
}

json soundness_json(const SoundnessReport& rep) {
  json ids = json::array();
  for (const IdentityBounds& ib : rep.identities) {
    json atoms = json::array();
    for (const Rational& m : ib.atom_bounds) atoms.push_back(rational_json(m));
    ids.push_back({{"side", ib.side == Side::A ? "A" : "B"},
                   {"disjunct", ib.disjunct},
                   {"monomial_sum_bound", rational_json(ib.monomial_sum)},
                   {"basis_norm_bound", rational_json(ib.basis_norm)},
                   {"atom_bounds", atoms},
                   {"gamma1", rational_json(ib.gamma1)},
                   {"gamma2", rational_json(ib.gamma2)}});
  }
  json j{{"format", rep.format},
         {"dimension", rep.dimension},
         {"epsilon", rational_json(rep.epsilon)},
         {"beta", rational_json(rep.beta)},
         {"gamma1", rational_json(rep.gamma1)},
         {"gamma2", rational_json(rep.gamma2)},
         {"margin_a", rational_json(rep.margin_a)},
         {"margin_b", rational_json(rep.margin_b)},
         {"shift_precondition", rep.precondition},
         {"cholesky", rep.cholesky},
         {"identities", ids},
         {"verdict", to_string(rep.verdict)},
         {"reason", rep.reason}};
  if (rep.failed_block) j["failed_block"] = *rep.failed_block;
  return j;
}

json certificate_json(const Certificate& cert, const SosTemplate& t, const VarSpace& space) {
  json blocks = json::array();
  for (std::size_t b = 0; b < cert.grams.size(); ++b) {
    const Eigen::MatrixXd& g = cert.grams[b];
    json rows = json::array();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < g.cols(); ++j) row.push_back(g(i, j));
      rows.push_back(std::move(row));
    }
    const GramBlock& gb = t.blocks[b];
    const SosIdentity& id = t.identities[gb.identity];
    blocks.push_back({{"side", id.side == Side::A ? "A" : "B"},
                      {"disjunct", id.disjunct},
                      {"role", gb.role == GramBlock::Role::Multiplier ? "multiplier" : "remainder"},
                      {"atom", gb.atom},
                      {"basis_degree", gb.basis.degree},
                      {"matrix", std::move(rows)}});
  }
  json h = json::array();
  for (std::size_t f = 0; f < t.h_basis.size(); ++f) {
    h.push_back({{"monomial", t.h_basis.entries[f].to_string(space)}, {"value", cert.h_coefficients[f]}});
  }
  Rational scale_a{1}, scale_b{1};
  for (const SosIdentity& id : t.identities) (id.side == Side::A ? scale_a : scale_b) = id.scale;
  return json{{"h_degree", t.h_degree},
              {"relaxation_degree", t.relaxation_degree},
              {"scale_a", rational_json(scale_a)},
              {"scale_b", rational_json(scale_b)},
              {"h", std::move(h)},
              {"blocks", std::move(blocks)}};
}

StoredCertificate certificate_from_json(const json& j) {
  StoredCertificate s;
  s.h_degree = j.at("h_degree").get<unsigned>();
  s.relaxation_degree = j.at("relaxation_degree").get<unsigned>();
  if (j.contains("scale_a")) s.scale_a = rational_from_json(j.at("scale_a"));
  if (j.contains("scale_b")) s.scale_b = rational_from_json(j.at("scale_b"));
  for (const json& term : j.at("h")) s.solution.free.push_back(term.at("value").get<double>());
  for (const json& block : j.at("blocks")) {
    const json& rows = block.at("matrix");
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[i].size()) != n) throw std::runtime_error("Gram matrix is not square");
      for (Eigen::Index k = 0; k < n; ++k) g(i, k) = rows[i][k].get<double>();
    }
    s.solution.blocks.push_back(std::move(g));
  }
  return s;
}

std::string input_digest(std::string_view text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

json run_report(const InterpolateResult& result, const Problem& problem, const InterpolateOptions& options,
                const RunContext& ctx) {
  json attempts = json::array();
  for (const DegreeAttempt& a : result.attempts) {
    json j{{"h_degree", a.h_degree},
           {"relaxation_degree", a.relaxation_degree},
           {"tolerance", a.tolerance},
           {"status", to_string(a.status)},
           {"iterations", a.iterations},
           {"solver_message", a.solver_message}};
    if (!ctx.reproducible) j["seconds"] = a.seconds;
    if (a.verdict) {
      j["verdict"] = to_string(*a.verdict);
      j["verdict_reason"] = a.verdict_reason;
    }
    attempts.push_back(std::move(j));
  }
  json out{{"input", ctx.input_path},
           {"input_sha256", input_digest(ctx.input_text)},
           {"status", to_string(result.status)},
           {"degree_schedule", {{"min", options.degree_min}, {"max", options.degree_max}, {"step", 2}}},
           {"solver", options.solver},
           {"tolerance", options.solver_options.tolerance},
           {"float_format", options.format.name},
           {"seed", options.sampling.seed},
           {"attempts", std::move(attempts)}};
  if (result.witness) {
    json point = json::object();
    for (std::size_t i = 0; i < problem.space.size(); ++i) point[problem.space.name(VarId{static_cast<std::uint32_t>(i)})] = result.witness->point[i];
    out["witness"] = {{"point", point}, {"disjunct_a", result.witness->disjunct_a}, {"disjunct_b", result.witness->disjunct_b}};
  }
  if (result.status == InterpolateResult::Status::Sound) {
    out["interpolant"] = {{"h", result.h.to_decimal_string(problem.space, ctx.decimals)},
                          {"h_exact", result.h.to_string(problem.space)},
                          {"relation", "h > 0"}};
    out["soundness"] = soundness_json(*result.report);
    if (result.exact) {
      out["exact"] = {{"verified", result.exact->verified}, {"reason", result.exact->reason}};
    }
    out["certificate"] = certificate_json(*result.certificate, *result.tmpl, problem.space);
  }
  return out;
}

}  // namespace nlitp
