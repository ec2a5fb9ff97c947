#pragma once

#include <json.hpp>

#include <string>
#include <string_view>

#include "nlitp/pipeline.hpp"

namespace nlitp {

// {"decimal": "...", "num": "...", "den": "..."}
nlohmann::json rational_json(const Rational& r);
Rational rational_from_json(const nlohmann::json& j);

nlohmann::json soundness_json(const SoundnessReport& rep);

// Degrees, h and every Gram block: enough for re-verification.
nlohmann::json certificate_json(const Certificate& cert, const SosTemplate& t, const VarSpace& space);

struct StoredCertificate {
  unsigned h_degree = 0;
  unsigned relaxation_degree = 0;
  Rational scale_a{1}, scale_b{1};
  SdpSolution solution;
};
StoredCertificate certificate_from_json(const nlohmann::json& j);

// SHA-256 of the input text, hex.
std::string input_digest(std::string_view text);

struct RunContext {
  std::string input_path;
  std::string input_text;
  bool reproducible = false;  // omit wall times
  int decimals = 4;
};

nlohmann::json run_report(const InterpolateResult& result, const Problem& problem, const InterpolateOptions& options,
                          const RunContext& ctx);

}  // namespace nlitp
