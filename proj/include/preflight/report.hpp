#pragma once

#include <string>

#include <json.hpp>

#include "preflight/runner.hpp"

namespace preflight {

// Canonical scorecard document. Field order is fixed, numbers carry full
// precision, and nothing non-deterministic enters the document except the
// D1 latency measurement itself; two runs with the same inputs and seed
// produce identical bytes when latency is skipped.
nlohmann::ordered_json scorecard_to_json(const EvaluationResult& result);

// Exit-code contract over the gating verdicts: 0 all PASS, 1 any FAIL,
// 3 otherwise (an INCONCLUSIVE blocks the gate without failing it).
int scorecard_exit_code(const Scorecard& card);

// Aligned human-readable table; numbers at four significant digits, same
// values the JSON carries.
std::string render_table(const EvaluationResult& result);

// Closed-schema check: required keys present, verdict strings from the
// enum, no unknown fields at the document level. Throws on violation.
void validate_scorecard_json(const nlohmann::ordered_json& doc);

}  // namespace preflight
