#pragma once

#include <optional>
#include <string>
#include <vector>

#include "preflight/stats.hpp"

namespace preflight {

enum class Verdict { PASS, FAIL, INCONCLUSIVE, DIAGNOSTIC };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::PASS: return "PASS";
    case Verdict::FAIL: return "FAIL";
    case Verdict::INCONCLUSIVE: return "INCONCLUSIVE";
    case Verdict::DIAGNOSTIC: return "DIAGNOSTIC";
  }
  return "?";
}

enum class ReasonCode {
  none,
  ci_brackets_threshold,
  holm_disagreement,
  degenerate_interval,
  below_informative_floor,
};

inline const char* reason_name(ReasonCode r) {
  switch (r) {
    case ReasonCode::none: return "";
    case ReasonCode::ci_brackets_threshold: return "ci_brackets_threshold";
    case ReasonCode::holm_disagreement: return "holm_disagreement";
    case ReasonCode::degenerate_interval: return "degenerate_interval";
    case ReasonCode::below_informative_floor: return "below_informative_floor";
  }
  return "";
}

struct SubCriterion {
  std::string id;      // R1..D2
  std::string metric;  // pss, min_rank_correlation, ...
  double threshold = 0.0;
  Direction direction = Direction::upper_bounded;
  bool gating = true;    // false for the Equity pair
  bool ci_backed = true; // false for the point/boolean checks
};

// Default thresholds: R1 PSS<0.05, R2 rho>=0.95, I1 dAUC<=0.05,
// I2 ECE<=0.10, S1 maxTFR<=0.10, S2 W<=0.15, E1 rho_need>=0.70,
// E2 |gap|<=0.10, D1 latency<=500ms, D2 f_top3>=0.80.
std::vector<SubCriterion> default_criteria();
const SubCriterion* find_criterion(const std::vector<SubCriterion>& set,
                                   const std::string& id);

// CI decision rule. Upper-bounded criteria PASS when the interval sits
// entirely below the threshold and FAIL when entirely above; lower-bounded
// is the mirror image. Equity ids always come back DIAGNOSTIC; point checks
// compare the point estimate and never return INCONCLUSIVE.
Verdict classify(const IntervalEstimate& estimate,
                 const SubCriterion& criterion);

// classify() plus the reason code for INCONCLUSIVE outcomes.
struct Classified {
  Verdict verdict;
  ReasonCode reason = ReasonCode::none;
};
Classified classify_with_reason(const IntervalEstimate& estimate,
                                const SubCriterion& criterion);

struct CriterionResult {
  SubCriterion criterion;
  double value = 0.0;
  bool has_ci = false;
  double ci_lo = 0.0, ci_hi = 0.0;
  bool degenerate = false;
  double p_boot = 1.0;
  bool has_p = false;
  bool holm_exempt = false;
  std::string holm_exempt_reason;
  Verdict verdict = Verdict::INCONCLUSIVE;
  ReasonCode reason = ReasonCode::none;
  // For Equity: the verdict the CI rule would have produced.
  std::optional<Verdict> equivalent;
  bool skipped = false;
  std::string skip_reason;
  size_t sample_n = 0;
};

struct DimensionResult {
  std::string name;
  Verdict verdict = Verdict::INCONCLUSIVE;
  std::vector<CriterionResult> sub;
};

struct Scorecard {
  std::vector<DimensionResult> dimensions;  // R, I, S, E, D
  HolmFamily holm;
  std::vector<std::pair<std::string, std::string>> holm_exempt;
  bool gate = false;
  std::vector<std::string> warnings;

  const CriterionResult* find(const std::string& id) const;
  const DimensionResult* dimension(const std::string& name) const;
};

// Assembles verdicts into the scorecard: runs the Holm step-down over the
// gating family (exempt entries recorded, family size held at holm_m), then
// requires the CI rule and Holm to agree — a CI PASS without Holm support
// drops to INCONCLUSIVE. Missing gating sub-criteria raise
// incomplete-scorecard; skipped entries must carry a reason.
Scorecard assemble_scorecard(std::vector<CriterionResult> results,
                             double holm_alpha, int holm_m = 8,
                             std::vector<std::pair<std::string, double>>
                                 extra_family = {});

struct EquityProxyInput {
  std::string name;
  IntervalEstimate rho;
  double p_boot = 1.0;
  bool is_outcome_label = false;
};

struct EquityDiagnostic {
  std::vector<CriterionResult> per_proxy;  // E1-shaped, verdict DIAGNOSTIC
  bool disagreement = false;               // point estimates straddle 0.70
  std::vector<std::string> warnings;
};

// Per-proxy need-correlation diagnostics; a verdict-equivalent change
// between proxies raises the disagreement flag, and using the outcome label
// as proxy records a warning.
EquityDiagnostic equity_diagnostic(const std::vector<EquityProxyInput>& proxies,
                                   const SubCriterion& e1);

}  // namespace preflight
