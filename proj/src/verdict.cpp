#include "preflight/verdict.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace preflight {

std::vector<SubCriterion> default_criteria() {
  return {
      {"R1", "pss", 0.05, Direction::upper_bounded, true, true},
      {"R2", "min_rank_correlation", 0.95, Direction::lower_bounded, true, false},
      {"I1", "delta_auc", 0.05, Direction::upper_bounded, true, true},
      {"I2", "max_subgroup_ece", 0.10, Direction::upper_bounded, true, false},
      {"S1", "max_tfr", 0.10, Direction::upper_bounded, true, true},
      {"S2", "boundary_width", 0.15, Direction::upper_bounded, true, false},
      {"E1", "rho_need", 0.70, Direction::lower_bounded, false, true},
      {"E2", "max_abs_need_gap", 0.10, Direction::upper_bounded, false, true},
      {"D1", "cohort_latency_ms", 500.0, Direction::upper_bounded, true, false},
      {"D2", "f_top3", 0.80, Direction::lower_bounded, true, false},
  };
}

const SubCriterion* find_criterion(const std::vector<SubCriterion>& set,
                                   const std::string& id) {
  for (const auto& c : set)
    if (c.id == id) return &c;
  return nullptr;
}

static bool is_equity(const SubCriterion& c) { return !c.gating; }

static Verdict point_verdict(double value, const SubCriterion& c) {
  bool ok = c.direction == Direction::upper_bounded ? value <= c.threshold
                                                    : value >= c.threshold;
  return ok ? Verdict::PASS : Verdict::FAIL;
}

static Classified ci_verdict(const IntervalEstimate& e, const SubCriterion& c) {
  if (e.degenerate)
    return {Verdict::INCONCLUSIVE, ReasonCode::degenerate_interval};
  if (c.direction == Direction::upper_bounded) {
    if (e.hi < c.threshold) return {Verdict::PASS, ReasonCode::none};
    if (e.lo > c.threshold) return {Verdict::FAIL, ReasonCode::none};
  } else {
    if (e.lo > c.threshold) return {Verdict::PASS, ReasonCode::none};
    if (e.hi < c.threshold) return {Verdict::FAIL, ReasonCode::none};
  }
  return {Verdict::INCONCLUSIVE, ReasonCode::ci_brackets_threshold};
}

Classified classify_with_reason(const IntervalEstimate& estimate,
                                const SubCriterion& criterion) {
  if (is_equity(criterion)) return {Verdict::DIAGNOSTIC, ReasonCode::none};
  if (!criterion.ci_backed)
    return {point_verdict(estimate.point, criterion), ReasonCode::none};
  return ci_verdict(estimate, criterion);
}

Verdict classify(const IntervalEstimate& estimate,
                 const SubCriterion& criterion) {
  return classify_with_reason(estimate, criterion).verdict;
}

const CriterionResult* Scorecard::find(const std::string& id) const {
  for (const auto& dim : dimensions)
    for (const auto& sub : dim.sub)
      if (sub.criterion.id == id) return &sub;
  return nullptr;
}

const DimensionResult* Scorecard::dimension(const std::string& name) const {
  for (const auto& dim : dimensions)
    if (dim.name == name) return &dim;
  return nullptr;
}

static Verdict combine(const std::vector<CriterionResult>& subs) {
  bool any_fail = false, any_inconclusive = false, any_pass = false;
  bool all_diagnostic = true;
  for (const auto& s : subs) {
    if (s.skipped) {
      any_inconclusive = true;
      all_diagnostic = false;
      continue;
    }
    switch (s.verdict) {
      case Verdict::FAIL: any_fail = true; all_diagnostic = false; break;
      case Verdict::INCONCLUSIVE: any_inconclusive = true; all_diagnostic = false; break;
      case Verdict::PASS: any_pass = true; all_diagnostic = false; break;
      case Verdict::DIAGNOSTIC: break;
    }
  }
  if (all_diagnostic) return Verdict::DIAGNOSTIC;
  if (any_fail) return Verdict::FAIL;
  if (any_inconclusive) return Verdict::INCONCLUSIVE;
  if (any_pass) return Verdict::PASS;
  return Verdict::INCONCLUSIVE;
}

Scorecard assemble_scorecard(std::vector<CriterionResult> results,
                             double holm_alpha, int holm_m,
                             std::vector<std::pair<std::string, double>>
                                 extra_family) {
  static const char* kRequired[] = {"R1", "R2", "I1", "I2", "S1",
                                    "S2", "E1", "E2", "D1", "D2"};
  for (const char* id : kRequired) {
    const CriterionResult* found = nullptr;
    for (const auto& r : results)
      if (r.criterion.id == id) found = &r;
    if (!found)
      fail(Errc::incomplete_scorecard, std::string("missing sub-criterion ") + id);
    if (found->skipped && found->skip_reason.empty())
      fail(Errc::incomplete_scorecard,
           std::string("skipped without reason: ") + id);
  }

  Scorecard card;

  // Holm family over the gating sub-criteria that carry a p-value; exempt
  // ones still count toward m.
  std::vector<std::pair<std::string, double>> family;
  for (const auto& r : results) {
    if (!r.criterion.gating || r.skipped) continue;
    if (r.holm_exempt) {
      card.holm_exempt.emplace_back(r.criterion.id, r.holm_exempt_reason);
    } else if (r.has_p) {
      family.emplace_back(r.criterion.id, r.p_boot);
    }
  }
  for (auto& extra : extra_family) family.push_back(std::move(extra));
  int m = std::max<int>(holm_m, static_cast<int>(family.size()) +
                                    static_cast<int>(card.holm_exempt.size()));
  if (!family.empty()) card.holm = holm_bonferroni(family, holm_alpha, m);
  card.holm.alpha = holm_alpha;
  card.holm.m = m;

  // Final verdicts: a CI-backed gating PASS must survive the step-down or it
  // drops to INCONCLUSIVE; FAIL carries p ~ 1 so the rules cannot disagree.
  for (auto& r : results) {
    if (r.skipped) continue;
    if (r.criterion.gating && r.criterion.ci_backed && r.has_p &&
        r.verdict == Verdict::PASS && !card.holm.rejected(r.criterion.id)) {
      r.verdict = Verdict::INCONCLUSIVE;
      r.reason = ReasonCode::holm_disagreement;
    }
  }

  auto take = [&](std::initializer_list<const char*> ids) {
    std::vector<CriterionResult> subs;
    for (const char* id : ids)
      for (auto& r : results)
        if (r.criterion.id == id) subs.push_back(r);
    return subs;
  };
  card.dimensions.push_back({"reliability", Verdict::PASS, take({"R1", "R2"})});
  card.dimensions.push_back({"inclusivity", Verdict::PASS, take({"I1", "I2"})});
  card.dimensions.push_back({"sensitivity", Verdict::PASS, take({"S1", "S2"})});
  card.dimensions.push_back({"equity", Verdict::DIAGNOSTIC, take({"E1", "E2"})});
  card.dimensions.push_back({"deployability", Verdict::PASS, take({"D1", "D2"})});
  for (auto& dim : card.dimensions) dim.verdict = combine(dim.sub);

  // Deployment gate: the four-way conjunction; Equity never participates.
  card.gate = true;
  for (const auto& dim : card.dimensions) {
    if (dim.name == "equity") continue;
    if (dim.verdict != Verdict::PASS) card.gate = false;
  }
  return card;
}

EquityDiagnostic equity_diagnostic(const std::vector<EquityProxyInput>& proxies,
                                   const SubCriterion& e1) {
  if (proxies.empty())
    fail(Errc::config_error, "equity diagnostic needs at least one proxy");

  EquityDiagnostic out;
  bool any_above = false, any_below = false;
  for (const auto& p : proxies) {
    CriterionResult r;
    r.criterion = e1;
    r.criterion.id = "E1";
    r.value = p.rho.point;
    r.has_ci = !p.rho.degenerate && !std::isnan(p.rho.lo);
    r.ci_lo = p.rho.lo;
    r.ci_hi = p.rho.hi;
    r.degenerate = p.rho.degenerate;
    r.p_boot = p.p_boot;
    r.has_p = true;
    r.verdict = Verdict::DIAGNOSTIC;
    SubCriterion shadow = e1;
    shadow.gating = true;  // what the CI rule would say if Equity gated
    r.equivalent = classify_with_reason(p.rho, shadow).verdict;
    out.per_proxy.push_back(std::move(r));

    (p.rho.point >= e1.threshold ? any_above : any_below) = true;
    if (p.is_outcome_label)
      out.warnings.push_back("proxy '" + p.name +
                             "' is the outcome label; need alignment is "
                             "circular");
  }
  out.disagreement = any_above && any_below;
  return out;
}

}  // namespace preflight
