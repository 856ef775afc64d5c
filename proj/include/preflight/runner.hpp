#pragma once

#include <optional>

#include "preflight/cohort.hpp"
#include "preflight/explain.hpp"
#include "preflight/metrics.hpp"
#include "preflight/model.hpp"
#include "preflight/perturb.hpp"
#include "preflight/stats.hpp"
#include "preflight/verdict.hpp"

namespace preflight {

// Everything evaluate_all needs beyond the cohort. Exactly one of scorer /
// scores must be set; in score-set mode every battery id must have a column
// and the scorer-only extras (latency, attributions) are skipped.
struct EvaluationPlan {
  const Scorer* scorer = nullptr;
  const ScoreSet* scores = nullptr;
  PerturbationBattery battery;
  double tau0 = 0.50;
  std::vector<double> sweep = default_sweep();
  double delta = 0.05;
  int ece_bins = 10;
  std::vector<std::string> subgroup_attributes;  // empty: all cohort attributes
  std::vector<std::string> proxies;              // empty: all cohort proxies
  bool include_label_proxy = true;
  BootstrapConfig boot;
  std::vector<SubCriterion> criteria = default_criteria();
  double holm_alpha = 0.05;
  int holm_m = 8;
  int latency_repetitions = 30;  // 0 skips D1
  int latency_warmup = 5;
  bool compute_attributions = true;  // false skips D2
  int shapley_samples = 128;
  bool expand_inclusivity_family = false;  // adds per-subgroup ECE tests
};

struct PerSpecReliability {
  std::string id;
  double pfr = 0.0;
  double rho = 0.0;
  bool rho_defined = false;
};

struct ProxyEquity {
  EquityReport report;
  IntervalEstimate rho;
  double rho_p = 1.0;
  IntervalEstimate max_gap;
  std::optional<Verdict> equivalent;
  bool is_outcome_label = false;
};

struct PlanEcho {
  double tau0;
  std::vector<double> sweep;
  double delta;
  int ece_bins;
  BootstrapConfig boot;
  std::vector<SubCriterion> criteria;
  double holm_alpha;
  int holm_m;
  std::vector<std::string> subgroup_attributes;
  std::vector<std::string> proxy_names;
  int latency_repetitions;
  int latency_warmup;
  bool compute_attributions;
};

struct EvaluationResult {
  Scorecard scorecard;

  double auroc = 0.0;
  bool auroc_defined = false;
  double brier_score = 0.0;

  std::vector<PerSpecReliability> reliability;
  std::vector<SubgroupMetricReport> subgroup_reports;
  double joint_delta_auc = 0.0;
  TfrProfile tfr_profile;
  std::vector<ProxyEquity> equity;
  bool equity_disagreement = false;
  LatencyResult latency;
  bool latency_measured = false;
  Top3Result top3;
  bool top3_computed = false;

  std::string cohort_hash;
  size_t cohort_n = 0;
  double cohort_prevalence = 0.0;
  PerturbationBattery battery_echo;
  PlanEcho echo;
};

// Runs the full five-dimension evaluation: applies the battery, scores (or
// reads the score set), computes every metric under the bootstrap, and
// assembles the verdict scorecard. Deterministic per plan seed regardless
// of thread count.
EvaluationResult evaluate_all(const Cohort& cohort, const EvaluationPlan& plan);

// Re-reads one criterion's stored interval against alternative thresholds.
std::vector<std::pair<double, Verdict>> threshold_sensitivity_sweep(
    const EvaluationResult& result, const std::string& criterion_id,
    std::span<const double> thresholds);

struct MonotonicityRow {
  double sigma;
  double pss;
};

struct MonotonicityTable {
  std::vector<MonotonicityRow> rows;
  bool monotone = false;  // non-decreasing within tolerance 0.002
};

// Point PSS for a ladder of noise scales sharing one draw stream (common
// random numbers), so the flip set can only grow with sigma.
MonotonicityTable pss_monotonicity_check(const Cohort& cohort,
                                         const Scorer& scorer,
                                         const std::vector<std::string>&
                                             noise_columns,
                                         std::span<const double> sigmas,
                                         uint64_t master_seed, double tau0);

}  // namespace preflight
