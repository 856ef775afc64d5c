#pragma once

#include <array>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "preflight/attribution.hpp"
#include "preflight/error.hpp"

namespace preflight {

class Scorer;
struct FeatureMatrix;

// ---------------------------------------------------------------------------
// Scalar kernels. All pure; safe to call from any number of threads.
// ---------------------------------------------------------------------------

// Mann-Whitney AUC with ties credited 0.5 per pair. Throws undefined-auc on
// a single-class label vector.
double auc(std::span<const double> scores, std::span<const int> labels);
// NaN instead of throwing; for resampling paths.
double auc_or_nan(std::span<const double> scores,
                  std::span<const int> labels) noexcept;

double brier(std::span<const double> scores, std::span<const int> labels);

// Fraction of rows whose thresholded decision (score >= tau) differs
// between the baseline and perturbed score vectors.
double pfr(std::span<const double> base, std::span<const double> perturbed,
           double tau);

// Mean flip rate across the battery.
double pss(std::span<const double> pfrs);

// Spearman rank correlation with average-rank ties. Throws
// undefined-correlation when either vector has zero rank variance.
double spearman(std::span<const double> a, std::span<const double> b);
double spearman_or_nan(std::span<const double> a,
                       std::span<const double> b) noexcept;
std::vector<double> average_ranks(std::span<const double> values);

// Expected calibration error over equal-width probability bins.
double ece(std::span<const double> scores, std::span<const int> labels,
           int bins);

// Fraction of scores reclassified when the threshold moves from tau0 to tau.
double tfr(std::span<const double> scores, double tau, double tau0);

// Fraction of scores within delta of the operating threshold.
double boundary_width(std::span<const double> scores, double tau0,
                      double delta);

// ---------------------------------------------------------------------------
// Report-level kernels
// ---------------------------------------------------------------------------

struct GroupMetrics {
  std::string group;
  size_t size = 0;
  double auc = std::numeric_limits<double>::quiet_NaN();
  bool auc_defined = false;
  std::string auc_absent_reason;
  double ece = 0.0;
  double selection_rate = std::numeric_limits<double>::quiet_NaN();
  bool small = false;  // below the 30-row evaluability floor
};

struct SubgroupMetricReport {
  std::string attribute;
  std::vector<GroupMetrics> groups;
  double delta_auc = 0.0;  // max - min AUC over evaluable groups
  size_t evaluable_groups = 0;
  double max_ece = 0.0;  // over evaluable groups
  // EEOC four-fifths adverse-impact ratio (min/max selection rate over
  // evaluable groups); auxiliary output, never gated.
  double air = std::numeric_limits<double>::quiet_NaN();
  bool air_defined = false;
};

// Per-group AUC and ECE for one partition. Groups under 30 rows are flagged
// and excluded from delta_auc/max_ece; single-class groups report the reason
// instead of an AUC. Throws no-evaluable-groups when nothing is evaluable.
SubgroupMetricReport subgroup_report(std::span<const double> scores,
                                     std::span<const int> labels,
                                     const std::string& attribute,
                                     std::span<const std::string> partition,
                                     int ece_bins = 10,
                                     double selection_tau =
                                         std::numeric_limits<double>::quiet_NaN());

struct TfrProfile {
  double tau0 = 0.5;
  std::vector<double> thresholds;
  std::vector<double> tfr;
  double max_tfr = 0.0;
  double band_max_tfr = 0.0;  // max over thresholds in [0.30, 0.70]
};

// Default evaluation sweep: 17 thresholds from 0.10 to 0.90.
std::vector<double> default_sweep();

TfrProfile tfr_sweep(std::span<const double> scores, double tau0,
                     std::span<const double> thresholds);

struct GroupGap {
  std::string attribute;
  std::string group;
  size_t size = 0;
  double gap = 0.0;  // mean score - mean normalized proxy
};

struct EquityReport {
  std::string proxy;
  double rho_need = 0.0;
  std::vector<GroupGap> gaps;
  double max_abs_gap = 0.0;
  bool proxy_is_outcome_label = false;
};

// Need-alignment diagnostic: Spearman of scores against the proxy, plus
// per-group gaps after min-max normalising the proxy to [0,1] over the
// evaluation cohort.
EquityReport equity_report(
    std::span<const double> scores, std::span<const double> proxy,
    const std::map<std::string, std::vector<std::string>>& partitions,
    bool proxy_is_outcome_label, const std::string& proxy_name);

struct LatencyResult {
  double cohort_ms = 0.0;
  double per_patient_ms = 0.0;
  int repetitions = 0;
};

// Mean wall-clock scoring time over R calls after a warmup; runs serially.
LatencyResult measure_latency(const Scorer& scorer, const FeatureMatrix& X,
                              int repetitions, int warmup);

struct Top3Result {
  double f_top3 = 0.0;
  std::array<size_t, 3> top_indices{};
  std::vector<std::string> top_names;
};

// T3 = top-3 features by mean |phi|; f_top3 = fraction of rows whose largest
// |phi| lands in T3. Ties break toward the lower column index.
Top3Result top3_consistency(const AttributionMatrix& phi);

}  // namespace preflight
