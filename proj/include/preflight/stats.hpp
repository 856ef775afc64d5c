#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "preflight/error.hpp"

namespace preflight {

struct BootstrapConfig {
  int replicates = 1000;
  uint64_t seed = 42;
  double alpha = 0.05;
  enum class Method { bca, percentile } method = Method::bca;
  bool stratify_by_label = true;
  int max_redraws = 10;
  // Leave-one-out jackknife up to this many rows; leave-k-out blocks above.
  size_t jackknife_block_threshold = 20000;

  void validate() const {
    if (replicates < 100) fail(Errc::config_error, "need B >= 100 replicates");
    if (!(alpha > 0.0 && alpha <= 1.0))
      fail(Errc::config_error, "alpha must lie in (0,1]");
  }
};

struct IntervalEstimate {
  double point = std::numeric_limits<double>::quiet_NaN();
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  double z0 = 0.0;
  double accel = 0.0;
  bool degenerate = false;
  std::string degenerate_reason;
  int discarded_replicates = 0;
  // True when every valid replicate equals the point estimate: the statistic
  // has zero resampling variance and the interval collapses to a point.
  bool zero_variance = false;
};

// Statistic over a row subset (indices into the caller's dataset, with
// repetition). Returning NaN marks the subset as undefined for this
// statistic; the replicate is redrawn and eventually discarded.
using RowStatistic = std::function<double(std::span<const int32_t>)>;

struct ReplicateSet {
  std::vector<double> values;  // valid replicates, replicate order preserved
  int discarded = 0;
};

// Draw the attempt-th resample for replicate r. Streams derive from
// (seed, r, attempt), so results never depend on evaluation order or
// worker count. With labels present, resampling is stratified per class.
std::vector<int32_t> draw_replicate_indices(size_t n_rows,
                                            std::span<const int> labels,
                                            const BootstrapConfig& config,
                                            int replicate, int attempt);

// OpenMP-parallel replicate evaluation (ordered writes, serial reduction).
ReplicateSet evaluate_replicates(const RowStatistic& stat, size_t n_rows,
                                 std::span<const int> labels,
                                 const BootstrapConfig& config);

// Leave-one-out (or leave-k-out block) jackknife values; NaNs are dropped by
// the interval construction.
std::vector<double> jackknife_values(const RowStatistic& stat, size_t n_rows,
                                     const BootstrapConfig& config);

namespace serial_ref {
// Plain-loop reference implementations kept for testing the parallel
// kernels; must match them bit for bit.
ReplicateSet evaluate_replicates(const RowStatistic& stat, size_t n_rows,
                                 std::span<const int> labels,
                                 const BootstrapConfig& config);
std::vector<double> jackknife_values(const RowStatistic& stat, size_t n_rows,
                                     const BootstrapConfig& config);
}  // namespace serial_ref

// Endpoint construction from precomputed replicates and jackknife values.
// BCa adjusts the percentile endpoints by the bias correction z0 (fraction
// of replicates below the point estimate) and the jackknife acceleration.
IntervalEstimate interval_from_replicates(double point,
                                          const std::vector<double>& replicates,
                                          const std::vector<double>& jackknife,
                                          const BootstrapConfig& config);

// Full pipeline: replicates + jackknife + endpoints.
IntervalEstimate bca_interval(const RowStatistic& stat, size_t n_rows,
                              std::span<const int> labels,
                              const BootstrapConfig& config);

// Linear-interpolation empirical quantile of a sorted vector.
double sorted_quantile(std::span<const double> sorted, double q);

enum class Direction { upper_bounded, lower_bounded };

// One-sided bootstrap p-value against a threshold: for an upper-bounded
// criterion (H0: metric >= threshold) it is the fraction of replicates at or
// above the threshold; lower-bounded is symmetric. Clamped to [1/(B+1), 1].
double bootstrap_p(std::span<const double> replicates, double threshold,
                   Direction direction);

struct HolmTest {
  std::string id;
  double p = 1.0;
  double adjusted_alpha = 0.0;
  bool rejected = false;
};

struct HolmFamily {
  std::vector<HolmTest> tests;  // ascending by p
  double alpha = 0.05;
  int m = 0;

  bool rejected(const std::string& id) const {
    for (const auto& t : tests)
      if (t.id == id) return t.rejected;
    return false;
  }
};

// Step-down correction: the k-th smallest p is compared against
// alpha/(m-k+1); the first failure stops all later rejections. m defaults to
// the family size and may be overridden upward when exempt tests count
// toward the family.
HolmFamily holm_bonferroni(
    const std::vector<std::pair<std::string, double>>& family, double alpha,
    int m_override = 0);

enum class MetricKind { proportion, max_tfr, auc_gap };

// Smallest test-set size that resolves a deviation of the given magnitude
// below the criterion threshold: 95% half-width at the detection point
// p - deviation, with the power term adding margin beyond the 80% baseline.
// The sweep-max statistic carries a 1.10 variance inflation.
long min_test_size(MetricKind kind, double base_rate, double deviation,
                   double power);

struct CoverageResult {
  double coverage = 0.0;
  int trials = 0;
  int degenerate = 0;
};

// Re-draws a fresh sample per trial, builds the interval, and reports the
// fraction of trials whose interval contains the true value.
CoverageResult empirical_coverage(
    const std::function<std::vector<double>(uint64_t)>& draw_sample,
    const std::function<double(std::span<const double>, std::span<const int32_t>)>&
        statistic,
    double true_value, int trials, const BootstrapConfig& config);

}  // namespace preflight
