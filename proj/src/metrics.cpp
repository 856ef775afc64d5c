#include "preflight/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "preflight/model.hpp"

namespace preflight {

namespace {

void check_aligned(size_t a, size_t b, const char* what) {
  if (a != b)
    fail(Errc::shape_error, std::string(what) + ": lengths differ (" +
                                std::to_string(a) + " vs " + std::to_string(b) +
                                ")");
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double auc_or_nan(std::span<const double> scores,
                  std::span<const int> labels) noexcept {
  const size_t n = scores.size();
  if (n != labels.size() || n == 0) return std::numeric_limits<double>::quiet_NaN();
  size_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  for (size_t i = 0; i < n; ++i)
    if (labels[i]) rank_sum_pos += ranks[i];
  double np = static_cast<double>(n_pos);
  double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_aligned(scores.size(), labels.size(), "auc");
  double v = auc_or_nan(scores, labels);
  if (std::isnan(v))
    fail(Errc::undefined_auc, "AUC needs both classes present");
  return v;
}

double brier(std::span<const double> scores, std::span<const int> labels) {
  check_aligned(scores.size(), labels.size(), "brier");
  if (scores.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    double d = scores[i] - labels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(scores.size());
}

double pfr(std::span<const double> base, std::span<const double> perturbed,
           double tau) {
  check_aligned(base.size(), perturbed.size(), "pfr");
  if (base.empty()) return 0.0;
  size_t flips = 0;
  for (size_t i = 0; i < base.size(); ++i)
    flips += ((base[i] >= tau) != (perturbed[i] >= tau));
  return static_cast<double>(flips) / static_cast<double>(base.size());
}

double pss(std::span<const double> pfrs) {
  if (pfrs.empty()) fail(Errc::config_error, "PSS over an empty battery");
  double acc = 0.0;
  for (double v : pfrs) acc += v;
  return acc / static_cast<double>(pfrs.size());
}

double spearman_or_nan(std::span<const double> a,
                       std::span<const double> b) noexcept {
  if (a.size() != b.size() || a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ra = average_ranks(a);
  std::vector<double> rb = average_ranks(b);
  const size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double da = ra[i] - ma, db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  check_aligned(a.size(), b.size(), "spearman");
  if (a.size() < 2)
    fail(Errc::undefined_correlation, "need at least two observations");
  double v = spearman_or_nan(a, b);
  if (std::isnan(v))
    fail(Errc::undefined_correlation, "zero rank variance");
  return v;
}

double ece(std::span<const double> scores, std::span<const int> labels,
           int bins) {
  check_aligned(scores.size(), labels.size(), "ece");
  if (bins < 1) fail(Errc::config_error, "ece needs bins >= 1");
  if (scores.empty()) return 0.0;
  std::vector<double> sum_s(bins, 0.0), sum_y(bins, 0.0);
  std::vector<size_t> count(bins, 0);
  for (size_t i = 0; i < scores.size(); ++i) {
    int b = std::min(bins - 1, static_cast<int>(scores[i] * bins));
    if (b < 0) b = 0;
    sum_s[b] += scores[i];
    sum_y[b] += labels[i];
    ++count[b];
  }
  double total = static_cast<double>(scores.size());
  double acc = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;  // empty bins carry zero weight
    double cnt = static_cast<double>(count[b]);
    acc += (cnt / total) * std::fabs(sum_y[b] / cnt - sum_s[b] / cnt);
  }
  return acc;
}

double tfr(std::span<const double> scores, double tau, double tau0) {
  if (scores.empty()) return 0.0;
  size_t flips = 0;
  for (double s : scores) flips += ((s >= tau0) != (s >= tau));
  return static_cast<double>(flips) / static_cast<double>(scores.size());
}

double boundary_width(std::span<const double> scores, double tau0,
                      double delta) {
  if (!(delta > 0)) fail(Errc::config_error, "boundary width needs delta > 0");
  if (scores.empty()) return 0.0;
  size_t inside = 0;
  for (double s : scores) inside += (std::fabs(s - tau0) <= delta);
  return static_cast<double>(inside) / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------

SubgroupMetricReport subgroup_report(std::span<const double> scores,
                                     std::span<const int> labels,
                                     const std::string& attribute,
                                     std::span<const std::string> partition,
                                     int ece_bins, double selection_tau) {
  check_aligned(scores.size(), labels.size(), "subgroup_report");
  check_aligned(scores.size(), partition.size(), "subgroup_report partition");
  if (scores.empty()) fail(Errc::no_evaluable_groups, "empty input");

  std::map<std::string, std::vector<size_t>> members;
  for (size_t i = 0; i < partition.size(); ++i)
    members[partition[i]].push_back(i);

  SubgroupMetricReport report;
  report.attribute = attribute;

  double max_auc = -1.0, min_auc = 2.0;
  double min_rate = 2.0, max_rate = -1.0;
  for (const auto& [group, rows] : members) {
    GroupMetrics g;
    g.group = group;
    g.size = rows.size();
    g.small = rows.size() < 30;
    std::vector<double> gs(rows.size());
    std::vector<int> gy(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) {
      gs[k] = scores[rows[k]];
      gy[k] = labels[rows[k]];
    }
    double a = auc_or_nan(gs, gy);
    if (std::isnan(a)) {
      g.auc_absent_reason = "single-class group";
    } else {
      g.auc = a;
      g.auc_defined = true;
    }
    g.ece = ece(gs, gy, ece_bins);
    if (!std::isnan(selection_tau)) {
      size_t sel = 0;
      for (double s : gs) sel += (s >= selection_tau);
      g.selection_rate = static_cast<double>(sel) / static_cast<double>(rows.size());
    }
    if (!g.small && g.auc_defined) {
      ++report.evaluable_groups;
      max_auc = std::max(max_auc, g.auc);
      min_auc = std::min(min_auc, g.auc);
      report.max_ece = std::max(report.max_ece, g.ece);
      if (!std::isnan(g.selection_rate)) {
        min_rate = std::min(min_rate, g.selection_rate);
        max_rate = std::max(max_rate, g.selection_rate);
      }
    }
    report.groups.push_back(std::move(g));
  }
  if (report.evaluable_groups == 0)
    fail(Errc::no_evaluable_groups,
         "no group of attribute " + attribute +
             " has 30+ rows and both classes");
  report.delta_auc = report.evaluable_groups >= 2 ? max_auc - min_auc : 0.0;
  if (!std::isnan(selection_tau) && max_rate > 0.0) {
    report.air = min_rate / max_rate;
    report.air_defined = true;
  }
  return report;
}

std::vector<double> default_sweep() {
  std::vector<double> sweep(17);
  for (int k = 0; k < 17; ++k)
    sweep[k] = static_cast<double>(10 + 5 * k) / 100.0;
  return sweep;
}

TfrProfile tfr_sweep(std::span<const double> scores, double tau0,
                     std::span<const double> thresholds) {
  if (!(tau0 > 0.0) || !(tau0 < 1.0))
    fail(Errc::config_error, "tau0 must lie in (0,1)");
  if (thresholds.empty()) fail(Errc::config_error, "empty threshold sweep");
  if (thresholds.size() < 2)
    fail(Errc::config_error, "sweep needs at least two thresholds");
  for (size_t k = 1; k < thresholds.size(); ++k)
    if (!(thresholds[k] > thresholds[k - 1]))
      fail(Errc::config_error, "sweep thresholds must strictly increase");

  TfrProfile profile;
  profile.tau0 = tau0;
  profile.thresholds.assign(thresholds.begin(), thresholds.end());
  profile.tfr.resize(thresholds.size());
  for (size_t k = 0; k < thresholds.size(); ++k) {
    double v = tfr(scores, thresholds[k], tau0);
    profile.tfr[k] = v;
    profile.max_tfr = std::max(profile.max_tfr, v);
    if (thresholds[k] >= 0.30 - 1e-12 && thresholds[k] <= 0.70 + 1e-12)
      profile.band_max_tfr = std::max(profile.band_max_tfr, v);
  }
  return profile;
}

EquityReport equity_report(
    std::span<const double> scores, std::span<const double> proxy,
    const std::map<std::string, std::vector<std::string>>& partitions,
    bool proxy_is_outcome_label, const std::string& proxy_name) {
  check_aligned(scores.size(), proxy.size(), "equity_report");
  if (scores.size() < 2)
    fail(Errc::undefined_correlation, "need at least two rows");

  double lo = proxy[0], hi = proxy[0];
  for (double v : proxy) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo)
    fail(Errc::undefined_correlation, "constant need proxy " + proxy_name);

  EquityReport report;
  report.proxy = proxy_name;
  report.proxy_is_outcome_label = proxy_is_outcome_label;
  report.rho_need = spearman(scores, proxy);

  std::vector<double> norm(proxy.size());
  for (size_t i = 0; i < proxy.size(); ++i) norm[i] = (proxy[i] - lo) / (hi - lo);

  for (const auto& [attribute, partition] : partitions) {
    check_aligned(scores.size(), partition.size(), "equity partition");
    std::map<std::string, std::pair<double, double>> sums;  // group -> (s, c)
    std::map<std::string, size_t> counts;
    for (size_t i = 0; i < scores.size(); ++i) {
      auto& acc = sums[partition[i]];
      acc.first += scores[i];
      acc.second += norm[i];
      counts[partition[i]]++;
    }
    for (const auto& [group, acc] : sums) {
      double cnt = static_cast<double>(counts[group]);
      GroupGap gap;
      gap.attribute = attribute;
      gap.group = group;
      gap.size = counts[group];
      gap.gap = acc.first / cnt - acc.second / cnt;
      report.max_abs_gap = std::max(report.max_abs_gap, std::fabs(gap.gap));
      report.gaps.push_back(std::move(gap));
    }
  }
  return report;
}

LatencyResult measure_latency(const Scorer& scorer, const FeatureMatrix& X,
                              int repetitions, int warmup) {
  if (repetitions < 1) fail(Errc::config_error, "latency needs R >= 1");
  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;
  for (int w = 0; w < warmup; ++w) {
    auto s = scorer.score(X);
    if (!s.empty()) sink = sink + s[0];
  }
  double total_ms = 0.0;
  for (int r = 0; r < repetitions; ++r) {
    auto t0 = clock::now();
    auto s = scorer.score(X);
    auto t1 = clock::now();
    if (!s.empty()) sink = sink + s[0];
    total_ms +=
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count() /
        1e6;
  }
  LatencyResult result;
  result.repetitions = repetitions;
  result.cohort_ms = total_ms / repetitions;
  result.per_patient_ms = X.n > 0 ? result.cohort_ms / static_cast<double>(X.n)
                                  : 0.0;
  return result;
}

Top3Result top3_consistency(const AttributionMatrix& phi) {
  if (phi.d < 3) fail(Errc::config_error, "top-3 consistency needs d >= 3");
  if (phi.n < 1) fail(Errc::config_error, "top-3 consistency needs n >= 1");

  std::vector<double> mean_abs(phi.d, 0.0);
  for (size_t i = 0; i < phi.n; ++i)
    for (size_t j = 0; j < phi.d; ++j) mean_abs[j] += std::fabs(phi.at(i, j));
  for (double& v : mean_abs) v /= static_cast<double>(phi.n);

  std::vector<size_t> order(phi.d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (mean_abs[a] != mean_abs[b]) return mean_abs[a] > mean_abs[b];
    return a < b;  // ties toward the lower column index
  });

  Top3Result result;
  for (size_t k = 0; k < 3; ++k) {
    result.top_indices[k] = order[k];
    result.top_names.push_back(phi.feature_names.empty()
                                   ? "f" + std::to_string(order[k])
                                   : phi.feature_names[order[k]]);
  }

  size_t hits = 0;
  for (size_t i = 0; i < phi.n; ++i) {
    size_t argmax = 0;
    double best = std::fabs(phi.at(i, 0));
    for (size_t j = 1; j < phi.d; ++j) {
      double v = std::fabs(phi.at(i, j));
      if (v > best) {
        best = v;
        argmax = j;
      }
    }
    hits += (argmax == result.top_indices[0] || argmax == result.top_indices[1] ||
             argmax == result.top_indices[2]);
  }
  result.f_top3 = static_cast<double>(hits) / static_cast<double>(phi.n);
  return result;
}

}  // namespace preflight
