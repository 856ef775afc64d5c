#include "preflight/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "preflight/rng.hpp"

#ifdef PREFLIGHT_HAVE_OPENMP
#include <omp.h>
#endif

namespace preflight {

std::vector<int32_t> draw_replicate_indices(size_t n_rows,
                                            std::span<const int> labels,
                                            const BootstrapConfig& config,
                                            int replicate, int attempt) {
  Rng rng(hash_mix(config.seed, 0xb007ULL,
                   static_cast<uint64_t>(replicate),
                   static_cast<uint64_t>(attempt)));
  std::vector<int32_t> idx;
  idx.reserve(n_rows);
  if (config.stratify_by_label && !labels.empty()) {
    std::vector<int32_t> pos, neg;
    for (size_t i = 0; i < n_rows; ++i)
      (labels[i] ? pos : neg).push_back(static_cast<int32_t>(i));
    for (const auto* cls : {&neg, &pos}) {
      if (cls->empty()) continue;
      for (size_t k = 0; k < cls->size(); ++k)
        idx.push_back((*cls)[rng.uniform_int(cls->size())]);
    }
  } else {
    for (size_t k = 0; k < n_rows; ++k)
      idx.push_back(static_cast<int32_t>(rng.uniform_int(n_rows)));
  }
  return idx;
}

namespace {

// Per-replicate evaluation with the redraw policy; shared by the parallel
// and serial drivers so they agree bit for bit.
double evaluate_one_replicate(const RowStatistic& stat, size_t n_rows,
                              std::span<const int> labels,
                              const BootstrapConfig& config, int replicate) {
  for (int attempt = 0; attempt <= config.max_redraws; ++attempt) {
    auto idx = draw_replicate_indices(n_rows, labels, config, replicate, attempt);
    double v = stat(idx);
    if (!std::isnan(v)) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

ReplicateSet compact_replicates(std::vector<double>&& raw) {
  ReplicateSet out;
  out.values.reserve(raw.size());
  for (double v : raw) {
    if (std::isnan(v))
      ++out.discarded;
    else
      out.values.push_back(v);
  }
  return out;
}

}  // namespace

ReplicateSet evaluate_replicates(const RowStatistic& stat, size_t n_rows,
                                 std::span<const int> labels,
                                 const BootstrapConfig& config) {
  config.validate();
  std::vector<double> raw(config.replicates);
#ifdef PREFLIGHT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int r = 0; r < config.replicates; ++r)
    raw[r] = evaluate_one_replicate(stat, n_rows, labels, config, r);
  return compact_replicates(std::move(raw));
}

std::vector<double> jackknife_values(const RowStatistic& stat, size_t n_rows,
                                     const BootstrapConfig& config) {
  size_t block = 1;
  if (n_rows > config.jackknife_block_threshold)
    block = (n_rows + config.jackknife_block_threshold - 1) /
            config.jackknife_block_threshold;
  size_t n_blocks = (n_rows + block - 1) / block;
  std::vector<double> values(n_blocks);
#ifdef PREFLIGHT_HAVE_OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (long long bi = 0; bi < static_cast<long long>(n_blocks); ++bi) {
    size_t lo = static_cast<size_t>(bi) * block;
    size_t hi = std::min(lo + block, n_rows);
    std::vector<int32_t> idx;
    idx.reserve(n_rows - (hi - lo));
    for (size_t i = 0; i < n_rows; ++i)
      if (i < lo || i >= hi) idx.push_back(static_cast<int32_t>(i));
    values[bi] = stat(idx);
  }
  return values;
}

namespace serial_ref {

ReplicateSet evaluate_replicates(const RowStatistic& stat, size_t n_rows,
                                 std::span<const int> labels,
                                 const BootstrapConfig& config) {
  config.validate();
  std::vector<double> raw(config.replicates);
  for (int r = 0; r < config.replicates; ++r)
    raw[r] = evaluate_one_replicate(stat, n_rows, labels, config, r);
  return compact_replicates(std::move(raw));
}

std::vector<double> jackknife_values(const RowStatistic& stat, size_t n_rows,
                                     const BootstrapConfig& config) {
  size_t block = 1;
  if (n_rows > config.jackknife_block_threshold)
    block = (n_rows + config.jackknife_block_threshold - 1) /
            config.jackknife_block_threshold;
  size_t n_blocks = (n_rows + block - 1) / block;
  std::vector<double> values(n_blocks);
  std::vector<int32_t> idx;
  for (size_t bi = 0; bi < n_blocks; ++bi) {
    size_t lo = bi * block;
    size_t hi = std::min(lo + block, n_rows);
    idx.clear();
    for (size_t i = 0; i < n_rows; ++i)
      if (i < lo || i >= hi) idx.push_back(static_cast<int32_t>(i));
    values[bi] = stat(idx);
  }
  return values;
}

}  // namespace serial_ref

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (q <= 0.0) return sorted.front();
  if (q >= 1.0) return sorted.back();
  double pos = q * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

IntervalEstimate interval_from_replicates(double point,
                                          const std::vector<double>& replicates,
                                          const std::vector<double>& jackknife,
                                          const BootstrapConfig& config) {
  IntervalEstimate est;
  est.point = point;

  if (replicates.size() < 100) {
    est.degenerate = true;
    est.degenerate_reason = "too few valid replicates";
    return est;
  }

  std::vector<double> sorted = replicates;
  std::sort(sorted.begin(), sorted.end());

  if (sorted.front() == sorted.back()) {
    est.degenerate = true;
    est.degenerate_reason = "replicates identical";
    est.zero_variance = (sorted.front() == point);
    return est;
  }

  double q_lo = config.alpha / 2.0;
  double q_hi = 1.0 - config.alpha / 2.0;

  if (config.method == BootstrapConfig::Method::bca) {
    size_t below = 0;
    for (double v : sorted) below += (v < point);
    double frac = static_cast<double>(below) / static_cast<double>(sorted.size());
    if (frac == 0.0 || frac == 1.0) {
      est.degenerate = true;
      est.degenerate_reason = "bias correction unbounded";
      return est;
    }
    est.z0 = normal_quantile(frac);

    // Acceleration from jackknife skewness; NaN pseudo-values are dropped.
    std::vector<double> jk;
    jk.reserve(jackknife.size());
    for (double v : jackknife)
      if (!std::isnan(v)) jk.push_back(v);
    if (jk.size() < 2) {
      est.degenerate = true;
      est.degenerate_reason = "jackknife undefined";
      return est;
    }
    double mean = std::accumulate(jk.begin(), jk.end(), 0.0) /
                  static_cast<double>(jk.size());
    double s2 = 0.0, s3 = 0.0;
    for (double v : jk) {
      double d = mean - v;
      s2 += d * d;
      s3 += d * d * d;
    }
    if (s2 == 0.0) {
      est.degenerate = true;
      est.degenerate_reason = "jackknife variance zero";
      return est;
    }
    est.accel = s3 / (6.0 * std::pow(s2, 1.5));

    auto adjust = [&](double q) {
      double z = normal_quantile(q);
      double denom = 1.0 - est.accel * (est.z0 + z);
      if (denom <= 0.0) return std::numeric_limits<double>::quiet_NaN();
      return normal_cdf(est.z0 + (est.z0 + z) / denom);
    };
    q_lo = adjust(config.alpha / 2.0);
    q_hi = adjust(1.0 - config.alpha / 2.0);
    if (std::isnan(q_lo) || std::isnan(q_hi)) {
      est.degenerate = true;
      est.degenerate_reason = "acceleration out of range";
      return est;
    }
  }

  est.lo = sorted_quantile(sorted, q_lo);
  est.hi = sorted_quantile(sorted, q_hi);
  if (est.lo > est.hi) std::swap(est.lo, est.hi);
  return est;
}

IntervalEstimate bca_interval(const RowStatistic& stat, size_t n_rows,
                              std::span<const int> labels,
                              const BootstrapConfig& config) {
  config.validate();
  if (n_rows < 10) fail(Errc::too_small, "bootstrap needs n >= 10 rows");

  std::vector<int32_t> full(n_rows);
  std::iota(full.begin(), full.end(), 0);
  double point = stat(full);

  ReplicateSet reps = evaluate_replicates(stat, n_rows, labels, config);
  std::vector<double> jk;
  if (config.method == BootstrapConfig::Method::bca)
    jk = jackknife_values(stat, n_rows, config);

  IntervalEstimate est = interval_from_replicates(point, reps.values, jk, config);
  est.discarded_replicates = reps.discarded;
  return est;
}

double bootstrap_p(std::span<const double> replicates, double threshold,
                   Direction direction) {
  if (replicates.size() < 100)
    fail(Errc::config_error, "bootstrap_p needs >= 100 replicates");
  size_t extreme = 0;
  for (double v : replicates) {
    if (direction == Direction::upper_bounded)
      extreme += (v >= threshold);
    else
      extreme += (v <= threshold);
  }
  double b = static_cast<double>(replicates.size());
  double p = static_cast<double>(extreme) / b;
  double floor_p = 1.0 / (b + 1.0);
  return std::clamp(p, floor_p, 1.0);
}

HolmFamily holm_bonferroni(
    const std::vector<std::pair<std::string, double>>& family, double alpha,
    int m_override) {
  if (family.empty()) fail(Errc::config_error, "empty test family");
  for (const auto& [id, p] : family)
    if (!(p >= 0.0 && p <= 1.0))
      fail(Errc::config_error, "p-value outside [0,1] for " + id);

  HolmFamily out;
  out.alpha = alpha;
  out.m = m_override > 0 ? m_override : static_cast<int>(family.size());
  if (out.m < static_cast<int>(family.size()))
    fail(Errc::config_error, "family size exceeds m");

  std::vector<std::pair<std::string, double>> sorted = family;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });

  bool stopped = false;
  for (size_t k = 0; k < sorted.size(); ++k) {
    HolmTest t;
    t.id = sorted[k].first;
    t.p = sorted[k].second;
    t.adjusted_alpha = alpha / static_cast<double>(out.m - static_cast<int>(k));
    t.rejected = !stopped && t.p <= t.adjusted_alpha;
    if (!t.rejected) stopped = true;
    out.tests.push_back(std::move(t));
  }
  return out;
}

long min_test_size(MetricKind kind, double base_rate, double deviation,
                   double power) {
  if (!(base_rate > 0.0 && base_rate < 1.0))
    fail(Errc::config_error, "base rate must lie in (0,1)");
  if (!(deviation > 0.0)) fail(Errc::config_error, "deviation must be > 0");
  if (!(power > 0.0 && power < 1.0))
    fail(Errc::config_error, "power must lie in (0,1)");

  double p_detect = std::clamp(base_rate - deviation, 1e-6, 1.0 - 1e-6);
  double variance = p_detect * (1.0 - p_detect);
  if (kind == MetricKind::auc_gap) {
    // Difference of two subgroup AUCs at the conventional Var(AUC) ~ 0.005
    // per group; returns the per-subgroup size.
    variance = 2.0 * 0.005;
  }
  double z = normal_quantile(0.975);
  double z_power = normal_quantile(power);
  double z_ref = normal_quantile(0.80);
  double k = z + (z_power - z_ref);
  double n = k * k * variance / (deviation * deviation);
  if (kind == MetricKind::max_tfr) n *= 1.10;  // sweep-max variance inflation
  return static_cast<long>(std::ceil(n));
}

CoverageResult empirical_coverage(
    const std::function<std::vector<double>(uint64_t)>& draw_sample,
    const std::function<double(std::span<const double>, std::span<const int32_t>)>&
        statistic,
    double true_value, int trials, const BootstrapConfig& config) {
  if (trials < 100) fail(Errc::config_error, "coverage needs >= 100 trials");
  config.validate();

  std::vector<int> covered(trials, 0);
  std::vector<int> degen(trials, 0);
#ifdef PREFLIGHT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int t = 0; t < trials; ++t) {
    std::vector<double> sample = draw_sample(hash_mix(config.seed, 0xc0feeULL, t));
    RowStatistic stat = [&](std::span<const int32_t> idx) {
      return statistic(sample, idx);
    };
    BootstrapConfig cfg = config;
    cfg.seed = hash_mix(config.seed, 0x7a1a1ULL, t);
    IntervalEstimate est = bca_interval(stat, sample.size(), {}, cfg);
    if (est.degenerate) {
      degen[t] = 1;
    } else if (est.lo <= true_value && true_value <= est.hi) {
      covered[t] = 1;
    }
  }
  CoverageResult out;
  out.trials = trials;
  for (int t = 0; t < trials; ++t) {
    out.coverage += covered[t];
    out.degenerate += degen[t];
  }
  out.coverage /= static_cast<double>(trials);
  return out;
}

}  // namespace preflight
