#include "preflight/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "preflight/csv.hpp"

namespace preflight {

namespace {

struct GroupRef {
  std::string attribute;
  std::string group;
  std::vector<int32_t> rows;  // membership on the full evaluation set
  bool evaluable = false;     // >= 30 rows and both classes present
};

double mean_over(std::span<const double> values, std::span<const int32_t> idx) {
  double acc = 0.0;
  for (int32_t i : idx) acc += values[i];
  return acc / static_cast<double>(idx.size());
}

}  // namespace

EvaluationResult evaluate_all(const Cohort& cohort, const EvaluationPlan& plan) {
  cohort.validate();
  const size_t n = cohort.size();
  if (n < 10) fail(Errc::too_small, "evaluation cohort below 10 rows");
  if ((plan.scorer != nullptr) == (plan.scores != nullptr))
    fail(Errc::plan_error, "exactly one of scorer / score set must be given");
  plan.battery.validate();
  plan.boot.validate();
  if (plan.sweep.empty() || plan.tau0 < plan.sweep.front() ||
      plan.tau0 > plan.sweep.back())
    fail(Errc::plan_error, "tau0 must lie inside the threshold sweep");
  for (const char* id : {"R1", "R2", "I1", "I2", "S1", "S2", "E1", "E2", "D1", "D2"})
    if (!find_criterion(plan.criteria, id))
      fail(Errc::plan_error, std::string("criteria set missing ") + id);

  EvaluationResult result;
  std::vector<std::string> warnings = plan.battery.warnings;

  // ---- scores ------------------------------------------------------------
  const FeatureMatrix& X = cohort.features;
  std::vector<double> base;
  std::vector<std::pair<std::string, std::vector<double>>> perturbed;
  if (plan.scorer) {
    base = plan.scorer->score(X);
    for (const auto& spec : plan.battery.specs) {
      FeatureMatrix Xp = apply(spec, X, plan.battery.master_seed);
      perturbed.emplace_back(spec.id, plan.scorer->score(Xp));
    }
  } else {
    base = plan.scores->baseline;
    if (base.size() != n)
      fail(Errc::alignment_error, "score set length differs from cohort");
    for (const auto& spec : plan.battery.specs) {
      const std::vector<double>* col = plan.scores->find(spec.id);
      if (!col)
        fail(Errc::plan_error,
             "score set missing perturbation column: " + spec.id);
      perturbed.emplace_back(spec.id, *col);
    }
  }
  for (double s : base)
    if (!(s >= 0.0 && s <= 1.0))
      fail(Errc::range_error, "baseline score outside [0,1]");

  result.auroc = auc_or_nan(base, cohort.labels);
  result.auroc_defined = !std::isnan(result.auroc);
  result.brier_score = brier(base, cohort.labels);

  // ---- reliability point metrics ------------------------------------------
  std::vector<double> row_flip_frac(n, 0.0);
  std::vector<double> spec_rhos;
  for (const auto& [id, pert] : perturbed) {
    PerSpecReliability detail;
    detail.id = id;
    detail.pfr = pfr(base, pert, plan.tau0);
    double rho = spearman_or_nan(base, pert);
    detail.rho_defined = !std::isnan(rho);
    detail.rho = detail.rho_defined ? rho : 0.0;
    if (!detail.rho_defined)
      warnings.push_back("rank correlation undefined for perturbation " + id);
    spec_rhos.push_back(detail.rho);
    for (size_t i = 0; i < n; ++i)
      row_flip_frac[i] +=
          ((base[i] >= plan.tau0) != (pert[i] >= plan.tau0)) ? 1.0 : 0.0;
    result.reliability.push_back(std::move(detail));
  }
  const double n_specs = static_cast<double>(perturbed.size());
  for (double& v : row_flip_frac) v /= n_specs;
  double pss_point = 0.0;
  for (const auto& d : result.reliability) pss_point += d.pfr;
  pss_point /= n_specs;
  double min_rho =
      *std::min_element(spec_rhos.begin(), spec_rhos.end());

  // ---- subgroup structure --------------------------------------------------
  std::vector<std::string> attributes = plan.subgroup_attributes;
  if (attributes.empty())
    for (const auto& [attr, part] : cohort.subgroups) attributes.push_back(attr);
  for (const auto& attr : attributes)
    if (!cohort.subgroups.count(attr))
      fail(Errc::plan_error, "unknown subgroup attribute: " + attr);

  std::vector<GroupRef> groups;
  for (const auto& attr : attributes) {
    const auto& part = cohort.subgroups.at(attr);
    std::map<std::string, GroupRef> by_key;
    for (size_t i = 0; i < n; ++i) {
      auto& g = by_key[part[i]];
      g.attribute = attr;
      g.group = part[i];
      g.rows.push_back(static_cast<int32_t>(i));
    }
    for (auto& [key, g] : by_key) {
      bool pos = false, neg = false;
      for (int32_t i : g.rows) (cohort.labels[i] ? pos : neg) = true;
      g.evaluable = g.rows.size() >= 30 && pos && neg;
      if (g.rows.size() < 30)
        warnings.push_back("subgroup " + attr + "=" + key + " has " +
                           std::to_string(g.rows.size()) +
                           " rows (<30): reported, not gated");
      groups.push_back(std::move(g));
    }
  }

  bool inclusivity_available = false;
  for (const auto& attr : attributes) {
    try {
      result.subgroup_reports.push_back(
          subgroup_report(base, cohort.labels, attr, cohort.subgroups.at(attr),
                          plan.ece_bins, plan.tau0));
      inclusivity_available = true;
    } catch (const Error& e) {
      if (e.code() != Errc::no_evaluable_groups) throw;
      warnings.push_back("attribute " + attr + " has no evaluable subgroup");
    }
  }

  std::vector<const GroupRef*> evaluable;
  for (const auto& g : groups)
    if (g.evaluable) evaluable.push_back(&g);

  double i1_point = NAN, i2_point = NAN;
  if (inclusivity_available) {
    double max_auc = -1.0, min_auc = 2.0;
    double max_ece = 0.0;
    size_t defined = 0;
    for (const auto* g : evaluable) {
      std::vector<double> gs;
      std::vector<int> gy;
      for (int32_t i : g->rows) {
        gs.push_back(base[i]);
        gy.push_back(cohort.labels[i]);
      }
      double a = auc_or_nan(gs, gy);
      if (std::isnan(a)) continue;
      ++defined;
      max_auc = std::max(max_auc, a);
      min_auc = std::min(min_auc, a);
      max_ece = std::max(max_ece, ece(gs, gy, plan.ece_bins));
    }
    i1_point = defined >= 2 ? max_auc - min_auc : 0.0;
    i2_point = max_ece;
  }
  result.joint_delta_auc = std::isnan(i1_point) ? 0.0 : i1_point;

  // ---- sensitivity ---------------------------------------------------------
  result.tfr_profile = tfr_sweep(base, plan.tau0, plan.sweep);
  double s2_point = boundary_width(base, plan.tau0, plan.delta);

  // ---- equity --------------------------------------------------------------
  struct ProxySpec {
    std::string name;
    std::vector<double> values;
    bool is_label;
  };
  std::vector<ProxySpec> proxy_specs;
  std::vector<std::string> proxy_names = plan.proxies;
  if (proxy_names.empty())
    for (const auto& [name, vals] : cohort.need_proxies)
      proxy_names.push_back(name);
  for (const auto& name : proxy_names) {
    auto it = cohort.need_proxies.find(name);
    if (it == cohort.need_proxies.end())
      fail(Errc::plan_error, "unknown need proxy: " + name);
    proxy_specs.push_back({name, it->second, false});
  }
  if (plan.include_label_proxy) {
    std::vector<double> label_proxy(n);
    for (size_t i = 0; i < n; ++i) label_proxy[i] = cohort.labels[i];
    proxy_specs.push_back({"outcome_label", std::move(label_proxy), true});
  }
  if (proxy_specs.empty())
    fail(Errc::plan_error,
         "equity needs at least one need proxy or the outcome label");

  std::map<std::string, std::vector<std::string>> partitions;
  for (const auto& attr : attributes) partitions[attr] = cohort.subgroups.at(attr);

  std::vector<size_t> usable_proxies;
  for (size_t p = 0; p < proxy_specs.size(); ++p) {
    try {
      ProxyEquity pe;
      pe.report = equity_report(base, proxy_specs[p].values, partitions,
                                proxy_specs[p].is_label, proxy_specs[p].name);
      pe.is_outcome_label = proxy_specs[p].is_label;
      result.equity.push_back(std::move(pe));
      usable_proxies.push_back(p);
    } catch (const Error& e) {
      if (e.code() != Errc::undefined_correlation) throw;
      warnings.push_back("need proxy " + proxy_specs[p].name +
                         " unusable: " + e.what());
    }
  }
  if (result.equity.empty())
    fail(Errc::plan_error, "no usable need proxy for the Equity dimension");

  // ---- deployability -------------------------------------------------------
  if (plan.scorer && plan.latency_repetitions >= 1) {
    result.latency = measure_latency(*plan.scorer, X, plan.latency_repetitions,
                                     plan.latency_warmup);
    result.latency_measured = true;
  }

  AttributionMatrix phi;
  std::vector<int32_t> row_argmax;
  if (plan.scorer && plan.compute_attributions) {
    if (const auto* logistic =
            dynamic_cast<const LogisticBaseline*>(plan.scorer)) {
      phi = linear_attributions(*logistic, X);
    } else {
      phi = shapley_sampled(*plan.scorer, X, X, plan.shapley_samples,
                            plan.boot.seed);
    }
    if (phi.d >= 3) {
      result.top3 = top3_consistency(phi);
      result.top3_computed = true;
      row_argmax.resize(n);
      for (size_t i = 0; i < n; ++i) {
        size_t best = 0;
        double bv = std::fabs(phi.at(i, 0));
        for (size_t j = 1; j < phi.d; ++j)
          if (std::fabs(phi.at(i, j)) > bv) {
            bv = std::fabs(phi.at(i, j));
            best = j;
          }
        row_argmax[i] = static_cast<int32_t>(best);
      }
    } else {
      warnings.push_back("fewer than 3 features: top-3 consistency skipped");
    }
  }

  // ---- bootstrap -----------------------------------------------------------
  const auto& labels = cohort.labels;

  RowStatistic pss_stat = [&](std::span<const int32_t> idx) {
    return mean_over(row_flip_frac, idx);
  };
  RowStatistic minrho_stat = [&](std::span<const int32_t> idx) {
    double worst = 1.0;
    std::vector<double> a(idx.size()), b(idx.size());
    for (const auto& [id, pert] : perturbed) {
      for (size_t k = 0; k < idx.size(); ++k) {
        a[k] = base[idx[k]];
        b[k] = pert[idx[k]];
      }
      double rho = spearman_or_nan(a, b);
      if (std::isnan(rho)) return std::numeric_limits<double>::quiet_NaN();
      worst = std::min(worst, rho);
    }
    return worst;
  };

  RowStatistic dauc_stat = [&](std::span<const int32_t> idx) {
    double max_auc = -1.0, min_auc = 2.0;
    size_t defined = 0;
    std::vector<double> gs;
    std::vector<int> gy;
    std::vector<char> member(n, 0);
    for (const auto* g : evaluable) {
      std::fill(member.begin(), member.end(), 0);
      for (int32_t i : g->rows) member[i] = 1;
      gs.clear();
      gy.clear();
      for (int32_t i : idx)
        if (member[i]) {
          gs.push_back(base[i]);
          gy.push_back(labels[i]);
        }
      double a = auc_or_nan(gs, gy);
      if (std::isnan(a)) continue;
      ++defined;
      max_auc = std::max(max_auc, a);
      min_auc = std::min(min_auc, a);
    }
    if (defined == 0) return std::numeric_limits<double>::quiet_NaN();
    return defined >= 2 ? max_auc - min_auc : 0.0;
  };
  RowStatistic maxece_stat = [&](std::span<const int32_t> idx) {
    double worst = -1.0;
    std::vector<double> gs;
    std::vector<int> gy;
    std::vector<char> member(n, 0);
    for (const auto* g : evaluable) {
      std::fill(member.begin(), member.end(), 0);
      for (int32_t i : g->rows) member[i] = 1;
      gs.clear();
      gy.clear();
      for (int32_t i : idx)
        if (member[i]) {
          gs.push_back(base[i]);
          gy.push_back(labels[i]);
        }
      if (gs.empty()) continue;
      worst = std::max(worst, ece(gs, gy, plan.ece_bins));
    }
    return worst < 0.0 ? NAN : worst;
  };

  RowStatistic maxtfr_stat = [&](std::span<const int32_t> idx) {
    // Max over the sweep inside each replicate.
    double worst = 0.0;
    for (double tau : plan.sweep) {
      size_t flips = 0;
      for (int32_t i : idx)
        flips += ((base[i] >= plan.tau0) != (base[i] >= tau));
      worst = std::max(
          worst, static_cast<double>(flips) / static_cast<double>(idx.size()));
    }
    return worst;
  };
  std::vector<double> width_indicator(n);
  for (size_t i = 0; i < n; ++i)
    width_indicator[i] = std::fabs(base[i] - plan.tau0) <= plan.delta ? 1.0 : 0.0;
  RowStatistic width_stat = [&](std::span<const int32_t> idx) {
    return mean_over(width_indicator, idx);
  };

  RowStatistic ftop3_stat = [&](std::span<const int32_t> idx) {
    std::vector<double> mean_abs(phi.d, 0.0);
    for (int32_t i : idx)
      for (size_t j = 0; j < phi.d; ++j) mean_abs[j] += std::fabs(phi.at(i, j));
    std::array<size_t, 3> top{0, 0, 0};
    std::vector<size_t> order(phi.d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (mean_abs[a] != mean_abs[b]) return mean_abs[a] > mean_abs[b];
      return a < b;
    });
    top = {order[0], order[1], order[2]};
    size_t hits = 0;
    for (int32_t i : idx) {
      size_t am = static_cast<size_t>(row_argmax[i]);
      hits += (am == top[0] || am == top[1] || am == top[2]);
    }
    return static_cast<double>(hits) / static_cast<double>(idx.size());
  };

  auto replicate_p = [&](const RowStatistic& stat, const SubCriterion& c,
                         double& p_out, int& discarded) {
    ReplicateSet reps = evaluate_replicates(stat, n, labels, plan.boot);
    discarded = reps.discarded;
    p_out = bootstrap_p(reps.values, c.threshold, c.direction);
    return reps;
  };

  auto ci_estimate = [&](const RowStatistic& stat, double point,
                         const SubCriterion& c, double& p_out) {
    ReplicateSet reps = evaluate_replicates(stat, n, labels, plan.boot);
    std::vector<double> jk;
    if (plan.boot.method == BootstrapConfig::Method::bca)
      jk = jackknife_values(stat, n, plan.boot);
    IntervalEstimate est = interval_from_replicates(point, reps.values, jk, plan.boot);
    est.discarded_replicates = reps.discarded;
    p_out = bootstrap_p(reps.values, c.threshold, c.direction);
    // A statistic with zero resampling spread is deterministically at its
    // point value: collapse the interval instead of reporting no interval.
    if (est.degenerate && est.zero_variance) {
      est.degenerate = false;
      est.lo = est.hi = est.point;
      warnings.push_back("zero-variance statistic " + c.metric +
                         ": interval collapsed to the point estimate");
    }
    if (est.discarded_replicates > 0)
      warnings.push_back(c.metric + ": " +
                         std::to_string(est.discarded_replicates) +
                         " replicates discarded after redraws");
    return est;
  };

  std::vector<CriterionResult> crs;
  auto push_ci = [&](const char* id, double point, const RowStatistic& stat) {
    const SubCriterion& c = *find_criterion(plan.criteria, id);
    CriterionResult r;
    r.criterion = c;
    r.sample_n = n;
    r.value = point;
    double p = 1.0;
    IntervalEstimate est = ci_estimate(stat, point, c, p);
    r.has_ci = !est.degenerate;
    r.ci_lo = est.lo;
    r.ci_hi = est.hi;
    r.degenerate = est.degenerate;
    r.p_boot = p;
    r.has_p = true;
    auto cls = classify_with_reason(est, c);
    r.verdict = cls.verdict;
    r.reason = cls.reason;
    crs.push_back(std::move(r));
    return est;
  };
  auto push_point = [&](const char* id, double point, const RowStatistic* stat) {
    const SubCriterion& c = *find_criterion(plan.criteria, id);
    CriterionResult r;
    r.criterion = c;
    r.sample_n = n;
    r.value = point;
    if (stat) {
      int discarded = 0;
      replicate_p(*stat, c, r.p_boot, discarded);
      r.has_p = true;
    }
    IntervalEstimate point_only;
    point_only.point = point;
    auto cls = classify_with_reason(point_only, c);
    r.verdict = cls.verdict;
    r.reason = cls.reason;
    crs.push_back(std::move(r));
  };
  auto push_skipped = [&](const char* id, const std::string& reason) {
    const SubCriterion& c = *find_criterion(plan.criteria, id);
    CriterionResult r;
    r.criterion = c;
    r.skipped = true;
    r.skip_reason = reason;
    r.verdict = Verdict::INCONCLUSIVE;
    crs.push_back(std::move(r));
  };

  push_ci("R1", pss_point, pss_stat);
  push_point("R2", min_rho, &minrho_stat);

  if (inclusivity_available) {
    push_ci("I1", i1_point, dauc_stat);
    push_point("I2", i2_point, &maxece_stat);
  } else {
    push_skipped("I1", "no evaluable subgroup for any attribute");
    push_skipped("I2", "no evaluable subgroup for any attribute");
  }

  push_ci("S1", result.tfr_profile.max_tfr, maxtfr_stat);
  push_point("S2", s2_point, &width_stat);

  // Equity: intervals for every proxy; the first proxy carries E1/E2 in the
  // scorecard, the rest ride along in the equity block.
  const SubCriterion& e1c = *find_criterion(plan.criteria, "E1");
  const SubCriterion& e2c = *find_criterion(plan.criteria, "E2");
  std::vector<EquityProxyInput> proxy_inputs;
  for (size_t k = 0; k < result.equity.size(); ++k) {
    ProxyEquity& pe = result.equity[k];
    const ProxySpec& ps = proxy_specs[usable_proxies[k]];
    // Fixed min-max normalization from the full sample, paired with the
    // fixed scores inside each replicate.
    double lo = ps.values[0], hi = ps.values[0];
    for (double v : ps.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    std::vector<double> norm(n);
    for (size_t i = 0; i < n; ++i) norm[i] = (ps.values[i] - lo) / (hi - lo);

    RowStatistic rho_stat = [&, k](std::span<const int32_t> idx) {
      std::vector<double> a(idx.size()), b(idx.size());
      for (size_t t = 0; t < idx.size(); ++t) {
        a[t] = base[idx[t]];
        b[t] = proxy_specs[usable_proxies[k]].values[idx[t]];
      }
      return spearman_or_nan(a, b);
    };
    double p_rho = 1.0;
    pe.rho = ci_estimate(rho_stat, pe.report.rho_need, e1c, p_rho);
    pe.rho_p = p_rho;

    std::vector<std::pair<std::string, const std::vector<std::string>*>> parts;
    for (const auto& attr : attributes)
      parts.emplace_back(attr, &cohort.subgroups.at(attr));
    RowStatistic gap_stat = [&, norm](std::span<const int32_t> idx) {
      double worst = 0.0;
      std::map<std::string, std::pair<double, double>> sums;
      std::map<std::string, size_t> counts;
      for (const auto& [attr, part] : parts) {
        sums.clear();
        counts.clear();
        for (int32_t i : idx) {
          auto& acc = sums[(*part)[i]];
          acc.first += base[i];
          acc.second += norm[i];
          counts[(*part)[i]]++;
        }
        for (const auto& [group, acc] : sums) {
          double cnt = static_cast<double>(counts[group]);
          worst = std::max(worst, std::fabs(acc.first / cnt - acc.second / cnt));
        }
      }
      return worst;
    };
    double p_gap = 1.0;
    pe.max_gap = ci_estimate(gap_stat, pe.report.max_abs_gap, e2c, p_gap);

    EquityProxyInput in;
    in.name = pe.report.proxy;
    in.rho = pe.rho;
    in.p_boot = p_rho;
    in.is_outcome_label = pe.is_outcome_label;
    proxy_inputs.push_back(std::move(in));
  }

  EquityDiagnostic eq = equity_diagnostic(proxy_inputs, e1c);
  result.equity_disagreement = eq.disagreement;
  for (size_t k = 0; k < result.equity.size(); ++k)
    result.equity[k].equivalent = eq.per_proxy[k].equivalent;
  for (auto& w : eq.warnings) warnings.push_back(std::move(w));

  {
    // E1/E2 rows from the primary (first) proxy; DIAGNOSTIC by construction.
    const ProxyEquity& primary = result.equity.front();
    CriterionResult e1r;
    e1r.criterion = e1c;
    e1r.sample_n = n;
    e1r.value = primary.report.rho_need;
    e1r.has_ci = !primary.rho.degenerate;
    e1r.ci_lo = primary.rho.lo;
    e1r.ci_hi = primary.rho.hi;
    e1r.degenerate = primary.rho.degenerate;
    e1r.p_boot = primary.rho_p;
    e1r.has_p = true;
    e1r.verdict = Verdict::DIAGNOSTIC;
    e1r.equivalent = eq.per_proxy.front().equivalent;
    crs.push_back(std::move(e1r));

    CriterionResult e2r;
    e2r.criterion = e2c;
    e2r.sample_n = n;
    e2r.value = primary.report.max_abs_gap;
    e2r.has_ci = !primary.max_gap.degenerate;
    e2r.ci_lo = primary.max_gap.lo;
    e2r.ci_hi = primary.max_gap.hi;
    e2r.degenerate = primary.max_gap.degenerate;
    e2r.verdict = Verdict::DIAGNOSTIC;
    IntervalEstimate shadow = primary.max_gap;
    SubCriterion gating_e2 = e2c;
    gating_e2.gating = true;
    e2r.equivalent = classify_with_reason(shadow, gating_e2).verdict;
    crs.push_back(std::move(e2r));
  }

  if (result.latency_measured) {
    const SubCriterion& d1c = *find_criterion(plan.criteria, "D1");
    CriterionResult r;
    r.criterion = d1c;
    r.sample_n = n;
    r.value = result.latency.cohort_ms;
    r.holm_exempt = true;
    r.holm_exempt_reason = "latency is hardware-bounded; no bootstrap CI";
    IntervalEstimate point_only;
    point_only.point = r.value;
    r.verdict = classify(point_only, d1c);
    crs.push_back(std::move(r));
  } else {
    push_skipped("D1", "latency not measured (needs a scorer and R >= 1)");
  }

  if (result.top3_computed) {
    push_point("D2", result.top3.f_top3, &ftop3_stat);
  } else {
    push_skipped("D2", plan.scorer && plan.compute_attributions
                           ? "fewer than 3 features"
                           : "attributions not computed (needs a scorer)");
  }

  // Informative-floor annotation for bracketing INCONCLUSIVEs.
  for (auto& r : crs) {
    if (r.skipped || r.reason != ReasonCode::ci_brackets_threshold) continue;
    MetricKind kind = MetricKind::proportion;
    if (r.criterion.id == "S1") kind = MetricKind::max_tfr;
    if (r.criterion.id == "I1") kind = MetricKind::auc_gap;
    double deviation =
        std::clamp(std::fabs(r.value - r.criterion.threshold),
                   1e-3, r.criterion.threshold * 0.9);
    long floor_n =
        min_test_size(kind, r.criterion.threshold, deviation, 0.80);
    if (static_cast<long>(n) < floor_n) {
      r.reason = ReasonCode::below_informative_floor;
      warnings.push_back(r.criterion.id + ": n=" + std::to_string(n) +
                         " below the informative floor (~" +
                         std::to_string(floor_n) +
                         ") for the observed deviation");
    }
  }

  // Optional per-subgroup calibration tests joining the Holm family.
  std::vector<std::pair<std::string, double>> extra_family;
  int holm_m = plan.holm_m;
  if (plan.expand_inclusivity_family && inclusivity_available) {
    const SubCriterion& i2c = *find_criterion(plan.criteria, "I2");
    for (const auto* g : evaluable) {
      std::vector<char> member(n, 0);
      for (int32_t i : g->rows) member[i] = 1;
      RowStatistic group_ece = [&, member](std::span<const int32_t> idx) {
        std::vector<double> gs;
        std::vector<int> gy;
        for (int32_t i : idx)
          if (member[i]) {
            gs.push_back(base[i]);
            gy.push_back(labels[i]);
          }
        if (gs.empty()) return std::numeric_limits<double>::quiet_NaN();
        return ece(gs, gy, plan.ece_bins);
      };
      ReplicateSet reps = evaluate_replicates(group_ece, n, labels, plan.boot);
      extra_family.emplace_back(
          "I2:" + g->attribute + "=" + g->group,
          bootstrap_p(reps.values, i2c.threshold, i2c.direction));
    }
    holm_m += static_cast<int>(extra_family.size());
  }

  result.scorecard =
      assemble_scorecard(std::move(crs), plan.holm_alpha, holm_m, extra_family);
  for (auto& w : warnings) result.scorecard.warnings.push_back(std::move(w));

  // ---- echoes ---------------------------------------------------------------
  result.cohort_hash = to_hex(fnv1a64(cohort_to_csv(cohort)));
  result.cohort_n = n;
  result.cohort_prevalence = cohort.prevalence();
  result.battery_echo = plan.battery;
  result.echo.tau0 = plan.tau0;
  result.echo.sweep = plan.sweep;
  result.echo.delta = plan.delta;
  result.echo.ece_bins = plan.ece_bins;
  result.echo.boot = plan.boot;
  result.echo.criteria = plan.criteria;
  result.echo.holm_alpha = plan.holm_alpha;
  result.echo.holm_m = holm_m;
  result.echo.subgroup_attributes = attributes;
  for (size_t k = 0; k < result.equity.size(); ++k)
    result.echo.proxy_names.push_back(result.equity[k].report.proxy);
  result.echo.latency_repetitions = plan.scorer ? plan.latency_repetitions : 0;
  result.echo.latency_warmup = plan.latency_warmup;
  result.echo.compute_attributions = plan.scorer && plan.compute_attributions;
  return result;
}

std::vector<std::pair<double, Verdict>> threshold_sensitivity_sweep(
    const EvaluationResult& result, const std::string& criterion_id,
    std::span<const double> thresholds) {
  if (thresholds.empty()) fail(Errc::config_error, "empty threshold sweep");
  const CriterionResult* r = result.scorecard.find(criterion_id);
  if (!r) fail(Errc::config_error, "unknown criterion id: " + criterion_id);
  if (!r->criterion.ci_backed)
    fail(Errc::config_error,
         "criterion " + criterion_id + " carries no interval to sweep");
  IntervalEstimate est;
  est.point = r->value;
  est.lo = r->ci_lo;
  est.hi = r->ci_hi;
  est.degenerate = r->degenerate;

  std::vector<std::pair<double, Verdict>> table;
  for (double t : thresholds) {
    SubCriterion c = r->criterion;
    c.threshold = t;
    c.gating = true;  // report what the CI rule says even for Equity ids
    table.emplace_back(t, classify(est, c));
  }
  return table;
}

MonotonicityTable pss_monotonicity_check(const Cohort& cohort,
                                         const Scorer& scorer,
                                         const std::vector<std::string>&
                                             noise_columns,
                                         std::span<const double> sigmas,
                                         uint64_t master_seed, double tau0) {
  if (sigmas.empty()) fail(Errc::config_error, "empty sigma list");
  bool has_zero = false;
  for (double s : sigmas) has_zero |= (s == 0.0);
  if (!has_zero) fail(Errc::config_error, "sigma list must include 0");

  std::vector<double> base = scorer.score(cohort.features);
  MonotonicityTable table;
  for (double sigma : sigmas) {
    PerturbationSpec spec;
    spec.id = "noise_" + format_double(sigma);
    spec.kind = PerturbationSpec::Kind::gaussian_noise;
    spec.sigma = sigma;
    spec.columns = noise_columns;
    spec.seed_offset = 0;  // common draws across the ladder
    FeatureMatrix Xp = apply(spec, cohort.features, master_seed);
    std::vector<double> pert = scorer.score(Xp);
    table.rows.push_back({sigma, pfr(base, pert, tau0)});
  }
  table.monotone = true;
  std::vector<MonotonicityRow> sorted = table.rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.sigma < b.sigma; });
  for (size_t k = 1; k < sorted.size(); ++k)
    if (sorted[k].pss < sorted[k - 1].pss - 0.002) table.monotone = false;
  return table;
}

}  // namespace preflight
