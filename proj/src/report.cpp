#include "preflight/report.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace preflight {

using nlohmann::ordered_json;

namespace {

const char* direction_name(Direction d) {
  return d == Direction::upper_bounded ? "upper_bounded" : "lower_bounded";
}

ordered_json criterion_json(const CriterionResult& r) {
  ordered_json j;
  j["id"] = r.criterion.id;
  j["metric"] = r.criterion.metric;
  j["threshold"] = r.criterion.threshold;
  j["direction"] = direction_name(r.criterion.direction);
  if (r.skipped) {
    j["verdict"] = "SKIPPED";
    j["reason"] = r.skip_reason;
    return j;
  }
  j["value"] = r.value;
  if (r.has_ci) {
    j["ci_lo"] = r.ci_lo;
    j["ci_hi"] = r.ci_hi;
  }
  if (r.degenerate) j["ci_degenerate"] = true;
  if (r.has_p) j["p_boot"] = r.p_boot;
  j["verdict"] = verdict_name(r.verdict);
  if (r.reason != ReasonCode::none) j["reason"] = reason_name(r.reason);
  if (r.equivalent) j["equivalent"] = verdict_name(*r.equivalent);
  return j;
}

ordered_json spec_json(const PerturbationSpec& s) {
  ordered_json j;
  j["id"] = s.id;
  switch (s.kind) {
    case PerturbationSpec::Kind::gaussian_noise:
      j["kind"] = "gaussian_noise";
      j["sigma"] = s.sigma;
      j["columns"] = s.columns;
      break;
    case PerturbationSpec::Kind::column_rescale:
      j["kind"] = "column_rescale";
      j["column"] = s.column;
      j["factor"] = s.factor;
      break;
    case PerturbationSpec::Kind::value_map: {
      j["kind"] = "value_map";
      j["column"] = s.column;
      ordered_json m;
      for (const auto& [from, to] : s.mapping)
        m[std::to_string(from)] = to;
      j["mapping"] = m;
      break;
    }
  }
  j["seed_offset"] = s.seed_offset;
  j["clamp_to_observed"] = s.clamp_to_observed;
  return j;
}

}  // namespace

ordered_json scorecard_to_json(const EvaluationResult& result) {
  ordered_json doc;
  doc["schema_version"] = "1.0";

  ordered_json cohort;
  cohort["n"] = result.cohort_n;
  cohort["prevalence"] = result.cohort_prevalence;
  cohort["content_hash"] = "fnv1a64:" + result.cohort_hash;
  doc["cohort"] = cohort;

  ordered_json config;
  config["tau0"] = result.echo.tau0;
  config["sweep"] = result.echo.sweep;
  config["delta"] = result.echo.delta;
  config["ece_bins"] = result.echo.ece_bins;
  ordered_json boot;
  boot["replicates"] = result.echo.boot.replicates;
  boot["seed"] = result.echo.boot.seed;
  boot["alpha"] = result.echo.boot.alpha;
  boot["method"] = result.echo.boot.method == BootstrapConfig::Method::bca
                       ? "bca"
                       : "percentile";
  boot["stratify_by_label"] = result.echo.boot.stratify_by_label;
  config["bootstrap"] = boot;
  ordered_json criteria;
  for (const auto& c : result.echo.criteria) {
    ordered_json cj;
    cj["metric"] = c.metric;
    cj["threshold"] = c.threshold;
    cj["direction"] = direction_name(c.direction);
    cj["gating"] = c.gating;
    cj["ci_backed"] = c.ci_backed;
    criteria[c.id] = cj;
  }
  config["criteria"] = criteria;
  ordered_json battery = ordered_json::array();
  for (const auto& s : result.battery_echo.specs) battery.push_back(spec_json(s));
  config["battery"] = battery;
  config["battery_master_seed"] = result.battery_echo.master_seed;
  config["subgroups"] = result.echo.subgroup_attributes;
  config["proxies"] = result.echo.proxy_names;
  config["latency_repetitions"] = result.echo.latency_repetitions;
  config["latency_warmup"] = result.echo.latency_warmup;
  config["attributions"] = result.echo.compute_attributions;
  doc["config"] = config;

  ordered_json context;
  if (result.auroc_defined) context["auroc"] = result.auroc;
  context["brier"] = result.brier_score;
  doc["context"] = context;

  ordered_json dims;
  for (const auto& dim : result.scorecard.dimensions) {
    ordered_json dj;
    dj["verdict"] = verdict_name(dim.verdict);
    ordered_json subs;
    for (const auto& sub : dim.sub) subs[sub.criterion.id] = criterion_json(sub);
    dj["sub_criteria"] = subs;

    if (dim.name == "reliability") {
      ordered_json specs = ordered_json::array();
      for (const auto& d : result.reliability) {
        ordered_json sj;
        sj["id"] = d.id;
        sj["pfr"] = d.pfr;
        if (d.rho_defined) sj["rank_correlation"] = d.rho;
        specs.push_back(sj);
      }
      dj["per_perturbation"] = specs;
    } else if (dim.name == "inclusivity") {
      ordered_json attrs = ordered_json::array();
      for (const auto& rep : result.subgroup_reports) {
        ordered_json aj;
        aj["attribute"] = rep.attribute;
        aj["delta_auc"] = rep.delta_auc;
        aj["max_ece"] = rep.max_ece;
        if (rep.air_defined) aj["four_fifths_ratio"] = rep.air;
        ordered_json gs = ordered_json::array();
        for (const auto& g : rep.groups) {
          ordered_json gj;
          gj["group"] = g.group;
          gj["n"] = g.size;
          if (g.auc_defined)
            gj["auc"] = g.auc;
          else
            gj["auc_absent"] = g.auc_absent_reason;
          gj["ece"] = g.ece;
          if (!std::isnan(g.selection_rate))
            gj["selection_rate"] = g.selection_rate;
          gj["small"] = g.small;
          gs.push_back(gj);
        }
        aj["groups"] = gs;
        attrs.push_back(aj);
      }
      dj["attributes"] = attrs;
      dj["joint_delta_auc"] = result.joint_delta_auc;
    } else if (dim.name == "sensitivity") {
      ordered_json prof;
      prof["tau0"] = result.tfr_profile.tau0;
      prof["thresholds"] = result.tfr_profile.thresholds;
      prof["tfr"] = result.tfr_profile.tfr;
      prof["max_tfr"] = result.tfr_profile.max_tfr;
      prof["band_max_tfr"] = result.tfr_profile.band_max_tfr;
      dj["tfr_profile"] = prof;
    } else if (dim.name == "equity") {
      ordered_json proxies = ordered_json::array();
      for (const auto& pe : result.equity) {
        ordered_json pj;
        pj["proxy"] = pe.report.proxy;
        pj["is_outcome_label"] = pe.is_outcome_label;
        pj["rho_need"] = pe.report.rho_need;
        if (!pe.rho.degenerate) {
          pj["rho_ci_lo"] = pe.rho.lo;
          pj["rho_ci_hi"] = pe.rho.hi;
        }
        pj["rho_p_boot"] = pe.rho_p;
        if (pe.equivalent) pj["equivalent"] = verdict_name(*pe.equivalent);
        pj["max_abs_gap"] = pe.report.max_abs_gap;
        if (!pe.max_gap.degenerate) {
          pj["gap_ci_lo"] = pe.max_gap.lo;
          pj["gap_ci_hi"] = pe.max_gap.hi;
        }
        ordered_json gaps = ordered_json::array();
        for (const auto& g : pe.report.gaps) {
          ordered_json gj;
          gj["attribute"] = g.attribute;
          gj["group"] = g.group;
          gj["n"] = g.size;
          gj["gap"] = g.gap;
          gaps.push_back(gj);
        }
        pj["gaps"] = gaps;
        proxies.push_back(pj);
      }
      dj["proxies"] = proxies;
      dj["proxy_disagreement"] = result.equity_disagreement;
    } else if (dim.name == "deployability") {
      if (result.latency_measured) {
        dj["latency_ms"] = result.latency.cohort_ms;
        dj["per_patient_ms"] = result.latency.per_patient_ms;
        dj["latency_repetitions"] = result.latency.repetitions;
      }
      if (result.top3_computed) {
        dj["top3_features"] = result.top3.top_names;
        dj["f_top3"] = result.top3.f_top3;
      }
    }
    dims[dim.name] = dj;
  }
  doc["dimensions"] = dims;

  ordered_json holm;
  holm["alpha"] = result.scorecard.holm.alpha;
  holm["m"] = result.scorecard.holm.m;
  ordered_json tests = ordered_json::array();
  for (const auto& t : result.scorecard.holm.tests) {
    ordered_json tj;
    tj["id"] = t.id;
    tj["p_boot"] = t.p;
    tj["adjusted_alpha"] = t.adjusted_alpha;
    tj["rejected"] = t.rejected;
    tests.push_back(tj);
  }
  holm["tests"] = tests;
  ordered_json exempt = ordered_json::array();
  for (const auto& [id, reason] : result.scorecard.holm_exempt) {
    ordered_json ej;
    ej["id"] = id;
    ej["reason"] = reason;
    exempt.push_back(ej);
  }
  holm["exempt"] = exempt;
  doc["holm"] = holm;

  doc["gate"] = result.scorecard.gate;
  doc["warnings"] = result.scorecard.warnings;

  ordered_json env;
#if defined(__clang__)
  env["compiler"] = "clang " + std::to_string(__clang_major__);
#elif defined(__GNUC__)
  env["compiler"] = "gcc " + std::to_string(__GNUC__);
#else
  env["compiler"] = "unknown";
#endif
#if defined(__linux__)
  env["os"] = "linux";
#elif defined(__APPLE__)
  env["os"] = "darwin";
#else
  env["os"] = "other";
#endif
  doc["environment"] = env;
  return doc;
}

int scorecard_exit_code(const Scorecard& card) {
  bool any_fail = false, any_inconclusive = false;
  for (const auto& dim : card.dimensions) {
    if (dim.name == "equity") continue;
    if (dim.verdict == Verdict::FAIL) any_fail = true;
    if (dim.verdict == Verdict::INCONCLUSIVE) any_inconclusive = true;
  }
  if (any_fail) return 1;
  if (any_inconclusive) return 3;
  return card.gate ? 0 : 1;
}

namespace {

std::string sig4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return std::string(buf);
}

}  // namespace

std::string render_table(const EvaluationResult& result) {
  std::ostringstream out;
  out << "dimension      id  metric                 value      95% CI                p_boot    verdict\n";
  out << "-------------- --- ---------------------- ---------- --------------------- --------- ------------\n";
  for (const auto& dim : result.scorecard.dimensions) {
    for (const auto& sub : dim.sub) {
      char line[200];
      std::string ci = "--";
      if (!sub.skipped && sub.has_ci)
        ci = "[" + sig4(sub.ci_lo) + ", " + sig4(sub.ci_hi) + "]";
      else if (!sub.skipped && sub.degenerate)
        ci = "degenerate";
      std::string p = (!sub.skipped && sub.has_p) ? sig4(sub.p_boot) : "--";
      std::string value = sub.skipped ? "--" : sig4(sub.value);
      std::string verdict = sub.skipped ? ("SKIPPED(" + sub.skip_reason + ")")
                                        : verdict_name(sub.verdict);
      std::snprintf(line, sizeof(line), "%-14s %-3s %-22s %-10s %-21s %-9s %s\n",
                    dim.name.c_str(), sub.criterion.id.c_str(),
                    sub.criterion.metric.c_str(), value.c_str(), ci.c_str(),
                    p.c_str(), verdict.c_str());
      out << line;
    }
  }
  out << "\ngate: " << (result.scorecard.gate ? "PASS" : "BLOCKED") << "\n";
  if (!result.scorecard.warnings.empty()) {
    out << "warnings:\n";
    for (const auto& w : result.scorecard.warnings) out << "  - " << w << "\n";
  }
  return out.str();
}

void validate_scorecard_json(const ordered_json& doc) {
  static const std::set<std::string> kTopKeys = {
      "schema_version", "cohort", "config", "context", "dimensions",
      "holm",           "gate",   "warnings", "environment"};
  for (const auto& [key, value] : doc.items())
    if (!kTopKeys.count(key))
      fail(Errc::schema_error, "unknown top-level key: " + key);
  for (const auto& key : kTopKeys)
    if (!doc.contains(key))
      fail(Errc::schema_error, "missing top-level key: " + key);

  static const std::set<std::string> kVerdicts = {
      "PASS", "FAIL", "INCONCLUSIVE", "DIAGNOSTIC", "SKIPPED"};
  static const std::set<std::string> kDims = {
      "reliability", "inclusivity", "sensitivity", "equity", "deployability"};
  const auto& dims = doc.at("dimensions");
  for (const auto& name : kDims)
    if (!dims.contains(name))
      fail(Errc::schema_error, "missing dimension: " + name);
  for (const auto& [name, dim] : dims.items()) {
    if (!kDims.count(name)) fail(Errc::schema_error, "unknown dimension: " + name);
    if (!kVerdicts.count(dim.at("verdict").get<std::string>()))
      fail(Errc::schema_error, "verdict outside enum in " + name);
    for (const auto& [id, sub] : dim.at("sub_criteria").items())
      if (!kVerdicts.count(sub.at("verdict").get<std::string>()))
        fail(Errc::schema_error, "verdict outside enum for " + id);
  }
  if (!doc.at("gate").is_boolean())
    fail(Errc::schema_error, "gate must be boolean");
}

}  // namespace preflight
