// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each criterion pins its tolerance in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <vector>

#include "preflight/csv.hpp"
#include "preflight/explain.hpp"
#include "preflight/report.hpp"
#include "preflight/rng.hpp"
#include "preflight/runner.hpp"

using namespace preflight;
using clock_type = std::chrono::steady_clock;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::vector<std::string> continuous_columns(const FeatureMatrix& X) {
  std::vector<std::string> cols;
  for (size_t j = 0; j < X.d; ++j)
    if (X.column_kinds[j] == ColumnKind::continuous)
      cols.push_back(X.column_names[j]);
  return cols;
}

// Shared standard fixture: the 10,000-row synthetic cohort, its 2,000-row
// test split, and the fitted baseline.
struct StandardFixture {
  Cohort cohort;
  Cohort train;
  Cohort test;
  LogisticBaseline model;
};

StandardFixture& standard_fixture() {
  static StandardFixture fx = [] {
    StandardFixture f;
    CohortGenConfig config;  // n = 10000, seed 42
    f.cohort = generate_synthetic(config);
    SplitResult split = stratified_split(f.cohort, 0.2, 42);
    f.train = std::move(split.train);
    f.test = std::move(split.test);
    FitConfig fit;
    f.model = fit_logistic(f.train, fit);
    return f;
  }();
  return fx;
}

// ---------------------------------------------------------------------------
// 1. Verdict-logic fixtures from the published scorecard tables.
// ---------------------------------------------------------------------------
Check criterion_verdict_fixtures() {
  Check c;
  auto criteria = default_criteria();
  const SubCriterion& r1 = *find_criterion(criteria, "R1");
  const SubCriterion& i1 = *find_criterion(criteria, "I1");
  const SubCriterion& s1 = *find_criterion(criteria, "S1");
  const SubCriterion& d1 = *find_criterion(criteria, "D1");
  SubCriterion e1_rule = *find_criterion(criteria, "E1");
  e1_rule.gating = true;  // the CI rule behind the DIAGNOSTIC tag

  struct Row {
    const SubCriterion* criterion;
    double value, lo, hi;
    bool degenerate;
    Verdict expected;
    const char* name;
  };
  const std::vector<Row> rows = {
      // synthetic cohort scorecard
      {&r1, 0.064, 0.058, 0.070, false, Verdict::FAIL, "synthetic R1"},
      {&i1, 0.059, 0.042, 0.066, false, Verdict::INCONCLUSIVE, "synthetic I1"},
      {&s1, 0.199, 0.183, 0.217, false, Verdict::FAIL, "synthetic S1"},
      // heart-disease cohort
      {&r1, 0.078, 0.041, 0.123, false, Verdict::INCONCLUSIVE, "heart R1"},
      {&i1, 0.118, 0, 0, true, Verdict::INCONCLUSIVE, "heart I1 degenerate"},
      {&s1, 0.344, 0.228, 0.459, false, Verdict::FAIL, "heart S1"},
      // diabetes-130 cohort
      {&r1, 0.0004, 0.0002, 0.0006, false, Verdict::PASS, "diabetes R1"},
      {&i1, 0.262, 0.110, 0.346, false, Verdict::FAIL, "diabetes I1"},
      {&s1, 0.491, 0.485, 0.498, false, Verdict::FAIL, "diabetes S1"},
      // 2024 survey cohort
      {&r1, 0.011, 0.008, 0.015, false, Verdict::PASS, "survey24 R1"},
      {&i1, 0.328, 0.248, 0.718, false, Verdict::FAIL, "survey24 I1"},
      {&s1, 0.225, 0.205, 0.243, false, Verdict::FAIL, "survey24 S1"},
      // 2023 survey cohort
      {&r1, 0.017, 0.014, 0.019, false, Verdict::PASS, "survey23 R1"},
      {&i1, 0.183, 0.113, 0.240, false, Verdict::FAIL, "survey23 I1"},
      {&s1, 0.325, 0.312, 0.337, false, Verdict::FAIL, "survey23 S1"},
      // examination-survey cohort
      {&r1, 0.027, 0.020, 0.033, false, Verdict::PASS, "exam R1"},
      {&i1, 0.075, 0.037, 0.141, false, Verdict::INCONCLUSIVE, "exam I1"},
      {&s1, 0.098, 0.078, 0.116, false, Verdict::INCONCLUSIVE, "exam S1"},
      // telephone-survey cohort
      {&r1, 0.036, 0.033, 0.039, false, Verdict::PASS, "phone R1"},
      {&i1, 0.233, 0.164, 0.272, false, Verdict::FAIL, "phone I1"},
      {&s1, 0.642, 0.632, 0.652, false, Verdict::FAIL, "phone S1"},
  };
  for (const auto& row : rows) {
    IntervalEstimate est;
    est.point = row.value;
    if (row.degenerate) {
      est.degenerate = true;
    } else {
      est.lo = row.lo;
      est.hi = row.hi;
    }
    Verdict got = classify(est, *row.criterion);
    c.expect(got == row.expected, std::string(row.name) + " gave " +
                                      verdict_name(got) + " expected " +
                                      verdict_name(row.expected));
  }

  // Equity rows report DIAGNOSTIC whatever the interval says; the underlying
  // rule still separates the proxies.
  IntervalEstimate label_proxy;
  label_proxy.point = 0.732;
  label_proxy.lo = 0.713;
  label_proxy.hi = 0.749;
  IntervalEstimate cci_proxy;
  cci_proxy.point = 0.599;
  cci_proxy.lo = 0.572;
  cci_proxy.hi = 0.627;
  const SubCriterion& e1 = *find_criterion(criteria, "E1");
  c.expect(classify(label_proxy, e1) == Verdict::DIAGNOSTIC, "equity not diagnostic");
  c.expect(classify(cci_proxy, e1) == Verdict::DIAGNOSTIC, "equity not diagnostic");
  c.expect(classify(label_proxy, e1_rule) == Verdict::PASS, "label proxy rule");
  c.expect(classify(cci_proxy, e1_rule) == Verdict::FAIL, "cci proxy rule");

  // Latency point checks from the cohort tables (ms against 500).
  for (double ms : {1.4, 0.6, 6.6, 1.1, 2.2, 3.5}) {
    IntervalEstimate lat;
    lat.point = ms;
    c.expect(classify(lat, d1) == Verdict::PASS, "latency point check");
  }
  return c;
}

// ---------------------------------------------------------------------------
// 2. AUC oracle equivalence.
// ---------------------------------------------------------------------------
Check criterion_auc_oracle() {
  Check c;
  Rng rng(4242);
  for (int fixture = 0; fixture < 100; ++fixture) {
    size_t n = 10 + rng.uniform_int(491);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool pos = false, neg = false;
    // Draw from a small grid so ties are common.
    size_t grid = 2 + rng.uniform_int(40);
    for (size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.uniform_int(grid)) /
                  static_cast<double>(grid - 1 ? grid - 1 : 1);
      labels[i] = rng.uniform() < 0.5;
      (labels[i] ? pos : neg) = true;
    }
    if (!pos || !neg) {
      labels[0] = 0;
      labels[n - 1] = 1;
    }

    double wins = 0.0;
    size_t np = 0, nn = 0;
    for (size_t i = 0; i < n; ++i) {
      if (!labels[i]) continue;
      ++np;
      for (size_t j = 0; j < n; ++j) {
        if (labels[j]) continue;
        if (scores[i] > scores[j])
          wins += 1.0;
        else if (scores[i] == scores[j])
          wins += 0.5;
      }
    }
    nn = n - np;
    double oracle = wins / (static_cast<double>(np) * static_cast<double>(nn));
    double fast = auc(scores, labels);
    c.expect(fast == oracle, "fixture " + std::to_string(fixture) +
                                 ": auc " + std::to_string(fast) +
                                 " != oracle " + std::to_string(oracle));
  }
  return c;
}

// ---------------------------------------------------------------------------
// 3. BCa empirical coverage on the standard-normal mean.
// ---------------------------------------------------------------------------
Check criterion_bca_coverage() {
  Check c;
  BootstrapConfig config;
  config.replicates = 1000;
  config.seed = 42;
  config.stratify_by_label = false;
  auto draw = [](uint64_t seed) {
    Rng rng(seed);
    std::vector<double> sample(200);
    for (double& v : sample) v = rng.normal();
    return sample;
  };
  auto stat = [](std::span<const double> values, std::span<const int32_t> idx) {
    double acc = 0.0;
    for (int32_t i : idx) acc += values[i];
    return acc / static_cast<double>(idx.size());
  };
  CoverageResult result = empirical_coverage(draw, stat, 0.0, 1000, config);
  c.expect(result.coverage >= 0.93 && result.coverage <= 0.97,
           "coverage " + std::to_string(result.coverage) +
               " outside [0.93, 0.97]");
  return c;
}

// ---------------------------------------------------------------------------
// 4. Holm-Bonferroni family outcome plus the monotone-rejection property.
// ---------------------------------------------------------------------------
Check criterion_holm() {
  Check c;
  std::vector<std::pair<std::string, double>> family = {
      {"R1", 0.0004}, {"S1", 0.0008}, {"I1", 0.06}, {"I2", 0.16},
      {"S2", 0.43},   {"R2", 0.70},   {"D1", 0.85}, {"D2", 0.97}};
  HolmFamily holm = holm_bonferroni(family, 0.05);
  c.expect(holm.m == 8, "family size");
  c.expect(std::fabs(holm.tests[0].adjusted_alpha - 0.00625) < 1e-12,
           "step-1 alpha is alpha/8");
  c.expect(holm.rejected("R1") && holm.rejected("S1"),
           "p<0.001 pair not rejected at alpha/8");
  c.expect(!holm.rejected("I1"), "p=0.06 survived correction");
  int rejected = 0;
  for (const auto& t : holm.tests) rejected += t.rejected;
  c.expect(rejected == 2, "expected exactly the two small-p rejections");

  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    size_t m = 2 + rng.uniform_int(12);
    std::vector<std::pair<std::string, double>> random_family;
    for (size_t k = 0; k < m; ++k)
      random_family.emplace_back("t" + std::to_string(k), rng.uniform());
    HolmFamily h = holm_bonferroni(random_family, 0.05);
    bool stopped = false;
    for (const auto& t : h.tests) {
      if (!t.rejected) stopped = true;
      if (stopped && t.rejected) {
        c.expect(false, "monotone rejection violated at trial " +
                            std::to_string(trial));
        return c;
      }
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// 5. PSS monotonicity on the built-in model and standard cohort.
// ---------------------------------------------------------------------------
Check criterion_pss_monotone() {
  Check c;
  StandardFixture& fx = standard_fixture();
  std::vector<double> sigmas{0.0, 0.025, 0.05, 0.10};
  MonotonicityTable table = pss_monotonicity_check(
      fx.test, fx.model, continuous_columns(fx.test.features), sigmas, 42, 0.5);
  c.expect(table.rows.size() == 4, "row count");
  c.expect(table.rows[0].pss == 0.0, "PSS(0) not exactly zero");
  for (size_t k = 1; k < table.rows.size(); ++k)
    c.expect(table.rows[k].pss >= table.rows[k - 1].pss,
             "PSS not non-decreasing at sigma " +
                 std::to_string(table.rows[k].sigma));
  c.expect(table.monotone, "monotonicity verdict");
  return c;
}

// ---------------------------------------------------------------------------
// 6. TFR and boundary-width fixtures.
// ---------------------------------------------------------------------------
Check criterion_tfr_fixtures() {
  Check c;
  // tau = tau0 never flips anyone.
  std::vector<double> any{0.1, 0.4, 0.5, 0.6, 0.9};
  c.expect(tfr(any, 0.5, 0.5) == 0.0, "TFR(tau0,tau0) != 0");

  // Uniform grid: analytic values within 1/n.
  const size_t n = 2001;
  std::vector<double> grid(n);
  for (size_t i = 0; i < n; ++i)
    grid[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  double tfr_04 = tfr(grid, 0.4, 0.5);
  c.expect(std::fabs(tfr_04 - 0.10) <= 1.0 / static_cast<double>(n) + 1e-12,
           "grid TFR(0.4) = " + std::to_string(tfr_04));
  double width = boundary_width(grid, 0.5, 0.05);
  c.expect(std::fabs(width - 0.10) <= 2.0 / static_cast<double>(n) + 1e-12,
           "grid W_0.05 = " + std::to_string(width));

  // Compressed one-sided scores: S1 fails with max TFR beyond 0.9.
  CohortGenConfig gen;
  gen.n = 600;
  gen.seed = 66;
  Cohort cohort = generate_synthetic(gen);
  ScoreSet set;
  Rng rng(9);
  set.baseline.resize(cohort.size());
  for (size_t i = 0; i < cohort.size(); ++i)
    set.baseline[i] = (i % 25 == 0) ? 0.46 + 0.01 * rng.uniform()
                                    : 0.505 + 0.04 * rng.uniform();
  set.perturbed.emplace_back("noop", set.baseline);

  EvaluationPlan plan;
  plan.scores = &set;
  PerturbationSpec noop;
  noop.id = "noop";
  noop.kind = PerturbationSpec::Kind::column_rescale;
  noop.column = "age";
  noop.factor = 1.0;
  plan.battery.specs = {noop};
  plan.boot.replicates = 400;
  EvaluationResult result = evaluate_all(cohort, plan);
  c.expect(result.tfr_profile.max_tfr > 0.9,
           "compressed max TFR " + std::to_string(result.tfr_profile.max_tfr));
  c.expect(result.scorecard.find("S1")->verdict == Verdict::FAIL,
           "compressed fixture S1 verdict");
  return c;
}

// ---------------------------------------------------------------------------
// 7. ECE fixtures.
// ---------------------------------------------------------------------------
Check criterion_ece() {
  Check c;
  // Calibrated by construction: per-bin mean prediction equals event rate,
  // with exact binary fractions so the identity holds to the last bit.
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 8; ++i) {
    s.push_back(0.125);
    y.push_back(i < 1);
  }
  for (int i = 0; i < 4; ++i) {
    s.push_back(0.25);
    y.push_back(i < 1);
  }
  for (int i = 0; i < 4; ++i) {
    s.push_back(0.5);
    y.push_back(i < 2);
  }
  for (int i = 0; i < 4; ++i) {
    s.push_back(0.75);
    y.push_back(i < 3);
  }
  c.expect(ece(s, y, 10) == 0.0, "calibrated fixture ECE != 0");

  // Three-bin hand fixture to 1e-12.
  std::vector<double> hs{0.1, 0.2, 0.5, 0.9, 0.8, 0.7};
  std::vector<int> hy{0, 1, 1, 1, 0, 1};
  double expected = (2.0 / 6.0) * std::fabs(0.5 - 0.15) +
                    (1.0 / 6.0) * std::fabs(1.0 - 0.5) +
                    (3.0 / 6.0) * std::fabs(2.0 / 3.0 - 0.8);
  c.expect(std::fabs(ece(hs, hy, 3) - expected) < 1e-12,
           "three-bin fixture mismatch: " + std::to_string(ece(hs, hy, 3)));
  return c;
}

// ---------------------------------------------------------------------------
// 8. Attribution consistency: sampled vs exact, additivity identity.
// ---------------------------------------------------------------------------
Check criterion_attribution() {
  Check c;
  StandardFixture& fx = standard_fixture();

  FeatureMatrix head = fx.test.features;
  head.n = 24;
  head.values.resize(head.n * head.d);

  AttributionMatrix exact = linear_attributions(fx.model, head);
  auto logits = fx.model.logit(head);
  for (size_t i = 0; i < head.n; ++i) {
    double acc = fx.model.background_logit();
    for (size_t j = 0; j < head.d; ++j) acc += exact.at(i, j);
    c.expect(std::fabs(acc - logits[i]) < 1e-9,
             "additivity identity broken at row " + std::to_string(i));
  }

  // The sampled provider must converge to the exact values on an additive
  // game. Scale the linear predictor into [0,1] with enough headroom that
  // no coalition mixture can reach the clamp, so the game stays additive.
  FeatureMatrix background = fx.train.features;
  background.n = 256;
  background.values.resize(background.n * background.d);

  const auto& w = fx.model.weights();
  const auto& sd = fx.model.sds();
  const auto& mu = fx.model.means();
  double bound = std::fabs(fx.model.bias());
  for (size_t j = 0; j < head.d; ++j) {
    double worst = 0.0;
    for (size_t i = 0; i < head.n; ++i)
      worst = std::max(worst, std::fabs((head.at(i, j) - mu[j]) / sd[j]));
    for (size_t i = 0; i < background.n; ++i)
      worst = std::max(worst,
                       std::fabs((background.at(i, j) - mu[j]) / sd[j]));
    bound += std::fabs(w[j]) * worst;
  }
  const double scale = 0.45 / bound;

  class ScaledLinear : public Scorer {
   public:
    ScaledLinear(const LogisticBaseline& m, double s) : m_(m), s_(s) {}
    std::vector<double> score(const FeatureMatrix& X) const override {
      auto z = m_.logit(X);
      for (double& v : z) v = std::clamp(0.5 + s_ * v, 0.0, 1.0);
      return z;
    }
    std::string descriptor() const override { return "scaled_linear"; }

   private:
    const LogisticBaseline& m_;
    double s_;
  };
  ScaledLinear scaled(fx.model, scale);

  AttributionMatrix sampled = shapley_sampled(scaled, head, background, 512, 42);

  // Exact attribution of the scaled affine game.
  std::vector<double> bg_mean(head.d, 0.0);
  for (size_t i = 0; i < background.n; ++i)
    for (size_t j = 0; j < head.d; ++j) bg_mean[j] += background.at(i, j);
  for (double& v : bg_mean) v /= static_cast<double>(background.n);
  double max_abs = 0.0;
  std::vector<double> exact_scaled(head.n * head.d);
  for (size_t i = 0; i < head.n; ++i)
    for (size_t j = 0; j < head.d; ++j) {
      double value = scale * w[j] * (head.at(i, j) - bg_mean[j]) / sd[j];
      exact_scaled[i * head.d + j] = value;
      max_abs = std::max(max_abs, std::fabs(value));
    }
  for (size_t i = 0; i < head.n; ++i)
    for (size_t j = 0; j < head.d; ++j) {
      double diff =
          std::fabs(sampled.at(i, j) - exact_scaled[i * head.d + j]) / max_abs;
      c.expect(diff < 0.05, "normalized sampled-vs-exact gap " +
                                std::to_string(diff) + " at (" +
                                std::to_string(i) + "," + std::to_string(j) +
                                ")");
    }
  return c;
}

// ---------------------------------------------------------------------------
// 9. Scorer-mode vs score-set-mode byte equality.
// ---------------------------------------------------------------------------
Check criterion_round_trip() {
  Check c;
  StandardFixture& fx = standard_fixture();

  EvaluationPlan plan;
  plan.scorer = &fx.model;
  plan.battery = default_battery(continuous_columns(fx.test.features), "age");
  plan.boot.replicates = 1000;
  plan.latency_repetitions = 0;      // scorer-only extras off in both modes
  plan.compute_attributions = false;

  EvaluationResult live = evaluate_all(fx.test, plan);
  std::string live_json = scorecard_to_json(live).dump(2);

  // Through the score-file format, full precision.
  ScoreSet computed;
  computed.baseline = fx.model.score(fx.test.features);
  for (const auto& spec : plan.battery.specs) {
    FeatureMatrix Xp = apply(spec, fx.test.features, plan.battery.master_seed);
    computed.perturbed.emplace_back(spec.id, fx.model.score(Xp));
  }
  std::string csv = score_set_to_csv(fx.test, computed);
  write_file("/tmp/preflight_acceptance_scores.csv", csv);
  ScoreSet loaded =
      load_score_set("/tmp/preflight_acceptance_scores.csv", fx.test);

  EvaluationPlan replay = plan;
  replay.scorer = nullptr;
  replay.scores = &loaded;
  EvaluationResult from_file = evaluate_all(fx.test, replay);
  std::string file_json = scorecard_to_json(from_file).dump(2);

  c.expect(live_json == file_json, "scorecard JSON differs between modes");
  return c;
}

// ---------------------------------------------------------------------------
// 10. End-to-end runtime budget.
// ---------------------------------------------------------------------------
Check criterion_runtime(double* seconds_out) {
  Check c;
  StandardFixture& fx = standard_fixture();
  EvaluationPlan plan;
  plan.scorer = &fx.model;
  plan.battery = default_battery(continuous_columns(fx.test.features), "age");
  plan.boot.replicates = 1000;

  auto t0 = clock_type::now();
  EvaluationResult result = evaluate_all(fx.test, plan);
  double seconds =
      std::chrono::duration_cast<std::chrono::milliseconds>(clock_type::now() -
                                                            t0)
          .count() /
      1000.0;
  *seconds_out = seconds;
  c.expect(result.cohort_n == 2000, "test split size");
  c.expect(seconds < 60.0,
           "evaluate_all took " + std::to_string(seconds) + "s");
  // All ten sub-criteria present.
  for (const char* id :
       {"R1", "R2", "I1", "I2", "S1", "S2", "E1", "E2", "D1", "D2"})
    c.expect(result.scorecard.find(id) != nullptr,
             std::string("missing ") + id);
  return c;
}

// ---------------------------------------------------------------------------
// 11. Power calculator anchors.
// ---------------------------------------------------------------------------
Check criterion_power() {
  Check c;
  long pss_n = min_test_size(MetricKind::proportion, 0.05, 0.01, 0.80);
  c.expect(std::fabs(static_cast<double>(pss_n) - 1500.0) <= 150.0,
           "PSS case n = " + std::to_string(pss_n));
  long tfr_n = min_test_size(MetricKind::max_tfr, 0.10, 0.01, 0.80);
  c.expect(std::fabs(static_cast<double>(tfr_n) - 3500.0) <= 350.0,
           "max TFR case n = " + std::to_string(tfr_n));
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_seconds;
    std::function<Check()> run;
  };
  double runtime_seconds = 0.0;
  const std::vector<Criterion> criteria = {
      {"1 verdict-logic fixtures", 1.0, criterion_verdict_fixtures},
      {"2 AUC oracle equivalence", 10.0, criterion_auc_oracle},
      {"3 BCa empirical coverage", 60.0, criterion_bca_coverage},
      {"4 Holm-Bonferroni step-down", 5.0, criterion_holm},
      {"5 PSS monotonicity ladder", 60.0, criterion_pss_monotone},
      {"6 TFR and boundary fixtures", 5.0, criterion_tfr_fixtures},
      {"7 ECE fixtures", 1.0, criterion_ece},
      {"8 attribution consistency", 30.0, criterion_attribution},
      {"9 mode round-trip byte equality", 120.0, criterion_round_trip},
      {"10 end-to-end runtime", 60.0,
       [&] { return criterion_runtime(&runtime_seconds); }},
      {"11 power calculator anchors", 1.0, criterion_power},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    auto t0 = clock_type::now();
    Check result = criterion.run();
    double elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            clock_type::now() - t0)
            .count() /
        1000.0;
    bool in_budget = elapsed < criterion.budget_seconds;
    bool ok = result.ok && in_budget;
    std::printf("[%s] %-34s %6.2fs (budget %.0fs)%s%s\n",
                ok ? "PASS" : "FAIL", criterion.name, elapsed,
                criterion.budget_seconds,
                result.detail.empty() ? "" : "  -- ",
                result.detail.c_str());
    if (!in_budget && result.ok)
      std::printf("       over time budget\n");
    failures += !ok;
  }
  if (failures == 0)
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
  else
    std::printf("acceptance: %d criteria FAILED\n", failures);
  return failures;
}
