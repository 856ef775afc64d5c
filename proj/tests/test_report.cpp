#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "preflight/report.hpp"
#include "preflight/runner.hpp"

using namespace preflight;

namespace {

EvaluationResult demo_result() {
  CohortGenConfig config;
  config.n = 700;
  config.seed = 19;
  Cohort cohort = generate_synthetic(config);
  SplitResult split = stratified_split(cohort, 0.3, 19);
  static LogisticBaseline model = fit_logistic(split.train, FitConfig{});

  EvaluationPlan plan;
  plan.scorer = &model;
  std::vector<std::string> cols;
  for (size_t j = 0; j < split.test.features.d; ++j)
    if (split.test.features.column_kinds[j] == ColumnKind::continuous)
      cols.push_back(split.test.features.column_names[j]);
  plan.battery = default_battery(cols, "age");
  plan.boot.replicates = 150;
  plan.latency_repetitions = 2;
  plan.latency_warmup = 0;
  return evaluate_all(split.test, plan);
}

}  // namespace

TEST_CASE("scorecard document") {
  EvaluationResult result = demo_result();
  nlohmann::ordered_json doc = scorecard_to_json(result);

  SUBCASE("validates against the closed schema") {
    validate_scorecard_json(doc);
  }

  SUBCASE("round-trips losslessly") {
    std::string text = doc.dump(2);
    nlohmann::ordered_json reparsed = nlohmann::ordered_json::parse(text);
    CHECK(reparsed == doc);
    CHECK(reparsed.dump(2) == text);
    // Numbers survive exactly.
    CHECK(reparsed["dimensions"]["reliability"]["sub_criteria"]["R1"]["value"]
              .get<double>() == result.scorecard.find("R1")->value);
    CHECK(reparsed["cohort"]["prevalence"].get<double>() ==
          result.cohort_prevalence);
  }

  SUBCASE("carries the battery echo verbatim") {
    CHECK(doc["config"]["battery"].size() == result.battery_echo.specs.size());
    CHECK(doc["config"]["battery"][0]["id"] ==
          result.battery_echo.specs[0].id);
    CHECK(doc["config"]["battery"][0]["sigma"].get<double>() == 0.05);
  }

  SUBCASE("verdict strings come from the closed enum") {
    for (const auto& [name, dim] : doc["dimensions"].items()) {
      std::string v = dim["verdict"].get<std::string>();
      CHECK((v == "PASS" || v == "FAIL" || v == "INCONCLUSIVE" ||
             v == "DIAGNOSTIC"));
    }
  }

  SUBCASE("unknown top-level fields are rejected") {
    nlohmann::ordered_json bad = doc;
    bad["surprise"] = 1;
    CHECK_THROWS_AS(validate_scorecard_json(bad), Error);
  }

  SUBCASE("table and JSON carry the same numbers at 4 significant digits") {
    std::string table = render_table(result);
    const CriterionResult* r1 = result.scorecard.find("R1");
    char expect[32];
    std::snprintf(expect, sizeof(expect), "%.4g", r1->value);
    CHECK(table.find(expect) != std::string::npos);
    const CriterionResult* s1 = result.scorecard.find("S1");
    std::snprintf(expect, sizeof(expect), "%.4g", s1->value);
    CHECK(table.find(expect) != std::string::npos);
    CHECK(table.find("gate:") != std::string::npos);
  }
}

TEST_CASE("exit codes are a total function of the gating verdicts") {
  EvaluationResult result = demo_result();
  Scorecard& card = result.scorecard;

  auto set_all = [&](Verdict v) {
    for (auto& dim : card.dimensions) {
      if (dim.name == "equity") continue;
      dim.verdict = v;
    }
    card.gate = (v == Verdict::PASS);
  };

  set_all(Verdict::PASS);
  CHECK(scorecard_exit_code(card) == 0);

  set_all(Verdict::PASS);
  card.dimensions[0].verdict = Verdict::FAIL;
  card.gate = false;
  CHECK(scorecard_exit_code(card) == 1);

  set_all(Verdict::PASS);
  card.dimensions[0].verdict = Verdict::INCONCLUSIVE;
  card.gate = false;
  CHECK(scorecard_exit_code(card) == 3);

  // FAIL outranks INCONCLUSIVE.
  set_all(Verdict::PASS);
  card.dimensions[0].verdict = Verdict::INCONCLUSIVE;
  card.dimensions[2].verdict = Verdict::FAIL;
  card.gate = false;
  CHECK(scorecard_exit_code(card) == 1);

  // Equity never changes the exit code.
  set_all(Verdict::PASS);
  card.dimensions[3].verdict = Verdict::DIAGNOSTIC;
  CHECK(scorecard_exit_code(card) == 0);
}
