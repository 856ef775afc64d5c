#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "preflight/csv.hpp"
#include "preflight/report.hpp"
#include "preflight/rng.hpp"
#include "preflight/runner.hpp"

using namespace preflight;

namespace {

uint64_t default_seed() {
  if (const char* env = std::getenv("PREFLIGHT_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return v;
  }
  return 42;
}

CohortGenConfig load_gen_config(const std::string& path) {
  CohortGenConfig config;
  std::istringstream in(read_file(path));
  std::string line;
  auto set_marginal = [](Marginal& m, const std::string& key, double v) {
    for (auto& [name, p] : m)
      if (name == key) {
        p = v;
        return;
      }
    fail(Errc::invalid_config, "unknown category: " + key);
  };
  while (std::getline(in, line)) {
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      size_t b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    double v = 0;
    if (!parse_double(val, v))
      fail(Errc::invalid_config, "non-numeric config value: " + val);
    if (key == "n")
      config.n = static_cast<size_t>(v);
    else if (key == "seed")
      config.seed = static_cast<uint64_t>(v);
    else if (key == "positive_fraction")
      config.positive_fraction = v;
    else if (key.rfind("age.", 0) == 0)
      set_marginal(config.age_bands, key.substr(4), v);
    else if (key.rfind("sex.", 0) == 0)
      set_marginal(config.sex, key.substr(4), v);
    else if (key.rfind("race.", 0) == 0)
      set_marginal(config.race, key.substr(5), v);
    else if (key.rfind("insurance.", 0) == 0)
      set_marginal(config.insurance, key.substr(10), v);
    else if (key == "cci_mean")
      config.cci_mean = v;
    else if (key == "cci_sd")
      config.cci_sd = v;
    else if (key == "bmi_mean")
      config.bmi_mean = v;
    else if (key == "bmi_sd")
      config.bmi_sd = v;
    else if (key == "deprivation_mean")
      config.deprivation_mean = v;
    else if (key == "deprivation_sd")
      config.deprivation_sd = v;
    else
      fail(Errc::invalid_config, "unknown config key: " + key);
  }
  return config;
}

std::vector<std::string> continuous_columns(const FeatureMatrix& X) {
  std::vector<std::string> cols;
  for (size_t j = 0; j < X.d; ++j)
    if (X.column_kinds[j] == ColumnKind::continuous)
      cols.push_back(X.column_names[j]);
  return cols;
}

int run_generate(const std::string& out, long long n, uint64_t seed,
                 double positive_fraction, const std::string& config_path) {
  CohortGenConfig config;
  if (!config_path.empty()) config = load_gen_config(config_path);
  if (n >= 0) config.n = static_cast<size_t>(n);
  config.seed = seed;
  if (positive_fraction > 0) config.positive_fraction = positive_fraction;
  Cohort cohort = generate_synthetic(config);
  std::string schema_path = out + ".schema";
  write_cohort(cohort, out, schema_path);
  std::cout << "wrote " << cohort.size() << " rows to " << out
            << " (prevalence " << format_double(cohort.prevalence())
            << "), schema " << schema_path << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string cohort_path, schema_path;
  bool model_builtin = false;
  std::string scores_path;
  std::string battery_path;
  std::vector<double> noise_sigmas;        // --noise, repeatable
  std::vector<std::string> rescale_flags;  // --rescale col:factor, repeatable
  double tau0 = 0.5;
  int boot = 1000;
  uint64_t seed = 42;
  std::string json_out;
  bool table = false;
  double test_fraction = 0.2;
  int latency_reps = 30;
  bool no_attributions = false;
  std::string dump_scores;
  std::string dump_test_prefix;
  std::string dump_attributions;
};

// Battery assembled from repeatable CLI flags.
PerturbationBattery battery_from_flags(const EvaluateArgs& args,
                                       const std::vector<std::string>& cols) {
  PerturbationBattery battery;
  int64_t offset = 1;
  for (double sigma : args.noise_sigmas) {
    PerturbationSpec s;
    s.id = "noise_" + format_double(sigma);
    s.kind = PerturbationSpec::Kind::gaussian_noise;
    s.sigma = sigma;
    s.columns = cols;
    s.seed_offset = offset++;
    battery.specs.push_back(std::move(s));
  }
  for (const auto& flag : args.rescale_flags) {
    size_t colon = flag.rfind(':');
    if (colon == std::string::npos)
      fail(Errc::config_error, "--rescale expects column:factor, got " + flag);
    PerturbationSpec s;
    s.kind = PerturbationSpec::Kind::column_rescale;
    s.column = flag.substr(0, colon);
    if (!parse_double(flag.substr(colon + 1), s.factor))
      fail(Errc::config_error, "bad rescale factor in " + flag);
    s.id = "rescale_" + s.column + "_" + format_double(s.factor);
    s.seed_offset = offset++;
    battery.specs.push_back(std::move(s));
  }
  battery.validate();
  return battery;
}

int run_evaluate(const EvaluateArgs& args) {
  if (args.model_builtin == !args.scores_path.empty()) {
    std::cerr << "choose exactly one scoring mode: --model builtin or --scores FILE\n";
    return 2;
  }
  CohortSchema schema = CohortSchema::load(args.schema_path);
  LoadReport loaded = load_cohort_csv(args.cohort_path, schema);
  if (loaded.rows_dropped > 0)
    std::cerr << "dropped " << loaded.rows_dropped
              << " incomplete rows during ingestion\n";

  EvaluationPlan plan;
  plan.tau0 = args.tau0;
  plan.boot.replicates = args.boot;
  plan.boot.seed = args.seed;
  plan.latency_repetitions = args.latency_reps;
  plan.compute_attributions = !args.no_attributions;

  Cohort eval_cohort;
  std::unique_ptr<LogisticBaseline> model;
  std::unique_ptr<ScoreSet> scores;

  if (args.model_builtin) {
    SplitResult split =
        stratified_split(loaded.cohort, args.test_fraction, args.seed);
    FitConfig fit;
    fit.seed = args.seed;
    model = std::make_unique<LogisticBaseline>(fit_logistic(split.train, fit));
    eval_cohort = std::move(split.test);
    plan.scorer = model.get();
  } else {
    eval_cohort = std::move(loaded.cohort);
  }

  if (!args.battery_path.empty()) {
    plan.battery = load_battery_file(args.battery_path);
  } else if (!args.noise_sigmas.empty() || !args.rescale_flags.empty()) {
    plan.battery =
        battery_from_flags(args, continuous_columns(eval_cohort.features));
    plan.battery.master_seed = args.seed;
  } else {
    auto cols = continuous_columns(eval_cohort.features);
    if (cols.empty()) {
      std::cerr << "cohort has no continuous feature columns for the default battery\n";
      return 2;
    }
    plan.battery = default_battery(cols, cols.front());
    plan.battery.master_seed = args.seed;
  }

  if (!args.model_builtin) {
    scores = std::make_unique<ScoreSet>(
        load_score_set(args.scores_path, eval_cohort));
    plan.scores = scores.get();
  }

  if (!args.dump_scores.empty()) {
    if (!plan.scorer) {
      std::cerr << "--dump-scores needs --model builtin\n";
      return 2;
    }
    ScoreSet dumped;
    dumped.baseline = plan.scorer->score(eval_cohort.features);
    for (const auto& spec : plan.battery.specs) {
      FeatureMatrix Xp =
          apply(spec, eval_cohort.features, plan.battery.master_seed);
      dumped.perturbed.emplace_back(spec.id, plan.scorer->score(Xp));
    }
    write_file(args.dump_scores, score_set_to_csv(eval_cohort, dumped));
  }
  if (!args.dump_test_prefix.empty())
    write_cohort(eval_cohort, args.dump_test_prefix + ".csv",
                 args.dump_test_prefix + ".schema");
  if (!args.dump_attributions.empty()) {
    if (!model) {
      std::cerr << "--dump-attributions needs --model builtin\n";
      return 2;
    }
    write_file(args.dump_attributions,
               attribution_to_csv(linear_attributions(*model, eval_cohort.features)));
  }

  EvaluationResult result = evaluate_all(eval_cohort, plan);
  nlohmann::ordered_json doc = scorecard_to_json(result);
  validate_scorecard_json(doc);
  if (!args.json_out.empty()) write_file(args.json_out, doc.dump(2) + "\n");
  if (args.table || args.json_out.empty()) std::cout << render_table(result);
  return scorecard_exit_code(result.scorecard);
}

int run_sweep(const std::string& scorecard_path, const std::string& criterion,
              const std::vector<double>& thresholds) {
  nlohmann::ordered_json doc =
      nlohmann::ordered_json::parse(read_file(scorecard_path));
  for (const auto& [name, dim] : doc.at("dimensions").items()) {
    const auto& subs = dim.at("sub_criteria");
    if (!subs.contains(criterion)) continue;
    const auto& sub = subs.at(criterion);
    if (!sub.contains("ci_lo")) {
      std::cerr << "criterion " << criterion << " carries no interval\n";
      return 2;
    }
    IntervalEstimate est;
    est.point = sub.at("value").get<double>();
    est.lo = sub.at("ci_lo").get<double>();
    est.hi = sub.at("ci_hi").get<double>();
    SubCriterion c;
    c.id = criterion;
    c.metric = sub.at("metric").get<std::string>();
    c.direction = sub.at("direction").get<std::string>() == "upper_bounded"
                      ? Direction::upper_bounded
                      : Direction::lower_bounded;
    c.gating = true;
    c.ci_backed = true;
    std::cout << "criterion " << criterion << " value " << est.point << " CI ["
              << est.lo << ", " << est.hi << "]\n";
    std::cout << "threshold  verdict\n";
    for (double t : thresholds) {
      c.threshold = t;
      std::cout << format_double(t) << "  " << verdict_name(classify(est, c))
                << "\n";
    }
    return 0;
  }
  std::cerr << "unknown criterion id: " << criterion << "\n";
  return 2;
}

int run_coverage(int trials, int sample_n, int boot, uint64_t seed) {
  BootstrapConfig config;
  config.replicates = boot;
  config.seed = seed;
  auto draw = [sample_n](uint64_t trial_seed) {
    Rng rng(trial_seed);
    std::vector<double> sample(sample_n);
    for (double& v : sample) v = rng.normal();
    return sample;
  };
  auto stat = [](std::span<const double> values, std::span<const int32_t> idx) {
    double acc = 0.0;
    for (int32_t i : idx) acc += values[i];
    return acc / static_cast<double>(idx.size());
  };
  CoverageResult result = empirical_coverage(draw, stat, 0.0, trials, config);
  std::cout << "trials " << result.trials << "  coverage "
            << format_double(result.coverage) << "  degenerate "
            << result.degenerate << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pre-deployment audit for binary classifiers"};
  app.require_subcommand(1);

  // generate-cohort
  auto* gen = app.add_subcommand("generate-cohort", "generate a synthetic cohort");
  long long gen_n = -1;  // -1: keep the config default
  uint64_t gen_seed = default_seed();
  double gen_pf = 0;
  std::string gen_out, gen_config;
  gen->add_option("--n", gen_n, "rows to generate");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--positive-fraction", gen_pf, "label prevalence");
  gen->add_option("--out", gen_out, "output CSV path")->required();
  gen->add_option("--config", gen_config, "generator config file");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "run the five-dimension audit");
  EvaluateArgs ea;
  ea.seed = default_seed();
  std::string model_name;
  ev->add_option("--cohort", ea.cohort_path, "cohort CSV")->required();
  ev->add_option("--schema", ea.schema_path, "schema sidecar")->required();
  ev->add_option("--model", model_name, "built-in model (builtin)");
  ev->add_option("--scores", ea.scores_path, "precomputed score CSV");
  ev->add_option("--battery", ea.battery_path, "battery config file");
  ev->add_option("--noise", ea.noise_sigmas,
                 "add a noise perturbation at this sigma (repeatable)");
  ev->add_option("--rescale", ea.rescale_flags,
                 "add a column rescale as column:factor (repeatable)");
  ev->add_option("--tau0", ea.tau0, "operating threshold");
  ev->add_option("--boot", ea.boot, "bootstrap replicates");
  ev->add_option("--seed", ea.seed, "seed");
  ev->add_option("--json", ea.json_out, "scorecard JSON output path");
  ev->add_flag("--table", ea.table, "print the text table");
  ev->add_option("--test-fraction", ea.test_fraction, "held-out fraction (builtin mode)");
  ev->add_option("--latency-reps", ea.latency_reps, "latency timing calls (0 skips)");
  ev->add_flag("--no-attributions", ea.no_attributions, "skip the attribution check");
  ev->add_option("--dump-scores", ea.dump_scores, "write the score set CSV");
  ev->add_option("--dump-test", ea.dump_test_prefix,
                 "write the evaluated cohort (prefix for .csv/.schema)");
  ev->add_option("--dump-attributions", ea.dump_attributions,
                 "write the attribution matrix CSV (builtin mode)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "re-read a verdict at other thresholds");
  std::string sw_scorecard, sw_criterion;
  std::vector<double> sw_thresholds;
  sw->add_option("--scorecard", sw_scorecard, "scorecard JSON")->required();
  sw->add_option("--criterion", sw_criterion, "criterion id")->required();
  sw->add_option("--thresholds", sw_thresholds, "alternative thresholds")
      ->required()
      ->delimiter(',');

  // coverage
  auto* cov = app.add_subcommand("coverage", "audit interval coverage");
  int cov_trials = 1000, cov_n = 200, cov_boot = 1000;
  uint64_t cov_seed = default_seed();
  cov->add_option("--trials", cov_trials, "simulation trials");
  cov->add_option("--n", cov_n, "sample size per trial");
  cov->add_option("--boot", cov_boot, "bootstrap replicates");
  cov->add_option("--seed", cov_seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed())
      return run_generate(gen_out, gen_n, gen_seed, gen_pf, gen_config);
    if (ev->parsed()) {
      ea.model_builtin = (model_name == "builtin");
      if (!model_name.empty() && !ea.model_builtin) {
        std::cerr << "unknown model: " << model_name << "\n";
        return 2;
      }
      return run_evaluate(ea);
    }
    if (sw->parsed()) return run_sweep(sw_scorecard, sw_criterion, sw_thresholds);
    if (cov->parsed()) return run_coverage(cov_trials, cov_n, cov_boot, cov_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
