#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "preflight/matrix.hpp"
#include "preflight/perturb.hpp"
#include "preflight/rng.hpp"

using namespace preflight;

namespace {

FeatureMatrix demo_matrix(size_t n, uint64_t seed) {
  FeatureMatrix X;
  X.column_names = {"age", "lab", "flag", "code"};
  X.column_kinds = {ColumnKind::continuous, ColumnKind::continuous,
                    ColumnKind::binary_flag, ColumnKind::categorical_code};
  X.d = 4;
  X.n = n;
  X.values.resize(n * 4);
  Rng rng(seed);
  for (size_t i = 0; i < n; ++i) {
    X.at(i, 0) = 40.0 + 30.0 * rng.uniform();
    X.at(i, 1) = rng.normal() * 5.0 + 100.0;
    X.at(i, 2) = rng.uniform() < 0.3 ? 1.0 : 0.0;
    X.at(i, 3) = static_cast<double>(rng.uniform_int(3));
  }
  return X;
}

PerturbationSpec noise_spec(double sigma) {
  PerturbationSpec s;
  s.id = "noise";
  s.kind = PerturbationSpec::Kind::gaussian_noise;
  s.sigma = sigma;
  s.columns = {"age", "lab"};
  s.seed_offset = 1;
  return s;
}

}  // namespace

TEST_CASE("zero-sigma noise is an exact identity") {
  FeatureMatrix X = demo_matrix(64, 1);
  FeatureMatrix out = apply(noise_spec(0.0), X, 42);
  CHECK(out.values == X.values);
}

TEST_CASE("rescale touches only the target column") {
  FeatureMatrix X = demo_matrix(32, 2);
  PerturbationSpec s;
  s.id = "rescale";
  s.kind = PerturbationSpec::Kind::column_rescale;
  s.column = "age";
  s.factor = 1.05;
  FeatureMatrix out = apply(s, X, 42);
  for (size_t i = 0; i < X.n; ++i) {
    CHECK(out.at(i, 0) == X.at(i, 0) * 1.05);
    CHECK(out.at(i, 1) == X.at(i, 1));
    CHECK(out.at(i, 2) == X.at(i, 2));
    CHECK(out.at(i, 3) == X.at(i, 3));
  }

  SUBCASE("rescale refuses non-continuous columns") {
    s.column = "flag";
    CHECK_THROWS_AS((void)apply(s, X, 42), Error);
  }
  SUBCASE("missing column") {
    s.column = "ghost";
    CHECK_THROWS_AS((void)apply(s, X, 42), Error);
  }
}

TEST_CASE("noise determinism and scaling") {
  FeatureMatrix X = demo_matrix(4000, 3);
  PerturbationSpec s = noise_spec(0.10);
  FeatureMatrix a = apply(s, X, 42);
  FeatureMatrix b = apply(s, X, 42);
  CHECK(a.values == b.values);

  FeatureMatrix other_seed = apply(s, X, 43);
  CHECK(other_seed.values != a.values);

  SUBCASE("per-column noise is sigma times the column SD") {
    double sd_age = column_stddev(X, 0);
    double acc = 0.0;
    for (size_t i = 0; i < X.n; ++i) {
      double diff = a.at(i, 0) - X.at(i, 0);
      acc += diff * diff;
    }
    double observed_sd = std::sqrt(acc / static_cast<double>(X.n - 1));
    CHECK(observed_sd == doctest::Approx(0.10 * sd_age).epsilon(0.06));
  }

  SUBCASE("untargeted columns are bit-identical") {
    for (size_t i = 0; i < X.n; ++i) {
      CHECK(a.at(i, 2) == X.at(i, 2));
      CHECK(a.at(i, 3) == X.at(i, 3));
    }
  }

  SUBCASE("no cross-row coupling: identical matrices, identical outputs") {
    FeatureMatrix Y = X;  // row-identical copy
    FeatureMatrix ay = apply(s, Y, 42);
    CHECK(ay.values == a.values);
  }

  SUBCASE("clamp keeps values inside the observed range") {
    PerturbationSpec clamped = s;
    clamped.sigma = 3.0;
    clamped.clamp_to_observed = true;
    double lo = X.at(0, 0), hi = X.at(0, 0);
    for (size_t i = 0; i < X.n; ++i) {
      lo = std::min(lo, X.at(i, 0));
      hi = std::max(hi, X.at(i, 0));
    }
    FeatureMatrix out = apply(clamped, X, 42);
    for (size_t i = 0; i < X.n; ++i) {
      CHECK(out.at(i, 0) >= lo);
      CHECK(out.at(i, 0) <= hi);
    }
  }
}

TEST_CASE("value maps") {
  FeatureMatrix X = demo_matrix(50, 4);
  PerturbationSpec s;
  s.id = "vm";
  s.kind = PerturbationSpec::Kind::value_map;
  s.column = "code";
  s.mapping = {{0, 1}, {1, 0}, {2, 2}};
  FeatureMatrix out = apply(s, X, 42);
  for (size_t i = 0; i < X.n; ++i)
    CHECK(out.at(i, 3) == s.mapping.at(static_cast<int>(X.at(i, 3))));

  SUBCASE("identity mapping is exact identity") {
    s.mapping = {{0, 0}, {1, 1}, {2, 2}};
    FeatureMatrix same = apply(s, X, 42);
    CHECK(same.values == X.values);
  }

  SUBCASE("mapping must cover observed codes") {
    s.mapping = {{0, 1}, {1, 0}};  // code 2 present but unmapped
    CHECK_THROWS_AS((void)apply(s, X, 42), Error);
  }

  SUBCASE("continuous columns refuse value maps") {
    s.column = "age";
    s.mapping = {{0, 1}};
    CHECK_THROWS_AS((void)apply(s, X, 42), Error);
  }
}

TEST_CASE("default battery") {
  auto battery = default_battery({"age", "lab"}, "age");
  CHECK(battery.specs.size() == 4);
  CHECK(battery.specs[0].sigma == 0.05);
  CHECK(battery.specs[1].sigma == 0.10);
  CHECK(battery.specs[2].factor == 1.05);
  CHECK(battery.specs[3].factor == 1.06);
  CHECK(battery.warnings.empty());

  SUBCASE("no continuous columns leaves the rescale pair plus a warning") {
    auto rescales_only = default_battery({}, "age");
    CHECK(rescales_only.specs.size() == 2);
    CHECK(!rescales_only.warnings.empty());
  }

  SUBCASE("rescale column must be continuous") {
    CHECK_THROWS_AS((void)default_battery({"age", "lab"}, "flag"), Error);
    CHECK_THROWS_AS((void)default_battery({"age"}, ""), Error);
  }

  SUBCASE("spec order does not couple the noise streams") {
    // Same spec applied from differently ordered batteries gives the same
    // matrix: draws key off master_seed and seed_offset only.
    FeatureMatrix X = demo_matrix(128, 9);
    auto b1 = default_battery({"age", "lab"}, "age");
    FeatureMatrix first = apply(b1.specs[1], X, b1.master_seed);
    std::swap(b1.specs[0], b1.specs[1]);
    FeatureMatrix swapped = apply(b1.specs[0], X, b1.master_seed);
    CHECK(first.values == swapped.values);
  }
}

TEST_CASE("battery config files round-trip") {
  std::string text =
      "[noise_a]\n"
      "kind = gaussian_noise\n"
      "sigma = 0.07\n"
      "columns = age, lab\n"
      "seed_offset = 3\n"
      "\n"
      "[swap_codes]\n"
      "kind = value_map\n"
      "column = code\n"
      "mapping = 0:1, 1:0, 2:2\n"
      "seed_offset = 4\n"
      "\n"
      "[stretch]\n"
      "kind = column_rescale\n"
      "column = age\n"
      "factor = 1.06\n"
      "seed_offset = 5\n";
  PerturbationBattery battery = parse_battery(text);
  CHECK(battery.specs.size() == 3);
  CHECK(battery.specs[0].sigma == 0.07);
  CHECK(battery.specs[0].columns == std::vector<std::string>{"age", "lab"});
  CHECK(battery.specs[1].mapping.at(0) == 1);
  CHECK(battery.specs[2].factor == 1.06);

  PerturbationBattery reparsed = parse_battery(battery_to_text(battery));
  CHECK(reparsed.specs.size() == battery.specs.size());
  for (size_t k = 0; k < battery.specs.size(); ++k) {
    CHECK(reparsed.specs[k].id == battery.specs[k].id);
    CHECK(reparsed.specs[k].kind == battery.specs[k].kind);
    CHECK(reparsed.specs[k].sigma == battery.specs[k].sigma);
    CHECK(reparsed.specs[k].factor == battery.specs[k].factor);
    CHECK(reparsed.specs[k].seed_offset == battery.specs[k].seed_offset);
  }

  SUBCASE("duplicate ids rejected") {
    CHECK_THROWS_AS(
        (void)parse_battery("[a]\nkind = column_rescale\ncolumn = x\nfactor = "
                            "1.1\n[a]\nkind = column_rescale\ncolumn = "
                            "y\nfactor = 1.2\n"),
        Error);
  }
  SUBCASE("empty battery rejected") {
    CHECK_THROWS_AS((void)parse_battery("# nothing here\n"), Error);
  }
}
