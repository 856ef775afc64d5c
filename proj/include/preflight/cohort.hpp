#pragma once

#include <map>
#include <string>
#include <vector>

#include "preflight/matrix.hpp"

namespace preflight {

// The evaluation universe: features, binary labels, subgroup partitions and
// need proxies, all aligned by row. Immutable after construction; share
// freely across evaluation workers.
struct Cohort {
  FeatureMatrix features;
  std::vector<int> labels;  // 0/1
  std::map<std::string, std::vector<std::string>> subgroups;
  std::map<std::string, std::vector<double>> need_proxies;
  std::vector<std::string> row_ids;

  size_t size() const { return row_ids.size(); }

  double prevalence() const {
    if (labels.empty()) return 0.0;
    double s = 0.0;
    for (int y : labels) s += y;
    return s / static_cast<double>(labels.size());
  }

  void validate() const;
};

// Marginal distribution over named categories; declaration order is the
// category code order for the feature encoding.
using Marginal = std::vector<std::pair<std::string, double>>;

struct CohortGenConfig {
  size_t n = 10000;
  uint64_t seed = 42;
  double positive_fraction = 0.30;
  Marginal age_bands = {{"18-44", 0.184}, {"45-64", 0.250},
                        {"65-74", 0.282}, {"75+", 0.284}};
  Marginal sex = {{"female", 0.555}, {"male", 0.445}};
  Marginal race = {{"white", 0.638}, {"black", 0.134}, {"hispanic", 0.130},
                   {"asian", 0.057}, {"other", 0.041}};
  Marginal insurance = {{"medicare", 0.474}, {"private", 0.298},
                        {"medicaid", 0.144}, {"uninsured", 0.084}};
  double cci_mean = 0.99, cci_sd = 1.20;
  double bmi_mean = 28.7, bmi_sd = 6.0;
  double deprivation_mean = 49.8, deprivation_sd = 24.1;

  void validate() const;
};

// Deterministic synthetic cohort: 20 feature columns (demographics, nine
// chronic-condition flags, comorbidity index, utilisation counters,
// anthropometrics, deprivation index), four subgroup attributes, a
// comorbidity need proxy, and labels assigned by rank-thresholding a noisy
// latent severity score so prevalence is exact.
Cohort generate_synthetic(const CohortGenConfig& config);

// Column-to-role schema for CSV ingestion. Roles: id, label,
// feature:continuous | feature:flag | feature:categorical,
// subgroup:<attribute>, proxy:<name>. A column may carry several roles.
struct ColumnRole {
  enum class Kind { id, label, feature, subgroup, proxy };
  Kind kind;
  ColumnKind feature_kind = ColumnKind::continuous;
  std::string name;  // attribute or proxy name
};

struct CohortSchema {
  std::vector<std::pair<std::string, std::vector<ColumnRole>>> columns;

  static CohortSchema parse(const std::string& text);
  static CohortSchema load(const std::string& path);
  std::string serialize() const;
};

struct LoadReport {
  Cohort cohort;
  size_t rows_read = 0;
  size_t rows_dropped = 0;
};

// Complete-case ingestion: rows with any missing cell in schema-selected
// columns are dropped and counted.
LoadReport load_cohort_csv(const std::string& path, const CohortSchema& schema);

// Cohort -> CSV text plus its sidecar schema, in the same dialect the
// loader accepts. Round-trips exactly.
std::string cohort_to_csv(const Cohort& cohort);
CohortSchema cohort_schema(const Cohort& cohort);
void write_cohort(const Cohort& cohort, const std::string& csv_path,
                  const std::string& schema_path);

struct SplitResult {
  Cohort train;
  Cohort test;
};

// Class-stratified split, deterministic per seed. Per-class test counts are
// rounded, so prevalence matches to within one row per class.
SplitResult stratified_split(const Cohort& cohort, double test_fraction,
                             uint64_t seed);

Cohort cohort_subset(const Cohort& cohort, const std::vector<size_t>& rows);

}  // namespace preflight
