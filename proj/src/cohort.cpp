#include "preflight/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "preflight/csv.hpp"
#include "preflight/rng.hpp"

namespace preflight {

void Cohort::validate() const {
  size_t n = row_ids.size();
  if (n < 1) fail(Errc::empty_cohort, "cohort has no rows");
  features.validate();
  if (features.n != n) fail(Errc::invalid_config, "feature row count mismatch");
  if (labels.size() != n) fail(Errc::invalid_config, "label length mismatch");
  for (int y : labels)
    if (y != 0 && y != 1) fail(Errc::invalid_config, "label outside {0,1}");
  for (const auto& [attr, part] : subgroups) {
    if (part.size() != n)
      fail(Errc::invalid_config, "subgroup " + attr + " length mismatch");
    for (const auto& key : part)
      if (key.empty())
        fail(Errc::invalid_config, "subgroup " + attr + " has a missing key");
  }
  for (const auto& [name, vals] : need_proxies) {
    if (vals.size() != n)
      fail(Errc::invalid_config, "proxy " + name + " length mismatch");
    for (double v : vals)
      if (!std::isfinite(v))
        fail(Errc::invalid_config, "proxy " + name + " has non-finite value");
  }
  std::set<std::string> seen(row_ids.begin(), row_ids.end());
  if (seen.size() != n) fail(Errc::invalid_config, "row ids not unique");
}

static void validate_marginal(const Marginal& m, const std::string& what) {
  if (m.empty()) fail(Errc::invalid_config, what + " marginal is empty");
  double sum = 0.0;
  for (const auto& [k, p] : m) {
    if (p < 0.0) fail(Errc::invalid_config, what + " probability negative");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    fail(Errc::invalid_config, what + " marginals sum to " + format_double(sum));
}

void CohortGenConfig::validate() const {
  if (n == 0) fail(Errc::invalid_config, "n must be positive");
  if (!(positive_fraction > 0.0) || !(positive_fraction < 1.0))
    fail(Errc::invalid_config, "positive_fraction must lie in (0,1)");
  validate_marginal(age_bands, "age");
  validate_marginal(sex, "sex");
  validate_marginal(race, "race");
  validate_marginal(insurance, "insurance");
  if (cci_sd <= 0 || bmi_sd <= 0 || deprivation_sd <= 0)
    fail(Errc::invalid_config, "clinical SDs must be positive");
}

namespace {

size_t sample_category(const Marginal& m, double u) {
  double cum = 0.0;
  for (size_t k = 0; k < m.size(); ++k) {
    cum += m[k].second;
    if (u < cum) return k;
  }
  return m.size() - 1;
}

// Knuth Poisson sampler; rates here stay small.
int sample_poisson(Rng& rng, double rate) {
  double limit = std::exp(-rate);
  double prod = rng.uniform();
  int k = 0;
  while (prod > limit) {
    prod *= rng.uniform();
    ++k;
  }
  return k;
}

struct AgeBandRange {
  const char* name;
  double lo, hi;
};

constexpr AgeBandRange kAgeRanges[] = {
    {"18-44", 18.0, 45.0},
    {"45-64", 45.0, 65.0},
    {"65-74", 65.0, 75.0},
    {"75+", 75.0, 96.0},
};

std::pair<double, double> age_range_for(const std::string& band) {
  for (const auto& r : kAgeRanges)
    if (band == r.name) return {r.lo, r.hi};
  // Unknown band label in a custom config: fall back to full adult range.
  return {18.0, 96.0};
}

}  // namespace

Cohort generate_synthetic(const CohortGenConfig& config) {
  config.validate();
  const size_t n = config.n;
  Rng rng(splitmix64(config.seed ^ 0x5eedc0047c15ULL));

  // Medicare is tilted toward the 65+ bands with a fixed odds multiplier,
  // renormalised so the configured marginal still holds in expectation.
  double p_old = 0.0;
  for (const auto& [band, p] : config.age_bands) {
    auto [lo, hi] = age_range_for(band);
    if (lo >= 65.0) p_old += p;
  }
  double medicare_marginal = 0.0;
  for (const auto& [k, p] : config.insurance)
    if (k == "medicare") medicare_marginal = p;
  const double tilt = 6.0;
  double base = medicare_marginal / (tilt * p_old + (1.0 - p_old));
  double med_old = std::min(0.97, tilt * base);
  double med_young =
      p_old < 1.0
          ? std::max(0.0, (medicare_marginal - p_old * med_old) / (1.0 - p_old))
          : med_old;

  const std::vector<std::string> feature_names = {
      "age",        "sex_male",     "race_code",     "insurance_code",
      "chf",        "diabetes",     "hypertension",  "copd",
      "ckd",        "cancer",       "depression",    "stroke",
      "arthritis",  "cci",          "prior_hosp",    "ed_visits",
      "outpatient_visits", "med_count", "bmi",       "deprivation_index"};
  const std::vector<ColumnKind> feature_kinds = {
      ColumnKind::continuous,       ColumnKind::binary_flag,
      ColumnKind::categorical_code, ColumnKind::categorical_code,
      ColumnKind::binary_flag,      ColumnKind::binary_flag,
      ColumnKind::binary_flag,      ColumnKind::binary_flag,
      ColumnKind::binary_flag,      ColumnKind::binary_flag,
      ColumnKind::binary_flag,      ColumnKind::binary_flag,
      ColumnKind::binary_flag,      ColumnKind::continuous,
      ColumnKind::continuous,       ColumnKind::continuous,
      ColumnKind::continuous,       ColumnKind::continuous,
      ColumnKind::continuous,       ColumnKind::continuous};
  const size_t d = feature_names.size();

  Cohort cohort;
  cohort.features.column_names = feature_names;
  cohort.features.column_kinds = feature_kinds;
  cohort.features.n = n;
  cohort.features.d = d;
  cohort.features.values.assign(n * d, 0.0);

  std::vector<std::string> band_v(n), sex_v(n), race_v(n), ins_v(n);
  std::vector<double> latent(n);

  for (size_t i = 0; i < n; ++i) {
    size_t bi = sample_category(config.age_bands, rng.uniform());
    band_v[i] = config.age_bands[bi].first;
    auto [lo, hi] = age_range_for(band_v[i]);
    double age = lo + (hi - lo) * rng.uniform();

    size_t si = sample_category(config.sex, rng.uniform());
    sex_v[i] = config.sex[si].first;
    double male = (sex_v[i] == "male") ? 1.0 : 0.0;

    size_t ri = sample_category(config.race, rng.uniform());
    race_v[i] = config.race[ri].first;

    // Insurance: medicare by age-tilted probability, the rest split by the
    // configured conditional shares.
    double p_med = age >= 65.0 ? med_old : med_young;
    size_t ii;
    if (rng.uniform() < p_med) {
      ii = 0;
      for (size_t k = 0; k < config.insurance.size(); ++k)
        if (config.insurance[k].first == "medicare") ii = k;
    } else {
      Marginal rest;
      double rest_sum = 0.0;
      for (const auto& [k, p] : config.insurance)
        if (k != "medicare") rest_sum += p;
      for (const auto& [k, p] : config.insurance)
        if (k != "medicare")
          rest.emplace_back(k, rest_sum > 0 ? p / rest_sum : 0.0);
      size_t rsel = sample_category(rest, rng.uniform());
      ii = 0;
      for (size_t k = 0; k < config.insurance.size(); ++k)
        if (config.insurance[k].first == rest[rsel].first) ii = k;
    }
    ins_v[i] = config.insurance[ii].first;

    // Chronic flags with age-graded prevalence.
    double age_frac = std::clamp((age - 18.0) / 77.0, 0.0, 1.0);
    auto flag = [&](double base_p, double slope) {
      return rng.uniform() < std::clamp(base_p + slope * age_frac, 0.0, 0.95)
                 ? 1.0
                 : 0.0;
    };
    double chf = flag(0.01, 0.22);
    double diabetes = flag(0.06, 0.22);
    double hypertension = flag(0.10, 0.45);
    double copd = flag(0.02, 0.14);
    double ckd = flag(0.01, 0.16);
    double cancer = flag(0.02, 0.14);
    double depression = flag(0.12, 0.02);
    double stroke = flag(0.005, 0.10);
    double arthritis = flag(0.05, 0.40);

    double cci_rate = std::max(
        0.05, config.cci_mean * (0.25 + 1.17 * age_frac) +
                  0.5 * (chf + ckd + cancer));
    double cci = sample_poisson(rng, cci_rate);
    double prior_hosp = sample_poisson(rng, 0.20 + 0.35 * cci + 0.8 * age_frac);
    double ed_visits = sample_poisson(rng, 0.35 + 0.30 * cci + 0.5 * age_frac);
    double outpatient = sample_poisson(rng, 2.0 + 0.8 * cci + 2.0 * age_frac);
    double med_count = sample_poisson(rng, 1.0 + 0.9 * cci + 1.5 * age_frac);
    double bmi = std::clamp(config.bmi_mean + config.bmi_sd * rng.normal(),
                            14.0, 60.0);
    double deprivation =
        std::clamp(config.deprivation_mean + config.deprivation_sd * rng.normal(),
                   0.0, 100.0);

    double* row = &cohort.features.values[i * d];
    row[0] = age;
    row[1] = male;
    row[2] = static_cast<double>(ri);
    row[3] = static_cast<double>(ii);
    row[4] = chf;
    row[5] = diabetes;
    row[6] = hypertension;
    row[7] = copd;
    row[8] = ckd;
    row[9] = cancer;
    row[10] = depression;
    row[11] = stroke;
    row[12] = arthritis;
    row[13] = cci;
    row[14] = prior_hosp;
    row[15] = ed_visits;
    row[16] = outpatient;
    row[17] = med_count;
    row[18] = bmi;
    row[19] = deprivation;

    // Latent severity: age dominates, then utilisation history, comorbidity
    // burden, acute-care contact and CHF, with unit logit noise.
    latent[i] = 0.10 * (age - 63.0) + 0.55 * prior_hosp + 0.45 * cci +
                0.35 * ed_visits + 0.90 * chf + 0.30 * diabetes +
                0.25 * hypertension + 0.006 * (deprivation - 50.0) +
                rng.normal();
  }

  // Rank-threshold the latent score: exactly round(n * positive_fraction)
  // positives, ties broken by row index.
  size_t k_pos = static_cast<size_t>(
      std::llround(static_cast<double>(n) * config.positive_fraction));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (latent[a] != latent[b]) return latent[a] > latent[b];
    return a < b;
  });
  cohort.labels.assign(n, 0);
  for (size_t r = 0; r < k_pos && r < n; ++r) cohort.labels[order[r]] = 1;

  int width = 1;
  for (size_t m = n; m >= 10; m /= 10) ++width;
  cohort.row_ids.resize(n);
  for (size_t i = 0; i < n; ++i) {
    std::string num = std::to_string(i + 1);
    cohort.row_ids[i] =
        "p" + std::string(width > static_cast<int>(num.size())
                              ? width - num.size()
                              : 0,
                          '0') +
        num;
  }

  cohort.subgroups["age_band"] = std::move(band_v);
  cohort.subgroups["sex"] = std::move(sex_v);
  cohort.subgroups["race"] = std::move(race_v);
  cohort.subgroups["insurance"] = std::move(ins_v);

  std::vector<double> cci_proxy(n);
  for (size_t i = 0; i < n; ++i) cci_proxy[i] = cohort.features.at(i, 13);
  cohort.need_proxies["cci"] = std::move(cci_proxy);

  cohort.validate();
  return cohort;
}

// ---------------------------------------------------------------------------
// Schema parsing
// ---------------------------------------------------------------------------

static ColumnRole parse_role(const std::string& token) {
  ColumnRole role;
  if (token == "id") {
    role.kind = ColumnRole::Kind::id;
  } else if (token == "label") {
    role.kind = ColumnRole::Kind::label;
  } else if (token.rfind("feature:", 0) == 0) {
    role.kind = ColumnRole::Kind::feature;
    std::string fk = token.substr(8);
    if (fk == "continuous")
      role.feature_kind = ColumnKind::continuous;
    else if (fk == "flag")
      role.feature_kind = ColumnKind::binary_flag;
    else if (fk == "categorical")
      role.feature_kind = ColumnKind::categorical_code;
    else
      fail(Errc::schema_error, "unknown feature kind: " + fk);
  } else if (token.rfind("subgroup:", 0) == 0) {
    role.kind = ColumnRole::Kind::subgroup;
    role.name = token.substr(9);
    if (role.name.empty()) fail(Errc::schema_error, "subgroup role needs a name");
  } else if (token.rfind("proxy:", 0) == 0) {
    role.kind = ColumnRole::Kind::proxy;
    role.name = token.substr(6);
    if (role.name.empty()) fail(Errc::schema_error, "proxy role needs a name");
  } else {
    fail(Errc::schema_error, "unknown role: " + token);
  }
  return role;
}

static std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

CohortSchema CohortSchema::parse(const std::string& text) {
  CohortSchema schema;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::schema_error, "schema line missing '=': " + line);
    std::string column = trim(line.substr(0, eq));
    std::string roles_text = trim(line.substr(eq + 1));
    if (column.empty()) fail(Errc::schema_error, "schema line missing column name");
    std::vector<ColumnRole> roles;
    std::istringstream rs(roles_text);
    std::string token;
    while (std::getline(rs, token, ',')) {
      token = trim(token);
      if (!token.empty()) roles.push_back(parse_role(token));
    }
    if (roles.empty()) fail(Errc::schema_error, "no roles for column " + column);
    schema.columns.emplace_back(column, std::move(roles));
  }
  if (schema.columns.empty()) fail(Errc::schema_error, "schema is empty");
  return schema;
}

CohortSchema CohortSchema::load(const std::string& path) {
  return parse(read_file(path));
}

std::string CohortSchema::serialize() const {
  std::ostringstream out;
  for (const auto& [column, roles] : columns) {
    out << column << " = ";
    for (size_t k = 0; k < roles.size(); ++k) {
      if (k) out << ", ";
      const auto& r = roles[k];
      switch (r.kind) {
        case ColumnRole::Kind::id: out << "id"; break;
        case ColumnRole::Kind::label: out << "label"; break;
        case ColumnRole::Kind::feature:
          out << "feature:" << column_kind_name(r.feature_kind);
          break;
        case ColumnRole::Kind::subgroup: out << "subgroup:" << r.name; break;
        case ColumnRole::Kind::proxy: out << "proxy:" << r.name; break;
      }
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV ingestion (complete-case)
// ---------------------------------------------------------------------------

LoadReport load_cohort_csv(const std::string& path, const CohortSchema& schema) {
  CsvTable table = read_csv(path);

  int label_count = 0;
  for (const auto& [column, roles] : schema.columns) {
    if (table.column(column) < 0)
      fail(Errc::schema_error, "schema column absent from CSV: " + column);
    for (const auto& r : roles)
      if (r.kind == ColumnRole::Kind::label) ++label_count;
  }
  if (label_count != 1)
    fail(Errc::schema_error, "schema must name exactly one label column");

  struct Selected {
    int csv_col;
    std::string column;
    ColumnRole role;
  };
  std::vector<Selected> selected;
  for (const auto& [column, roles] : schema.columns)
    for (const auto& r : roles)
      selected.push_back({table.column(column), column, r});

  LoadReport report;
  report.rows_read = table.rows.size();

  // Complete-case filter over schema-selected cells only.
  std::vector<size_t> keep;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    bool complete = true;
    for (const auto& sel : selected)
      if (table.rows[i][sel.csv_col].empty()) {
        complete = false;
        break;
      }
    if (complete) keep.push_back(i);
  }
  report.rows_dropped = report.rows_read - keep.size();
  if (keep.empty()) fail(Errc::empty_cohort, "no complete rows after filtering");

  Cohort& cohort = report.cohort;
  const size_t n = keep.size();

  for (const auto& sel : selected) {
    const auto& role = sel.role;
    if (role.kind == ColumnRole::Kind::feature) {
      cohort.features.column_names.push_back(sel.column);
      cohort.features.column_kinds.push_back(role.feature_kind);
    }
  }
  cohort.features.n = n;
  cohort.features.d = cohort.features.column_names.size();
  if (cohort.features.d == 0)
    fail(Errc::schema_error, "schema selects no feature columns");
  cohort.features.values.assign(n * cohort.features.d, 0.0);

  cohort.labels.assign(n, 0);
  cohort.row_ids.assign(n, "");

  bool has_id = false;
  size_t fcol = 0;
  for (const auto& sel : selected) {
    const auto& role = sel.role;
    for (size_t out = 0; out < n; ++out) {
      const std::string& cell = table.rows[keep[out]][sel.csv_col];
      switch (role.kind) {
        case ColumnRole::Kind::id:
          cohort.row_ids[out] = cell;
          break;
        case ColumnRole::Kind::label: {
          double v;
          if (!parse_double(cell, v) || (v != 0.0 && v != 1.0))
            fail(Errc::schema_error,
                 "label column holds non-binary value '" + cell + "'");
          cohort.labels[out] = static_cast<int>(v);
          break;
        }
        case ColumnRole::Kind::feature: {
          double v;
          if (!parse_double(cell, v))
            fail(Errc::schema_error, "non-numeric cell '" + cell +
                                         "' in feature column " + sel.column);
          if (role.feature_kind == ColumnKind::binary_flag && v != 0.0 &&
              v != 1.0)
            fail(Errc::schema_error,
                 "flag column " + sel.column + " holds value " + cell);
          if (role.feature_kind == ColumnKind::categorical_code &&
              (v != std::floor(v) || v < 0))
            fail(Errc::schema_error, "categorical column " + sel.column +
                                         " holds non-code value " + cell);
          cohort.features.at(out, fcol) = v;
          break;
        }
        case ColumnRole::Kind::subgroup:
          cohort.subgroups[role.name].resize(n);
          cohort.subgroups[role.name][out] = cell;
          break;
        case ColumnRole::Kind::proxy: {
          double v;
          if (!parse_double(cell, v))
            fail(Errc::schema_error, "non-numeric cell '" + cell +
                                         "' in proxy column " + sel.column);
          cohort.need_proxies[role.name].resize(n);
          cohort.need_proxies[role.name][out] = v;
          break;
        }
      }
    }
    if (role.kind == ColumnRole::Kind::feature) ++fcol;
    if (role.kind == ColumnRole::Kind::id) has_id = true;
  }

  if (!has_id) {
    // Stable synthetic ids from original CSV row numbers.
    for (size_t out = 0; out < n; ++out)
      cohort.row_ids[out] = "r" + std::to_string(keep[out] + 1);
  }

  cohort.validate();
  return report;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

std::string cohort_to_csv(const Cohort& cohort) {
  std::ostringstream out;
  out << "id";
  for (const auto& name : cohort.features.column_names) out << "," << name;
  out << ",label";
  for (const auto& [attr, part] : cohort.subgroups) out << "," << attr;
  for (const auto& [name, vals] : cohort.need_proxies)
    out << ",proxy_" << name;
  out << "\n";
  for (size_t i = 0; i < cohort.size(); ++i) {
    out << cohort.row_ids[i];
    for (size_t j = 0; j < cohort.features.d; ++j)
      out << "," << format_double(cohort.features.at(i, j));
    out << "," << cohort.labels[i];
    for (const auto& [attr, part] : cohort.subgroups) out << "," << part[i];
    for (const auto& [name, vals] : cohort.need_proxies)
      out << "," << format_double(vals[i]);
    out << "\n";
  }
  return out.str();
}

CohortSchema cohort_schema(const Cohort& cohort) {
  CohortSchema schema;
  schema.columns.emplace_back(
      "id", std::vector<ColumnRole>{{ColumnRole::Kind::id, ColumnKind::continuous, ""}});
  for (size_t j = 0; j < cohort.features.d; ++j) {
    ColumnRole role{ColumnRole::Kind::feature, cohort.features.column_kinds[j], ""};
    schema.columns.emplace_back(cohort.features.column_names[j],
                                std::vector<ColumnRole>{role});
  }
  schema.columns.emplace_back(
      "label", std::vector<ColumnRole>{{ColumnRole::Kind::label, ColumnKind::continuous, ""}});
  for (const auto& [attr, part] : cohort.subgroups)
    schema.columns.emplace_back(
        attr, std::vector<ColumnRole>{{ColumnRole::Kind::subgroup, ColumnKind::continuous, attr}});
  for (const auto& [name, vals] : cohort.need_proxies)
    schema.columns.emplace_back(
        "proxy_" + name,
        std::vector<ColumnRole>{{ColumnRole::Kind::proxy, ColumnKind::continuous, name}});
  return schema;
}

void write_cohort(const Cohort& cohort, const std::string& csv_path,
                  const std::string& schema_path) {
  write_file(csv_path, cohort_to_csv(cohort));
  write_file(schema_path, cohort_schema(cohort).serialize());
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

Cohort cohort_subset(const Cohort& cohort, const std::vector<size_t>& rows) {
  Cohort out;
  const size_t d = cohort.features.d;
  out.features.column_names = cohort.features.column_names;
  out.features.column_kinds = cohort.features.column_kinds;
  out.features.n = rows.size();
  out.features.d = d;
  out.features.values.resize(rows.size() * d);
  out.labels.resize(rows.size());
  out.row_ids.resize(rows.size());
  for (size_t k = 0; k < rows.size(); ++k) {
    size_t i = rows[k];
    for (size_t j = 0; j < d; ++j)
      out.features.at(k, j) = cohort.features.at(i, j);
    out.labels[k] = cohort.labels[i];
    out.row_ids[k] = cohort.row_ids[i];
  }
  for (const auto& [attr, part] : cohort.subgroups) {
    auto& dst = out.subgroups[attr];
    dst.resize(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) dst[k] = part[rows[k]];
  }
  for (const auto& [name, vals] : cohort.need_proxies) {
    auto& dst = out.need_proxies[name];
    dst.resize(rows.size());
    for (size_t k = 0; k < rows.size(); ++k) dst[k] = vals[rows[k]];
  }
  return out;
}

SplitResult stratified_split(const Cohort& cohort, double test_fraction,
                             uint64_t seed) {
  cohort.validate();
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    fail(Errc::invalid_config, "test_fraction must lie in (0,1)");

  std::vector<size_t> pos, neg;
  for (size_t i = 0; i < cohort.size(); ++i)
    (cohort.labels[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty())
    fail(Errc::stratification_error, "both classes must be present");

  std::vector<size_t> test_rows, train_rows;
  auto draw = [&](std::vector<size_t>& cls, uint64_t salt) {
    Rng rng(hash_mix(seed, 0x57a71f1edULL, salt));
    // Fisher-Yates
    for (size_t i = cls.size(); i > 1; --i) {
      size_t j = rng.uniform_int(i);
      std::swap(cls[i - 1], cls[j]);
    }
    size_t n_test = static_cast<size_t>(
        std::llround(test_fraction * static_cast<double>(cls.size())));
    for (size_t k = 0; k < cls.size(); ++k)
      (k < n_test ? test_rows : train_rows).push_back(cls[k]);
  };
  draw(neg, 0);
  draw(pos, 1);
  if (test_rows.empty() || train_rows.empty())
    fail(Errc::stratification_error, "split leaves an empty side");

  std::sort(test_rows.begin(), test_rows.end());
  std::sort(train_rows.begin(), train_rows.end());
  return {cohort_subset(cohort, train_rows), cohort_subset(cohort, test_rows)};
}

}  // namespace preflight
