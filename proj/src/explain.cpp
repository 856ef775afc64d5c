#include "preflight/explain.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "preflight/csv.hpp"
#include "preflight/rng.hpp"

#ifdef PREFLIGHT_HAVE_OPENMP
#include <omp.h>
#endif

namespace preflight {

std::string attribution_to_csv(const AttributionMatrix& phi) {
  std::ostringstream out;
  out << "row";
  for (const auto& name : phi.feature_names) out << "," << name;
  out << "\n";
  for (size_t i = 0; i < phi.n; ++i) {
    out << i;
    for (size_t j = 0; j < phi.d; ++j) out << "," << format_double(phi.at(i, j));
    out << "\n";
  }
  return out.str();
}

AttributionMatrix linear_attributions(const LogisticBaseline& model,
                                      const FeatureMatrix& X) {
  return linear_attributions(model, X, model.means());
}

AttributionMatrix linear_attributions(const LogisticBaseline& model,
                                      const FeatureMatrix& X,
                                      std::span<const double> background_raw) {
  if (X.column_names != model.columns())
    fail(Errc::shape_error, "column layout differs from fit-time layout");
  if (background_raw.size() != X.d)
    fail(Errc::shape_error, "background length differs from feature count");

  AttributionMatrix phi;
  phi.n = X.n;
  phi.d = X.d;
  phi.feature_names = X.column_names;
  phi.provider = "linear_exact";
  phi.background_means.assign(background_raw.begin(), background_raw.end());
  phi.values.resize(X.n * X.d);

  const auto& w = model.weights();
  const auto& mu = model.means();
  const auto& sd = model.sds();
  for (size_t i = 0; i < X.n; ++i)
    for (size_t j = 0; j < X.d; ++j) {
      double xz = (X.at(i, j) - mu[j]) / sd[j];
      double bz = (background_raw[j] - mu[j]) / sd[j];
      phi.at(i, j) = w[j] * (xz - bz);
    }
  return phi;
}

namespace {

// One row's sampled attribution; the coalition walk batches all k*(d+1)
// intermediate inputs into a single score call.
void sample_row(const Scorer& scorer, const FeatureMatrix& X,
                const FeatureMatrix& background, int k, uint64_t seed,
                size_t row, double* out_phi) {
  const size_t d = X.d;
  Rng rng(hash_mix(seed, 0x5a4971eULL, row));

  std::vector<std::vector<size_t>> perms(k, std::vector<size_t>(d));
  std::vector<size_t> bg_rows(k);
  for (int s = 0; s < k; ++s) {
    auto& perm = perms[s];
    std::iota(perm.begin(), perm.end(), 0);
    for (size_t i = d; i > 1; --i) {
      size_t j = rng.uniform_int(i);
      std::swap(perm[i - 1], perm[j]);
    }
    bg_rows[s] = rng.uniform_int(background.n);
  }

  FeatureMatrix batch;
  batch.column_names = X.column_names;
  batch.column_kinds = X.column_kinds;
  batch.d = d;
  batch.n = static_cast<size_t>(k) * (d + 1);
  batch.values.resize(batch.n * d);

  for (int s = 0; s < k; ++s) {
    size_t base = static_cast<size_t>(s) * (d + 1);
    // Coalition 0: pure background row.
    for (size_t j = 0; j < d; ++j)
      batch.at(base, j) = background.at(bg_rows[s], j);
    // Coalition t: first t features of the permutation replaced by the row.
    for (size_t t = 1; t <= d; ++t) {
      for (size_t j = 0; j < d; ++j) batch.at(base + t, j) = batch.at(base + t - 1, j);
      batch.at(base + t, perms[s][t - 1]) = X.at(row, perms[s][t - 1]);
    }
  }

  std::vector<double> scores = scorer.score(batch);
  for (size_t j = 0; j < d; ++j) out_phi[j] = 0.0;
  for (int s = 0; s < k; ++s) {
    size_t base = static_cast<size_t>(s) * (d + 1);
    for (size_t t = 1; t <= d; ++t)
      out_phi[perms[s][t - 1]] += scores[base + t] - scores[base + t - 1];
  }
  for (size_t j = 0; j < d; ++j) out_phi[j] /= static_cast<double>(k);
}

AttributionMatrix shapley_header(const FeatureMatrix& X,
                                 const FeatureMatrix& background, int k,
                                 uint64_t seed) {
  if (k < 16) fail(Errc::config_error, "sampled attribution needs k >= 16");
  if (background.n == 0)
    fail(Errc::config_error, "sampled attribution needs a non-empty background");
  if (background.column_names != X.column_names)
    fail(Errc::shape_error, "background layout differs from input layout");
  AttributionMatrix phi;
  phi.n = X.n;
  phi.d = X.d;
  phi.feature_names = X.column_names;
  std::ostringstream p;
  p << "shapley_sampled(k=" << k << ",seed=" << seed << ")";
  phi.provider = p.str();
  phi.background_means.resize(X.d);
  for (size_t j = 0; j < X.d; ++j)
    phi.background_means[j] = column_mean(background, j);
  phi.values.resize(X.n * X.d);
  return phi;
}

}  // namespace

AttributionMatrix shapley_sampled(const Scorer& scorer, const FeatureMatrix& X,
                                  const FeatureMatrix& background, int k,
                                  uint64_t seed) {
  AttributionMatrix phi = shapley_header(X, background, k, seed);
#ifdef PREFLIGHT_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long i = 0; i < static_cast<long long>(X.n); ++i)
    sample_row(scorer, X, background, k, seed, static_cast<size_t>(i),
               &phi.values[static_cast<size_t>(i) * X.d]);
  return phi;
}

namespace serial_ref {

AttributionMatrix shapley_sampled(const Scorer& scorer, const FeatureMatrix& X,
                                  const FeatureMatrix& background, int k,
                                  uint64_t seed) {
  AttributionMatrix phi = shapley_header(X, background, k, seed);
  for (size_t i = 0; i < X.n; ++i)
    sample_row(scorer, X, background, k, seed, i, &phi.values[i * X.d]);
  return phi;
}

}  // namespace serial_ref

}  // namespace preflight
