#pragma once

#include <span>

#include "preflight/attribution.hpp"
#include "preflight/matrix.hpp"
#include "preflight/model.hpp"

namespace preflight {

// Exact additive attributions for the linear-logit baseline:
// phi_ij = w_j * (standardized x_ij - standardized background mean of j).
// Against the model's own training means the background term is zero and
// the row sum plus the background logit recovers the row logit exactly.
AttributionMatrix linear_attributions(const LogisticBaseline& model,
                                      const FeatureMatrix& X);
AttributionMatrix linear_attributions(const LogisticBaseline& model,
                                      const FeatureMatrix& X,
                                      std::span<const double> background_raw);

// Monte-Carlo permutation attribution for arbitrary scorers: per row,
// average marginal contribution over k random feature orderings, each paired
// with a background row draw. Per-row seed streams keep rows independent,
// so the row loop parallelises without changing results.
AttributionMatrix shapley_sampled(const Scorer& scorer, const FeatureMatrix& X,
                                  const FeatureMatrix& background, int k,
                                  uint64_t seed);

namespace serial_ref {
AttributionMatrix shapley_sampled(const Scorer& scorer, const FeatureMatrix& X,
                                  const FeatureMatrix& background, int k,
                                  uint64_t seed);
}  // namespace serial_ref

}  // namespace preflight
