#pragma once

#include <string>
#include <vector>

namespace preflight {

// Per-row, per-feature attribution values with their provenance recorded.
struct AttributionMatrix {
  std::vector<double> values;  // n * d, row-major
  std::vector<std::string> feature_names;
  size_t n = 0;
  size_t d = 0;
  std::string provider;
  std::vector<double> background_means;  // raw feature space

  double at(size_t i, size_t j) const { return values[i * d + j]; }
  double& at(size_t i, size_t j) { return values[i * d + j]; }
};

std::string attribution_to_csv(const AttributionMatrix& phi);

}  // namespace preflight
