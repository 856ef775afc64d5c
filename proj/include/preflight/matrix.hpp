#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "preflight/error.hpp"

namespace preflight {

enum class ColumnKind { continuous, binary_flag, categorical_code };

inline const char* column_kind_name(ColumnKind k) {
  switch (k) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::binary_flag: return "flag";
    case ColumnKind::categorical_code: return "categorical";
  }
  return "unknown";
}

// Row-major n x d matrix with named, kinded columns. Complete by
// construction: ingestion drops incomplete rows before a matrix exists.
struct FeatureMatrix {
  std::vector<double> values;  // n * d, row-major
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  size_t n = 0;
  size_t d = 0;

  double& at(size_t i, size_t j) { return values[i * d + j]; }
  double at(size_t i, size_t j) const { return values[i * d + j]; }

  int column_index(const std::string& name) const {
    for (size_t j = 0; j < d; ++j)
      if (column_names[j] == name) return static_cast<int>(j);
    return -1;
  }

  bool same_layout(const FeatureMatrix& other) const {
    return column_names == other.column_names &&
           column_kinds == other.column_kinds;
  }

  void validate() const {
    if (d < 1) fail(Errc::invalid_config, "feature matrix needs d >= 1");
    if (column_names.size() != d || column_kinds.size() != d)
      fail(Errc::invalid_config, "column metadata size mismatch");
    if (values.size() != n * d)
      fail(Errc::invalid_config, "value buffer size mismatch");
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < d; ++j) {
        double v = at(i, j);
        if (!std::isfinite(v))
          fail(Errc::invalid_config, "non-finite value in column " +
                                         column_names[j] + " row " +
                                         std::to_string(i));
        if (column_kinds[j] == ColumnKind::binary_flag && v != 0.0 && v != 1.0)
          fail(Errc::invalid_config,
               "flag column " + column_names[j] + " holds non-binary value");
      }
    }
  }
};

// Sample standard deviation (n-1 denominator); 0 for constant or single-row.
inline double column_stddev(const FeatureMatrix& X, size_t j) {
  if (X.n < 2) return 0.0;
  double mean = 0.0;
  for (size_t i = 0; i < X.n; ++i) mean += X.at(i, j);
  mean /= static_cast<double>(X.n);
  double ss = 0.0;
  for (size_t i = 0; i < X.n; ++i) {
    double dlt = X.at(i, j) - mean;
    ss += dlt * dlt;
  }
  return std::sqrt(ss / static_cast<double>(X.n - 1));
}

inline double column_mean(const FeatureMatrix& X, size_t j) {
  if (X.n == 0) return 0.0;
  double mean = 0.0;
  for (size_t i = 0; i < X.n; ++i) mean += X.at(i, j);
  return mean / static_cast<double>(X.n);
}

}  // namespace preflight
