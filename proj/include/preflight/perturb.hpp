#pragma once

#include <map>
#include <string>
#include <vector>

#include "preflight/matrix.hpp"

namespace preflight {

// One semantically preserving input transform. Noise targets continuous
// columns only; flags and categorical codes move only through value maps.
struct PerturbationSpec {
  enum class Kind { gaussian_noise, column_rescale, value_map };

  std::string id;
  Kind kind = Kind::gaussian_noise;

  // gaussian_noise: sigma is a fraction of the column's own SD.
  double sigma = 0.0;
  std::vector<std::string> columns;

  // column_rescale
  std::string column;
  double factor = 1.0;

  // value_map: must cover every code observed in the column.
  std::map<int, int> mapping;

  int64_t seed_offset = 0;
  bool clamp_to_observed = false;

  void validate() const;
};

struct PerturbationBattery {
  std::vector<PerturbationSpec> specs;
  uint64_t master_seed = 42;
  std::vector<std::string> warnings;

  void validate() const;
};

// Pure given (master_seed, seed_offset): untargeted columns copy through
// bit-identically, noise draws are keyed by (row, column) so application
// order and thread count never matter.
FeatureMatrix apply(const PerturbationSpec& spec, const FeatureMatrix& X,
                    uint64_t master_seed);

// The standard four-transform battery: noise at sigma 0.05 and 0.10 over the
// given continuous columns, plus rescalings of one column at 1.05 and 1.06.
// An empty continuous list drops the noise pair and records a warning.
PerturbationBattery default_battery(
    const std::vector<std::string>& continuous_columns,
    const std::string& rescale_column);

// Plain-text battery file: one [section] per spec, key = value lines.
PerturbationBattery parse_battery(const std::string& text);
PerturbationBattery load_battery_file(const std::string& path);
std::string battery_to_text(const PerturbationBattery& battery);

}  // namespace preflight
