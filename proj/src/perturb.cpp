#include "preflight/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "preflight/csv.hpp"
#include "preflight/rng.hpp"

namespace preflight {

void PerturbationSpec::validate() const {
  if (id.empty()) fail(Errc::spec_error, "perturbation spec needs an id");
  switch (kind) {
    case Kind::gaussian_noise:
      if (sigma < 0) fail(Errc::spec_error, "sigma must be >= 0");
      break;
    case Kind::column_rescale:
      if (!(factor > 0)) fail(Errc::spec_error, "rescale factor must be > 0");
      if (column.empty()) fail(Errc::spec_error, "rescale needs a column");
      break;
    case Kind::value_map:
      if (column.empty()) fail(Errc::spec_error, "value_map needs a column");
      break;
  }
}

void PerturbationBattery::validate() const {
  if (specs.empty()) fail(Errc::config_error, "battery is empty");
  std::set<std::string> ids;
  for (const auto& s : specs) {
    s.validate();
    if (!ids.insert(s.id).second)
      fail(Errc::spec_error, "duplicate perturbation id: " + s.id);
  }
}

FeatureMatrix apply(const PerturbationSpec& spec, const FeatureMatrix& X,
                    uint64_t master_seed) {
  spec.validate();
  FeatureMatrix out = X;
  const uint64_t stream =
      master_seed ^ static_cast<uint64_t>(spec.seed_offset);

  switch (spec.kind) {
    case PerturbationSpec::Kind::gaussian_noise: {
      if (spec.sigma == 0.0) return out;  // exact identity
      for (const auto& name : spec.columns) {
        int j = X.column_index(name);
        if (j < 0) fail(Errc::spec_error, "noise target column missing: " + name);
        if (X.column_kinds[j] != ColumnKind::continuous)
          fail(Errc::spec_error, "noise target must be continuous: " + name);
        double sd = column_stddev(X, j);
        double scale = spec.sigma * sd;
        if (scale == 0.0) continue;
        double clamp_lo = 0.0, clamp_hi = 0.0;
        if (spec.clamp_to_observed) {
          clamp_lo = clamp_hi = X.at(0, static_cast<size_t>(j));
          for (size_t i = 1; i < X.n; ++i) {
            clamp_lo = std::min(clamp_lo, X.at(i, j));
            clamp_hi = std::max(clamp_hi, X.at(i, j));
          }
        }
        for (size_t i = 0; i < X.n; ++i) {
          double noise =
              scale * keyed_normal(stream, i * X.d + static_cast<size_t>(j));
          double v = X.at(i, j) + noise;
          if (spec.clamp_to_observed) v = std::clamp(v, clamp_lo, clamp_hi);
          out.at(i, j) = v;
        }
      }
      break;
    }
    case PerturbationSpec::Kind::column_rescale: {
      int j = X.column_index(spec.column);
      if (j < 0) fail(Errc::spec_error, "rescale column missing: " + spec.column);
      if (X.column_kinds[j] != ColumnKind::continuous)
        fail(Errc::spec_error,
             "rescale target must be continuous: " + spec.column);
      for (size_t i = 0; i < X.n; ++i) out.at(i, j) = X.at(i, j) * spec.factor;
      break;
    }
    case PerturbationSpec::Kind::value_map: {
      int j = X.column_index(spec.column);
      if (j < 0) fail(Errc::spec_error, "value_map column missing: " + spec.column);
      if (X.column_kinds[j] == ColumnKind::continuous)
        fail(Errc::spec_error,
             "value_map applies to flag or categorical columns: " + spec.column);
      for (size_t i = 0; i < X.n; ++i) {
        int code = static_cast<int>(X.at(i, j));
        auto it = spec.mapping.find(code);
        if (it == spec.mapping.end())
          fail(Errc::spec_error, "value_map not total: code " +
                                     std::to_string(code) + " unmapped in " +
                                     spec.column);
        out.at(i, j) = static_cast<double>(it->second);
      }
      break;
    }
  }
  return out;
}

PerturbationBattery default_battery(
    const std::vector<std::string>& continuous_columns,
    const std::string& rescale_column) {
  if (rescale_column.empty())
    fail(Errc::spec_error, "default battery needs a rescale column");
  PerturbationBattery battery;
  int64_t offset = 1;
  if (!continuous_columns.empty()) {
    for (double sigma : {0.05, 0.10}) {
      PerturbationSpec s;
      s.id = "noise_" + format_double(sigma);
      s.kind = PerturbationSpec::Kind::gaussian_noise;
      s.sigma = sigma;
      s.columns = continuous_columns;
      s.seed_offset = offset++;
      battery.specs.push_back(std::move(s));
    }
  } else {
    battery.warnings.push_back(
        "no continuous columns: default battery holds rescales only");
    offset = 3;
  }
  bool rescale_ok = !continuous_columns.empty() &&
                    std::find(continuous_columns.begin(),
                              continuous_columns.end(),
                              rescale_column) != continuous_columns.end();
  if (!continuous_columns.empty() && !rescale_ok)
    fail(Errc::spec_error,
         "rescale column is not a continuous column: " + rescale_column);
  for (double factor : {1.05, 1.06}) {
    PerturbationSpec s;
    s.id = "rescale_" + format_double(factor);
    s.kind = PerturbationSpec::Kind::column_rescale;
    s.column = rescale_column;
    s.factor = factor;
    s.seed_offset = offset++;
    battery.specs.push_back(std::move(s));
  }
  battery.validate();
  return battery;
}

// ---------------------------------------------------------------------------
// Battery config files
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

}  // namespace

PerturbationBattery parse_battery(const std::string& text) {
  PerturbationBattery battery;
  PerturbationSpec cur;
  bool open = false;

  auto flush = [&]() {
    if (open) battery.specs.push_back(cur);
    cur = PerturbationSpec{};
    open = false;
  };

  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      flush();
      cur.id = trim(line.substr(1, line.size() - 2));
      open = true;
      continue;
    }
    if (!open) fail(Errc::config_error, "battery entry outside a [section]");
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::config_error, "battery line missing '=': " + line);
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key == "kind") {
      if (val == "gaussian_noise")
        cur.kind = PerturbationSpec::Kind::gaussian_noise;
      else if (val == "column_rescale")
        cur.kind = PerturbationSpec::Kind::column_rescale;
      else if (val == "value_map")
        cur.kind = PerturbationSpec::Kind::value_map;
      else
        fail(Errc::config_error, "unknown perturbation kind: " + val);
    } else if (key == "sigma") {
      if (!parse_double(val, cur.sigma))
        fail(Errc::config_error, "bad sigma: " + val);
    } else if (key == "columns") {
      cur.columns = split_list(val);
    } else if (key == "column") {
      cur.column = val;
    } else if (key == "factor") {
      if (!parse_double(val, cur.factor))
        fail(Errc::config_error, "bad factor: " + val);
    } else if (key == "seed_offset") {
      double v;
      if (!parse_double(val, v))
        fail(Errc::config_error, "bad seed_offset: " + val);
      cur.seed_offset = static_cast<int64_t>(v);
    } else if (key == "clamp_to_observed") {
      cur.clamp_to_observed = (val == "true" || val == "1");
    } else if (key == "mapping") {
      for (const auto& pair_text : split_list(val)) {
        size_t colon = pair_text.find(':');
        if (colon == std::string::npos)
          fail(Errc::config_error, "mapping entries are from:to, got " + pair_text);
        cur.mapping[std::stoi(pair_text.substr(0, colon))] =
            std::stoi(pair_text.substr(colon + 1));
      }
    } else if (key == "master_seed") {
      double v;
      if (!parse_double(val, v))
        fail(Errc::config_error, "bad master_seed: " + val);
      battery.master_seed = static_cast<uint64_t>(v);
    } else {
      fail(Errc::config_error, "unknown battery key: " + key);
    }
  }
  flush();
  battery.validate();
  return battery;
}

PerturbationBattery load_battery_file(const std::string& path) {
  return parse_battery(read_file(path));
}

std::string battery_to_text(const PerturbationBattery& battery) {
  std::ostringstream out;
  for (const auto& s : battery.specs) {
    out << "[" << s.id << "]\n";
    switch (s.kind) {
      case PerturbationSpec::Kind::gaussian_noise:
        out << "kind = gaussian_noise\nsigma = " << format_double(s.sigma)
            << "\ncolumns = ";
        for (size_t k = 0; k < s.columns.size(); ++k)
          out << (k ? "," : "") << s.columns[k];
        out << "\n";
        break;
      case PerturbationSpec::Kind::column_rescale:
        out << "kind = column_rescale\ncolumn = " << s.column
            << "\nfactor = " << format_double(s.factor) << "\n";
        break;
      case PerturbationSpec::Kind::value_map: {
        out << "kind = value_map\ncolumn = " << s.column << "\nmapping = ";
        bool first = true;
        for (const auto& [from, to] : s.mapping) {
          if (!first) out << ",";
          out << from << ":" << to;
          first = false;
        }
        out << "\n";
        break;
      }
    }
    out << "seed_offset = " << s.seed_offset << "\n";
    if (s.clamp_to_observed) out << "clamp_to_observed = true\n";
    out << "\n";
  }
  return out.str();
}

}  // namespace preflight
