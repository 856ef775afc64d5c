#pragma once

#include <stdexcept>
#include <string>

namespace preflight {

// Error taxonomy shared by every module. Codes are stable identifiers so the
// CLI can map failures onto exit codes and tests can match on cause.
enum class Errc {
  invalid_config,
  schema_error,
  empty_cohort,
  stratification_error,
  fit_error,
  shape_error,
  range_error,
  alignment_error,
  spec_error,
  config_error,
  undefined_auc,
  undefined_correlation,
  no_evaluable_groups,
  plan_error,
  too_small,
  incomplete_scorecard,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_config: return "invalid-config";
    case Errc::schema_error: return "schema-error";
    case Errc::empty_cohort: return "empty-cohort";
    case Errc::stratification_error: return "stratification-error";
    case Errc::fit_error: return "fit-error";
    case Errc::shape_error: return "shape-error";
    case Errc::range_error: return "range-error";
    case Errc::alignment_error: return "alignment-error";
    case Errc::spec_error: return "spec-error";
    case Errc::config_error: return "config-error";
    case Errc::undefined_auc: return "undefined-auc";
    case Errc::undefined_correlation: return "undefined-correlation";
    case Errc::no_evaluable_groups: return "no-evaluable-groups";
    case Errc::plan_error: return "plan-error";
    case Errc::too_small: return "too-small";
    case Errc::incomplete_scorecard: return "incomplete-scorecard";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace preflight
