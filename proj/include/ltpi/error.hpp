#pragma once

#include <stdexcept>
#include <string>

namespace ltpi {

enum class errc {
  malformed_row,
  missingness_violation,
  empty_input,
  empty_cell,
  zero_conditioning_mass,
  degenerate_denominator,
  equal_elasticities,
  infeasible,
  no_feasible_point,
  numerical_breakdown,
  unsupported_restriction,
  zero_variance,
  missing_instrument,
  non_convergence,
  r_off_grid,
  no_root,
  invalid_argument,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::malformed_row: return "MalformedRow";
    case errc::missingness_violation: return "MissingnessViolation";
    case errc::empty_input: return "EmptyInput";
    case errc::empty_cell: return "EmptyCell";
    case errc::zero_conditioning_mass: return "ZeroConditioningMass";
    case errc::degenerate_denominator: return "DegenerateDenominator";
    case errc::equal_elasticities: return "EqualElasticities";
    case errc::infeasible: return "Infeasible";
    case errc::no_feasible_point: return "NoFeasiblePoint";
    case errc::numerical_breakdown: return "NumericalBreakdown";
    case errc::unsupported_restriction: return "UnsupportedRestriction";
    case errc::zero_variance: return "ZeroVariance";
    case errc::missing_instrument: return "MissingInstrument";
    case errc::non_convergence: return "NonConvergence";
    case errc::r_off_grid: return "ROffGrid";
    case errc::no_root: return "NoRoot";
    case errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

// Every library failure is one of these; `detail` carries structured context
// (an offending cell, a certificate) for reports.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg, std::string detail = {})
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg),
        code_(code),
        detail_(std::move(detail)) {}

  errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  errc code_;
  std::string detail_;
};

}  // namespace ltpi
