#pragma once

#include <stdexcept>
#include <string>

namespace lpdens {

enum class ErrorCode
{
  non_finite,
  too_few,
  support_violation,
  empty_side,
  degenerate_region,
  invalid_region,
  insufficient_data,
  singular_design,
  order_out_of_range,
  non_positive_variance,
  negative_density,
  zero_variance,
  zero_bias,
  invalid_alpha,
  empty_grid,
  invalid_argument,
  parse_error,
  io_error
};

//! Machine-parsable token for an error code, e.g. "empty-side".
inline const char* to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::too_few: return "too-few";
    case ErrorCode::support_violation: return "support-violation";
    case ErrorCode::empty_side: return "empty-side";
    case ErrorCode::degenerate_region: return "degenerate-region";
    case ErrorCode::invalid_region: return "invalid-region";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::singular_design: return "singular-design";
    case ErrorCode::order_out_of_range: return "order-out-of-range";
    case ErrorCode::non_positive_variance: return "non-positive-variance";
    case ErrorCode::negative_density: return "negative-density";
    case ErrorCode::zero_variance: return "zero-variance";
    case ErrorCode::zero_bias: return "zero-bias";
    case ErrorCode::invalid_alpha: return "invalid-alpha";
    case ErrorCode::empty_grid: return "empty-grid";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

//! Exception type thrown by every routine in the library.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what)
    , code_(code)
  {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace lpdens
