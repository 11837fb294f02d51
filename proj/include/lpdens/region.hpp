#pragma once

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lpdens {

enum class RegionKind
{
  interior,
  lower_boundary,
  upper_boundary
};

inline const char* to_string(RegionKind k)
{
  switch (k) {
    case RegionKind::interior: return "interior";
    case RegionKind::lower_boundary: return "lower_boundary";
    case RegionKind::upper_boundary: return "upper_boundary";
  }
  return "unknown";
}

//! Integration limits [a, b] in kernel units after truncation by the support.
struct EvalRegion
{
  double a = -1.0;
  double b = 1.0;
  RegionKind kind = RegionKind::interior;
  double c = 1.0; // distance to the active boundary in kernel units

  bool interior() const { return kind == RegionKind::interior; }
};

constexpr double degenerate_region_tol = 1e-8;

//! Builds the region from explicit limits in kernel units.
inline EvalRegion make_region(double a, double b)
{
  a = std::max(-1.0, a);
  b = std::min(1.0, b);
  if (a > -1.0 && b < 1.0)
    throw Error(ErrorCode::invalid_region,
                "kernel window is truncated on both sides; reduce the bandwidth");
  if (!(b - a >= degenerate_region_tol))
    throw Error(ErrorCode::degenerate_region,
                "integration region is empty or nearly so");
  EvalRegion r;
  r.a = a;
  r.b = b;
  if (a > -1.0) {
    r.kind = RegionKind::lower_boundary;
    r.c = -a;
  } else if (b < 1.0) {
    r.kind = RegionKind::upper_boundary;
    r.c = b;
  }
  return r;
}

//! Region for evaluation point x, bandwidth h and support [lower, upper]
//! (either end may be infinite).
inline EvalRegion make_region(double x, double h, double lower, double upper)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw Error(ErrorCode::invalid_argument, "bandwidth must be positive and finite");
  if (x < lower || x > upper)
    throw Error(ErrorCode::support_violation,
                "evaluation point " + std::to_string(x) + " lies outside the support");
  return make_region((lower - x) / h, (upper - x) / h);
}

} // namespace lpdens
