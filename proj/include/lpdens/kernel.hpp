#pragma once

#include "error.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace lpdens {

enum class KernelFamily
{
  triangular,
  epanechnikov,
  uniform
};

//! Compactly supported symmetric kernel on [-1, 1] integrating to one.
//! Callable, so it can be passed anywhere a generic kernel is accepted.
struct KernelSpec
{
  KernelFamily family = KernelFamily::triangular;

  double operator()(double u) const
  {
    double a = std::fabs(u);
    if (a > 1.0)
      return 0.0;
    switch (family) {
      case KernelFamily::triangular: return 1.0 - a;
      case KernelFamily::epanechnikov: return 0.75 * (1.0 - u * u);
      case KernelFamily::uniform: return 0.5;
    }
    return 0.0;
  }
};

inline double kernel_value(const KernelSpec& k, double u)
{
  return k(u);
}

inline const char* to_string(KernelFamily f)
{
  switch (f) {
    case KernelFamily::triangular: return "triangular";
    case KernelFamily::epanechnikov: return "epanechnikov";
    case KernelFamily::uniform: return "uniform";
  }
  return "unknown";
}

inline KernelSpec parse_kernel(std::string_view name)
{
  if (name == "triangular")
    return { KernelFamily::triangular };
  if (name == "epanechnikov")
    return { KernelFamily::epanechnikov };
  if (name == "uniform")
    return { KernelFamily::uniform };
  throw Error(ErrorCode::invalid_argument,
              "unknown kernel '" + std::string(name) + "'");
}

} // namespace lpdens
