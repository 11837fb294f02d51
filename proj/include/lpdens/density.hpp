#pragma once

#include "bandwidth.hpp"
#include "parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lpdens {

struct BandwidthPolicy
{
  enum class Kind
  {
    mse_pointwise,
    fixed
  };

  Kind kind = Kind::mse_pointwise;
  double h = 0.0;

  static BandwidthPolicy mse() { return {}; }
  static BandwidthPolicy fixed_at(double h) { return { Kind::fixed, h }; }
};

//! One grid point. Numeric fields are NaN and `error` holds the error token
//! when the point could not be estimated.
struct DensityEstimate
{
  static constexpr double missing = std::numeric_limits<double>::quiet_NaN();

  double x = missing;
  int v = 1;
  double h = missing;
  int p_point = 2;
  int p_ci = 3;
  double f_hat = missing; // order p_point
  double f_ci = missing;  // order p_ci, the interval centre
  double se = missing;    // order p_ci
  double ci_low = missing;
  double ci_high = missing;
  std::size_t m_eff = 0;
  std::string region;
  std::string error;

  bool ok() const { return error.empty(); }
};

//! Two-sided standard normal critical value z_{1 - alpha/2}.
inline double normal_critical_value(double alpha)
{
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::invalid_alpha, "alpha must lie in (0, 1)");
  boost::math::normal_distribution<double> z;
  return boost::math::quantile(boost::math::complement(z, alpha / 2.0));
}

//! Point estimate at order p, interval from the order p+1 fit at the same
//! bandwidth with its own standard error.
template <class Kernel>
DensityEstimate estimate_point(const Sample& sample, double x, int p, int v, const Kernel& kernel,
                               const BandwidthPolicy& policy, double z)
{
  DensityEstimate out;
  out.x = x;
  out.v = v;
  out.p_point = p;
  out.p_ci = p + 1;
  try {
    if (policy.kind == BandwidthPolicy::Kind::fixed)
      out.h = policy.h;
    else
      out.h = mse_bandwidth(sample, x, p, v, kernel).h;
    LocalFit point = fit_local(sample, x, out.h, p, kernel);
    out.m_eff = point.m_eff;
    out.region = to_string(point.region.kind);
    out.f_hat = derivative_estimate(point, v);
    LocalFit rbc = fit_local(sample, x, out.h, p + 1, kernel);
    out.f_ci = derivative_estimate(rbc, v);
    out.se = standard_error(rbc, v).se;
    out.ci_low = out.f_ci - z * out.se;
    out.ci_high = out.f_ci + z * out.se;
  } catch (const Error& e) {
    out.error = to_string(e.code());
    out.f_hat = out.f_ci = out.se = out.ci_low = out.ci_high = DensityEstimate::missing;
  }
  return out;
}

template <class Kernel>
std::vector<DensityEstimate> estimate_grid(const Sample& sample, const std::vector<double>& grid,
                                           int p, int v, const Kernel& kernel,
                                           const BandwidthPolicy& policy, double alpha,
                                           unsigned threads = 1)
{
  double z = normal_critical_value(alpha);
  if (grid.empty())
    throw Error(ErrorCode::empty_grid, "evaluation grid is empty");
  if (v < 0 || v > p)
    throw Error(ErrorCode::order_out_of_range, "derivative order must lie in [0, p]");
  if (policy.kind == BandwidthPolicy::Kind::fixed && !(policy.h > 0.0 && std::isfinite(policy.h)))
    throw Error(ErrorCode::invalid_argument, "fixed bandwidth must be positive");
  std::vector<DensityEstimate> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    out[i] = estimate_point(sample, grid[i], p, v, kernel, policy, z);
  });
  return out;
}

//! EDF-inverse at probabilities k/(m-1), k = 0..m-1. The quantile at
//! probability q is the smallest order statistic with EDF >= q, so an even
//! split picks the lower middle value.
inline std::vector<double> default_grid(const Sample& sample, std::size_t m)
{
  if (m < 2)
    throw Error(ErrorCode::empty_grid, "a default grid needs at least 2 points");
  const std::size_t n = sample.size();
  std::vector<double> out(m);
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t rank = (k * n + (m - 2)) / (m - 1); // ceil(k n / (m - 1))
    out[k] = sample[rank == 0 ? 0 : rank - 1];
  }
  return out;
}

} // namespace lpdens
