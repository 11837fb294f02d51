#pragma once

#include "local_fit.hpp"
#include "moments.hpp"
#include "variance.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>

namespace lpdens {

//! Normal-reference pilot bandwidth 1.06 sd n^(-1/5), at most half the range.
inline double preliminary_bandwidth(const Sample& sample)
{
  double sd = sample.sd();
  if (!(sd > 0.0))
    throw Error(ErrorCode::zero_variance, "sample has zero variance");
  double ell = 1.06 * sd * std::pow(static_cast<double>(sample.size()), -0.2);
  return std::min(ell, 0.5 * sample.range());
}

struct BiasConstants
{
  Eigen::VectorXd Sinv_c;      // sample version of S^-1 c at the pilot bandwidth
  Eigen::VectorXd Sinv_ctilde; // sample version of S^-1 c~
  double F_p1 = 0.0;           // pilot F^(p+1)(x)
  double F_p2 = 0.0;           // pilot F^(p+2)(x)
  double F_2 = 0.0;            // pilot F''(x), for the optional curvature term
  double f = 0.0;              // pilot f(x)
  double ell = 0.0;
};

namespace detail {

//! (1/n) sum ((x_i - x)/ell)^k r_p((x_i - x)/ell) K_ell(x_i - x) over the fit's window.
inline Eigen::VectorXd weighted_power_moment(const LocalFit& fit, int k)
{
  Eigen::VectorXd wk = fit.w.cwiseProduct(fit.u.array().pow(k).matrix());
  return fit.R.transpose() * wk / static_cast<double>(fit.n);
}

} // namespace detail

//! Bias ingredients from a fit of order p at the pilot bandwidth (moment
//! ratios) and a fit of order p+2 (derivative pilots).
template <class Kernel>
BiasConstants estimate_bias_constants(const Sample& sample, double x, int p, int v,
                                      const Kernel& kernel, double ell,
                                      BasisKind basis = BasisKind::standard,
                                      Side side = Side::none)
{
  if (v < 0 || v > p)
    throw Error(ErrorCode::order_out_of_range, "derivative order must lie in [0, p]");
  LocalFit base = fit_local(sample, x, ell, p, kernel, basis);
  LocalFit pilot = fit_local(sample, x, ell, p + 2, kernel, basis);
  BiasConstants out;
  out.ell = ell;
  out.Sinv_c = base.solve(detail::weighted_power_moment(base, p + 1));
  out.Sinv_ctilde = base.solve(detail::weighted_power_moment(base, p + 2));
  out.F_p1 = derivative_estimate(pilot, p + 1, side);
  out.F_p2 = derivative_estimate(pilot, p + 2, side);
  out.F_2 = derivative_estimate(pilot, 2, side);
  out.f = derivative_estimate(pilot, 1, side);
  return out;
}

enum class BandwidthCase
{
  odd_or_boundary,
  even_interior,
  cdf_interior,
  cdf_boundary_empirical
};

inline const char* to_string(BandwidthCase c)
{
  switch (c) {
    case BandwidthCase::odd_or_boundary: return "odd_or_boundary";
    case BandwidthCase::even_interior: return "even_interior";
    case BandwidthCase::cdf_interior: return "cdf_interior";
    case BandwidthCase::cdf_boundary_empirical: return "cdf_boundary_empirical";
  }
  return "unknown";
}

//! Empirical MSE of the smoothed CDF: h^(2q) B^2 + V1 h / n + V2 / (n^2 h).
struct CdfMse
{
  double B = 0.0;
  int q = 1;
  double V1 = 0.0;
  double V2 = 0.0;
  double n = 1.0;

  double operator()(double h) const
  {
    return std::pow(h, 2 * q) * B * B + V1 * h / n + V2 / (n * n * h);
  }
};

struct BandwidthSelection
{
  double h = 0.0;
  int v = 1;
  int p = 2;
  BandwidthCase case_tag = BandwidthCase::odd_or_boundary;
  double bias_estimate = 0.0;
  double variance_constant = 0.0;
  double ell = 0.0;
  bool clamped = false; // h was cut back to keep the window one-sided at most
  CdfMse criterion;     // the minimised criterion, v = 0 only
};

struct BandwidthOptions
{
  //! Adds the F^(p+1) F'' / f part of the second-order bias (even interior case).
  bool curvature_term = false;
};

constexpr double zero_bias_tol = 1e-12;

inline void require_bias(double B)
{
  if (!(std::fabs(B) >= zero_bias_tol))
    throw Error(ErrorCode::zero_bias,
                "estimated bias constant is zero; the MSE has no finite minimiser");
}

//! Minimiser of V / (n h^(2v-1)) + h^(2p+2-2v) B^2.
inline double closed_form_bandwidth(double V, double B, std::size_t n, int p, int v)
{
  require_bias(B);
  double num = (2.0 * v - 1.0) * V;
  double den = static_cast<double>(n) * (2.0 * p + 2.0 - 2.0 * v) * B * B;
  return std::pow(num / den, 1.0 / (2.0 * p + 1.0));
}

//! Minimiser of V / (n h^(2v-1)) + h^(2p+4-2v) B^2 (bias one order higher).
inline double closed_form_bandwidth_second_order(double V, double B, std::size_t n, int p, int v)
{
  require_bias(B);
  double num = (2.0 * v - 1.0) * V;
  double den = static_cast<double>(n) * (2.0 * p + 4.0 - 2.0 * v) * B * B;
  return std::pow(num / den, 1.0 / (2.0 * p + 3.0));
}

//! Golden-section search for the minimum of f over [lo, hi], on log h.
inline double golden_section_log(const std::function<double(double)>& f, double lo, double hi,
                                 int max_iter = 200, double rel_tol = 1e-8)
{
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::log(lo), b = std::log(hi);
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  for (int it = 0; it < max_iter && (b - a) > rel_tol; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(std::exp(d));
    }
  }
  return std::exp(0.5 * (a + b));
}

namespace detail {

inline double clamp_to_valid_window(const Sample& s, double x, double h, bool& clamped)
{
  double reach = std::max(x - s.support_lower(), s.support_upper() - x);
  clamped = false;
  if (std::isfinite(reach) && h > reach) {
    clamped = true;
    return reach;
  }
  return h;
}

inline bool pilot_interior(const Sample& s, double x, double ell)
{
  return x - ell >= s.support_lower() && x + ell <= s.support_upper();
}

} // namespace detail

//! Pointwise MSE-optimal bandwidth for F^(v)(x) from a fit of order p.
template <class Kernel>
BandwidthSelection mse_bandwidth(const Sample& sample, double x, int p, int v,
                                 const Kernel& kernel, BandwidthOptions opts = {})
{
  if (v < 0 || v > p)
    throw Error(ErrorCode::order_out_of_range, "derivative order must lie in [0, p]");
  BandwidthSelection out;
  out.v = v;
  out.p = p;
  out.ell = preliminary_bandwidth(sample);
  const double ell = out.ell;
  const bool interior = detail::pilot_interior(sample, x, ell);
  const double vf = factorial(v);
  const std::size_t n = sample.size();

  BiasConstants bc = estimate_bias_constants(sample, x, p, v, kernel, ell);
  LocalFit fit_ell = fit_local(sample, x, ell, p, kernel);
  double B1 = vf * bc.F_p1 / factorial(p + 1) * bc.Sinv_c[v];
  double second = bc.F_p2 / factorial(p + 2);
  if (opts.curvature_term) {
    if (!(bc.f > 0.0))
      throw Error(ErrorCode::negative_density, "pilot density is not positive");
    second += bc.F_p1 / factorial(p + 1) * bc.F_2 / bc.f;
  }
  double B2 = vf * second * bc.Sinv_ctilde[v];

  double h = 0.0;
  if (v >= 1) {
    double V = standard_error(fit_ell, v).V_hat;
    out.variance_constant = V;
    if (!interior || (p - v) % 2 == 1) {
      out.case_tag = BandwidthCase::odd_or_boundary;
      out.bias_estimate = B1;
      h = closed_form_bandwidth(V, B1, n, p, v);
    } else {
      out.case_tag = BandwidthCase::even_interior;
      out.bias_estimate = B2;
      h = closed_form_bandwidth_second_order(V, B2, n, p, v);
    }
  } else {
    const double lo = sample.range() / static_cast<double>(n);
    const double hi = sample.range() / 2.0;
    CdfMse mse;
    mse.n = static_cast<double>(n);
    if (interior) {
      out.case_tag = BandwidthCase::cdf_interior;
      bool odd = p % 2 == 1;
      mse.B = odd ? B1 : B2;
      mse.q = odd ? p + 1 : p + 2;
      require_bias(mse.B);
      if (!(bc.f > 0.0))
        throw Error(ErrorCode::negative_density, "pilot density is not positive");
      auto km = moments(kernel, make_region(-1.0, 1.0), p, BasisKind::standard);
      Eigen::LDLT<Eigen::MatrixXd> S(km.S);
      Eigen::VectorXd w = S.solve(Eigen::VectorXd::Unit(p + 1, 0));
      double F = sample.edf(x);
      mse.V1 = bc.f * w.dot(km.Gamma * w);
      mse.V2 = 2.0 * F * (1.0 - F) / bc.f * w.dot(km.T * w);
      out.variance_constant = mse.V2;
    } else {
      out.case_tag = BandwidthCase::cdf_boundary_empirical;
      mse.B = B1;
      mse.q = p + 1;
      require_bias(mse.B);
      mse.V2 = standard_error(fit_ell, 0).quad_form;
      out.variance_constant = mse.V2;
    }
    out.bias_estimate = mse.B;
    h = golden_section_log(mse, lo, hi);
    out.criterion = mse;
  }
  out.h = detail::clamp_to_valid_window(sample, x, h, out.clamped);
  return out;
}

} // namespace lpdens
