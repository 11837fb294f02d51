#pragma once

#include "bandwidth.hpp"
#include "variance.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace lpdens {

enum class CutoffModel
{
  unrestricted,
  restricted,
  separate
};

inline const char* to_string(CutoffModel m)
{
  switch (m) {
    case CutoffModel::unrestricted: return "unrestricted";
    case CutoffModel::restricted: return "restricted";
    case CutoffModel::separate: return "separate";
  }
  return "unknown";
}

inline CutoffModel parse_model(std::string_view s)
{
  if (s == "unrestricted")
    return CutoffModel::unrestricted;
  if (s == "restricted")
    return CutoffModel::restricted;
  if (s == "separate")
    return CutoffModel::separate;
  throw Error(ErrorCode::invalid_argument, "unknown cutoff model '" + std::string(s) + "'");
}

//! Densities are on the pooled scale: f_minus + f_plus estimate the two
//! one-sided limits of the density of the whole sample.
struct ManipulationTestResult
{
  double cutoff = 0.0;
  CutoffModel model = CutoffModel::unrestricted;
  int p_point = 2;
  int p_infer = 2;
  double h_minus = 0.0;
  double h_plus = 0.0;
  std::size_t n_minus = 0;
  std::size_t n_plus = 0;
  std::size_t m_eff_minus = 0;
  std::size_t m_eff_plus = 0;
  double f_minus = 0.0;
  double f_plus = 0.0;
  double se_diff = 0.0;
  double T = 0.0;
  double p_value = 1.0;
  std::vector<std::string> warnings;
};

//! 2 (1 - Phi(|T|)).
inline double two_sided_p_value(double T)
{
  return std::erfc(std::fabs(T) / std::sqrt(2.0));
}

namespace detail {

inline void finish(ManipulationTestResult& r)
{
  r.T = r.se_diff > 0.0 ? (r.f_plus - r.f_minus) / r.se_diff
                        : (r.f_plus == r.f_minus ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.f_plus - r.f_minus));
  r.p_value = two_sided_p_value(r.T);
}

template <class Kernel>
ManipulationTestResult joint_test(const Sample& sample, double cutoff, int p, const Kernel& kernel,
                                  double h, BasisKind basis, CutoffModel model)
{
  auto parts = split_at_cutoff(sample, cutoff);
  LocalFit fit = fit_local(sample, cutoff, h, p, kernel, basis);
  ManipulationTestResult r;
  r.cutoff = cutoff;
  r.model = model;
  r.p_point = r.p_infer = p;
  r.h_minus = r.h_plus = h;
  r.n_minus = parts.n_minus;
  r.n_plus = parts.n_plus;
  r.m_eff_minus = fit.m_minus;
  r.m_eff_plus = fit.m_plus;
  r.f_minus = derivative_estimate(fit, 1, Side::minus);
  r.f_plus = derivative_estimate(fit, 1, Side::plus);
  r.se_diff = difference_variance(fit).se;
  finish(r);
  return r;
}

} // namespace detail

//! Separate fits on each subsample, combined with weights n_-/n and n_+/n.
template <class Kernel>
ManipulationTestResult test_separate(const Sample& sample, double cutoff, int p,
                                     const Kernel& kernel, double h_minus, double h_plus)
{
  auto parts = split_at_cutoff(sample, cutoff);
  LocalFit left = fit_local(parts.left, cutoff, h_minus, p, kernel);
  LocalFit right = fit_local(parts.right, cutoff, h_plus, p, kernel);
  const double n = static_cast<double>(sample.size());
  const double a = static_cast<double>(parts.n_minus) / n;
  const double b = static_cast<double>(parts.n_plus) / n;
  double sm = standard_error(left, 1).se;
  double sp = standard_error(right, 1).se;

  ManipulationTestResult r;
  r.cutoff = cutoff;
  r.model = CutoffModel::separate;
  r.p_point = r.p_infer = p;
  r.h_minus = h_minus;
  r.h_plus = h_plus;
  r.n_minus = parts.n_minus;
  r.n_plus = parts.n_plus;
  r.m_eff_minus = left.m_eff;
  r.m_eff_plus = right.m_eff;
  r.f_minus = a * derivative_estimate(left, 1);
  r.f_plus = b * derivative_estimate(right, 1);
  r.se_diff = std::sqrt(b * b * sp * sp + a * a * sm * sm);
  detail::finish(r);
  return r;
}

//! Joint fit with every coefficient allowed to jump at the cutoff. A joint
//! design has a single window, so distinct bandwidths fall back to the
//! separate-sample statistic.
template <class Kernel>
ManipulationTestResult test_unrestricted(const Sample& sample, double cutoff, int p,
                                         const Kernel& kernel, double h_minus, double h_plus)
{
  if (h_minus != h_plus) {
    auto r = test_separate(sample, cutoff, p, kernel, h_minus, h_plus);
    r.warnings.push_back("distinct bandwidths: separate-sample statistic used");
    return r;
  }
  return detail::joint_test(sample, cutoff, p, kernel, h_minus, BasisKind::unrestricted,
                            CutoffModel::unrestricted);
}

//! Joint fit where only the linear term (the density) may jump.
template <class Kernel>
ManipulationTestResult test_restricted(const Sample& sample, double cutoff, int p,
                                       const Kernel& kernel, double h)
{
  return detail::joint_test(sample, cutoff, p, kernel, h, BasisKind::restricted,
                            CutoffModel::restricted);
}

struct DiffBandwidth
{
  double h = 0.0;
  double bias = 0.0;     // B_+ - B_-
  double variance = 0.0; // V_+ + V_- through the joint difference form
  double ell = 0.0;
  bool clamped = false;
};

//! MSE-optimal common bandwidth for f(c+) - f(c-) at order p. Both one-sided
//! fits are boundary fits, so the first-order bias constant is used.
template <class Kernel>
DiffBandwidth diff_mse_bandwidth(const Sample& sample, double cutoff, int p, const Kernel& kernel)
{
  if (p < 1)
    throw Error(ErrorCode::order_out_of_range, "density difference needs p >= 1");
  split_at_cutoff(sample, cutoff); // validates both sides
  DiffBandwidth out;
  out.ell = preliminary_bandwidth(sample);
  LocalFit base = fit_local(sample, cutoff, out.ell, p, kernel, BasisKind::unrestricted);
  LocalFit pilot = fit_local(sample, cutoff, out.ell, p + 2, kernel, BasisKind::unrestricted);
  Eigen::VectorXd sinv_c = base.solve(detail::weighted_power_moment(base, p + 1));
  const BasisKind ub = BasisKind::unrestricted;
  double bp = derivative_estimate(pilot, p + 1, Side::plus) * sinv_c[selector_index(ub, p, 1, Side::plus)];
  double bm = derivative_estimate(pilot, p + 1, Side::minus) * sinv_c[selector_index(ub, p, 1, Side::minus)];
  // A density mirrored about the cutoff gives equal one-sided biases, so the
  // difference cancels; treat that as zero relative to the side terms.
  if (std::fabs(bp - bm) <= 1e-8 * (std::fabs(bp) + std::fabs(bm)))
    throw Error(ErrorCode::zero_bias, "one-sided bias constants cancel at the cutoff");
  out.bias = (bp - bm) / factorial(p + 1);
  out.variance = difference_variance(base).V_hat;
  double h = closed_form_bandwidth(out.variance, out.bias, sample.size(), p, 1);
  out.h = detail::clamp_to_valid_window(sample, cutoff, h, out.clamped);
  return out;
}

//! Per-side MSE-optimal bandwidths from each subsample on its own.
template <class Kernel>
std::pair<double, double> side_mse_bandwidths(const Sample& sample, double cutoff, int p,
                                              const Kernel& kernel)
{
  auto parts = split_at_cutoff(sample, cutoff);
  return { mse_bandwidth(parts.left, cutoff, p, 1, kernel).h,
           mse_bandwidth(parts.right, cutoff, p, 1, kernel).h };
}

enum class BandwidthSides
{
  common,
  distinct
};

//! Robust bias-corrected test: bandwidth tuned for order p, statistic at
//! order p+1.
template <class Kernel>
ManipulationTestResult rbc_test(const Sample& sample, double cutoff, int p, const Kernel& kernel,
                                CutoffModel model = CutoffModel::unrestricted,
                                BandwidthSides sides = BandwidthSides::common)
{
  std::vector<std::string> warnings;
  ManipulationTestResult r;
  if (sides == BandwidthSides::common) {
    double h;
    try {
      h = diff_mse_bandwidth(sample, cutoff, p, kernel).h;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::zero_bias)
        throw;
      h = preliminary_bandwidth(sample);
      warnings.push_back("zero-bias: preliminary bandwidth used");
    }
    switch (model) {
      case CutoffModel::unrestricted:
        r = test_unrestricted(sample, cutoff, p + 1, kernel, h, h);
        break;
      case CutoffModel::restricted:
        r = test_restricted(sample, cutoff, p + 1, kernel, h);
        break;
      case CutoffModel::separate:
        r = test_separate(sample, cutoff, p + 1, kernel, h, h);
        break;
    }
  } else {
    if (model == CutoffModel::restricted)
      throw Error(ErrorCode::invalid_argument,
                  "the restricted model needs a common bandwidth");
    auto parts = split_at_cutoff(sample, cutoff);
    auto side_h = [&](const Sample& side) {
      try {
        return mse_bandwidth(side, cutoff, p, 1, kernel).h;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::zero_bias)
          throw;
        warnings.push_back("zero-bias: preliminary bandwidth used on one side");
        return preliminary_bandwidth(side);
      }
    };
    double hm = side_h(parts.left);
    double hp = side_h(parts.right);
    r = model == CutoffModel::separate ? test_separate(sample, cutoff, p + 1, kernel, hm, hp)
                                       : test_unrestricted(sample, cutoff, p + 1, kernel, hm, hp);
  }
  r.p_point = p;
  r.p_infer = p + 1;
  r.warnings.insert(r.warnings.begin(), warnings.begin(), warnings.end());
  return r;
}

} // namespace lpdens
