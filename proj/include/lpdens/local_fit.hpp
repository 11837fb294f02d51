#pragma once

#include "basis.hpp"
#include "kernel.hpp"
#include "region.hpp"
#include "sample.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace lpdens {

//! Result of one kernel-weighted polynomial fit of a response on
//! r_p(x_i - x). Keeps the in-window design so variance routines can reuse it.
struct LocalFit
{
  double x = 0.0;
  double h = 0.0;
  int p = 0;
  BasisKind basis = BasisKind::standard;
  EvalRegion region;

  Eigen::VectorXd beta;        // coefficients on the unscaled basis r_p(x_i - x)
  Eigen::VectorXd beta_scaled; // H beta, coefficients on r_p((x_i - x) / h)
  Eigen::MatrixXd S_hat;       // (1/n) sum r r' K_h
  Eigen::LDLT<Eigen::MatrixXd> S_ldlt;

  std::size_t n = 0;
  std::size_t m_eff = 0;
  std::size_t m_minus = 0; // in-window points with x_i < x
  std::size_t m_plus = 0;  // in-window points with x_i >= x
  std::size_t first = 0;   // sorted-sample index of the first in-window point

  Eigen::MatrixXd R;   // m x d, row j = r_p(u_j)
  Eigen::VectorXd u;   // (x_j - x) / h
  Eigen::VectorXd w;   // K_h(x_j - x)
  Eigen::VectorXd y;   // response used in the fit
  Eigen::VectorXd edf; // pooled EDF at x_j

  int dim() const { return static_cast<int>(R.cols()); }

  //! Solves S_hat z = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return S_ldlt.solve(b); }
};

//! Half-open index range of observations with |x_i - x| <= h.
inline std::pair<std::size_t, std::size_t> window(const Sample& s, double x, double h)
{
  auto v = s.values();
  auto lo = std::partition_point(v.begin(), v.end(), [&](double t) { return t - x < -h; });
  auto hi = std::partition_point(lo, v.end(), [&](double t) { return t - x <= h; });
  return { static_cast<std::size_t>(lo - v.begin()), static_cast<std::size_t>(hi - v.begin()) };
}

namespace detail {

inline void check_counts(const LocalFit& f, int d)
{
  auto need = [&](bool ok, const std::string& what) {
    if (!ok)
      throw Error(ErrorCode::insufficient_data, what);
  };
  need(f.m_eff >= static_cast<std::size_t>(d),
       "only " + std::to_string(f.m_eff) + " observations inside the window, need " +
         std::to_string(d));
  if (f.basis == BasisKind::unrestricted) {
    auto side = static_cast<std::size_t>(f.p + 1);
    need(f.m_minus >= side && f.m_plus >= side,
         "each side of the cutoff needs " + std::to_string(side) +
           " in-window observations (got " + std::to_string(f.m_minus) + " and " +
           std::to_string(f.m_plus) + ")");
  } else if (f.basis == BasisKind::restricted) {
    need(f.m_minus >= 2 && f.m_plus >= 2,
         "each side of the cutoff needs 2 in-window observations (got " +
           std::to_string(f.m_minus) + " and " + std::to_string(f.m_plus) + ")");
  }
}

template <class Kernel, class Response>
LocalFit fit_impl(const Sample& sample,
                  double x,
                  double h,
                  int p,
                  const Kernel& kernel,
                  BasisKind basis,
                  Response&& response)
{
  check_order(basis, p);
  LocalFit f;
  f.x = x;
  f.h = h;
  f.p = p;
  f.basis = basis;
  f.region = make_region(x, h, sample.support_lower(), sample.support_upper());
  f.n = sample.size();

  const int d = basis_dim(basis, p);
  auto [lo, hi] = window(sample, x, h);
  f.first = lo;
  f.m_eff = hi - lo;
  f.m_minus = std::clamp(sample.count_lt(x), lo, hi) - lo;
  f.m_plus = f.m_eff - f.m_minus;
  detail::check_counts(f, d);

  const auto m = static_cast<Eigen::Index>(f.m_eff);
  const double n = static_cast<double>(f.n);
  f.R.resize(m, d);
  f.u.resize(m);
  f.w.resize(m);
  f.y.resize(m);
  f.edf.resize(m);
  Eigen::VectorXd r(d);
  for (Eigen::Index j = 0; j < m; ++j) {
    auto i = lo + static_cast<std::size_t>(j);
    double uj = (sample[i] - x) / h;
    f.u[j] = uj;
    f.w[j] = kernel(uj) / h;
    f.y[j] = response(i);
    f.edf[j] = static_cast<double>(sample.count_le(sample[i])) / n;
    basis_row(basis, p, uj, r);
    f.R.row(j) = r.transpose();
  }

  f.S_hat = f.R.transpose() * f.w.asDiagonal() * f.R / n;
  f.S_hat = 0.5 * (f.S_hat + f.S_hat.transpose());
  Eigen::VectorXd rhs = f.R.transpose() * f.w.cwiseProduct(f.y) / n;
  f.S_ldlt.compute(f.S_hat);
  const Eigen::VectorXd D = f.S_ldlt.vectorD();
  if (f.S_ldlt.info() != Eigen::Success || !(D.minCoeff() > 1e-13 * D.cwiseAbs().maxCoeff()) ||
      !(f.S_ldlt.rcond() >= 1e-13))
    throw Error(ErrorCode::singular_design,
                "local design matrix is singular at x = " + std::to_string(x));

  f.beta_scaled = f.S_ldlt.solve(rhs);
  f.beta.resize(d);
  for (int j = 0; j < d; ++j)
    f.beta[j] = f.beta_scaled[j] / std::pow(h, basis_power(basis, p, j));
  return f;
}

} // namespace detail

//! Fits the pooled EDF, the estimator proper.
template <class Kernel>
LocalFit fit_local(const Sample& sample, double x, double h, int p,
                   const Kernel& kernel, BasisKind basis = BasisKind::standard)
{
  return detail::fit_impl(sample, x, h, p, kernel, basis, [&](std::size_t i) {
    return static_cast<double>(sample.count_le(sample[i])) / static_cast<double>(sample.size());
  });
}

//! Fits an arbitrary response `y_all` (aligned with the sorted sample).
template <class Kernel>
LocalFit fit_local(const Sample& sample, double x, double h, int p,
                   const Kernel& kernel, BasisKind basis, std::span<const double> y_all)
{
  if (y_all.size() != sample.size())
    throw Error(ErrorCode::invalid_argument, "response length differs from sample size");
  return detail::fit_impl(sample, x, h, p, kernel, basis,
                          [&](std::size_t i) { return y_all[i]; });
}

//! v! times the selected coefficient: the estimate of F^(v)(x), or of the
//! one-sided limit for cutoff bases.
inline double derivative_estimate(const LocalFit& fit, int v, Side side = Side::none)
{
  return factorial(v) * fit.beta[selector_index(fit.basis, fit.p, v, side)];
}

} // namespace lpdens
