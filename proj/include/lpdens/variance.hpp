#pragma once

#include "local_fit.hpp"
#include "moments.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace lpdens {

enum class SeMethod
{
  gamma_hat,
  jackknife,
  plugin
};

inline const char* to_string(SeMethod m)
{
  switch (m) {
    case SeMethod::gamma_hat: return "gamma_hat";
    case SeMethod::jackknife: return "jackknife";
    case SeMethod::plugin: return "plugin";
  }
  return "unknown";
}

struct VarianceEstimate
{
  SeMethod method = SeMethod::gamma_hat;
  Eigen::MatrixXd Gamma_hat; // empty for the plug-in method
  double quad_form = 0.0;    // e' S^-1 Gamma S^-1 e, no rate factors
  double V_hat = 0.0;        // (v!)^2 quad_form / h, so that se^2 = V_hat / (n h^(2v-1))
  double se = 0.0;
  int v = 0;
  // The rate factor n h^(2v) is applied only in `se`; no interior/boundary
  // rescaling of the quadratic form is performed.
  const char* scaling_note = "se = v! * sqrt(quad_form / (n h^(2v)))";
};

//! Automatic variance matrix
//!   n^-3 sum_{i,j,k} g_j g_k' (1[x_i<=x_j] - F(x_j)) (1[x_i<=x_k] - F(x_k)),
//! g_j = r_p(u_j) K_h(x_j - x). Summing over i first leaves
//! F(x_j ^ x_k) - F(x_j) F(x_k) = F(lo) (1 - F(hi)) on the sorted window,
//! which a suffix sum turns into a single pass.
inline Eigen::MatrixXd gamma_hat(const LocalFit& fit)
{
  const int d = fit.dim();
  const auto m = fit.R.rows();
  const double n = static_cast<double>(fit.n);
  Eigen::MatrixXd G = fit.w.asDiagonal() * fit.R; // rows g_j'
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd tail = Eigen::VectorXd::Zero(d); // sum_{k>j} (1 - F_k) g_k
  for (Eigen::Index j = m - 1; j >= 0; --j) {
    Eigen::VectorXd g = G.row(j).transpose();
    double F = fit.edf[j];
    Eigen::VectorXd a = (1.0 - F) * g + tail;
    out.noalias() += F * (g * a.transpose() + tail * g.transpose());
    tail += (1.0 - F) * g;
  }
  return out / (n * n);
}

namespace detail {

inline double quad_form(const LocalFit& fit, const Eigen::MatrixXd& Gamma,
                        const Eigen::VectorXd& e)
{
  Eigen::VectorXd w = fit.solve(e);
  double q = w.dot(Gamma * w);
  // Gamma is PSD in exact arithmetic; only rounding can push q below zero.
  double scale = w.cwiseAbs().dot(Gamma.cwiseAbs() * w.cwiseAbs());
  if (q < 0.0) {
    if (q < -1e-12 * scale)
      throw Error(ErrorCode::non_positive_variance,
                  "variance quadratic form is negative");
    q = 0.0;
  }
  return q;
}

inline VarianceEstimate assemble(const LocalFit& fit, Eigen::MatrixXd Gamma,
                                 SeMethod method, int v, Side side)
{
  VarianceEstimate out;
  out.method = method;
  out.v = v;
  out.quad_form = quad_form(fit, Gamma, selector(fit.basis, fit.p, v, side));
  double vf = factorial(v);
  out.V_hat = vf * vf * out.quad_form / fit.h;
  out.se = vf * std::sqrt(out.quad_form / (static_cast<double>(fit.n) *
                                           std::pow(fit.h, 2 * v)));
  out.Gamma_hat = std::move(Gamma);
  return out;
}

} // namespace detail

inline VarianceEstimate standard_error(const LocalFit& fit, int v, Side side = Side::none)
{
  return detail::assemble(fit, gamma_hat(fit), SeMethod::gamma_hat, v, side);
}

//! Variance of f(c+) - f(c-) from a joint cutoff fit.
struct DifferenceVariance
{
  double quad_form = 0.0;
  double V_hat = 0.0; // quad_form / h
  double se = 0.0;    // sqrt(quad_form / (n h^2))
};

inline DifferenceVariance difference_variance(const LocalFit& fit, const Eigen::MatrixXd& Gamma)
{
  if (fit.basis == BasisKind::standard)
    throw Error(ErrorCode::invalid_argument, "difference variance needs a cutoff basis");
  Eigen::VectorXd e = selector(fit.basis, fit.p, 1, Side::plus) -
                      selector(fit.basis, fit.p, 1, Side::minus);
  DifferenceVariance out;
  out.quad_form = detail::quad_form(fit, Gamma, e);
  out.V_hat = out.quad_form / fit.h;
  out.se = std::sqrt(out.quad_form / (static_cast<double>(fit.n) * fit.h * fit.h));
  return out;
}

inline DifferenceVariance difference_variance(const LocalFit& fit)
{
  return difference_variance(fit, gamma_hat(fit));
}

//! Jackknife variance matrix: covariance of the leave-one-out averages
//! a_i = (n-1)^-1 sum_{j != i} U(x_i, x_j) of the symmetrised kernel
//!   U(x_i, x_j) = g_i (1[x_j<=x_i] - yhat_i) + g_j (1[x_i<=x_j] - yhat_j),
//! where yhat is the fitted polynomial. Each a_i needs only window sums.
inline Eigen::MatrixXd jackknife_gamma(const Sample& sample, const LocalFit& fit)
{
  const std::size_t n = sample.size();
  if (n < 3)
    throw Error(ErrorCode::too_few, "jackknife needs at least 3 observations");
  if (fit.n != n)
    throw Error(ErrorCode::invalid_argument, "fit does not belong to this sample");
  const int d = fit.dim();
  const auto m = fit.R.rows();
  const double nm1 = static_cast<double>(n - 1);

  Eigen::MatrixXd G = fit.w.asDiagonal() * fit.R;
  Eigen::VectorXd yhat = fit.R * fit.beta_scaled;
  Eigen::VectorXd C = G.transpose() * yhat;

  // suffix[k] = sum of g over window positions >= k
  std::vector<Eigen::VectorXd> suffix(static_cast<std::size_t>(m) + 1, Eigen::VectorXd::Zero(d));
  for (Eigen::Index k = m - 1; k >= 0; --k)
    suffix[static_cast<std::size_t>(k)] = suffix[static_cast<std::size_t>(k) + 1] + G.row(k).transpose();

  const std::size_t lo = fit.first;
  const std::size_t hi = fit.first + static_cast<std::size_t>(m);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd a(d);
  for (std::size_t i = 0; i < n; ++i) {
    double xi = sample[i];
    std::size_t k0 = std::clamp(sample.count_lt(xi), lo, hi) - lo;
    a = suffix[k0] - C;
    if (i >= lo && i < hi) {
      auto j = static_cast<Eigen::Index>(i - lo);
      Eigen::VectorXd g = G.row(j).transpose();
      double below = static_cast<double>(sample.count_le(xi)) - 1.0;
      a += g * (below - nm1 * yhat[j]) - g + g * yhat[j];
    }
    a /= nm1;
    second.noalias() += a * a.transpose();
    mean += a;
  }
  const double nn = static_cast<double>(n);
  mean /= nn;
  return second / nn - mean * mean.transpose();
}

inline VarianceEstimate jackknife_se(const Sample& sample, const LocalFit& fit, int v,
                                     Side side = Side::none)
{
  return detail::assemble(fit, jackknife_gamma(sample, fit), SeMethod::jackknife, v, side);
}

//! (v!)^2 f e_v' S^-1 Gamma S^-1 e_v from kernel moments.
inline double plugin_variance(double f_hat, const KernelMoments& m, int v)
{
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m.dim);
  if (v < 0 || v >= m.dim)
    throw Error(ErrorCode::order_out_of_range, "derivative order outside the basis");
  if (!(f_hat > 0.0))
    throw Error(ErrorCode::negative_density,
                "density estimate is not positive; plug-in variance undefined");
  e[v] = 1.0;
  Eigen::VectorXd w = m.S.ldlt().solve(e);
  double vf = factorial(v);
  return vf * vf * f_hat * w.dot(m.Gamma * w);
}

//! Plug-in standard error: density estimate times the kernel constant of the
//! region the point falls in.
template <class Kernel>
VarianceEstimate plugin_se(const Sample& sample, double x, double h, int p, int v,
                           const Kernel& kernel)
{
  if (p < 1 || v < 1 || v > p)
    throw Error(ErrorCode::order_out_of_range, "plug-in standard error needs 1 <= v <= p");
  LocalFit fit = fit_local(sample, x, h, p, kernel);
  double f_hat = derivative_estimate(fit, 1);
  KernelMoments m = moments(kernel, fit.region, p, BasisKind::standard);
  VarianceEstimate out;
  out.method = SeMethod::plugin;
  out.v = v;
  out.V_hat = plugin_variance(f_hat, m, v);
  double vf = factorial(v);
  out.quad_form = out.V_hat * h / (vf * vf);
  out.se = std::sqrt(out.V_hat / (static_cast<double>(sample.size()) * std::pow(h, 2 * v - 1)));
  return out;
}

} // namespace lpdens
