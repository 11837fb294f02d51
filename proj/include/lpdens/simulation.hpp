#pragma once

#include "bandwidth.hpp"
#include "density.hpp"
#include "manipulation.hpp"
#include "parallel.hpp"
#include "philox.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lpdens {

enum class DgpKind
{
  truncated_normal,
  exponential,
  uniform01,
  custom
};

inline const char* to_string(DgpKind k)
{
  switch (k) {
    case DgpKind::truncated_normal: return "truncated_normal";
    case DgpKind::exponential: return "exponential";
    case DgpKind::uniform01: return "uniform01";
    case DgpKind::custom: return "custom";
  }
  return "unknown";
}

//! Data-generating process with a closed-form CDF and derivatives.
//! `custom` is a continuous piecewise-linear CDF through (knots, cdf), i.e. a
//! piecewise-constant density; its derivatives of order >= 2 vanish.
struct Dgp
{
  DgpKind kind = DgpKind::exponential;
  double trunc = -0.8;        // truncated_normal lower bound
  std::vector<double> knots;  // custom
  std::vector<double> cdf_at; // custom, 0 at the first knot, 1 at the last

  static Dgp truncated_normal(double lower = -0.8) { return { DgpKind::truncated_normal, lower, {}, {} }; }
  static Dgp exponential() { return { DgpKind::exponential, -0.8, {}, {} }; }
  static Dgp uniform01() { return { DgpKind::uniform01, -0.8, {}, {} }; }
  static Dgp custom(std::vector<double> knots, std::vector<double> cdf)
  {
    Dgp d{ DgpKind::custom, -0.8, std::move(knots), std::move(cdf) };
    d.validate();
    return d;
  }

  void validate() const
  {
    if (kind != DgpKind::custom)
      return;
    if (knots.size() < 2 || knots.size() != cdf_at.size())
      throw Error(ErrorCode::invalid_argument, "custom dgp needs matching knots and cdf of length >= 2");
    if (cdf_at.front() != 0.0 || cdf_at.back() != 1.0)
      throw Error(ErrorCode::invalid_argument, "custom cdf must run from 0 to 1");
    for (std::size_t i = 1; i < knots.size(); ++i)
      if (!(knots[i] > knots[i - 1]) || !(cdf_at[i] >= cdf_at[i - 1]))
        throw Error(ErrorCode::invalid_argument, "custom knots must increase and cdf must not decrease");
  }

  double lower() const
  {
    switch (kind) {
      case DgpKind::truncated_normal: return trunc;
      case DgpKind::exponential:
      case DgpKind::uniform01: return 0.0;
      case DgpKind::custom: return knots.front();
    }
    return 0.0;
  }

  double upper() const
  {
    switch (kind) {
      case DgpKind::truncated_normal:
      case DgpKind::exponential: return unbounded;
      case DgpKind::uniform01: return 1.0;
      case DgpKind::custom: return knots.back();
    }
    return 0.0;
  }

  Support support() const { return { lower(), upper() }; }

  //! F^(k)(x) for k >= 0; one-sided from inside the support at an endpoint.
  double derivative(int k, double x) const
  {
    switch (kind) {
      case DgpKind::exponential:
        if (k == 0)
          return -std::expm1(-x);
        return (k % 2 == 1 ? 1.0 : -1.0) * std::exp(-x);
      case DgpKind::uniform01:
        if (k == 0)
          return std::clamp(x, 0.0, 1.0);
        return k == 1 ? 1.0 : 0.0;
      case DgpKind::truncated_normal: {
        boost::math::normal_distribution<double> N;
        double Z = boost::math::cdf(boost::math::complement(N, trunc));
        if (k == 0)
          return (boost::math::cdf(N, x) - boost::math::cdf(N, trunc)) / Z;
        // phi^(m) = (-1)^m He_m phi with probabilists' Hermite He_m
        int m = k - 1;
        double he_prev = 1.0, he = x;
        if (m == 0)
          he = 1.0;
        for (int j = 1; j < m; ++j) {
          double next = x * he - j * he_prev;
          he_prev = he;
          he = next;
        }
        return (m % 2 == 0 ? 1.0 : -1.0) * he * boost::math::pdf(N, x) / Z;
      }
      case DgpKind::custom: {
        auto seg = segment(x);
        double slope = (cdf_at[seg + 1] - cdf_at[seg]) / (knots[seg + 1] - knots[seg]);
        if (k == 0)
          return cdf_at[seg] + slope * (std::clamp(x, knots[seg], knots[seg + 1]) - knots[seg]);
        return k == 1 ? slope : 0.0;
      }
    }
    return 0.0;
  }

  double quantile(double u) const
  {
    switch (kind) {
      case DgpKind::exponential: return -std::log1p(-u);
      case DgpKind::uniform01: return u;
      case DgpKind::truncated_normal: {
        // Phi^-1(Phi(t) + u (1 - Phi(t))), evaluated through the upper tail
        boost::math::normal_distribution<double> N;
        double Z = boost::math::cdf(boost::math::complement(N, trunc));
        return std::max(trunc, boost::math::quantile(boost::math::complement(N, (1.0 - u) * Z)));
      }
      case DgpKind::custom: {
        std::size_t i = 1;
        while (i + 1 < cdf_at.size() && cdf_at[i] < u)
          ++i;
        double span = cdf_at[i] - cdf_at[i - 1];
        double t = span > 0.0 ? (u - cdf_at[i - 1]) / span : 0.0;
        return knots[i - 1] + t * (knots[i] - knots[i - 1]);
      }
    }
    return 0.0;
  }

  std::vector<double> draw(std::size_t n, Philox& rng) const
  {
    std::vector<double> out(n);
    for (auto& x : out)
      x = quantile(rng.uniform());
    return out;
  }

private:
  //! Segment whose closed interval holds x; the right one at an interior knot.
  std::size_t segment(double x) const
  {
    std::size_t i = 0;
    while (i + 2 < knots.size() && x >= knots[i + 1])
      ++i;
    return i;
  }
};

enum class BandwidthRule
{
  mse_true,
  mse_estimated,
  multiple
};

inline const char* to_string(BandwidthRule r)
{
  switch (r) {
    case BandwidthRule::mse_true: return "mse_true";
    case BandwidthRule::mse_estimated: return "mse_estimated";
    case BandwidthRule::multiple: return "multiple";
  }
  return "unknown";
}

inline const std::vector<double>& default_multiples()
{
  static const std::vector<double> m = { 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0 };
  return m;
}

//! One Monte Carlo design. With `cutoff` set the design runs the manipulation
//! test instead of pointwise estimation.
struct SimDesign
{
  Dgp dgp;
  std::vector<double> eval_points;
  int p = 2;
  int v = 1;
  KernelSpec kernel;
  std::size_t n = 1000;
  std::size_t reps = 1000;
  BandwidthRule bandwidth_rule = BandwidthRule::mse_true;
  std::vector<double> multiples = default_multiples(); // multiple rule only
  std::uint64_t seed = 0;
  bool jackknife = false;
  double alpha = 0.05;
  std::optional<double> cutoff;
  CutoffModel model = CutoffModel::unrestricted;
  BandwidthSides sides = BandwidthSides::common;

  void validate() const
  {
    dgp.validate();
    if (reps < 1)
      throw Error(ErrorCode::invalid_argument, "reps must be at least 1");
    if (n < 10)
      throw Error(ErrorCode::invalid_argument, "n must be at least 10");
    check_order(BasisKind::standard, p);
    if (v < 0 || v > p)
      throw Error(ErrorCode::order_out_of_range, "derivative order must lie in [0, p]");
    normal_critical_value(alpha);
    if (!cutoff && eval_points.empty())
      throw Error(ErrorCode::empty_grid, "design has no evaluation points");
    if (bandwidth_rule == BandwidthRule::multiple && multiples.empty())
      throw Error(ErrorCode::invalid_argument, "multiple rule needs at least one multiple");
    for (double m : multiples)
      if (!(m > 0.0 && std::isfinite(m)))
        throw Error(ErrorCode::invalid_argument, "bandwidth multiples must be positive");
  }
};

namespace detail {

struct PopulationConstants
{
  double V = 0.0;  // (v!)^2 f e'S^-1 Gamma S^-1 e
  double B1 = 0.0; // v! F^(p+1)/(p+1)! e'S^-1 c
  double B2 = 0.0; // v! F^(p+2)/(p+2)! e'S^-1 c~
};

template <class Kernel>
PopulationConstants population_constants(const Dgp& dgp, double x, int p, int v,
                                         const Kernel& kernel, const EvalRegion& region)
{
  auto km = moments(kernel, region, p, BasisKind::standard);
  Eigen::LDLT<Eigen::MatrixXd> S(km.S);
  Eigen::VectorXd w = S.solve(Eigen::VectorXd::Unit(p + 1, v));
  const double vf = factorial(v);
  PopulationConstants out;
  out.V = vf * vf * dgp.derivative(1, x) * w.dot(km.Gamma * w);
  out.B1 = vf * dgp.derivative(p + 1, x) / factorial(p + 1) * w.dot(km.c);
  out.B2 = vf * dgp.derivative(p + 2, x) / factorial(p + 2) * w.dot(km.c_tilde);
  return out;
}

} // namespace detail

//! MSE-optimal bandwidth from the population constants, with the same case
//! dispatch as the data-driven selector. An interior answer whose window would
//! cross a support endpoint is replaced by the minimiser of the leading MSE
//! with region-dependent constants.
template <class Kernel>
double true_mse_bandwidth(const Dgp& dgp, double x, int p, int v, const Kernel& kernel,
                          std::size_t n)
{
  if (v < 0 || v > p)
    throw Error(ErrorCode::order_out_of_range, "derivative order must lie in [0, p]");
  const double lo = dgp.lower(), hi = dgp.upper();
  if (x < lo || x > hi)
    throw Error(ErrorCode::support_violation, "evaluation point outside the dgp support");
  const double nn = static_cast<double>(n);
  const bool at_edge = x == lo || x == hi;
  const double reach = std::max(x - lo, hi - x);
  const double gap = std::min(x - lo, hi - x);

  if (v == 0) {
    if (at_edge)
      throw Error(ErrorCode::invalid_argument,
                  "population MSE of the CDF estimator is not defined at a support endpoint");
    auto c = detail::population_constants(dgp, x, p, 0, kernel, make_region(-1.0, 1.0));
    auto km = moments(kernel, make_region(-1.0, 1.0), p, BasisKind::standard);
    Eigen::VectorXd w = km.S.ldlt().solve(Eigen::VectorXd::Unit(p + 1, 0));
    double F = dgp.derivative(0, x), f = dgp.derivative(1, x);
    if (!(f > 0.0))
      throw Error(ErrorCode::negative_density, "density is not positive at x");
    CdfMse mse;
    bool odd = p % 2 == 1;
    mse.B = odd ? c.B1 : c.B2;
    mse.q = odd ? p + 1 : p + 2;
    require_bias(mse.B);
    mse.V1 = c.V;
    mse.V2 = 2.0 * F * (1.0 - F) / f * w.dot(km.T * w);
    mse.n = nn;
    double top = std::isfinite(gap) ? gap : 10.0;
    return golden_section_log(mse, top * 1e-6, top);
  }

  if (at_edge) {
    auto region = x == lo ? make_region(0.0, 1.0) : make_region(-1.0, 0.0);
    auto c = detail::population_constants(dgp, x, p, v, kernel, region);
    return closed_form_bandwidth(c.V, c.B1, n, p, v);
  }

  auto c = detail::population_constants(dgp, x, p, v, kernel, make_region(-1.0, 1.0));
  double h = (p - v) % 2 == 1 ? closed_form_bandwidth(c.V, c.B1, n, p, v)
                              : closed_form_bandwidth_second_order(c.V, c.B2, n, p, v);
  if (h <= gap)
    return h;

  // Window reaches the boundary: leading bias is first order there.
  auto amse = [&](double t) {
    auto region = make_region(x, t, lo, hi);
    auto ct = detail::population_constants(dgp, x, p, v, kernel, region);
    double b = std::pow(t, p + 1 - v) * ct.B1;
    return ct.V / (nn * std::pow(t, 2 * v - 1)) + b * b;
  };
  double top = std::isfinite(reach) ? reach : 10.0 * gap;
  return golden_section_log(amse, gap * 1e-3, top);
}

//! One summary row of a pointwise design.
struct SimCell
{
  static constexpr double missing = std::numeric_limits<double>::quiet_NaN();

  double x = missing;
  std::size_t n = 0;
  int p = 2;
  int v = 1;
  std::string kernel;
  std::string bw_rule; // "mse_true", "mse_estimated" or "mse_true*<multiple>"
  double h_mean = missing;
  double truth = missing;
  double bias = missing;
  double sd = missing;   // 1/reps normalisation, so rmse^2 = bias^2 + sd^2
  double rmse = missing;
  double se_mean = missing;
  double size = missing; // centred t: |f - mean f| / se >= z
  double se_jk_mean = missing;
  std::size_t reps = 0;
  std::size_t failed = 0;
  bool valid = false; // at most 1% failed replications
  std::string error;  // first failure token seen
};

//! One summary row of a manipulation design.
struct SimTestCell
{
  static constexpr double missing = std::numeric_limits<double>::quiet_NaN();

  double cutoff = missing;
  std::size_t n = 0;
  int p = 2;
  std::string kernel;
  std::string model;
  std::string bw_sides;
  double rejection_rate = missing;
  double mean_T = missing;
  double sd_T = missing;
  double mean_h_minus = missing;
  double mean_h_plus = missing;
  double mean_se_diff = missing;
  std::size_t reps = 0;
  std::size_t failed = 0;
  bool valid = false;
  std::string error;
};

struct SimResult
{
  std::vector<SimCell> cells;
  std::vector<SimTestCell> tests;
};

namespace detail {

struct RepValue
{
  double h = 0.0, f = 0.0, se = 0.0, se_jk = 0.0;
  std::string error;
};

inline bool too_many_failures(std::size_t failed, std::size_t reps)
{
  return static_cast<double>(failed) > 0.01 * static_cast<double>(reps);
}

template <class Kernel>
RepValue estimate_once(const Sample& s, double x, double h, int p, int v, const Kernel& kernel,
                       bool jackknife)
{
  RepValue r;
  r.h = h;
  LocalFit fit = fit_local(s, x, h, p, kernel);
  r.f = derivative_estimate(fit, v);
  r.se = standard_error(fit, v).se;
  if (jackknife)
    r.se_jk = jackknife_se(s, fit, v).se;
  return r;
}

inline SimResult run_pointwise(const SimDesign& d, unsigned threads)
{
  struct Column
  {
    double x;
    double multiple;
    std::optional<double> h_true;
    std::string label;
    std::string error;
  };
  std::vector<Column> cols;
  for (double x : d.eval_points) {
    if (d.bandwidth_rule == BandwidthRule::mse_estimated) {
      cols.push_back({ x, 1.0, std::nullopt, "mse_estimated", {} });
      continue;
    }
    std::optional<double> h;
    std::string err;
    try {
      h = true_mse_bandwidth(d.dgp, x, d.p, d.v, d.kernel, d.n);
    } catch (const Error& e) {
      err = to_string(e.code());
    }
    if (d.bandwidth_rule == BandwidthRule::mse_true) {
      cols.push_back({ x, 1.0, h, "mse_true", err });
    } else {
      for (double m : d.multiples) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "mse_true*%g", m);
        cols.push_back({ x, m, h, buf, err });
      }
    }
  }

  const std::size_t C = cols.size();
  std::vector<RepValue> slots(C * d.reps);
  parallel_for(d.reps, threads, [&](std::size_t rep) {
    Philox rng(d.seed, rep);
    Sample s = Sample::load(d.dgp.draw(d.n, rng), d.dgp.support());
    for (std::size_t c = 0; c < C; ++c) {
      auto& out = slots[rep * C + c];
      const auto& col = cols[c];
      if (!col.error.empty()) {
        out.error = col.error;
        continue;
      }
      try {
        double h = col.h_true ? *col.h_true * col.multiple
                              : mse_bandwidth(s, col.x, d.p, d.v, d.kernel).h;
        out = estimate_once(s, col.x, h, d.p, d.v, d.kernel, d.jackknife);
      } catch (const Error& e) {
        out.error = to_string(e.code());
      }
    }
  });

  const double z = normal_critical_value(d.alpha);
  SimResult result;
  for (std::size_t c = 0; c < C; ++c) {
    SimCell cell;
    cell.x = cols[c].x;
    cell.n = d.n;
    cell.p = d.p;
    cell.v = d.v;
    cell.kernel = to_string(d.kernel.family);
    cell.bw_rule = cols[c].label;
    cell.reps = d.reps;
    cell.truth = d.dgp.derivative(d.v, cell.x);
    double sum_f = 0.0, sum_h = 0.0, sum_se = 0.0, sum_jk = 0.0;
    std::size_t ok = 0;
    for (std::size_t r = 0; r < d.reps; ++r) {
      const auto& rv = slots[r * C + c];
      if (!rv.error.empty()) {
        ++cell.failed;
        if (cell.error.empty())
          cell.error = rv.error;
        continue;
      }
      ++ok;
      sum_f += rv.f;
      sum_h += rv.h;
      sum_se += rv.se;
      sum_jk += rv.se_jk;
    }
    cell.valid = ok > 0 && !too_many_failures(cell.failed, d.reps);
    if (ok == 0) {
      result.cells.push_back(cell);
      continue;
    }
    const double k = static_cast<double>(ok);
    double mean = sum_f / k;
    double ss = 0.0, sq = 0.0, rejections = 0.0;
    for (std::size_t r = 0; r < d.reps; ++r) {
      const auto& rv = slots[r * C + c];
      if (!rv.error.empty())
        continue;
      ss += (rv.f - mean) * (rv.f - mean);
      sq += (rv.f - cell.truth) * (rv.f - cell.truth);
      if (std::fabs(rv.f - mean) >= z * rv.se)
        rejections += 1.0;
    }
    cell.h_mean = sum_h / k;
    cell.bias = mean - cell.truth;
    cell.sd = std::sqrt(ss / k);
    cell.rmse = std::sqrt(sq / k);
    cell.se_mean = sum_se / k;
    cell.size = rejections / k;
    if (d.jackknife)
      cell.se_jk_mean = sum_jk / k;
    result.cells.push_back(cell);
  }
  return result;
}

inline SimResult run_manipulation(const SimDesign& d, unsigned threads)
{
  struct RepTest
  {
    double T = 0.0, h_minus = 0.0, h_plus = 0.0, se = 0.0;
    std::string error;
  };
  const double cutoff = *d.cutoff;
  std::vector<RepTest> slots(d.reps);
  parallel_for(d.reps, threads, [&](std::size_t rep) {
    Philox rng(d.seed, rep);
    auto& out = slots[rep];
    try {
      Sample s = Sample::load(d.dgp.draw(d.n, rng), d.dgp.support());
      auto r = rbc_test(s, cutoff, d.p, d.kernel, d.model, d.sides);
      out.T = r.T;
      out.h_minus = r.h_minus;
      out.h_plus = r.h_plus;
      out.se = r.se_diff;
    } catch (const Error& e) {
      out.error = to_string(e.code());
    }
  });

  const double z = normal_critical_value(d.alpha);
  SimTestCell cell;
  cell.cutoff = cutoff;
  cell.n = d.n;
  cell.p = d.p;
  cell.kernel = to_string(d.kernel.family);
  cell.model = to_string(d.model);
  cell.bw_sides = d.sides == BandwidthSides::common ? "common" : "distinct";
  cell.reps = d.reps;
  double sum_T = 0.0, sum_hm = 0.0, sum_hp = 0.0, sum_se = 0.0, rejections = 0.0;
  std::size_t ok = 0;
  for (const auto& r : slots) {
    if (!r.error.empty()) {
      ++cell.failed;
      if (cell.error.empty())
        cell.error = r.error;
      continue;
    }
    ++ok;
    sum_T += r.T;
    sum_hm += r.h_minus;
    sum_hp += r.h_plus;
    sum_se += r.se;
    if (std::fabs(r.T) >= z)
      rejections += 1.0;
  }
  cell.valid = ok > 0 && !too_many_failures(cell.failed, d.reps);
  if (ok > 0) {
    const double k = static_cast<double>(ok);
    cell.mean_T = sum_T / k;
    double ss = 0.0;
    for (const auto& r : slots)
      if (r.error.empty())
        ss += (r.T - cell.mean_T) * (r.T - cell.mean_T);
    cell.sd_T = std::sqrt(ss / k);
    cell.rejection_rate = rejections / k;
    cell.mean_h_minus = sum_hm / k;
    cell.mean_h_plus = sum_hp / k;
    cell.mean_se_diff = sum_se / k;
  }
  SimResult result;
  result.tests.push_back(cell);
  return result;
}

} // namespace detail

//! Runs every replication of a design. Replication r draws from the Philox
//! stream (seed, r) and writes into its own slot; the reduction walks the
//! slots in order, so the thread count cannot change any output bit.
inline SimResult run_design(const SimDesign& design, unsigned threads = 1)
{
  design.validate();
  return design.cutoff ? detail::run_manipulation(design, threads)
                       : detail::run_pointwise(design, threads);
}

} // namespace lpdens
