#pragma once

#include "error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace lpdens {

//! standard:     [1, u, ..., u^p]
//! unrestricted: [u^j 1{u<0}]_{j<=p} followed by [u^j 1{u>=0}]_{j<=p}
//! restricted:   [1, u 1{u<0}, u 1{u>=0}, u^2, ..., u^p]
enum class BasisKind
{
  standard,
  unrestricted,
  restricted
};

//! Which one-sided coefficient to read off a cutoff basis.
enum class Side
{
  none,
  minus,
  plus
};

inline const char* to_string(BasisKind b)
{
  switch (b) {
    case BasisKind::standard: return "standard";
    case BasisKind::unrestricted: return "unrestricted";
    case BasisKind::restricted: return "restricted";
  }
  return "unknown";
}

inline int basis_dim(BasisKind kind, int p)
{
  switch (kind) {
    case BasisKind::standard: return p + 1;
    case BasisKind::unrestricted: return 2 * p + 2;
    case BasisKind::restricted: return p + 2;
  }
  return 0;
}

inline void check_order(BasisKind kind, int p)
{
  if (p < 0 || p > 10)
    throw Error(ErrorCode::order_out_of_range,
                "polynomial order must lie in [0, 10], got " + std::to_string(p));
  if (kind == BasisKind::restricted && p < 1)
    throw Error(ErrorCode::order_out_of_range,
                "restricted cutoff basis needs p >= 1");
}

//! Power of u carried by basis element j; used for the bandwidth scaling H.
inline int basis_power(BasisKind kind, int p, int j)
{
  switch (kind) {
    case BasisKind::standard: return j;
    case BasisKind::unrestricted: return j % (p + 1);
    case BasisKind::restricted: return j <= 1 ? j : j - 1;
  }
  return 0;
}

//! Fills r with r_p(u). r must already have basis_dim entries.
inline void basis_row(BasisKind kind, int p, double u, Eigen::Ref<Eigen::VectorXd> r)
{
  switch (kind) {
    case BasisKind::standard: {
      double t = 1.0;
      for (int j = 0; j <= p; ++j, t *= u)
        r[j] = t;
      return;
    }
    case BasisKind::unrestricted: {
      r.setZero();
      int off = u < 0.0 ? 0 : p + 1;
      double t = 1.0;
      for (int j = 0; j <= p; ++j, t *= u)
        r[off + j] = t;
      return;
    }
    case BasisKind::restricted: {
      r[0] = 1.0;
      r[1] = u < 0.0 ? u : 0.0;
      r[2] = u < 0.0 ? 0.0 : u;
      double t = u * u;
      for (int j = 2; j <= p; ++j, t *= u)
        r[j + 1] = t;
      return;
    }
  }
}

inline Eigen::VectorXd basis_row(BasisKind kind, int p, double u)
{
  Eigen::VectorXd r(basis_dim(kind, p));
  basis_row(kind, p, u, r);
  return r;
}

//! Index of the coefficient whose v!-multiple estimates F^(v), on the given
//! side for cutoff bases.
inline int selector_index(BasisKind kind, int p, int v, Side side)
{
  if (v < 0 || v > p)
    throw Error(ErrorCode::order_out_of_range,
                "derivative order " + std::to_string(v) +
                  " outside [0, p] for p = " + std::to_string(p));
  switch (kind) {
    case BasisKind::standard:
      return v;
    case BasisKind::unrestricted:
      if (side == Side::none)
        throw Error(ErrorCode::invalid_argument,
                    "cutoff basis needs a side to select a derivative");
      return side == Side::minus ? v : p + 1 + v;
    case BasisKind::restricted:
      if (v == 1) {
        if (side == Side::none)
          throw Error(ErrorCode::invalid_argument,
                      "restricted basis needs a side for the density");
        return side == Side::minus ? 1 : 2;
      }
      return v == 0 ? 0 : v + 1;
  }
  return 0;
}

inline Eigen::VectorXd selector(BasisKind kind, int p, int v, Side side)
{
  Eigen::VectorXd e = Eigen::VectorXd::Zero(basis_dim(kind, p));
  e[selector_index(kind, p, v, side)] = 1.0;
  return e;
}

inline double factorial(int k)
{
  double f = 1.0;
  for (int i = 2; i <= k; ++i)
    f *= i;
  return f;
}

} // namespace lpdens
