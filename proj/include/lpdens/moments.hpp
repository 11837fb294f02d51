#pragma once

#include "basis.hpp"
#include "quadrature.hpp"
#include "region.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace lpdens {

//! Kernel-only matrices over the region [a, b]:
//!   S     = int r r' K
//!   c     = int r u^{p+1} K
//!   c_tilde = int r u^{p+2} K
//!   Gamma = int int min(u, v) r(u) r(v)' K(u) K(v)
//!   T     = int r r' K^2
struct KernelMoments
{
  Eigen::MatrixXd S;
  Eigen::VectorXd c;
  Eigen::VectorXd c_tilde;
  Eigen::MatrixXd Gamma;
  Eigen::MatrixXd T;
  int dim = 0;
};

constexpr int default_panels = 8;

template <class Kernel>
KernelMoments moments(const Kernel& kernel,
                      const EvalRegion& region,
                      int p,
                      BasisKind basis,
                      int panels = default_panels)
{
  check_order(basis, p);
  if (!(region.b - region.a >= degenerate_region_tol))
    throw Error(ErrorCode::degenerate_region,
                "integration region is empty or nearly so");

  const int d = basis_dim(basis, p);
  KernelMoments m;
  m.dim = d;
  m.S = Eigen::MatrixXd::Zero(d, d);
  m.T = Eigen::MatrixXd::Zero(d, d);
  m.Gamma = Eigen::MatrixXd::Zero(d, d);
  m.c = Eigen::VectorXd::Zero(d);
  m.c_tilde = Eigen::VectorXd::Zero(d);

  const auto cells = make_panels(region.a, region.b, panels);
  const auto np = cells.size();
  // Per-panel first moments feed the off-diagonal blocks of Gamma.
  std::vector<Eigen::VectorXd> m0(np, Eigen::VectorXd::Zero(d));
  std::vector<Eigen::VectorXd> m1(np, Eigen::VectorXd::Zero(d));
  Eigen::VectorXd r(d), rv(d), inner(d);

  for (std::size_t i = 0; i < np; ++i) {
    const Panel cell = cells[i];
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(d, d);
    for_each_node(cell.lo, cell.hi, [&](double u, double w) {
      basis_row(basis, p, u, r);
      double k = kernel(u);
      double up1 = std::pow(u, p + 1);
      m.S.noalias() += (w * k) * r * r.transpose();
      m.T.noalias() += (w * k * k) * r * r.transpose();
      m.c += (w * k * up1) * r;
      m.c_tilde += (w * k * up1 * u) * r;
      m0[i] += (w * k) * r;
      m1[i] += (w * k * u) * r;

      // Triangle u <= v inside this panel: integrate v over [u, hi].
      inner.setZero();
      for_each_node(u, cell.hi, [&](double v, double wv) {
        basis_row(basis, p, v, rv);
        inner += (wv * kernel(v)) * rv;
      });
      E.noalias() += (w * k * u) * r * inner.transpose();
    });
    m.Gamma += E + E.transpose();
  }
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = i + 1; j < np; ++j)
      m.Gamma.noalias() += m1[i] * m0[j].transpose() + m0[j] * m1[i].transpose();
  return m;
}

} // namespace lpdens
