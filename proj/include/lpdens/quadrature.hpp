#pragma once

#include <boost/math/quadrature/gauss.hpp>

#include <array>
#include <vector>

namespace lpdens {

constexpr int gauss_order = 20;

struct Node
{
  double x;
  double w;
};

//! 20-point Gauss-Legendre rule on [-1, 1].
inline const std::array<Node, gauss_order>& gauss_rule()
{
  static const std::array<Node, gauss_order> rule = [] {
    using G = boost::math::quadrature::gauss<double, gauss_order>;
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    std::array<Node, gauss_order> out{};
    // Boost stores the non-negative half; mirror it.
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[i] = { -xs[i], ws[i] };
      out[gauss_order - 1 - i] = { xs[i], ws[i] };
    }
    return out;
  }();
  return rule;
}

//! Maps the reference rule onto [lo, hi].
template <class F>
void for_each_node(double lo, double hi, F&& f)
{
  double half = 0.5 * (hi - lo);
  double mid = 0.5 * (hi + lo);
  for (const Node& n : gauss_rule())
    f(mid + half * n.x, half * n.w);
}

struct Panel
{
  double lo;
  double hi;
};

//! Splits [a, b] at 0 (where both the kernels and the cutoff bases have
//! their kink) and cuts each piece into `panels` equal panels.
inline std::vector<Panel> make_panels(double a, double b, int panels)
{
  std::vector<Panel> out;
  auto cut = [&](double lo, double hi) {
    double step = (hi - lo) / panels;
    for (int i = 0; i < panels; ++i)
      out.push_back({ lo + i * step, i + 1 == panels ? hi : lo + (i + 1) * step });
  };
  if (a < 0.0 && b > 0.0) {
    cut(a, 0.0);
    cut(0.0, b);
  } else {
    cut(a, b);
  }
  return out;
}

} // namespace lpdens
