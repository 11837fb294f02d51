#include "oracles.hpp"

#include <lpdens/variance.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace lpdens;

namespace {

const KernelFamily families[] = { KernelFamily::triangular, KernelFamily::epanechnikov,
                                  KernelFamily::uniform };

std::vector<double> draws(std::mt19937_64& rng, std::size_t n)
{
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v)
    x = U(rng);
  std::sort(v.begin(), v.end());
  return v;
}

double rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want)
{
  double floor = 1e-12 * want.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < want.rows(); ++i)
    for (Eigen::Index j = 0; j < want.cols(); ++j) {
      double diff = std::fabs(got(i, j) - want(i, j));
      worst = std::max(worst, diff / std::max(std::fabs(want(i, j)), floor));
    }
  return worst;
}

} // namespace

TEST(GammaHat, MatchesTripleSum)
{
  std::mt19937_64 rng(1);
  struct Point
  {
    double x, h;
    BasisKind basis;
  };
  const Point points[] = { { 0.5, 0.3, BasisKind::standard },
                           { 0.05, 0.3, BasisKind::standard },
                           { 0.97, 0.4, BasisKind::standard },
                           { 0.5, 0.35, BasisKind::unrestricted },
                           { 0.45, 0.4, BasisKind::restricted } };
  for (std::size_t n : { 10u, 50u, 200u })
    for (auto f : families)
      for (const auto& pt : points) {
        auto xs = draws(rng, n);
        auto s = Sample::load(xs, { 0.0, 1.0 });
        KernelSpec k{ f };
        int p = pt.basis == BasisKind::standard ? 2 : 1;
        if (n == 10 && pt.basis == BasisKind::standard)
          p = 1;
        LocalFit fit;
        try {
          fit = fit_local(s, pt.x, pt.h, p, k, pt.basis);
        } catch (const Error&) {
          continue; // too few points in a tiny sample's window
        }
        auto ref = oracle::triple_sum_gamma(xs, pt.x, pt.h, p, k, pt.basis);
        EXPECT_LT(rel_err(gamma_hat(fit), ref), 1e-12)
          << "n=" << n << " kernel=" << to_string(f) << " x=" << pt.x;
      }
}

TEST(GammaHat, ZeroWhenOnlyTheMaximumIsWeighted)
{
  // Only x = 1 carries weight and F(1) = 1, so every residual factor vanishes.
  auto s = Sample::load({ 0.0, 1.0 });
  LocalFit fit;
  fit.n = 2;
  fit.p = 0;
  fit.h = 0.5;
  fit.R = Eigen::MatrixXd::Ones(1, 1);
  fit.w = Eigen::VectorXd::Constant(1, 2.0);
  fit.edf = Eigen::VectorXd::Ones(1);
  EXPECT_EQ(gamma_hat(fit)(0, 0), 0.0);
}

TEST(GammaHat, SingleWeightedPoint)
{
  LocalFit fit;
  fit.n = 4;
  fit.R = Eigen::MatrixXd(1, 2);
  fit.R << 1.0, -0.5;
  fit.w = Eigen::VectorXd::Constant(1, 1.5);
  fit.edf = Eigen::VectorXd::Constant(1, 0.25);
  Eigen::VectorXd g = 1.5 * Eigen::Vector2d(1.0, -0.5);
  Eigen::MatrixXd want = g * g.transpose() * (0.25 - 0.25 * 0.25) / 16.0;
  EXPECT_LT((gamma_hat(fit) - want).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(StandardError, PrefactorAlgebra)
{
  std::mt19937_64 rng(4);
  auto s = Sample::load(draws(rng, 500), { 0.0, 1.0 });
  for (double h : { 0.1, 0.2, 0.4 }) {
    auto fit = fit_local(s, 0.6, h, 2, KernelSpec{});
    for (int v = 0; v <= 2; ++v) {
      auto est = standard_error(fit, v);
      Eigen::VectorXd w = fit.solve(selector(BasisKind::standard, 2, v, Side::none));
      double q = w.dot(gamma_hat(fit) * w);
      EXPECT_NEAR(est.se * std::sqrt(500.0 * std::pow(h, 2 * v)) / factorial(v), std::sqrt(q),
                  1e-12 * std::sqrt(q));
      EXPECT_NEAR(est.se * est.se, est.V_hat / (500.0 * std::pow(h, 2 * v - 1)),
                  1e-12 * est.se * est.se);
    }
  }
}

TEST(StandardError, InvariantToKernelScale)
{
  std::mt19937_64 rng(6);
  auto s = Sample::load(draws(rng, 400), { 0.0, 1.0 });
  KernelSpec k{ KernelFamily::epanechnikov };
  auto scaled = [&](double u) { return 7.5 * k(u); };
  for (double x : { 0.0, 0.3, 0.9 }) {
    auto a = standard_error(fit_local(s, x, 0.25, 2, k), 1);
    auto b = standard_error(fit_local(s, x, 0.25, 2, scaled), 1);
    EXPECT_NEAR(a.se, b.se, 1e-12 * a.se);
  }
}

TEST(StandardError, ShiftInvariance)
{
  std::mt19937_64 rng(12);
  auto xs = draws(rng, 300);
  auto moved = xs;
  for (auto& v : moved)
    v += 10.0;
  auto s = Sample::load(xs, { 0.0, 1.0 });
  auto t = Sample::load(moved, { 10.0, 11.0 });
  KernelSpec k{};
  for (double x : { 0.02, 0.5 }) {
    auto fa = fit_local(s, x, 0.3, 2, k);
    auto fb = fit_local(t, x + 10.0, 0.3, 2, k);
    EXPECT_NEAR(standard_error(fa, 1).se, standard_error(fb, 1).se, 1e-8);
    EXPECT_NEAR(jackknife_se(s, fa, 1).se, jackknife_se(t, fb, 1).se, 1e-8);
    EXPECT_NEAR(plugin_se(s, x, 0.3, 2, 1, k).se, plugin_se(t, x + 10.0, 0.3, 2, 1, k).se,
                1e-8);
  }
}

TEST(Jackknife, MatchesPairwiseOracle)
{
  std::mt19937_64 rng(60);
  for (auto f : families)
    for (double x : { 0.5, 0.08, 0.95 }) {
      auto xs = draws(rng, 60);
      auto s = Sample::load(xs, { 0.0, 1.0 });
      KernelSpec k{ f };
      auto fit = fit_local(s, x, 0.4, 1, k);
      auto ref = oracle::pairwise_jackknife(xs, x, 0.4, 1, k, BasisKind::standard, fit.beta);
      auto got = jackknife_gamma(s, fit);
      EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(got);
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
    }
}

TEST(Jackknife, HandlesTiesAndCutoffBasis)
{
  std::mt19937_64 rng(61);
  auto xs = draws(rng, 80);
  for (auto& v : xs)
    v = std::round(v * 25.0) / 25.0;
  std::sort(xs.begin(), xs.end());
  auto s = Sample::load(xs, { 0.0, 1.0 });
  KernelSpec k{};
  auto fit = fit_local(s, 0.5, 0.45, 1, k, BasisKind::unrestricted);
  auto ref = oracle::pairwise_jackknife(xs, 0.5, 0.45, 1, k, BasisKind::unrestricted, fit.beta);
  EXPECT_LT((jackknife_gamma(s, fit) - ref).cwiseAbs().maxCoeff(),
            1e-10 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
}

TEST(PlugIn, UniformInteriorConstant)
{
  auto m = moments(KernelSpec{ KernelFamily::uniform }, make_region(-1.0, 1.0), 1,
                   BasisKind::standard);
  EXPECT_NEAR(plugin_variance(1.0, m, 1), 0.6, 1e-13);
  EXPECT_NEAR(plugin_variance(2.0, m, 1), 1.2, 1e-13);
}

TEST(PlugIn, RejectsNonPositiveDensity)
{
  auto m = moments(KernelSpec{}, make_region(-1.0, 1.0), 2, BasisKind::standard);
  try {
    plugin_variance(0.0, m, 1);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::negative_density);
  }
  auto s = Sample::load({ 0.1, 0.2, 0.3, 0.4, 0.5, 0.6 });
  EXPECT_THROW(plugin_se(s, 0.3, 0.25, 0, 1, KernelSpec{}), Error);
}
