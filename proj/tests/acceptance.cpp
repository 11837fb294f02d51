// Acceptance checks. Usage: acceptance <criterion 1..10> | all
// Prints one PASS/FAIL line per criterion; exit status is nonzero on FAIL.

#include "oracles.hpp"

#include <lpdens/io.hpp>
#include <lpdens/simulation.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#ifndef LPDENS_CLI_PATH
#error "LPDENS_CLI_PATH must point at the lpdens executable"
#endif

using namespace lpdens;

namespace {

struct Outcome
{
  bool pass;
  std::string detail;
};

std::string sci(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

unsigned worker_count()
{
  return std::max(1u, std::thread::hardware_concurrency());
}

const KernelFamily all_kernels[] = { KernelFamily::triangular, KernelFamily::epanechnikov,
                                     KernelFamily::uniform };

// ---------------------------------------------------------------------------

Outcome quadrature_oracle()
{
  KernelSpec k{ KernelFamily::uniform };
  auto closed = [](int m, double a, double b) {
    return 0.5 * (std::pow(b, m + 1) - std::pow(a, m + 1)) / (m + 1);
  };
  const std::pair<double, double> regions[] = { { -1.0, 1.0 }, { 0.0, 1.0 },  { -1.0, 0.0 },
                                                { -0.3, 1.0 }, { -1.0, 0.6 }, { -1.0, 0.25 } };
  double moment_err = 0.0;
  for (auto [a, b] : regions)
    for (int p = 0; p <= 5; ++p) {
      auto m = moments(k, make_region(a, b), p, BasisKind::standard);
      for (int i = 0; i <= p; ++i) {
        for (int j = 0; j <= p; ++j)
          moment_err = std::max(moment_err, std::fabs(m.S(i, j) - closed(i + j, a, b)));
        moment_err = std::max(moment_err, std::fabs(m.c[i] - closed(i + p + 1, a, b)));
        moment_err = std::max(moment_err, std::fabs(m.c_tilde[i] - closed(i + p + 2, a, b)));
      }
    }

  // The 400 x 400 midpoint rule alone carries an O(du^2) error near 2e-6; one
  // Richardson step with an 800 x 800 pass removes that leading term.
  double gamma_err = 0.0, raw_err = 0.0;
  for (int p = 0; p <= 2; ++p) {
    auto m = moments(k, make_region(-1.0, 1.0), p, BasisKind::standard);
    auto coarse = oracle::midpoint_gamma(k, -1.0, 1.0, p, BasisKind::standard, 400);
    auto fine = oracle::midpoint_gamma(k, -1.0, 1.0, p, BasisKind::standard, 800);
    Eigen::MatrixXd extrapolated = (4.0 * fine - coarse) / 3.0;
    gamma_err = std::max(gamma_err, (m.Gamma - extrapolated).cwiseAbs().maxCoeff());
    raw_err = std::max(raw_err, (m.Gamma - coarse).cwiseAbs().maxCoeff());
  }
  bool pass = moment_err <= 1e-9 && gamma_err <= 1e-6;
  return { pass, "max |S,c,c~ - closed form| " + sci(moment_err) + " (tol 1e-9); max |Gamma - "
                 "midpoint oracle| " + sci(gamma_err) + " (tol 1e-6; unextrapolated 400x400: " +
                 sci(raw_err) + ")" };
}

// ---------------------------------------------------------------------------

double max_rel(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want)
{
  double floor = 1e-12 * want.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < want.rows(); ++i)
    for (Eigen::Index j = 0; j < want.cols(); ++j)
      worst = std::max(worst, std::fabs(got(i, j) - want(i, j)) /
                                std::max(std::fabs(want(i, j)), floor));
  return worst;
}

Outcome v_statistic_identity()
{
  struct Case
  {
    const char* label;
    double x;
    BasisKind basis;
  };
  // cutoff bases need data on both sides, so they are exercised at an interior cutoff
  const Case cases[] = { { "interior", 0.5, BasisKind::standard },
                         { "lower boundary", 0.03, BasisKind::standard },
                         { "upper boundary", 0.98, BasisKind::standard },
                         { "unrestricted cutoff", 0.5, BasisKind::unrestricted },
                         { "restricted cutoff", 0.5, BasisKind::restricted } };
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  int checked = 0;
  for (std::size_t n : { 10u, 50u, 200u })
    for (auto f : all_kernels)
      for (const auto& c : cases) {
        KernelSpec k{ f };
        int p = c.basis == BasisKind::standard ? 2 : 1;
        double h = n == 10 ? (c.x == 0.5 ? 0.45 : 0.6) : 0.35;
        // redraw until the window supports the fit; the identity concerns valid fits only
        for (int attempt = 0; attempt < 200; ++attempt) {
          std::vector<double> xs(n);
          for (auto& v : xs)
            v = U(rng);
          std::sort(xs.begin(), xs.end());
          auto s = Sample::load(xs, { 0.0, 1.0 });
          LocalFit fit;
          try {
            fit = fit_local(s, c.x, h, p, k, c.basis);
          } catch (const Error&) {
            continue;
          }
          auto ref = oracle::triple_sum_gamma(xs, c.x, h, p, k, c.basis);
          worst = std::max(worst, max_rel(gamma_hat(fit), ref));
          ++checked;
          break;
        }
      }
  const int expected = 3 * 3 * 5;
  bool pass = checked == expected && worst <= 1e-12;
  return { pass, "max relative |factored - triple sum| " + sci(worst) + " (tol 1e-12) over " +
                   std::to_string(checked) + "/" + std::to_string(expected) + " configurations" };
}

// ---------------------------------------------------------------------------

Outcome polynomial_reproduction()
{
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> Z;
  double worst = 0.0;
  std::map<std::string, int> regions;
  for (int rep = 0; rep < 100; ++rep) {
    KernelSpec k{ all_kernels[rep % 3] };
    int p = rep % 4;
    double h = 0.1 + 0.4 * U(rng);
    // a third each: interior, near the lower end, near the upper end
    double x = rep % 3 == 0 ? h + (1.0 - 2.0 * h) * U(rng)
             : rep % 3 == 1 ? h * U(rng)
                            : 1.0 - h * U(rng);
    x = std::clamp(x, 0.0, 1.0);
    std::vector<double> xs(300);
    for (auto& v : xs)
      v = U(rng);
    auto s = Sample::load(xs, { 0.0, 1.0 });
    Eigen::VectorXd q(p + 1);
    for (auto& c : q)
      c = Z(rng);
    std::vector<double> y(s.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = basis_row(BasisKind::standard, p, s[i] - x).dot(q);
    auto fit = fit_local(s, x, h, p, k, BasisKind::standard, std::span<const double>(y));
    ++regions[to_string(fit.region.kind)];
    for (int j = 0; j <= p; ++j)
      worst = std::max(worst, std::fabs(fit.beta[j] - q[j]) / std::max(1.0, std::fabs(q[j])));
  }
  std::string mix;
  for (const auto& [name, count] : regions)
    mix += (mix.empty() ? "" : ", ") + name + " " + std::to_string(count);
  return { worst <= 1e-8, "max coefficient error " + sci(worst) + " (tol 1e-8) over 100 configs [" +
                            mix + "]" };
}

// ---------------------------------------------------------------------------

Outcome joint_separate_identities()
{
  std::mt19937_64 rng(4242);
  std::exponential_distribution<double> E(1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  double stat_gap = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> xs(300 + 20 * static_cast<std::size_t>(rep));
    for (auto& v : xs)
      v = E(rng);
    auto s = Sample::load(xs, { 0.0, unbounded });
    double cutoff = 0.4 + 0.8 * U(rng);
    double h = 0.2 + 0.2 * U(rng);
    int p = 2 + rep % 2;
    KernelSpec k{ all_kernels[rep % 3] };
    auto parts = split_at_cutoff(s, cutoff);
    const double n = static_cast<double>(s.size());
    const double nm = static_cast<double>(parts.n_minus), np = static_cast<double>(parts.n_plus);
    auto joint = fit_local(s, cutoff, h, p, k, BasisKind::unrestricted);
    auto left = fit_local(parts.left, cutoff, h, p, k);
    auto right = fit_local(parts.right, cutoff, h, p, k);
    for (int v = 0; v <= 2; ++v) {
      double jm = n / nm * derivative_estimate(joint, v, Side::minus);
      double jp = n / np * derivative_estimate(joint, v, Side::plus);
      double want_right = v == 0 ? jp - nm / np : jp;
      double got_left = derivative_estimate(left, v);
      double got_right = derivative_estimate(right, v);
      // relative to the largest term in each relation
      double scale_left = std::max(std::fabs(got_left), std::fabs(jm));
      double scale_right = std::max({ std::fabs(got_right), std::fabs(jp), v == 0 ? nm / np : 0.0 });
      worst = std::max(worst, std::fabs(got_left - jm) / scale_left);
      worst = std::max(worst, std::fabs(got_right - want_right) / scale_right);
    }
    auto tj = test_unrestricted(s, cutoff, p, k, h, h);
    auto ts = test_separate(s, cutoff, p, k, h, h);
    stat_gap = std::max(stat_gap, std::fabs(tj.T - ts.T) / std::max(std::fabs(ts.T), 1e-300));
  }
  return { worst <= 1e-10,
           "max relative deviation " + sci(worst) + " (tol 1e-10), v in {0,1,2}, 50 samples; "
           "joint vs separate statistic differ by up to " + sci(stat_gap) +
             " relative (informational)" };
}

// ---------------------------------------------------------------------------

Outcome zero_smoothing_bias()
{
  SimDesign d;
  d.dgp = Dgp::uniform01();
  d.eval_points = { 0.0, 0.5, 1.0 };
  d.p = 2;
  d.v = 1;
  d.n = 2000;
  d.reps = 1000;
  d.seed = 505;
  // every bias derivative of the uniform CDF vanishes, so the population
  // MSE-optimal bandwidth does not exist; the data-driven selector is used
  d.bandwidth_rule = BandwidthRule::mse_estimated;
  auto r = run_design(d, worker_count());
  bool pass = true;
  std::string detail;
  for (const auto& c : r.cells) {
    bool ok = c.valid && std::fabs(c.bias) < 0.02;
    pass = pass && ok;
    detail += (detail.empty() ? "" : "; ") + std::string("x=") + format_number(c.x) +
              " bias " + sci(c.bias) + " (mean h " + sci(c.h_mean) + ", failed " +
              std::to_string(c.failed) + ")";
  }
  return { pass, detail + " (tol |bias| < 0.02)" };
}

std::vector<SimDesign> normality_designs()
{
  SimDesign e;
  e.dgp = Dgp::exponential();
  e.eval_points = { 0.0, 1.0 };
  e.p = 2;
  e.v = 1;
  e.kernel = KernelSpec{ KernelFamily::triangular };
  e.n = 2000;
  e.reps = 2000;
  e.seed = 606;
  e.jackknife = true;
  e.bandwidth_rule = BandwidthRule::mse_true;
  SimDesign t = e;
  t.dgp = Dgp::truncated_normal();
  t.eval_points = { -0.8, 0.5 };
  t.seed = 607;
  return { e, t };
}

std::string cell_name(const SimCell& c, const SimDesign& d)
{
  return std::string(d.dgp.kind == DgpKind::exponential ? "exp" : "tnorm") + "@" + format_number(c.x);
}

Outcome size_band()
{
  auto designs = normality_designs();
  bool pass = true;
  std::string detail;
  for (const auto& d : designs) {
    auto r = run_design(d, worker_count());
    for (const auto& c : r.cells) {
      bool ok = c.valid && c.size >= 0.03 && c.size <= 0.08;
      pass = pass && ok;
      detail += (detail.empty() ? "" : "; ") + cell_name(c, d) + " size " + sci(c.size) +
                " (h " + sci(c.h_mean) + ")";
    }
  }
  return { pass, detail + " (band [0.03, 0.08])" };
}

Outcome se_calibration()
{
  auto designs = normality_designs();
  bool pass = true;
  std::string detail;
  for (const auto& d : designs) {
    auto r = run_design(d, worker_count());
    for (const auto& c : r.cells) {
      double ratio = c.se_mean / c.sd;
      double jk = c.se_jk_mean / c.se_mean;
      bool ok = c.valid && ratio >= 0.9 && ratio <= 1.1 && std::fabs(jk - 1.0) <= 0.15;
      pass = pass && ok;
      detail += (detail.empty() ? "" : "; ") + cell_name(c, d) + " se/sd " + sci(ratio) +
                " jk/se " + sci(jk);
    }
  }
  return { pass, detail + " (se/sd in [0.9, 1.1], |jk/se - 1| <= 0.15)" };
}

// ---------------------------------------------------------------------------

Outcome bandwidth_closed_form()
{
  const double V = 0.6, B = 0.2;
  const std::size_t n = 1000;
  const int p = 2, v = 1;
  double h = closed_form_bandwidth(V, B, n, p, v);
  bool matches_example = std::fabs(h - 0.3759) <= 1e-4;
  auto mse = [&](double t) {
    return V / (static_cast<double>(n) * std::pow(t, 2 * v - 1)) + std::pow(t, 2 * p + 2 - 2 * v) * B * B;
  };
  double eps = 1e-6;
  double slope = (mse(h + eps) - mse(h - eps)) / (2 * eps);
  double curvature = (mse(h + eps) - 2 * mse(h) + mse(h - eps)) / (eps * eps);
  bool stationary = std::fabs(slope) <= 1e-6 && curvature > 0.0;
  double slope_at_example = (mse(0.3759 + eps) - mse(0.3759 - eps)) / (2 * eps);
  return { matches_example && stationary,
           "h = " + format_number(h) + " vs example 0.3759 (tol 1e-4): " +
             (matches_example ? "match" : "MISMATCH") + "; dMSE/dh at h = " + sci(slope) +
             " (tol 1e-6): " + (stationary ? "stationary" : "NOT stationary") +
             "; dMSE/dh at 0.3759 = " + sci(slope_at_example) };
}

// ---------------------------------------------------------------------------

Outcome manipulation_size_power()
{
  SimDesign h0;
  h0.dgp = Dgp::exponential();
  h0.cutoff = std::log(2.0); // population median
  h0.p = 2;
  h0.n = 2000;
  h0.reps = 2000;
  h0.seed = 909;
  SimDesign h1 = h0;
  h1.dgp = Dgp::custom({ 0.0, 1.0, 2.0 }, { 0.0, 0.75, 1.0 }); // density 0.75 then 0.25
  h1.cutoff = 1.0;
  h1.seed = 910;
  auto r0 = run_design(h0, worker_count()).tests.at(0);
  auto r1 = run_design(h1, worker_count()).tests.at(0);
  bool size_ok = r0.valid && r0.rejection_rate >= 0.03 && r0.rejection_rate <= 0.08;
  bool power_ok = r1.valid && r1.rejection_rate > 0.8;
  return { size_ok && power_ok, "H0 rejection " + sci(r0.rejection_rate) + " (band [0.03, 0.08], "
                                "failed " + std::to_string(r0.failed) + "); H1 power " +
                                  sci(r1.rejection_rate) + " (> 0.8, failed " +
                                  std::to_string(r1.failed) + ")" };
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism()
{
  auto dir = std::filesystem::temp_directory_path() / ("lpdens_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const char*> designs[] = {
    { "pointwise.json", R"({"dgp":"exponential","eval_points":[0,1,1.5],"n":[300,600],"reps":40,
                           "bandwidth_rule":"multiple","multiples":[0.5,1,2],"seed":11,"jackknife":true})" },
    { "estimated.json", R"({"dgp":"truncated_normal","eval_points":[-0.8,0.5],"n":400,"reps":40,
                           "bandwidth_rule":"mse_estimated","seed":12})" },
    { "cutoff.json", R"({"dgp":{"kind":"custom","knots":[0,1,2],"cdf":[0,0.75,1]},"cutoff":1,
                        "n":500,"reps":40,"seed":13})" }
  };
  bool pass = true;
  int runs = 0;
  std::string note;
  for (auto [name, text] : designs) {
    std::ofstream(dir / name) << text;
    for (const char* fmt : { "csv", "json" }) {
      std::string reference;
      for (unsigned threads : { 1u, 2u, 5u, 1u }) {
        auto out = dir / (std::string(name) + "." + fmt + "." + std::to_string(runs));
        std::string cmd = std::string(LPDENS_CLI_PATH) + " simulate --design " +
                          (dir / name).string() + " --format " + fmt + " --threads " +
                          std::to_string(threads) + " --output " + out.string() + " 2>/dev/null";
        int rc = std::system(cmd.c_str());
        ++runs;
        std::string bytes = slurp(out);
        if (rc != 0 || bytes.empty()) {
          pass = false;
          note = std::string("run failed for ") + name;
        } else if (reference.empty()) {
          reference = bytes;
        } else if (bytes != reference) {
          pass = false;
          note = std::string("output differs for ") + name + " at threads=" + std::to_string(threads);
        }
      }
    }
  }
  std::filesystem::remove_all(dir);
  return { pass, std::to_string(runs) + " CLI simulate runs over 3 designs x 2 formats x threads "
                 "{1,2,5,1}: " + (pass ? "byte-identical" : note) };
}

struct Criterion
{
  int id;
  const char* title;
  double limit_seconds;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria()
{
  static const std::vector<Criterion> list = {
    { 1, "quadrature oracle", 1.0, quadrature_oracle },
    { 2, "V-statistic identity", 30.0, v_statistic_identity },
    { 3, "polynomial reproduction", 5.0, polynomial_reproduction },
    { 4, "joint/separate identities", 5.0, joint_separate_identities },
    { 5, "zero-smoothing-bias design", 120.0, zero_smoothing_bias },
    { 6, "normality/size band", 600.0, size_band },
    { 7, "standard-error calibration", 600.0, se_calibration },
    { 8, "bandwidth closed form", 1.0, bandwidth_closed_form },
    { 9, "manipulation test size and power", 600.0, manipulation_size_power },
    { 10, "determinism", 60.0, determinism },
  };
  return list;
}

bool run(const Criterion& c)
{
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    o = { false, std::string("threw: ") + e.what() };
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool in_time = secs <= c.limit_seconds;
  bool pass = o.pass && in_time;
  char timing[96];
  std::snprintf(timing, sizeof timing, "%.2f s (limit %g s)", secs, c.limit_seconds);
  std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.title << ": " << o.detail
            << "; " << timing << (in_time ? "" : " TOO SLOW") << std::endl;
  return pass;
}

} // namespace

int main(int argc, char** argv)
{
  if (argc != 2) {
    std::cerr << "usage: acceptance <1..10|all>\n";
    return 2;
  }
  std::string which = argv[1];
  bool all_pass = true;
  bool matched = false;
  for (const auto& c : criteria())
    if (which == "all" || which == std::to_string(c.id)) {
      matched = true;
      all_pass = run(c) && all_pass;
    }
  if (!matched) {
    std::cerr << "unknown criterion '" << which << "'\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
