#pragma once

#include "density.hpp"
#include "manipulation.hpp"
#include "simulation.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace lpdens {

using nlohmann::json;

//! Shortest round-trip decimal form; empty for NaN.
inline std::string format_number(double v)
{
  if (std::isnan(v))
    return {};
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

//! NaN becomes null so that missing values survive a JSON round trip.
inline json number_or_null(double v)
{
  return std::isnan(v) ? json(nullptr) : json(v);
}

// ---- density records ------------------------------------------------------

inline json to_json(const DensityEstimate& e)
{
  return json{ { "x", number_or_null(e.x) },
               { "v", e.v },
               { "h", number_or_null(e.h) },
               { "p", e.p_point },
               { "f_hat", number_or_null(e.f_hat) },
               { "se", number_or_null(e.se) },
               { "ci_low", number_or_null(e.ci_low) },
               { "ci_high", number_or_null(e.ci_high) },
               { "m_eff", e.m_eff },
               { "region", e.region.empty() ? json(nullptr) : json(e.region) },
               { "error", e.error.empty() ? json(nullptr) : json(e.error) } };
}

inline std::string density_csv(const std::vector<DensityEstimate>& rows)
{
  std::ostringstream out;
  out << "x,v,h,p,f_hat,se,ci_low,ci_high,m_eff,region,error\n";
  for (const auto& e : rows)
    out << format_number(e.x) << ',' << e.v << ',' << format_number(e.h) << ',' << e.p_point
        << ',' << format_number(e.f_hat) << ',' << format_number(e.se) << ','
        << format_number(e.ci_low) << ',' << format_number(e.ci_high) << ',' << e.m_eff << ','
        << e.region << ',' << e.error << '\n';
  return out.str();
}

inline std::string density_json(const std::vector<DensityEstimate>& rows)
{
  json arr = json::array();
  for (const auto& e : rows)
    arr.push_back(to_json(e));
  return arr.dump(2) + "\n";
}

// ---- manipulation record --------------------------------------------------

inline json to_json(const ManipulationTestResult& r)
{
  return json{ { "cutoff", r.cutoff },
               { "model", to_string(r.model) },
               { "p_point", r.p_point },
               { "p_infer", r.p_infer },
               { "h_minus", number_or_null(r.h_minus) },
               { "h_plus", number_or_null(r.h_plus) },
               { "n_minus", r.n_minus },
               { "n_plus", r.n_plus },
               { "m_eff_minus", r.m_eff_minus },
               { "m_eff_plus", r.m_eff_plus },
               { "f_minus", number_or_null(r.f_minus) },
               { "f_plus", number_or_null(r.f_plus) },
               { "se_diff", number_or_null(r.se_diff) },
               { "T", number_or_null(r.T) },
               { "p_value", number_or_null(r.p_value) },
               { "warnings", r.warnings } };
}

inline std::string manipulation_csv(const ManipulationTestResult& r)
{
  std::ostringstream out;
  out << "cutoff,model,p_point,p_infer,h_minus,h_plus,n_minus,n_plus,m_eff_minus,m_eff_plus,"
         "f_minus,f_plus,se_diff,T,p_value,warnings\n";
  std::string warnings;
  for (const auto& w : r.warnings)
    warnings += (warnings.empty() ? "" : "; ") + w;
  out << format_number(r.cutoff) << ',' << to_string(r.model) << ',' << r.p_point << ','
      << r.p_infer << ',' << format_number(r.h_minus) << ',' << format_number(r.h_plus) << ','
      << r.n_minus << ',' << r.n_plus << ',' << r.m_eff_minus << ',' << r.m_eff_plus << ','
      << format_number(r.f_minus) << ',' << format_number(r.f_plus) << ','
      << format_number(r.se_diff) << ',' << format_number(r.T) << ',' << format_number(r.p_value)
      << ",\"" << warnings << "\"\n";
  return out.str();
}

// ---- simulation designs ---------------------------------------------------

namespace detail {

[[noreturn]] inline void design_error(const std::string& msg)
{
  throw Error(ErrorCode::parse_error, "design: " + msg);
}

inline Dgp parse_dgp(const json& j)
{
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "truncated_normal")
      return Dgp::truncated_normal();
    if (s == "exponential")
      return Dgp::exponential();
    if (s == "uniform01")
      return Dgp::uniform01();
    design_error("unknown dgp '" + s + "'");
  }
  if (!j.is_object() || !j.contains("kind"))
    design_error("dgp must be a name or an object with a 'kind'");
  auto kind = j.at("kind").get<std::string>();
  if (kind == "truncated_normal")
    return Dgp::truncated_normal(j.value("lower", -0.8));
  if (kind == "custom") {
    if (!j.contains("knots") || !j.contains("cdf"))
      design_error("custom dgp needs 'knots' and 'cdf'");
    try {
      return Dgp::custom(j.at("knots").get<std::vector<double>>(),
                         j.at("cdf").get<std::vector<double>>());
    } catch (const Error& e) {
      design_error(e.what());
    }
  }
  return parse_dgp(json(kind));
}

} // namespace detail

//! A design document expands into one SimDesign per sample size.
inline std::vector<SimDesign> parse_designs(const json& j)
{
  using detail::design_error;
  static const std::set<std::string> known = { "dgp",   "eval_points", "p",         "v",
                                               "kernel", "n",          "reps",      "bandwidth_rule",
                                               "multiples", "seed",    "jackknife", "alpha",
                                               "cutoff", "model",      "bw_sides" };
  if (!j.is_object())
    design_error("top level must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      design_error("unknown key '" + key + "'");
  if (!j.contains("dgp"))
    design_error("missing 'dgp'");

  try {
    SimDesign base;
    base.dgp = detail::parse_dgp(j.at("dgp"));
    base.eval_points = j.value("eval_points", std::vector<double>{});
    base.p = j.value("p", 2);
    base.v = j.value("v", 1);
    base.kernel = parse_kernel(j.value("kernel", std::string("triangular")));
    auto reps = j.value("reps", std::int64_t{ 1000 });
    if (reps < 1)
      throw Error(ErrorCode::invalid_argument, "reps must be at least 1");
    base.reps = static_cast<std::size_t>(reps);
    auto rule = j.value("bandwidth_rule", std::string("mse_true"));
    if (rule == "mse_true")
      base.bandwidth_rule = BandwidthRule::mse_true;
    else if (rule == "mse_estimated")
      base.bandwidth_rule = BandwidthRule::mse_estimated;
    else if (rule == "multiple")
      base.bandwidth_rule = BandwidthRule::multiple;
    else
      design_error("unknown bandwidth_rule '" + rule + "'");
    base.multiples = j.value("multiples", default_multiples());
    base.seed = j.value("seed", std::uint64_t{ 0 });
    base.jackknife = j.value("jackknife", false);
    base.alpha = j.value("alpha", 0.05);
    if (j.contains("cutoff"))
      base.cutoff = j.at("cutoff").get<double>();
    base.model = parse_model(j.value("model", std::string("unrestricted")));
    auto sides = j.value("bw_sides", std::string("common"));
    if (sides == "common")
      base.sides = BandwidthSides::common;
    else if (sides == "distinct")
      base.sides = BandwidthSides::distinct;
    else
      design_error("unknown bw_sides '" + sides + "'");

    std::vector<std::int64_t> ns;
    const json& jn = j.contains("n") ? j.at("n") : json(1000);
    if (jn.is_array())
      ns = jn.get<std::vector<std::int64_t>>();
    else
      ns.push_back(jn.get<std::int64_t>());
    if (ns.empty())
      design_error("'n' is empty");

    std::vector<SimDesign> out;
    for (auto n : ns) {
      if (n < 10)
        throw Error(ErrorCode::invalid_argument, "n must be at least 10");
      SimDesign d = base;
      d.n = static_cast<std::size_t>(n);
      d.validate();
      out.push_back(std::move(d));
    }
    return out;
  } catch (const json::exception& e) {
    design_error(e.what());
  }
}

inline std::vector<SimDesign> read_design_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::io_error, "cannot open design file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    detail::design_error(e.what());
  }
  return parse_designs(j);
}

// ---- simulation tables ----------------------------------------------------

inline std::string simulation_csv(const SimResult& r)
{
  std::ostringstream out;
  if (!r.cells.empty()) {
    out << "x,n,p,kernel,bw_rule,bias,sd,rmse,se_mean,size\n";
    for (const auto& c : r.cells)
      out << format_number(c.x) << ',' << c.n << ',' << c.p << ',' << c.kernel << ','
          << c.bw_rule << ',' << format_number(c.bias) << ',' << format_number(c.sd) << ','
          << format_number(c.rmse) << ',' << format_number(c.se_mean) << ','
          << format_number(c.size) << '\n';
  }
  if (!r.tests.empty()) {
    out << "cutoff,n,p,kernel,model,bw_sides,rejection_rate,mean_T,sd_T,reps,failed\n";
    for (const auto& c : r.tests)
      out << format_number(c.cutoff) << ',' << c.n << ',' << c.p << ',' << c.kernel << ','
          << c.model << ',' << c.bw_sides << ',' << format_number(c.rejection_rate) << ','
          << format_number(c.mean_T) << ',' << format_number(c.sd_T) << ',' << c.reps << ','
          << c.failed << '\n';
  }
  return out.str();
}

inline std::string simulation_json(const SimResult& r)
{
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({ { "x", c.x },
                      { "n", c.n },
                      { "p", c.p },
                      { "v", c.v },
                      { "kernel", c.kernel },
                      { "bw_rule", c.bw_rule },
                      { "h_mean", number_or_null(c.h_mean) },
                      { "truth", number_or_null(c.truth) },
                      { "bias", number_or_null(c.bias) },
                      { "sd", number_or_null(c.sd) },
                      { "rmse", number_or_null(c.rmse) },
                      { "se_mean", number_or_null(c.se_mean) },
                      { "se_jk_mean", number_or_null(c.se_jk_mean) },
                      { "size", number_or_null(c.size) },
                      { "reps", c.reps },
                      { "failed", c.failed },
                      { "valid", c.valid },
                      { "error", c.error.empty() ? json(nullptr) : json(c.error) } });
  json tests = json::array();
  for (const auto& c : r.tests)
    tests.push_back({ { "cutoff", c.cutoff },
                      { "n", c.n },
                      { "p", c.p },
                      { "kernel", c.kernel },
                      { "model", c.model },
                      { "bw_sides", c.bw_sides },
                      { "rejection_rate", number_or_null(c.rejection_rate) },
                      { "mean_T", number_or_null(c.mean_T) },
                      { "sd_T", number_or_null(c.sd_T) },
                      { "mean_h_minus", number_or_null(c.mean_h_minus) },
                      { "mean_h_plus", number_or_null(c.mean_h_plus) },
                      { "mean_se_diff", number_or_null(c.mean_se_diff) },
                      { "reps", c.reps },
                      { "failed", c.failed },
                      { "valid", c.valid },
                      { "error", c.error.empty() ? json(nullptr) : json(c.error) } });
  json out = json::object();
  if (!r.cells.empty())
    out["cells"] = cells;
  if (!r.tests.empty())
    out["tests"] = tests;
  return out.dump(2) + "\n";
}

//! Appends b's rows to a.
inline void append(SimResult& a, const SimResult& b)
{
  a.cells.insert(a.cells.end(), b.cells.begin(), b.cells.end());
  a.tests.insert(a.tests.end(), b.tests.begin(), b.tests.end());
}

} // namespace lpdens
