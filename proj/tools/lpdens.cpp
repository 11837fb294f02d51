// lpdens: local polynomial density estimation, manipulation testing and
// Monte Carlo designs from the command line.
//
// Exit codes: 0 success, 1 fatal error, 2 some grid points failed.
// Fatal errors print one line to stderr: "error: <token>: <message>".

#include <lpdens/density.hpp>
#include <lpdens/io.hpp>
#include <lpdens/manipulation.hpp>
#include <lpdens/simulation.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace lpdens;

struct CommonOptions
{
  std::string input;
  std::string output;
  std::string format = "json";
  int p = 2;
  std::string kernel = "triangular";
  std::optional<double> support_lower;
  std::optional<double> support_upper;
  unsigned threads = 1;
};

struct DensityOptions
{
  int v = 1;
  std::string bandwidth = "auto";
  std::string grid = "25";
  double alpha = 0.05;
};

struct TestOptions
{
  double cutoff = 0.0;
  std::string model = "unrestricted";
  std::string bw_sides = "common";
};

struct SimulateOptions
{
  std::string design;
  std::optional<std::uint64_t> seed;
};

struct Fatal
{
  std::string token;
  std::string message;
};

unsigned threads_from_env()
{
  if (const char* env = std::getenv("LPDENS_THREADS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<unsigned>(v);
  }
  return 1;
}

void emit(const std::string& text, const std::string& path)
{
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Fatal{ "io-error", "cannot open output file '" + path + "'" };
  out << text;
  if (!out)
    throw Fatal{ "io-error", "failed writing '" + path + "'" };
}

Sample load_input(const CommonOptions& o)
{
  if (o.input.empty())
    throw Fatal{ "invalid-argument", "--input is required" };
  if (!std::filesystem::exists(o.input))
    throw Fatal{ "input-not-found", "no such file '" + o.input + "'" };
  Support support;
  support.lower = o.support_lower;
  support.upper = o.support_upper;
  return Sample::load(read_csv_file(o.input), support);
}

void check_format(const std::string& f)
{
  if (f != "json" && f != "csv")
    throw Fatal{ "invalid-argument", "--format must be json or csv" };
}

//! A bare integer is a point count for the default grid; anything else is a
//! comma-separated list of evaluation points.
std::vector<double> resolve_grid(const std::string& spec, const Sample& s)
{
  bool count = !spec.empty() && spec.find_first_not_of("0123456789") == std::string::npos;
  if (count)
    return default_grid(s, std::stoul(spec));
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find(',', start);
    if (end == std::string::npos)
      end = spec.size();
    auto piece = std::string(detail::trim(std::string_view(spec).substr(start, end - start)));
    if (!piece.empty()) {
      double v;
      if (!detail::parse_double(piece, v))
        throw Fatal{ "invalid-argument", "bad grid value '" + piece + "'" };
      out.push_back(v);
    }
    start = end + 1;
  }
  if (out.empty())
    throw Fatal{ "empty-grid", "grid specification is empty" };
  return out;
}

int cmd_density(const CommonOptions& o, const DensityOptions& d)
{
  check_format(o.format);
  KernelSpec k = parse_kernel(o.kernel);
  BandwidthPolicy policy = BandwidthPolicy::mse();
  if (d.bandwidth != "auto") {
    double h;
    if (!detail::parse_double(d.bandwidth, h))
      throw Fatal{ "invalid-argument", "--bandwidth must be 'auto' or a positive number" };
    policy = BandwidthPolicy::fixed_at(h);
  }
  normal_critical_value(d.alpha);
  Sample s = load_input(o);
  auto grid = resolve_grid(d.grid, s);
  auto rows = estimate_grid(s, grid, o.p, d.v, k, policy, d.alpha, o.threads);
  bool partial = false;
  for (const auto& r : rows)
    if (!r.ok()) {
      partial = true;
      std::cerr << "warning: x=" << format_number(r.x) << ": " << r.error << "\n";
    }
  emit(o.format == "json" ? density_json(rows) : density_csv(rows), o.output);
  return partial ? 2 : 0;
}

int cmd_test(const CommonOptions& o, const TestOptions& t)
{
  check_format(o.format);
  KernelSpec k = parse_kernel(o.kernel);
  CutoffModel model = parse_model(t.model);
  BandwidthSides sides;
  if (t.bw_sides == "common")
    sides = BandwidthSides::common;
  else if (t.bw_sides == "distinct")
    sides = BandwidthSides::distinct;
  else
    throw Fatal{ "invalid-argument", "--bw-sides must be common or distinct" };
  Sample s = load_input(o);
  auto r = rbc_test(s, t.cutoff, o.p, k, model, sides);
  for (const auto& w : r.warnings)
    std::cerr << "warning: " << w << "\n";
  emit(o.format == "json" ? to_json(r).dump(2) + "\n" : manipulation_csv(r), o.output);
  return 0;
}

int cmd_simulate(const CommonOptions& o, const SimulateOptions& so)
{
  check_format(o.format);
  if (so.design.empty())
    throw Fatal{ "invalid-argument", "--design is required" };
  if (!std::filesystem::exists(so.design))
    throw Fatal{ "input-not-found", "no such design file '" + so.design + "'" };
  auto designs = read_design_file(so.design);
  SimResult all;
  for (auto& d : designs) {
    if (so.seed)
      d.seed = *so.seed;
    append(all, run_design(d, o.threads));
  }
  for (const auto& c : all.cells)
    if (!c.valid)
      std::cerr << "warning: cell x=" << format_number(c.x) << " n=" << c.n << " " << c.bw_rule
                << " invalid: " << c.failed << " of " << c.reps << " reps failed"
                << (c.error.empty() ? "" : " (" + c.error + ")") << "\n";
  for (const auto& c : all.tests)
    if (!c.valid)
      std::cerr << "warning: cutoff " << format_number(c.cutoff) << " n=" << c.n << " invalid: "
                << c.failed << " of " << c.reps << " reps failed\n";
  emit(o.format == "json" ? simulation_json(all) : simulation_csv(all), o.output);
  return 0;
}

void add_common(CLI::App* sub, CommonOptions& o, bool needs_input)
{
  if (needs_input) {
    sub->add_option("--input", o.input, "CSV file with one numeric column")->required();
    sub->add_option("--support-lower", o.support_lower,
                    "Lower support endpoint (default: sample minimum; -inf for none)");
    sub->add_option("--support-upper", o.support_upper,
                    "Upper support endpoint (default: sample maximum; inf for none)");
    sub->add_option("--kernel", o.kernel, "triangular, epanechnikov or uniform")
      ->capture_default_str();
    sub->add_option("--p", o.p, "Polynomial order of the point estimate")->capture_default_str();
  }
  sub->add_option("--output", o.output, "Output file (default: stdout)");
  if (needs_input)
    sub->add_option("--format", o.format, "json or csv")->capture_default_str();
  else
    sub->add_option("--format", o.format, "json or csv [default: csv]");
  sub->add_option("--threads", o.threads, "Worker threads (fallback: LPDENS_THREADS)")
    ->capture_default_str()
    ->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{ "Local polynomial density estimation from the empirical distribution function" };
  app.require_subcommand(1);

  CommonOptions common;
  common.threads = threads_from_env();
  DensityOptions dens;
  TestOptions test;
  SimulateOptions sim;

  auto* d = app.add_subcommand("density", "Estimate the density (or a derivative) on a grid");
  add_common(d, common, true);
  d->add_option("--v", dens.v, "Derivative order of F (1 = density)")->capture_default_str();
  d->add_option("--bandwidth", dens.bandwidth, "auto (pointwise MSE-optimal) or a fixed h")
    ->capture_default_str();
  d->add_option("--grid", dens.grid, "Point count for quantile spacing, or a comma list of points")
    ->capture_default_str();
  d->add_option("--alpha", dens.alpha, "Confidence level is 1 - alpha")->capture_default_str();

  auto* t = app.add_subcommand("test", "Test for a density discontinuity at a cutoff");
  add_common(t, common, true);
  t->add_option("--cutoff", test.cutoff, "Cutoff point")->required();
  t->add_option("--model", test.model, "unrestricted, restricted or separate")
    ->capture_default_str();
  t->add_option("--bw-sides", test.bw_sides, "common or distinct bandwidths")
    ->capture_default_str();

  auto* s = app.add_subcommand("simulate", "Run a Monte Carlo design file");
  add_common(s, common, false);
  s->add_option("--design", sim.design, "JSON design file")->required();
  s->add_option("--seed", sim.seed, "Override the design seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: invalid-argument: " << e.what() << "\n";
    return 1;
  }
  if (s->parsed() && !s->get_option("--format")->count())
    common.format = "csv";

  try {
    if (d->parsed())
      return cmd_density(common, dens);
    if (t->parsed())
      return cmd_test(common, test);
    return cmd_simulate(common, sim);
  } catch (const Fatal& f) {
    std::cerr << "error: " << f.token << ": " << f.message << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
  }
  return 1;
}
