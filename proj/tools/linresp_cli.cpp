// linresp: run single response computations or experiment suites and write
// CSV rows plus a JSON sidecar.

#include "linresp/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using namespace linresp;

namespace {

Vector parse_gamma(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::size_t used = 0;
    const double v = std::stod(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad gamma component '" + part + "'");
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty --gamma");
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

template <class T>
void copy_if_set(const CLI::Option* opt, const T& value, std::optional<T>& target) {
  if (opt->count() > 0) target = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear response of chaotic maps by adjoint shadowing sweeps"};
  app.set_config("--config", "", "key=value configuration file (keys are the long flag names)");

  std::string system = "solenoid21";
  std::vector<std::string> gamma_text;
  int segments = 200, steps = 20, window = 10, spin_up = 1000, buffer = 2, stride = 1;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::string solver = "projection";
  std::string suite = "single";
  std::string output = "-";
  bool fd_check = false, fixed_noise = false;
  double lorenz_b = 3.0;
  int lorenz_t = 1;
  std::vector<int> grid;
  std::string dump_orbit;
  FdOptions fd;

  auto* o_system = app.add_option("--system", system, "solenoid21 | solenoid3 | solenoid3-noisy | lorenz | tent | stable-linear | logistic");
  app.add_option("--gamma", gamma_text, "parameter point, comma-separated; repeat for a grid");
  auto* o_segments = app.add_option("--segments", segments, "A")->check(CLI::PositiveNumber);
  auto* o_steps = app.add_option("--steps-per-segment", steps, "N")->check(CLI::PositiveNumber);
  auto* o_window = app.add_option("--window", window, "W")->check(CLI::NonNegativeNumber);
  auto* o_spin = app.add_option("--spin-up", spin_up)->check(CLI::NonNegativeNumber);
  auto* o_buffer = app.add_option("--buffer-segments", buffer)->check(CLI::NonNegativeNumber);
  auto* o_stride = app.add_option("--moment-stride", stride)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  auto* o_repeats = app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  app.add_option("--solver", solver)->check(CLI::IsMember({"projection", "lsq"}));
  app.add_option("--suite", suite)->check(CLI::IsMember(suite_names()));
  app.add_option("--output", output, "CSV path, '-' for stdout; a .json sidecar is written next to files");
  app.add_flag("--fd-check", fd_check, "attach finite-difference oracle values");
  app.add_flag("--fixed-noise", fixed_noise, "share one noise realization across gamma");
  auto* o_b = app.add_option("--lorenz-B", lorenz_b);
  auto* o_t = app.add_option("--lorenz-T", lorenz_t)->check(CLI::PositiveNumber);
  app.add_option("--grid", grid, "A values (converge-A, logistic-demo), W values (converge-W) or T values (lorenz)")
      ->delimiter(',');
  app.add_option("--fd-delta", fd.delta)->check(CLI::PositiveNumber);
  app.add_option("--fd-segments", fd.segments)->check(CLI::PositiveNumber);
  app.add_option("--fd-repeats", fd.repeats)->check(CLI::PositiveNumber);
  app.add_option("--dump-orbit", dump_orbit, "write the orbit of the first run as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Settings s;
  try {
    copy_if_set(o_system, system, s.system);
    for (const auto& g : gamma_text) s.gammas.push_back(parse_gamma(g));
    copy_if_set(o_segments, segments, s.segments);
    copy_if_set(o_steps, steps, s.steps_per_segment);
    copy_if_set(o_window, window, s.window);
    copy_if_set(o_spin, spin_up, s.spin_up);
    copy_if_set(o_buffer, buffer, s.buffer_segments);
    copy_if_set(o_stride, stride, s.moment_stride);
    copy_if_set(o_repeats, repeats, s.repeats);
    copy_if_set(o_b, lorenz_b, s.lorenz_b);
    copy_if_set(o_t, lorenz_t, s.lorenz_t);
    s.seed = seed;
    s.solver = solver == "lsq" ? SolverKind::least_squares : SolverKind::projection;
    s.grid = grid;
    s.fd_check = fd_check;
    s.fixed_noise = fixed_noise;
    s.fd = fd;
    // Validates system names, gamma sizes and run parameters before any work.
    const auto jobs = plan_suite(suite, s);

    if (!dump_orbit.empty()) {
      const RunConfig& c = jobs.front().config;
      const auto sys = make_system(c.system, c.system_options);
      std::ofstream f(dump_orbit);
      if (!f) throw std::runtime_error("cannot write " + dump_orbit);
      write_orbit_csv(generate_orbit(*sys, c, *c.gamma), f);
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  SuiteResult result;
  try {
    result = run_suite(suite, s);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (output == "-") {
      write_csv(result.records, std::cout);
    } else {
      std::ofstream csv(output);
      if (!csv) throw std::runtime_error("cannot write " + output);
      write_csv(result.records, csv);
      std::ofstream js(output + ".json");
      if (!js) throw std::runtime_error("cannot write " + output + ".json");
      js << sidecar_json(result, s) << '\n';
      if (!csv || !js) throw std::runtime_error("write failed for " + output);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  std::cerr << suite << ": " << result.records.size() << " rows, max duality error "
            << result.max_duality_error << ", max continuity residual " << result.max_continuity
            << '\n';
  if (suite == "logistic-demo") {
    std::cerr << "max |nu| by A:";
    for (std::size_t i = 0; i < result.nu_grid.size(); ++i)
      std::cerr << ' ' << result.nu_grid[i] << ':' << result.nu_growth[i];
    std::cerr << '\n';
    if (result.non_convergent) std::cerr << "warning: non-convergent (shadowing covector grows with A)\n";
  }
  return 0;
}
