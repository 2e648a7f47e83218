#pragma once

#include "linresp/orbit.hpp"
#include "linresp/response.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace linresp {

inline constexpr int kSchemaVersion = 1;

inline constexpr const char* kCsvHeader =
    "experiment,system,gamma1,gamma2,N,A,W,seed,param,SC,UC,deriv,rho_phi,fd_deriv,fd_se,wall_ms";

/// Which derivative columns a run reports.
///   each: one row per parameter ("gamma1", "gamma2", ...)
///   diag: one row for the direction gamma1 = gamma2 = ... (sum over parameters)
enum class ParamMode { each, diag };

/// One CSV row.
struct ExperimentRecord {
  std::string experiment;
  std::string system;
  Vector gamma;
  int n = 0;
  int a = 0;
  int w = 0;
  std::uint64_t seed = 0;
  std::string param;
  double sc = 0.0;
  double uc = 0.0;
  double deriv = 0.0;
  double rho_phi = 0.0;
  std::optional<double> fd_deriv;
  std::optional<double> fd_se;
  double wall_ms = 0.0;
};

/// A single response computation together with its reporting mode.
struct Job {
  std::string experiment;
  RunConfig config;
  ParamMode mode = ParamMode::each;
  /// Index into the FD table, or -1 when no oracle is attached.
  int fd_slot = -1;
  /// Record a NumericalError in the outcome instead of propagating it.
  bool tolerate_abort = false;
};

/// Raw result of one job, kept for diagnostics.
struct JobOutcome {
  std::vector<ExperimentRecord> rows;
  double max_duality_error = 0.0;
  double continuity = 0.0;
  double max_nu_norm = 0.0;
  /// Set when the job hit a NumericalError and `tolerate_abort` was on.
  std::optional<std::string> abort_message;
};

/// Command-line / config-file settings. Unset optionals fall back to the
/// suite defaults.
struct Settings {
  std::optional<std::string> system;
  std::vector<Vector> gammas;
  std::optional<int> steps_per_segment;
  std::optional<int> segments;
  std::optional<int> window;
  std::optional<int> spin_up;
  std::optional<int> buffer_segments;
  std::optional<int> moment_stride;
  std::optional<int> repeats;
  std::uint64_t seed = 0;
  SolverKind solver = SolverKind::projection;
  std::optional<double> lorenz_b;
  std::optional<int> lorenz_t;
  /// A grid (converge-A, logistic-demo), W grid (converge-W) or T values (lorenz).
  std::vector<int> grid;
  bool fd_check = false;
  bool fixed_noise = false;
  FdOptions fd;
};

/// Everything a suite produced.
struct SuiteResult {
  std::string suite;
  std::vector<ExperimentRecord> records;
  std::vector<JobOutcome> outcomes;
  std::vector<Job> jobs;
  double max_duality_error = 0.0;
  double max_continuity = 0.0;
  /// logistic-demo only: max |nu| per grid value, in grid order.
  std::vector<int> nu_grid;
  std::vector<double> nu_growth;
  bool non_convergent = false;
  std::optional<std::string> note;
};

/// Suite names accepted by run_suite.
const std::vector<std::string>& suite_names();

/// One response computation, converted to rows. Deterministic given the config
/// except for wall_ms.
JobOutcome run_single(const Job& job, const std::vector<FdEstimate>& fd_table = {});

/// Builds the job list for a suite without running it.
std::vector<Job> plan_suite(const std::string& name, const Settings& settings);

/// Runs a suite (or "single") with repeats in parallel. FD oracles are computed
/// once per distinct configuration when settings.fd_check is set.
SuiteResult run_suite(const std::string& name, const Settings& settings);

/// Writes header plus rows, 17 significant digits.
void write_csv(const std::vector<ExperimentRecord>& records, std::ostream& out);
/// Parses a file written by write_csv.
std::vector<ExperimentRecord> read_csv(std::istream& in);

/// JSON sidecar: schema version, resolved settings and diagnostics.
std::string sidecar_json(const SuiteResult& result, const Settings& settings);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace linresp
