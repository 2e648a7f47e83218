#include "linresp/experiments.hpp"

#include "linresp/parallel.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace linresp {

namespace {

struct FdRequest {
  std::string system;
  SystemOptions system_options;
  Vector gamma;
  ParamMode mode;
};

std::vector<Vector> broadcast(std::initializer_list<double> values, int p) {
  std::vector<Vector> out;
  for (double v : values) out.push_back(Vector::Constant(p, v));
  return out;
}

Vector fit_gamma(const Vector& g, int p) {
  if (g.size() == p) return g;
  if (g.size() == 1) return Vector::Constant(p, g[0]);
  throw std::invalid_argument("gamma has " + std::to_string(g.size()) + " components, expected " +
                              std::to_string(p));
}

std::string fd_key(const FdRequest& r) {
  std::ostringstream os;
  os << r.system << '|' << r.system_options.lorenz_b << '|' << r.system_options.lorenz_t << '|'
     << static_cast<int>(r.mode);
  for (double g : r.gamma) os << '|' << format_double(g);
  return os.str();
}

const char* solver_name(SolverKind k) {
  return k == SolverKind::projection ? "projection" : "lsq";
}

// Per-suite defaults, overridden by whatever the settings carry.
struct SuiteDefaults {
  std::string system = "solenoid21";
  std::vector<Vector> gammas;
  int segments = 200;
  int window = 10;
  int repeats = 1;
  ParamMode mode = ParamMode::each;
};

RunConfig make_config(const Settings& s, const std::string& system, const SuiteDefaults& d) {
  RunConfig c;
  c.system = system;
  c.steps_per_segment = s.steps_per_segment.value_or(c.steps_per_segment);
  c.segments = s.segments.value_or(d.segments);
  c.window = s.window.value_or(d.window);
  c.spin_up = s.spin_up.value_or(c.spin_up);
  c.buffer_segments = s.buffer_segments.value_or(c.buffer_segments);
  c.moment_stride = s.moment_stride.value_or(c.moment_stride);
  c.solver = s.solver;
  if (s.lorenz_b) c.system_options.lorenz_b = *s.lorenz_b;
  if (s.lorenz_t) c.system_options.lorenz_t = *s.lorenz_t;
  return c;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {"single",  "converge-A", "converge-W",
                                                 "sweep-gamma", "contour", "noise",
                                                 "lorenz",  "logistic-demo"};
  return names;
}

JobOutcome run_single(const Job& job, const std::vector<FdEstimate>& fd_table) {
  JobOutcome out;
  const auto system = make_system(job.config.system, job.config.system_options);
  const auto t0 = std::chrono::steady_clock::now();
  ResponseResult res;
  try {
    res = compute_response(*system, job.config);
  } catch (const NumericalError& e) {
    if (!job.tolerate_abort) throw;
    out.abort_message = e.what();
    return out;
  }
  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  out.max_duality_error = res.max_duality_error;
  out.continuity = std::max(res.continuity_nu, res.continuity_nu_tilde);
  out.max_nu_norm = res.max_nu_norm;

  const FdEstimate* fd = nullptr;
  if (job.fd_slot >= 0) fd = &fd_table.at(static_cast<std::size_t>(job.fd_slot));

  auto row = [&](std::string param, double sc, double uc, double deriv, int fd_index) {
    ExperimentRecord r;
    r.experiment = job.experiment;
    r.system = job.config.system;
    r.gamma = res.gamma;
    r.n = job.config.steps_per_segment;
    r.a = job.config.segments;
    r.w = job.config.window;
    r.seed = job.config.seed;
    r.param = std::move(param);
    r.sc = sc;
    r.uc = uc;
    r.deriv = deriv;
    r.rho_phi = res.rho_phi;
    if (fd) {
      r.fd_deriv = fd->slope[fd_index];
      r.fd_se = fd->se[fd_index];
    }
    r.wall_ms = ms;
    out.rows.push_back(std::move(r));
  };

  const int p = static_cast<int>(res.derivative.size());
  if (job.mode == ParamMode::diag && p > 1) {
    row("diag", res.sc.sum(), res.uc.sum(), res.derivative.sum(), 0);
  } else {
    for (int j = 0; j < p; ++j) {
      row("gamma" + std::to_string(j + 1), res.sc[j], res.uc[j], res.derivative[j], j);
    }
  }
  return out;
}

std::vector<Job> plan_suite(const std::string& name, const Settings& s) {
  SuiteDefaults d;
  std::vector<int> grid = s.grid;
  bool nested_seeds = false;
  bool tolerate = false;

  if (name == "single") {
    d.system = s.system.value_or("solenoid21");
  } else if (name == "converge-A") {
    d.repeats = 30;
    d.mode = ParamMode::diag;
    if (grid.empty()) grid = {50, 100, 200, 400, 800};
  } else if (name == "converge-W") {
    d.repeats = 30;
    d.mode = ParamMode::diag;
    if (grid.empty()) grid = {2, 4, 6, 8, 10, 12};
  } else if (name == "sweep-gamma") {
    d.repeats = 10;
    d.mode = ParamMode::diag;
  } else if (name == "contour") {
    d.repeats = 10;
    for (double g1 : {0.05, 0.10, 0.15})
      for (double g2 : {0.05, 0.10, 0.15}) d.gammas.push_back(Vector{{g1, g2}});
  } else if (name == "noise") {
    d.system = "solenoid3-noisy";
    d.segments = 1000;
    d.repeats = 10;
    d.mode = ParamMode::diag;
  } else if (name == "lorenz") {
    d.system = "tent";
    d.segments = 1000;
    d.repeats = 10;
  } else if (name == "logistic-demo") {
    d.system = "logistic";
    if (grid.empty()) grid = {50, 100, 200, 400, 800, 1600, 3200, 6400};
    nested_seeds = true;
    tolerate = true;
  } else {
    throw std::invalid_argument("unknown suite '" + name + "'");
  }

  // Systems to run, with the T value for Lorenz-type maps.
  struct Variant {
    std::string system;
    std::optional<int> t;
  };
  std::vector<Variant> variants;
  if (name == "lorenz") {
    if (s.system) {
      const bool tent = *s.system == "tent";
      std::vector<int> ts = grid.empty() ? std::vector<int>{} : grid;
      if (ts.empty()) ts = tent ? std::vector<int>{1, 7, 8} : std::vector<int>{1, 8};
      for (int t : ts) variants.push_back({*s.system, t});
    } else if (!grid.empty()) {
      for (int t : grid) variants.push_back({"tent", t});
    } else {
      for (int t : {1, 8}) variants.push_back({"lorenz", t});
      for (int t : {1, 7, 8}) variants.push_back({"tent", t});
    }
  } else {
    variants.push_back({s.system.value_or(d.system), std::nullopt});
  }

  const int repeats = s.repeats.value_or(d.repeats);
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");

  std::vector<Job> jobs;
  std::uint64_t point = 0;
  for (const Variant& v : variants) {
    RunConfig base = make_config(s, v.system, d);
    if (v.t) base.system_options.lorenz_t = *v.t;
    const auto system = make_system(base.system, base.system_options);
    const int p = system->num_params();

    std::vector<Vector> gammas;
    if (!s.gammas.empty()) {
      for (const Vector& g : s.gammas) gammas.push_back(fit_gamma(g, p));
    } else if (!d.gammas.empty()) {
      gammas = d.gammas;
    } else if (name == "sweep-gamma") {
      gammas = broadcast({0.0, 0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20}, p);
    } else if (name == "noise") {
      gammas = broadcast({0.0, 0.02, 0.04, 0.06}, p);
    } else if (name == "lorenz") {
      gammas = broadcast({0.05, 0.10, 0.15, 0.20}, p);
    } else {
      gammas.push_back(system->default_gamma());
    }
    for (const Vector& g : gammas) {
      if (g.size() != p) throw std::invalid_argument("gamma size mismatch for " + base.system);
    }

    // Grid over A or W; a single pass otherwise.
    std::vector<int> sweep = {0};
    if (name == "converge-A" || name == "converge-W" || name == "logistic-demo") sweep = grid;

    std::string experiment = name;
    if (v.t) experiment += "-T" + std::to_string(*v.t);

    for (const Vector& g : gammas) {
      for (int value : sweep) {
        RunConfig c = base;
        c.gamma = g;
        if (name == "converge-A" || name == "logistic-demo") c.segments = value;
        if (name == "converge-W") c.window = value;
        for (int r = 0; r < repeats; ++r) {
          Job job;
          job.experiment = experiment;
          job.config = c;
          job.config.seed = s.seed + static_cast<std::uint64_t>(r) +
                            (nested_seeds ? 0 : point * static_cast<std::uint64_t>(repeats));
          if (s.fixed_noise) job.config.noise_seed = s.seed + static_cast<std::uint64_t>(r);
          job.mode = d.mode;
          job.tolerate_abort = tolerate;
          job.config.validate();
          jobs.push_back(std::move(job));
        }
        ++point;
      }
    }
  }
  return jobs;
}

SuiteResult run_suite(const std::string& name, const Settings& settings) {
  SuiteResult result;
  result.suite = name;
  result.jobs = plan_suite(name, settings);

  std::vector<FdEstimate> fd_table;
  if (settings.fd_check) {
    std::vector<FdRequest> requests;
    std::map<std::string, int> slots;
    for (Job& job : result.jobs) {
      FdRequest req{job.config.system, job.config.system_options, *job.config.gamma, job.mode};
      auto [it, inserted] = slots.emplace(fd_key(req), static_cast<int>(requests.size()));
      if (inserted) requests.push_back(req);
      job.fd_slot = it->second;
    }
    fd_table.resize(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
      const FdRequest& req = requests[i];
      const auto system = make_system(req.system, req.system_options);
      FdOptions fo = settings.fd;
      fo.seed = derive_seed(settings.seed, 100 + i);
      if (settings.fixed_noise) fo.noise = NoisePolicy::fixed;
      Matrix dirs;
      if (req.mode == ParamMode::diag) dirs = Matrix::Ones(system->num_params(), 1);
      fd_table[i] = finite_difference_oracle(*system, req.gamma, fo, dirs);
    }
  }

  result.outcomes.resize(result.jobs.size());
  parallel_for(static_cast<int>(result.jobs.size()), [&](int i) {
    result.outcomes[i] = run_single(result.jobs[i], fd_table);
  });

  for (const JobOutcome& o : result.outcomes) {
    result.max_duality_error = std::max(result.max_duality_error, o.max_duality_error);
    result.max_continuity = std::max(result.max_continuity, o.continuity);
    for (const auto& r : o.rows) result.records.push_back(r);
  }

  if (name == "logistic-demo") {
    bool aborted = false;
    for (std::size_t i = 0; i < result.jobs.size(); ++i) {
      if (result.jobs[i].config.seed != settings.seed) continue;
      result.nu_grid.push_back(result.jobs[i].config.segments);
      const JobOutcome& o = result.outcomes[i];
      if (o.abort_message) {
        aborted = true;
        result.nu_growth.push_back(std::numeric_limits<double>::infinity());
        result.note = "numerical abort at A = " + std::to_string(result.jobs[i].config.segments) +
                      ": " + *o.abort_message;
      } else {
        result.nu_growth.push_back(o.max_nu_norm);
      }
    }
    const double first = result.nu_growth.empty() ? 0.0 : result.nu_growth.front();
    const double last = result.nu_growth.empty() ? 0.0 : result.nu_growth.back();
    result.non_convergent = aborted || (first > 0.0 && last / first > 10.0);
  }
  return result;
}

void write_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.experiment << ',' << r.system << ',' << format_double(r.gamma[0]) << ',';
    if (r.gamma.size() > 1) out << format_double(r.gamma[1]);
    out << ',' << r.n << ',' << r.a << ',' << r.w << ',' << r.seed << ',' << r.param << ','
        << format_double(r.sc) << ',' << format_double(r.uc) << ',' << format_double(r.deriv)
        << ',' << format_double(r.rho_phi) << ',';
    if (r.fd_deriv) out << format_double(*r.fd_deriv);
    out << ',';
    if (r.fd_se) out << format_double(*r.fd_se);
    out << ',' << format_double(r.wall_ms) << '\n';
  }
}

std::vector<ExperimentRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::runtime_error("CSV header does not match the expected schema");
  }
  std::vector<ExperimentRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 16) throw std::runtime_error("malformed CSV row: " + line);
    ExperimentRecord r;
    r.experiment = f[0];
    r.system = f[1];
    r.gamma = f[3].empty() ? Vector{{std::stod(f[2])}} : Vector{{std::stod(f[2]), std::stod(f[3])}};
    r.n = std::stoi(f[4]);
    r.a = std::stoi(f[5]);
    r.w = std::stoi(f[6]);
    r.seed = std::stoull(f[7]);
    r.param = f[8];
    r.sc = std::stod(f[9]);
    r.uc = std::stod(f[10]);
    r.deriv = std::stod(f[11]);
    r.rho_phi = std::stod(f[12]);
    if (!f[13].empty()) r.fd_deriv = std::stod(f[13]);
    if (!f[14].empty()) r.fd_se = std::stod(f[14]);
    r.wall_ms = std::stod(f[15]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string sidecar_json(const SuiteResult& result, const Settings& s) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kSchemaVersion;
  j["suite"] = result.suite;
  j["rows"] = result.records.size();

  json cfg;
  cfg["seed"] = s.seed;
  cfg["solver"] = solver_name(s.solver);
  cfg["fd_check"] = s.fd_check;
  cfg["fixed_noise"] = s.fixed_noise;
  if (s.system) cfg["system"] = *s.system;
  if (s.steps_per_segment) cfg["steps_per_segment"] = *s.steps_per_segment;
  if (s.segments) cfg["segments"] = *s.segments;
  if (s.window) cfg["window"] = *s.window;
  if (s.spin_up) cfg["spin_up"] = *s.spin_up;
  if (s.buffer_segments) cfg["buffer_segments"] = *s.buffer_segments;
  if (s.moment_stride) cfg["moment_stride"] = *s.moment_stride;
  if (s.repeats) cfg["repeats"] = *s.repeats;
  if (s.lorenz_b) cfg["lorenz_B"] = *s.lorenz_b;
  if (s.lorenz_t) cfg["lorenz_T"] = *s.lorenz_t;
  if (!s.grid.empty()) cfg["grid"] = s.grid;
  json gammas = json::array();
  for (const Vector& g : s.gammas) gammas.push_back(std::vector<double>(g.begin(), g.end()));
  cfg["gamma"] = gammas;
  if (s.fd_check) {
    cfg["fd"] = {{"delta", s.fd.delta},
                 {"segments", s.fd.segments},
                 {"steps_per_segment", s.fd.steps_per_segment},
                 {"repeats", s.fd.repeats}};
  }
  j["config"] = cfg;

  json runs = json::array();
  for (std::size_t i = 0; i < result.jobs.size(); ++i) {
    const RunConfig& c = result.jobs[i].config;
    json r = {{"experiment", result.jobs[i].experiment},
              {"system", c.system},
              {"gamma", std::vector<double>(c.gamma->begin(), c.gamma->end())},
              {"N", c.steps_per_segment},
              {"A", c.segments},
              {"W", c.window},
              {"spin_up", c.spin_up},
              {"buffer_segments", c.buffer_segments},
              {"seed", c.seed},
              {"lorenz_B", c.system_options.lorenz_b},
              {"lorenz_T", c.system_options.lorenz_t},
              {"max_nu_norm", result.outcomes[i].max_nu_norm}};
    if (c.noise_seed) r["noise_seed"] = *c.noise_seed;
    if (result.outcomes[i].abort_message) r["abort"] = *result.outcomes[i].abort_message;
    runs.push_back(std::move(r));
  }
  j["runs"] = runs;

  json diag;
  diag["max_duality_error"] = result.max_duality_error;
  diag["max_continuity_residual"] = result.max_continuity;
  if (result.suite == "logistic-demo") {
    diag["segments"] = result.nu_grid;
    json growth = json::array();
    for (double v : result.nu_growth) {
      if (std::isfinite(v)) growth.push_back(v);
      else growth.push_back(nullptr);
    }
    diag["max_nu_norm"] = growth;
    diag["non_convergent"] = result.non_convergent;
  }
  if (result.note) diag["note"] = *result.note;
  j["diagnostics"] = diag;
  return j.dump(2);
}

}  // namespace linresp
