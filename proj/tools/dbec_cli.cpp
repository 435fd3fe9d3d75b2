// Command-line front end: regime classification, ground states, gamma sweeps
// and the verification suites.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <dbec/dbec.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kChecksFailed = 1, kUsage = 2, kRegime = 3, kNumerical = 4 };

fs::path output_root() {
  if (const char* env = std::getenv("DBEC_OUTPUT_ROOT"); env && *env) return env;
  return "runs";
}

fs::path run_directory(const std::string& explicit_dir, const std::string& command,
                       const std::string& config_path) {
  if (!explicit_dir.empty()) return explicit_dir;
  return output_root() / (command + "-" + fs::path(config_path).stem().string());
}

// Named flags that map onto config keys; applied before the generic --set list.
struct FlagOverrides {
  std::vector<std::pair<std::string, std::string>> values;  // "section.key", text

  void add(CLI::App* app) {
    static const std::vector<std::pair<std::string, std::string>> flags{
        {"--mass", "solver.mass"},
        {"--lambda1", "coupling.lambda1"},
        {"--lambda2", "coupling.lambda2"},
        {"--points", "grid.points"},
        {"--half-length", "grid.half_length"},
        {"--max-iterations", "solver.max_iterations"},
        {"--initial", "initial.state"},
        {"--widths", "initial.widths"},
        {"--epsilon", "initial.epsilon"},
        {"--seed", "initial.seed"},
    };
    values.reserve(flags.size());
    for (const auto& [flag, key] : flags) {
      values.emplace_back(key, "");
      app->add_option(flag, values.back().second, "overrides " + key);
    }
  }

  std::vector<std::string> settings() const {
    std::vector<std::string> out;
    for (const auto& [key, text] : values) {
      if (!text.empty()) out.push_back(key + "=" + text);
    }
    return out;
  }
};

void apply_overrides(dbec::RunConfig& rc, const std::vector<std::string>& settings) {
  for (const auto& s : settings) {
    const auto eq = s.find('=');
    const auto dot = s.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw dbec::ConfigError("--set expects section.key=value, got '" + s + "'");
    }
    dbec::apply_setting(rc, s.substr(0, dot), s.substr(dot + 1, eq - dot - 1), s.substr(eq + 1));
  }
  dbec::validate(rc);
}

dbec::JsonWriter config_json(const dbec::RunConfig& rc) {
  const auto& s = rc.solver;
  dbec::JsonWriter coupling, solver, initial, sweep;
  coupling.field("lambda1", s.coupling.lambda1).field("lambda2", s.coupling.lambda2);
  solver.field("mass", s.mass)
      .field("dt", s.dt)
      .field("dt_max", s.dt_max)
      .field("max_iterations", s.max_iterations)
      .field("flow_patience", s.flow_patience)
      .field("energy_tolerance", s.energy_tolerance)
      .field("residual_tolerance", s.residual_tolerance)
      .field("virial_tolerance", s.virial_tolerance)
      .field("polish", s.polish)
      .field("newton_iterations", s.newton_iterations)
      .field("preconditioner_shift", s.preconditioner_shift)
      .field("blowup_cap", s.blowup_cap)
      .field("projection_mass_tolerance", s.projection_mass_tolerance);
  initial.field("state", std::string(dbec::to_string(s.initial)))
      .array("widths", std::vector<double>(s.widths.begin(), s.widths.end()))
      .field("epsilon", s.epsilon)
      .field("seed", s.seed)
      .field("perturbation", s.perturbation);
  sweep.array("masses", rc.sweep_masses).field("jobs", rc.sweep.jobs).field("margin", rc.sweep.margin);
  dbec::JsonWriter w;
  w.field("grid", dbec::grid_json(s.grid))
      .field("coupling", coupling)
      .field("solver", solver)
      .field("initial", initial)
      .field("sweep", sweep);
  return w;
}

void write_manifest(const fs::path& dir, const std::string& command, const dbec::RunConfig& rc,
                    double seconds, const std::vector<std::string>& outputs) {
  const auto& g = rc.solver.grid;
  dbec::JsonWriter m;
  m.field("command", command)
      .field("artifact_version", kVersion)
      .field("configuration", config_json(rc))
      .field("configuration_ini", dbec::serialize(rc))
      .field("grid", fmt::format("{}x{}x{} on [-{:.17g},{:.17g}]x[-{:.17g},{:.17g}]x[-{:.17g},{:.17g}]",
                                 g.points(0), g.points(1), g.points(2), g.half_length(0), g.half_length(0),
                                 g.half_length(1), g.half_length(1), g.half_length(2), g.half_length(2)))
      .field("wall_clock_seconds", seconds)
      .array("outputs", outputs)
      .field("seed", rc.solver.seed);
  dbec::write_text(dir / "manifest.json", m.str() + "\n");
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_regime(double l1, double l2) {
  const auto r = dbec::classify({l1, l2});
  dbec::JsonWriter w;
  w.field("regime", std::string(dbec::to_string(r.tag))).field("d_plus", r.d_plus).field("d_minus", r.d_minus);
  std::cout << w.str() << "\n";
  return kOk;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

int cmd_evaluate(const std::string& field_path, double l1, double l2) {
  const dbec::Field u = dbec::read_field(field_path);
  const dbec::CouplingPair cp{l1, l2};
  const auto r = dbec::evaluate(u, cp);
  const auto b = dbec::estimate_beta(u, cp);
  dbec::JsonWriter w;
  w.field("report", dbec::report_json(r))
      .field("beta_pohozaev", b.pohozaev)
      .field("beta_rayleigh", b.rayleigh)
      .field("residual", dbec::EnergyModel(u.grid(), cp).residual(u, b.rayleigh))
      .field("anisotropy", dbec::anisotropy(u));
  std::cout << w.str() << "\n";
  return kOk;
}

int cmd_groundstate(const std::string& config_path, const std::string& out_dir,
                    const std::vector<std::string>& settings) {
  auto rc = dbec::load_config(config_path);
  apply_overrides(rc, settings);
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = run_directory(out_dir, "groundstate", config_path);

  std::optional<dbec::GroundStateResult> result;
  try {
    result = dbec::minimize(rc.solver);
  } catch (const dbec::RegimeError& e) {
    std::cerr << "groundstate: " << e.what() << "\n";
    return kRegime;
  } catch (const dbec::DivergenceError& e) {
    fs::create_directories(dir);
    dbec::write_text(dir / "config.json", config_json(rc).str() + "\n");
    dbec::JsonWriter w;
    w.field("converged", false).field("error", std::string(e.what())).field("last_stable_iteration",
                                                                          e.last_stable_iteration());
    dbec::write_text(dir / "result.json", w.str() + "\n");
    write_manifest(dir, "groundstate", rc, elapsed(t0), {"config.json", "result.json"});
    std::cerr << "groundstate: " << e.what() << "\n";
    return kNumerical;
  }

  fs::create_directories(dir);
  dbec::write_text(dir / "config.json", config_json(rc).str() + "\n");
  dbec::write_text(dir / "iterations.csv", dbec::iteration_csv(result->history));
  dbec::write_field(dir / "field.bin", result->field);
  dbec::write_text(dir / "result.json", dbec::result_json(*result).str() + "\n");
  write_manifest(dir, "groundstate", rc, elapsed(t0),
                 {"config.json", "iterations.csv", "field.bin", "result.json"});
  std::cout << dbec::result_json(*result).str() << "\n";
  return result->converged ? kOk : kNumerical;
}

int cmd_gamma_sweep(const std::string& config_path, const std::string& out_dir,
                    const std::vector<std::string>& settings, const std::vector<double>& masses, int jobs) {
  auto rc = dbec::load_config(config_path);
  if (!masses.empty()) rc.sweep_masses = masses;
  if (jobs > 0) rc.sweep.jobs = jobs;
  apply_overrides(rc, settings);
  if (rc.sweep_masses.empty()) {
    std::cerr << "gamma-sweep: the mass grid is empty\n";
    return kUsage;
  }
  const auto t0 = std::chrono::steady_clock::now();
  dbec::GammaCurve curve;
  try {
    curve = dbec::sweep_gamma(rc.sweep_masses, rc.solver, rc.sweep);
  } catch (const dbec::RegimeError& e) {
    std::cerr << "gamma-sweep: " << e.what() << "\n";
    return kRegime;
  } catch (const dbec::DomainError& e) {
    // Row failures are recorded per row; what escapes is a bad mass grid.
    std::cerr << "gamma-sweep: " << e.what() << "\n";
    return kUsage;
  }
  const fs::path dir = run_directory(out_dir, "gamma-sweep", config_path);
  fs::create_directories(dir);
  dbec::write_text(dir / "config.json", config_json(rc).str() + "\n");
  dbec::write_text(dir / "gamma.csv", dbec::gamma_csv(curve));
  dbec::JsonWriter w;
  w.field("threshold", curve.threshold);
  if (curve.cstar_lower) w.field("cstar_lower", *curve.cstar_lower);
  else w.null("cstar_lower");
  if (curve.cstar_upper) w.field("cstar_upper", *curve.cstar_upper);
  else w.null("cstar_upper");
  w.field("rows", static_cast<int>(curve.rows.size()))
      .field("converged_rows", static_cast<int>(curve.converged_count()));
  std::vector<std::string> errors;
  for (const auto& r : curve.rows) errors.push_back(r.error);
  w.array("row_errors", errors);
  dbec::write_text(dir / "result.json", w.str() + "\n");
  write_manifest(dir, "gamma-sweep", rc, elapsed(t0), {"config.json", "gamma.csv", "result.json"});
  std::cout << dbec::gamma_csv(curve);
  return 2 * curve.converged_count() >= curve.rows.size() ? kOk : kNumerical;
}

int cmd_verify(const std::string& tag, const std::string& field_path, const std::string& config_path,
               double l1, double l2, double residual_tol, double relation_tol) {
  namespace v = dbec::verify;
  v::Suite suite;
  if (tag == "fourier") suite = v::fourier_suite();
  else if (tag == "functionals") suite = v::functionals_suite();
  else if (tag == "fibering") suite = v::fibering_suite();
  else if (tag == "regimes") suite = v::regimes_suite();
  else if (tag == "bubbles") suite = v::bubbles_suite();
  else {
    dbec::CouplingPair cp{l1, l2};
    std::optional<dbec::Field> u;
    if (!field_path.empty()) {
      u = dbec::read_field(field_path);
    } else {
      dbec::RunConfig rc;
      if (!config_path.empty()) rc = dbec::load_config(config_path);
      cp = rc.solver.coupling;
      u = dbec::minimize(rc.solver).field;
    }
    suite = v::pohozaev_suite(*u, cp, residual_tol, relation_tol);
  }
  std::cout << v::format_table(suite);
  return v::all_passed(suite) ? kOk : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground states of the dipolar equation with a focusing quintic term"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  double l1 = 0.0, l2 = 0.0;
  auto* regime = app.add_subcommand("regime", "Classify a coupling pair");
  regime->add_option("--lambda1", l1, "contact coupling")->required();
  regime->add_option("--lambda2", l2, "dipolar coupling")->required();

  std::string config_path, out_dir, tag, field_path;
  std::vector<std::string> settings;
  FlagOverrides gs_flags, sweep_flags;
  auto* gs = app.add_subcommand("groundstate", "Compute a ground state from a config file");
  gs->add_option("config", config_path, "INI configuration")->required()->check(CLI::ExistingFile);
  gs->add_option("--output", out_dir, "run directory (default $DBEC_OUTPUT_ROOT/groundstate-<config>)");
  gs->add_option("--set", settings, "override, section.key=value");
  gs_flags.add(gs);

  std::vector<double> masses;
  int jobs = 0;
  auto* sweep = app.add_subcommand("gamma-sweep", "Sweep gamma over a mass grid");
  sweep->add_option("config", config_path, "INI configuration")->required()->check(CLI::ExistingFile);
  sweep->add_option("--output", out_dir, "run directory (default $DBEC_OUTPUT_ROOT/gamma-sweep-<config>)");
  sweep->add_option("--set", settings, "override, section.key=value");
  sweep->add_option("--masses", masses, "mass grid, overrides sweep.masses");
  sweep->add_option("--jobs", jobs, "parallel rows; disables warm starts")->check(CLI::PositiveNumber);
  sweep_flags.add(sweep);

  auto* eval = app.add_subcommand("evaluate", "Print the functionals of a stored field");
  eval->add_option("field", field_path, "field file")->required()->check(CLI::ExistingFile);
  eval->add_option("--lambda1", l1, "contact coupling")->required();
  eval->add_option("--lambda2", l2, "dipolar coupling")->required();

  double residual_tol = 1e-8, relation_tol = 1e-6;
  auto* verify = app.add_subcommand("verify", "Run a verification suite");
  verify->add_option("suite", tag, "suite tag")
      ->required()
      ->check(CLI::IsMember({"fourier", "functionals", "fibering", "pohozaev", "regimes", "bubbles"}));
  verify->add_option("--field", field_path, "stored field for the pohozaev suite")->check(CLI::ExistingFile);
  verify->add_option("--config", config_path, "config to solve when no field is given")
      ->check(CLI::ExistingFile);
  verify->add_option("--lambda1", l1, "contact coupling of the stored field");
  verify->add_option("--lambda2", l2, "dipolar coupling of the stored field");
  verify->add_option("--residual-tolerance", residual_tol);
  verify->add_option("--relation-tolerance", relation_tol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*regime) return cmd_regime(l1, l2);
    if (*eval) return cmd_evaluate(field_path, l1, l2);
    if (*gs) return cmd_groundstate(config_path, out_dir, concat(gs_flags.settings(), settings));
    if (*sweep) {
      return cmd_gamma_sweep(config_path, out_dir, concat(sweep_flags.settings(), settings), masses, jobs);
    }
    return cmd_verify(tag, field_path, config_path, l1, l2, residual_tol, relation_tol);
  } catch (const dbec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const dbec::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
