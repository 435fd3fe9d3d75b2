#pragma once

#include <fmt/format.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "groundstate.hpp"

namespace dbec {

/// Everything a CLI run needs: solver settings plus the optional mass grid of
/// a sweep.
struct RunConfig {
  SolverConfig solver;
  std::vector<double> sweep_masses;
  SweepOptions sweep;

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    const auto& x = a.solver;
    const auto& y = b.solver;
    return x.mass == y.mass && x.coupling == y.coupling && x.grid == y.grid && x.dt == y.dt &&
           x.dt_max == y.dt_max && x.max_iterations == y.max_iterations &&
           x.flow_patience == y.flow_patience && x.energy_tolerance == y.energy_tolerance &&
           x.residual_tolerance == y.residual_tolerance && x.virial_tolerance == y.virial_tolerance &&
           x.initial == y.initial && x.widths == y.widths && x.epsilon == y.epsilon &&
           x.seed == y.seed && x.perturbation == y.perturbation && x.polish == y.polish &&
           x.newton_iterations == y.newton_iterations &&
           x.preconditioner_shift == y.preconditioner_shift && x.blowup_cap == y.blowup_cap &&
           x.projection_mass_tolerance == y.projection_mass_tolerance &&
           a.sweep_masses == b.sweep_masses && a.sweep.jobs == b.sweep.jobs &&
           a.sweep.margin == b.sweep.margin;
  }
};

class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || p != end) throw ConfigError(fmt::format("{}: '{}' is not a number", key, text));
  return v;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text) {
  Int v = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && end[-1] == ' ') --end;
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || p != end) throw ConfigError(fmt::format("{}: '{}' is not an integer", key, text));
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (in >> item) {
    if (!item.empty() && item.back() == ',') item.pop_back();
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, text));
}

/// Three values, or one value repeated on every axis.
inline std::array<double, 3> parse_triple(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  throw ConfigError(fmt::format("{}: expected one or three values", key));
}

inline std::string num(double v) { return fmt::format("{:.17g}", v); }

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
  return s;
}

inline const std::map<std::string, std::set<std::string>>& config_schema() {
  static const std::map<std::string, std::set<std::string>> schema{
      {"grid", {"points", "half_length"}},
      {"coupling", {"lambda1", "lambda2"}},
      {"solver",
       {"mass", "dt", "dt_max", "max_iterations", "flow_patience", "energy_tolerance",
        "residual_tolerance", "virial_tolerance", "polish", "newton_iterations",
        "preconditioner_shift", "blowup_cap", "projection_mass_tolerance"}},
      {"initial", {"state", "widths", "epsilon", "seed", "perturbation"}},
      {"sweep", {"masses", "jobs", "margin"}},
  };
  return schema;
}

}  // namespace detail

/// Applies one "section.key = value" setting. Used by the file parser and by
/// command-line overrides.
inline void apply_setting(RunConfig& rc, const std::string& section, const std::string& key,
                          const std::string& value) {
  using namespace detail;
  const auto& schema = config_schema();
  const auto sec = schema.find(section);
  if (sec == schema.end()) throw ConfigError(fmt::format("unknown section [{}]", section));
  if (!sec->second.count(key)) throw ConfigError(fmt::format("unknown key {}.{}", section, key));
  const std::string name = section + "." + key;
  auto& s = rc.solver;

  if (section == "grid") {
    auto points = s.grid.points();
    auto half = s.grid.half_lengths();
    if (key == "points") {
      const auto v = parse_triple(name, value);
      for (int a = 0; a < 3; ++a) {
        if (v[a] != std::floor(v[a])) throw ConfigError(name + ": point counts must be integers");
        points[a] = static_cast<int>(v[a]);
      }
    } else {
      half = parse_triple(name, value);
    }
    try {
      s.grid = Grid(points, half);
    } catch (const Error& e) {
      throw ConfigError(name + ": " + e.what());
    }
  } else if (section == "coupling") {
    (key == "lambda1" ? s.coupling.lambda1 : s.coupling.lambda2) = parse_double(name, value);
  } else if (section == "solver") {
    if (key == "mass") s.mass = parse_double(name, value);
    else if (key == "dt") s.dt = parse_double(name, value);
    else if (key == "dt_max") s.dt_max = parse_double(name, value);
    else if (key == "max_iterations") s.max_iterations = parse_integer<int>(name, value);
    else if (key == "flow_patience") s.flow_patience = parse_integer<int>(name, value);
    else if (key == "energy_tolerance") s.energy_tolerance = parse_double(name, value);
    else if (key == "residual_tolerance") s.residual_tolerance = parse_double(name, value);
    else if (key == "virial_tolerance") s.virial_tolerance = parse_double(name, value);
    else if (key == "polish") s.polish = parse_bool(name, value);
    else if (key == "newton_iterations") s.newton_iterations = parse_integer<int>(name, value);
    else if (key == "preconditioner_shift") s.preconditioner_shift = parse_double(name, value);
    else if (key == "blowup_cap") s.blowup_cap = parse_double(name, value);
    else s.projection_mass_tolerance = parse_double(name, value);
  } else if (section == "initial") {
    if (key == "state") {
      try {
        s.initial = initial_state_from_string(value);
      } catch (const Error& e) {
        throw ConfigError(name + ": " + e.what());
      }
    } else if (key == "widths") {
      s.widths = parse_triple(name, value);
    } else if (key == "epsilon") {
      s.epsilon = parse_double(name, value);
    } else if (key == "seed") {
      s.seed = parse_integer<std::uint64_t>(name, value);
    } else {
      s.perturbation = parse_double(name, value);
    }
  } else {
    if (key == "masses") rc.sweep_masses = parse_list(name, value);
    else if (key == "jobs") rc.sweep.jobs = parse_integer<int>(name, value);
    else rc.sweep.margin = parse_double(name, value);
  }
}

inline void validate(const RunConfig& rc) {
  try {
    rc.solver.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (rc.sweep.jobs < 1) throw ConfigError("sweep.jobs must be at least 1");
  if (!(rc.sweep.margin >= 0.0)) throw ConfigError("sweep.margin must be non-negative");
}

/// Parses the INI document. Keys outside the schema are rejected; missing keys
/// keep their defaults.
inline RunConfig parse_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig rc;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(fmt::format("config: key '{}' outside any section", section));
    }
    for (const auto& [key, value] : body) apply_setting(rc, section, key, value.data());
  }
  validate(rc);
  return rc;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

/// Canonical INI text; parse_config_string(serialize(rc)) == rc.
inline std::string serialize(const RunConfig& rc) {
  using detail::num;
  const auto& s = rc.solver;
  const auto& g = s.grid;
  std::string out;
  out += "[grid]\n";
  out += fmt::format("points = {} {} {}\n", g.points(0), g.points(1), g.points(2));
  out += fmt::format("half_length = {} {} {}\n", num(g.half_length(0)), num(g.half_length(1)),
                     num(g.half_length(2)));
  out += "\n[coupling]\n";
  out += fmt::format("lambda1 = {}\nlambda2 = {}\n", num(s.coupling.lambda1), num(s.coupling.lambda2));
  out += "\n[solver]\n";
  out += fmt::format("mass = {}\n", num(s.mass));
  out += fmt::format("dt = {}\n", num(s.dt));
  out += fmt::format("dt_max = {}\n", num(s.dt_max));
  out += fmt::format("max_iterations = {}\n", s.max_iterations);
  out += fmt::format("flow_patience = {}\n", s.flow_patience);
  out += fmt::format("energy_tolerance = {}\n", num(s.energy_tolerance));
  out += fmt::format("residual_tolerance = {}\n", num(s.residual_tolerance));
  out += fmt::format("virial_tolerance = {}\n", num(s.virial_tolerance));
  out += fmt::format("polish = {}\n", s.polish ? "true" : "false");
  out += fmt::format("newton_iterations = {}\n", s.newton_iterations);
  out += fmt::format("preconditioner_shift = {}\n", num(s.preconditioner_shift));
  out += fmt::format("blowup_cap = {}\n", num(s.blowup_cap));
  out += fmt::format("projection_mass_tolerance = {}\n", num(s.projection_mass_tolerance));
  out += "\n[initial]\n";
  out += fmt::format("state = {}\n", to_string(s.initial));
  out += fmt::format("widths = {} {} {}\n", num(s.widths[0]), num(s.widths[1]), num(s.widths[2]));
  out += fmt::format("epsilon = {}\n", num(s.epsilon));
  out += fmt::format("seed = {}\n", s.seed);
  out += fmt::format("perturbation = {}\n", num(s.perturbation));
  out += "\n[sweep]\n";
  out += fmt::format("masses = {}\n", detail::join(rc.sweep_masses));
  out += fmt::format("jobs = {}\n", rc.sweep.jobs);
  out += fmt::format("margin = {}\n", num(rc.sweep.margin));
  return out;
}

}  // namespace dbec
