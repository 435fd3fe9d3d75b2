// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <dbec/dbec.hpp>

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace dbec;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.passed) ++failures;
  fmt::print("criterion {:>2} {}  {}  ({:.1f} s)  {}\n", id, o.passed ? "PASS" : "FAIL", title, secs, o.detail);
  std::fflush(stdout);
}

std::string failed_checks(const verify::Suite& s) {
  std::string out;
  for (const auto& c : s) {
    out += fmt::format("[{}: {} {}] ", c.name, c.passed ? "ok" : "FAILED", c.detail);
  }
  return out;
}

verify::Suite pick(const verify::Suite& s, const std::vector<std::string>& names) {
  verify::Suite out;
  for (const auto& c : s)
    for (const auto& n : names)
      if (c.name == n) out.push_back(c);
  return out;
}

SolverConfig contact_unit_mass() {
  SolverConfig cfg;
  cfg.grid = Grid::cube(64, 4.0);
  cfg.coupling = {-1.0, 0.0};
  cfg.mass = 1.0;
  cfg.widths = {0.3, 0.3, 0.3};
  return cfg;
}

SolverConfig contact_sweep_base() {
  SolverConfig cfg;
  cfg.grid = Grid::cube(48, 16.0);
  cfg.coupling = {-1.0, 0.0};
  cfg.widths = {1.5, 1.5, 1.5};
  return cfg;
}

const std::vector<double> sweep_masses{40.0, 45.0, 50.0, 60.0};

struct LargeMassRun {
  std::vector<double> theta, energy;
  std::string csv;
};

// cp = (0, 3): the seed is an elongated Gaussian on a box twice as long in x3.
LargeMassRun large_mass_run() {
  const CouplingPair cp{0.0, 3.0};
  const Grid g({64, 64, 64}, {8.0, 8.0, 16.0});
  const Field seed = large_mass_seed(cp, g);
  ProjectionOptions po;
  po.max_relative_mass_change = 1e-3;
  LargeMassRun out;
  out.csv = "n,theta,E,Q_rel\n";
  for (int n : {1, 2, 4, 8}) {
    const Field u = large_mass_sequence(n, seed, cp);
    const auto p = project_to_V(u, EnergyModel(u.grid(), cp), po);
    out.theta.push_back(p.tstar);
    out.energy.push_back(p.report.E);
    out.csv += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", n, p.tstar, p.report.E,
                           p.report.Q / (p.report.A + p.report.C));
  }
  return out;
}

}  // namespace

int main() {
  const double thr = sobolev_threshold();
  fmt::print("threshold S^(3/2)/3 = {:.17g}\n", thr);

  report(1, "spectral correctness at 64^3", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = verify::fourier_suite(64, 8.0);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return Outcome{verify::all_passed(s) && secs < 10.0, failed_checks(s)};
  });

  const auto functionals = verify::functionals_suite();

  report(2, "radial dipolar vanishing and multiplier range", [&] {
    const auto s = pick(functionals, {"multiplier range", "radial dipolar vanishes"});
    return Outcome{s.size() == 2 && verify::all_passed(s), failed_checks(s)};
  });

  report(3, "regime dichotomy", [] {
    const auto s = verify::regimes_suite(20, 50);
    return Outcome{verify::all_passed(s), failed_checks(s)};
  });

  report(4, "fibering properties on 1000 triples", [] {
    const auto s = verify::fibering_suite(1000);
    return Outcome{verify::all_passed(s), failed_checks(s)};
  });

  report(5, "gradient vs central differences", [&] {
    const auto s = pick(functionals, {"gradient vs finite differences", "finite differences converge at second order"});
    return Outcome{s.size() == 2 && verify::all_passed(s), failed_checks(s)};
  });

  std::string iterations_csv;
  report(6, "ground-state certificates for (-1, 0, 1) on 64^3", [&] {
    const auto res = minimize(contact_unit_mass());
    iterations_csv = iteration_csv(res.history);
    const auto& r = res.report;
    const auto& d = res.pohozaev;
    const bool ok = res.converged && res.residual <= 1e-8 && std::abs(d.full) <= 1e-6 &&
                    std::abs(d.beta_relation) <= 1e-6 && std::abs(d.virial) <= 1e-6 && res.beta > 0.0 &&
                    r.B < 0.0 && r.E > r.A / 6.0 - 1e-10 && r.E < thr;
    return Outcome{ok, fmt::format("converged={} residual={:.3e} pohozaev full={:.3e} beta_relation={:.3e} "
                                   "Q={:.3e} beta={:.6g} B={:.6g} E={:.10g} A/6={:.10g}",
                                   res.converged, res.residual, d.full, d.beta_relation, d.virial, res.beta,
                                   r.B, r.E, r.A / 6.0)};
  });

  report(7, "projected bubbles approach the threshold", [] {
    const auto s = verify::bubbles_suite();
    return Outcome{verify::all_passed(s), failed_checks(s)};
  });

  std::string large_mass_csv, sweep_csv;
  report(8, "large-mass decay and monotone gamma sweep", [&] {
    const auto lm = large_mass_run();
    large_mass_csv = lm.csv;
    bool ok = true;
    for (std::size_t i = 1; i < lm.theta.size(); ++i) {
      ok = ok && lm.theta[i] < lm.theta[i - 1] && lm.energy[i] < lm.energy[i - 1];
    }
    ok = ok && lm.energy.back() < 0.05 * lm.energy.front();
    std::string detail = fmt::format("theta = {:.4f} {:.4f} {:.4f} {:.4f}; E = {:.4g} {:.4g} {:.4g} {:.4g}; ",
                                     lm.theta[0], lm.theta[1], lm.theta[2], lm.theta[3], lm.energy[0],
                                     lm.energy[1], lm.energy[2], lm.energy[3]);

    const auto curve = sweep_gamma(sweep_masses, contact_sweep_base());
    sweep_csv = gamma_csv(curve);
    bool mono = curve.converged_count() == curve.rows.size();
    for (std::size_t i = 1; i < curve.rows.size(); ++i) {
      mono = mono && curve.rows[i].gamma <= curve.rows[i - 1].gamma + 1e-6;
    }
    detail += "gamma(c) =";
    for (const auto& row : curve.rows) detail += fmt::format(" {:g}:{:.6g}{}", row.c, row.gamma, row.converged ? "" : "(unconverged)");
    return Outcome{ok && mono, detail};
  });

  report(9, "symmetry breaking for (0, 1) at c = 30", [&] {
    SolverConfig cfg;
    cfg.grid = Grid::cube(64, 16.0);
    cfg.coupling = {0.0, 1.0};
    cfg.mass = 30.0;
    cfg.widths = {1.5, 1.5, 3.0};
    const auto dip = minimize(cfg);
    cfg.coupling = {-1.0, 0.0};
    cfg.widths = {1.5, 1.5, 1.5};
    const auto control = minimize(cfg);
    const bool ok = dip.converged && dip.gamma_estimate < thr && std::abs(dip.anisotropy - 1.0) > 0.05 &&
                    control.converged && std::abs(control.anisotropy - 1.0) <= 1e-3;
    return Outcome{ok, fmt::format("dipolar: converged={} gamma={:.8g} anisotropy={:.6f}; control: converged={} "
                                   "anisotropy={:.8f}",
                                   dip.converged, dip.gamma_estimate, dip.anisotropy, control.converged,
                                   control.anisotropy)};
  });

  report(10, "byte-identical reruns of criteria 6 and 8", [&] {
    const std::string it2 = iteration_csv(minimize(contact_unit_mass()).history);
    const std::string lm2 = large_mass_run().csv;
    const std::string sw2 = gamma_csv(sweep_gamma(sweep_masses, contact_sweep_base()));
    const bool ok = !iterations_csv.empty() && !large_mass_csv.empty() && !sweep_csv.empty() &&
                    it2 == iterations_csv && lm2 == large_mass_csv && sw2 == sweep_csv;
    return Outcome{ok, fmt::format("iterations {}, large-mass {}, gamma {}", it2 == iterations_csv ? "same" : "DIFFER",
                                   lm2 == large_mass_csv ? "same" : "DIFFER", sw2 == sweep_csv ? "same" : "DIFFER")};
  });

  fmt::print("{} of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
