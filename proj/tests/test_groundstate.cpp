#include <catch_amalgamated.hpp>

#include <dbec/dbec.hpp>

#include <cmath>
#include <numbers>

using namespace dbec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// Cheap contact-only run: 32^3, flow only, capped iterations.
SolverConfig small_config() {
  SolverConfig cfg;
  cfg.grid = Grid::cube(32, 4.0);
  cfg.coupling = {-1.0, 0.0};
  cfg.mass = 1.0;
  cfg.widths = {0.5, 0.5, 0.5};
  cfg.max_iterations = 40;
  cfg.polish = false;
  return cfg;
}

}  // namespace

TEST_CASE("Sobolev threshold from two routes", "[groundstate]") {
  // 3 (pi / 2)^{4/3}; hard-coded value frozen from the closed form.
  const double S = 3.0 * std::pow(pi / 2.0, 4.0 / 3.0);
  CHECK_THAT(S, WithinRel(5.477904089531331, 1e-15));
  CHECK_THAT(sobolev_threshold(), WithinRel(std::pow(S, 1.5) / 3.0, 1e-15));
  CHECK_THAT(sobolev_threshold(), WithinRel(4.273664068323042, 1e-14));
  const auto sc = sobolev_constant();
  CHECK_THAT(sc.quadrature, WithinRel(sc.closed_form, 1e-6));
}

TEST_CASE("truncated Sobolev ratio converges in R", "[groundstate]") {
  const double S = 3.0 * std::pow(pi / 2.0, 4.0 / 3.0);
  const double e50 = aubin_talenti_ratio(50.0) - S;
  const double e100 = aubin_talenti_ratio(100.0) - S;
  const double e200 = aubin_talenti_ratio(200.0) - S;
  // Leading error ~ a / R: halves with each doubling of R.
  CHECK(std::abs(e100) < std::abs(e50));
  CHECK(std::abs(e200) < std::abs(e100));
  CHECK_THAT(e50 / e100, WithinRel(2.0, 2e-2));
  CHECK_THAT(e100 / e200, WithinRel(2.0, 1e-2));
  CHECK_THAT(extrapolated_sobolev_ratio(50.0), WithinRel(S, 1e-6));
  // The ratio is dilation invariant.
  CHECK_THAT(aubin_talenti_ratio(1e4 * 0.25, 0.25), WithinRel(aubin_talenti_ratio(1e4, 1.0), 1e-8));
}

TEST_CASE("Pohozaev defects are the stated combinations", "[groundstate]") {
  FunctionalReport r;
  r.mass = 2.0;
  r.A = 3.0;
  r.B = -1.0;
  r.C = 1.0;
  r.Q = r.A + 0.75 * r.B - r.C;
  // beta = 1/8 makes 4 beta c + B vanish exactly.
  const auto d = pohozaev_defects(r, 0.125);
  CHECK_THAT(d.full, WithinRel((3.0 + 3 * 0.125 * 2.0 - 1.5 - 1.0) / 4.0, 1e-15));
  CHECK_THAT(d.beta_relation, WithinAbs(0.0, 1e-16));
  CHECK_THAT(d.virial, WithinRel(r.Q / 4.0, 1e-15));
  CHECK(d.max() == std::max({std::abs(d.full), std::abs(d.beta_relation), std::abs(d.virial)}));
}

TEST_CASE("beta estimates", "[groundstate]") {
  const Grid g = Grid::cube(64, 8.0);
  const double s = 1.0;
  const Field u = anisotropic_gaussian({{s, s, s}, 1.0}, g);
  // B = 0 gives beta = 0.
  CHECK(estimate_beta(u, CouplingPair{0.0, 0.0}).pohozaev == 0.0);
  // cp = (-1, 0), c = 1: beta = ||u||_4^4 / 4 = 1 / (4 (2 pi s^2)^{3/2}).
  const auto b = estimate_beta(u, CouplingPair{-1.0, 0.0});
  CHECK_THAT(b.pohozaev, WithinRel(0.25 / std::pow(2 * pi * s * s, 1.5), 1e-9));
  CHECK_THAT(b.rayleigh, WithinRel(-inner(gradient(u, {-1.0, 0.0}), u), 1e-14));
  CHECK(b.discrepancy() > 0.0);
  CHECK_THROWS_AS(estimate_beta(Field(g), CouplingPair{-1.0, 0.0}), DomainError);
}

TEST_CASE("solver rejects stable and boundary couplings", "[groundstate]") {
  SolverConfig cfg = small_config();
  cfg.coupling = {10.0, 1.0};
  CHECK_THROWS_AS(minimize(cfg), RegimeError);
  cfg.coupling = {0.0, 0.0};
  CHECK_THROWS_AS(minimize(cfg), RegimeError);
  cfg.coupling = {-1.0, 0.0};
  cfg.mass = -1.0;
  CHECK_THROWS_AS(minimize(cfg), DomainError);
}

TEST_CASE("projected flow invariants", "[groundstate]") {
  const SolverConfig cfg = small_config();
  const auto res = minimize(cfg);
  REQUIRE(res.flow_iterations > 5);
  const double cap = std::numeric_limits<double>::infinity();
  double prev = cap;
  for (int k = 0; k <= res.flow_iterations; ++k) {
    const auto& h = res.history[k];
    // Accepted iterates lie on V(c), have mass c, and never raise E.
    CHECK(std::abs(h.mass - cfg.mass) <= 1e-12 * cfg.mass);
    CHECK(h.E >= h.A / 6.0 - 1e-10);
    CHECK(h.E <= prev + cfg.energy_tolerance * std::abs(prev == cap ? h.E : prev));
    prev = h.E;
  }
  const auto& r = res.report;
  CHECK(std::abs(r.mass - cfg.mass) <= 1e-12 * cfg.mass);
  CHECK(r.E >= r.A / 6.0 - 1e-10);
  // Radial start with lambda2 = 0 stays radial.
  CHECK_THAT(res.anisotropy, WithinAbs(1.0, 1e-3));
  CHECK(res.beta > 0.0);
  CHECK(r.B < 0.0);
  CHECK(res.gamma_estimate == r.E);
  CHECK(res.iterations == static_cast<int>(res.history.size()) - 1);
}

TEST_CASE("solver is deterministic", "[groundstate]") {
  SolverConfig cfg = small_config();
  cfg.max_iterations = 10;
  cfg.perturbation = 0.01;
  cfg.seed = 7;
  const auto a = minimize(cfg);
  const auto b = minimize(cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].E == b.history[i].E);
    CHECK(a.history[i].residual == b.history[i].residual);
  }
  cfg.seed = 8;
  CHECK(minimize(cfg).history.back().E != a.history.back().E);
}

TEST_CASE("blow-up cap raises a divergence error", "[groundstate]") {
  SolverConfig cfg = small_config();
  cfg.blowup_cap = 1e-3;
  CHECK_THROWS_AS(minimize(cfg), DivergenceError);
}

TEST_CASE("Newton polish reaches the residual tolerance", "[groundstate]") {
  SolverConfig cfg = small_config();
  cfg.grid = Grid::cube(32, 12.0);
  cfg.mass = 30.0;
  cfg.widths = {1.5, 1.5, 1.5};
  cfg.max_iterations = 200;
  cfg.polish = true;
  const auto res = minimize(cfg);
  CHECK(res.residual <= cfg.residual_tolerance);
  CHECK(res.beta > 0.0);
  CHECK(res.report.B < 0.0);
  CHECK(res.gamma_estimate < sobolev_threshold());
  CHECK(std::abs(res.report.mass - cfg.mass) <= 1e-12 * cfg.mass);
  // With the Rayleigh beta and a vanishing residual, the first two relations
  // are -2Q and -4Q; whatever is left of Q is discretization error.
  CHECK_THAT(res.pohozaev.full, WithinRel(-2.0 * res.pohozaev.virial, 1e-3));
  CHECK_THAT(res.pohozaev.beta_relation, WithinRel(-4.0 * res.pohozaev.virial, 1e-3));
}

TEST_CASE("gamma sweep validates its input", "[groundstate]") {
  const SolverConfig cfg = small_config();
  CHECK_THROWS_AS(sweep_gamma({}, cfg), DomainError);
  CHECK_THROWS_AS(sweep_gamma({1.0, 1.0}, cfg), DomainError);
  CHECK_THROWS_AS(sweep_gamma({2.0, 1.0}, cfg), DomainError);
  CHECK_THROWS_AS(sweep_gamma({-1.0}, cfg), DomainError);
  SolverConfig stable = cfg;
  stable.coupling = {10.0, 1.0};
  CHECK_THROWS_AS(sweep_gamma({1.0}, stable), RegimeError);
}

TEST_CASE("single-row sweep reduces to minimize", "[groundstate]") {
  SolverConfig cfg = small_config();
  cfg.max_iterations = 15;
  const auto curve = sweep_gamma({1.0}, cfg);
  const auto res = minimize(cfg);
  REQUIRE(curve.rows.size() == 1);
  CHECK(curve.rows[0].gamma == res.gamma_estimate);
  CHECK(curve.rows[0].beta == res.beta);
  CHECK(curve.rows[0].converged == res.converged);
  CHECK(curve.threshold == sobolev_threshold());
}
