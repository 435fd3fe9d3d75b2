#include <catch_amalgamated.hpp>

#include <dbec/dbec.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace dbec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("bubble cut-off is C^1", "[trialstates]") {
  const BubbleParams p{0.1, 1.0, 1.0, 2.0};
  CHECK(bubble_cutoff(p, 0.5) == 1.0);
  CHECK(bubble_cutoff(p, 2.5) == 0.0);
  CHECK_THAT(bubble_cutoff(p, 1.5), WithinAbs(0.5, 1e-15));
  for (double r : {1.0, 2.0}) {
    CHECK_THAT(bubble_cutoff(p, r - 1e-9), WithinAbs(bubble_cutoff(p, r + 1e-9), 1e-8));
    CHECK_THAT(bubble_cutoff_derivative(p, r - 1e-9), WithinAbs(0.0, 1e-8));
    CHECK_THAT(bubble_cutoff_derivative(p, r + 1e-9), WithinAbs(0.0, 1e-8));
  }
  for (double r : {0.3, 1.2, 1.5, 1.9}) {
    const double h = 1e-6;
    CHECK_THAT(bubble_profile_derivative(p, r),
               WithinAbs((bubble_profile(p, r + h) - bubble_profile(p, r - h)) / (2 * h), 1e-7));
  }
}

TEST_CASE("bubble fields carry the requested mass", "[trialstates]") {
  const Grid g = Grid::cube(64, 2.0);
  for (double c : {0.1, 1.0, 10.0}) {
    const Field u = aubin_talenti_bubble({0.25, c, 1.0, 2.0}, g);
    CHECK_THAT(mass(u), WithinRel(c, 1e-12));
  }
  CHECK_THROWS_AS(aubin_talenti_bubble({0.05, 1.0, 1.0, 2.0}, g), ResolutionError);
  CHECK_THROWS_AS(aubin_talenti_bubble({0.25, 1.0, 1.0, 2.0}, Grid::cube(64, 1.5)), ResolutionError);
  CHECK_THROWS_AS(aubin_talenti_bubble({0.25, -1.0, 1.0, 2.0}, g), DomainError);
}

TEST_CASE("radial bubble moments agree with the grid", "[trialstates]") {
  // eps = 0.5 is resolved on a 96^3 grid of half-length 2.5 (spacing eps / 10).
  const BubbleParams p{0.5, 1.0, 1.0, 2.0};
  const auto m = bubble_moments(p);
  CHECK_THAT(m.mass, WithinRel(1.0, 1e-12));
  const auto r = evaluate(aubin_talenti_bubble(p, Grid::cube(96, 2.5)), {-1.0, 0.0});
  CHECK_THAT(r.A, WithinRel(m.A, 1e-3));
  CHECK_THAT(r.quartic, WithinRel(m.quartic, 1e-3));
  CHECK_THAT(r.C, WithinRel(m.C, 1e-3));
  const auto rep = m.report({-1.0, 0.0});
  CHECK_THAT(rep.B, WithinRel(-m.quartic, 1e-15));
}

TEST_CASE("projected bubble energies approach the threshold from above", "[trialstates]") {
  const double thr = sobolev_threshold();
  std::vector<double> eps{0.1, 0.05, 0.025}, excess;
  for (double e : eps) {
    const auto pe = projected_bubble_energy({e, 1.0, 1.0, 2.0}, {-1.0, 0.0});
    excess.push_back(pe.energy - thr);
  }
  CHECK(excess[0] > excess[1]);
  CHECK(excess[1] > excess[2]);
  const auto fit = fit_threshold_excess(eps, excess);
  CHECK(std::isfinite(fit.envelope));
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(excess[i] <= fit.envelope * std::sqrt(eps[i]) * (1 + 1e-12));
}

TEST_CASE("threshold fit recovers synthetic coefficients", "[trialstates]") {
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025}, ex;
  for (double e : eps) ex.push_back(1.5 * std::sqrt(e) - 0.4 * e);
  const auto fit = fit_threshold_excess(eps, ex);
  CHECK_THAT(fit.k1, WithinRel(1.5, 1e-10));
  CHECK_THAT(fit.k2, WithinRel(-0.4, 1e-10));
}

TEST_CASE("Gaussian seeds and their dipolar sign", "[trialstates]") {
  // The quadrature oracle in test_functionals fixes the sign: elongated along
  // x3 is negative for lambda2 > 0, flattened along x3 is positive.
  const Grid g = Grid::cube(64, 8.0);
  const CouplingPair cp{0.0, 1.0};
  CHECK(std::abs(evaluate(anisotropic_gaussian({{1, 1, 1}, 1.0}, g), cp).dipolar) <= 1e-12);
  CHECK(evaluate(anisotropic_gaussian({{0.5, 0.5, 1.5}, 1.0}, g), cp).dipolar < 0.0);
  CHECK(evaluate(anisotropic_gaussian({{1.5, 1.5, 0.5}, 1.0}, g), cp).dipolar > 0.0);
  CHECK_THROWS_AS(anisotropic_gaussian({{0.1, 1, 1}, 1.0}, g), ResolutionError);
  CHECK_THROWS_AS(anisotropic_gaussian({{1, 1, 2}, 1.0}, Grid::cube(64, 6.0)), ResolutionError);
}

TEST_CASE("GN quotient is invariant under q u(s x)", "[trialstates]") {
  const Grid g = Grid::cube(48, 6.0);
  const CouplingPair cp{-0.3, 0.5};
  const Field u = anisotropic_gaussian({{0.6, 0.6, 1.1}, 1.7}, g);
  const auto r = evaluate(u, cp);
  REQUIRE(r.B < 0.0);
  const double gn = gn_quotient(r);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> lg(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    const Rescale sc{std::pow(10, lg(rng)), std::pow(10, lg(rng))};
    const auto rs = evaluate(rescale(u, sc), cp);
    CHECK_THAT(gn_quotient(rs), WithinRel(gn, 1e-8));
    // mass ~ q^2 s^-3, B ~ q^4 s^-3, A ~ q^2 s^-1
    CHECK_THAT(rs.mass, WithinRel(r.mass * sc.q * sc.q / std::pow(sc.s, 3), 1e-12));
    CHECK_THAT(rs.B, WithinRel(r.B * std::pow(sc.q, 4) / std::pow(sc.s, 3), 1e-12));
    CHECK_THAT(rs.A, WithinRel(r.A * sc.q * sc.q / sc.s, 1e-12));
  }
}

TEST_CASE("large-mass sequence has mass n^2 and B = -1", "[trialstates]") {
  const Grid g({48, 48, 48}, {8.0, 8.0, 16.0});
  const CouplingPair cp{0.0, 3.0};
  const Field seed = large_mass_seed(cp, g);
  const auto r0 = evaluate(seed, cp);
  CHECK(r0.B < 0.0);
  for (int n : {1, 2, 4, 8}) {
    const auto r = evaluate(large_mass_sequence(n, seed, cp), cp);
    CHECK_THAT(r.mass, WithinRel(double(n) * n, 1e-8));
    CHECK_THAT(r.B, WithinRel(-1.0, 1e-8));
    CHECK_THAT(gn_quotient(r), WithinRel(gn_quotient(r0), 1e-8));
  }
  // A seed already at mass 1 and B = -1 is left alone.
  const Field unit = large_mass_sequence(1, seed, cp);
  const auto id = large_mass_scales(1.0, -1.0, 1);
  CHECK(id.q == 1.0);
  CHECK(id.s == 1.0);
  const Field again = large_mass_sequence(1, unit, cp);
  CHECK(again.grid().half_length(2) == Catch::Approx(unit.grid().half_length(2)).epsilon(1e-14));

  CHECK_NOTHROW(large_mass_sequence(1, cp, g));
  CHECK_THROWS_AS(large_mass_sequence(2, {10.0, 1.0}, g), RegimeError);
  CHECK_THROWS_AS(large_mass_scales(1.0, 0.5, 2), DomainError);
  CHECK_THROWS_AS(large_mass_scales(1.0, -1.0, 0), DomainError);
}

TEST_CASE("projected large-mass energies decay", "[trialstates]") {
  const Grid g({48, 48, 48}, {8.0, 8.0, 16.0});
  const CouplingPair cp{0.0, 3.0};
  const Field seed = large_mass_seed(cp, g);
  double prev_t = 1e300, prev_e = 1e300, first_e = 0.0;
  for (int n : {1, 2, 4, 8}) {
    const auto pe = project_fiber(FiberCoefficients::of(evaluate(large_mass_sequence(n, seed, cp), cp)));
    CHECK(pe.tstar < prev_t);
    CHECK(pe.energy < prev_e);
    if (n == 1) first_e = pe.energy;
    prev_t = pe.tstar;
    prev_e = pe.energy;
  }
  CHECK(prev_e < 0.05 * first_e);
}
