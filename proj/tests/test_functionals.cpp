#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <dbec/dbec.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace dbec;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double pi = std::numbers::pi;

// Dipolar term of the mass-c Gaussian with widths (s, s, z), straight from
// the Fourier side: rho^(xi) = c exp(-(s^2 xi_perp^2 + z^2 xi_3^2) / 4), the
// radial integral done in closed form and the polar one by quadrature.
double dipolar_oracle(double s, double z, double c) {
  auto f = [&](double mu) {
    return (4 * pi / 3) * (3 * mu * mu - 1) * std::pow(s * s * (1 - mu * mu) + z * z * mu * mu, -1.5);
  };
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 15, 1e-14);
  return c * c * std::pow(2 * pi, -3) * 2 * pi * std::sqrt(pi / 2) * I;
}

}  // namespace

TEST_CASE("regime classification", "[functionals]") {
  CHECK(classify({-1, 0}).tag == Regime::Unstable);
  CHECK(classify({0, 0}).tag == Regime::Boundary);
  CHECK(classify({1, 0}).tag == Regime::Stable);
  const auto s = classify({10, 1});
  CHECK(s.tag == Regime::Stable);
  CHECK_THAT(s.d_plus, WithinRel(10 - 4 * pi / 3, 1e-15));
  CHECK_THAT(s.d_minus, WithinRel(10 + 8 * pi / 3, 1e-15));
  // lambda2 > 0 is decided by d+, lambda2 < 0 by d-.
  CHECK(classify({0, 1}).tag == Regime::Unstable);
  CHECK(classify({4 * pi / 3, 1}).tag == Regime::Boundary);
  CHECK(classify({5, 1}).tag == Regime::Stable);
  CHECK(classify({0, -1}).tag == Regime::Unstable);
  CHECK(classify({9, -1}).tag == Regime::Stable);
  CHECK_THROWS_AS(classify({std::nan(""), 0}), DomainError);
  CHECK(to_string(Regime::Unstable) == "unstable");
}

TEST_CASE("dipolar multiplier values", "[functionals]") {
  CHECK(DipolarMultiplier::evaluate(0, 0, 1) == DipolarMultiplier::upper_bound);
  CHECK(DipolarMultiplier::evaluate(1, 0, 0) == DipolarMultiplier::lower_bound);
  CHECK_THAT(DipolarMultiplier::evaluate(1, 1, 1), WithinAbs(0.0, 1e-15));
  const DipolarMultiplier K(Grid::cube(16, 2.0));
  CHECK(K[0] == 0.0);
  for (double v : K.values()) {
    CHECK(v >= DipolarMultiplier::lower_bound);
    CHECK(v <= DipolarMultiplier::upper_bound);
  }
}

TEST_CASE("Gaussian moments match closed forms", "[functionals]") {
  // sigma = 1.2, c = 3: A = 3c / (2 s^2), ||u||_4^4 = c^2 / (2 pi s^2)^{3/2},
  // ||u||_6^6 = c^3 / (3^{3/2} (pi s^2)^3).
  const double s = 1.2, c = 3.0;
  const Field u = anisotropic_gaussian({{s, s, s}, c}, Grid::cube(64, 8.0));
  const auto r = evaluate(u, {-1.0, 0.0});
  CHECK_THAT(r.mass, WithinRel(c, 1e-14));
  CHECK_THAT(r.A, WithinRel(1.5 * c / (s * s), 1e-9));
  CHECK_THAT(r.quartic, WithinRel(c * c / std::pow(2 * pi * s * s, 1.5), 1e-9));
  CHECK_THAT(r.C, WithinRel(c * c * c / (std::pow(3.0, 1.5) * std::pow(pi * s * s, 3)), 1e-9));
  CHECK_THAT(r.B, WithinRel(-r.quartic, 1e-15));
  CHECK_THAT(r.E, WithinRel(0.5 * r.A + 0.25 * r.B - r.C / 6, 1e-15));
  CHECK_THAT(r.Q, WithinRel(r.A + 0.75 * r.B - r.C, 1e-15));
}

TEST_CASE("dipolar term of anisotropic Gaussians against quadrature", "[functionals]") {
  // The lattice sum converges to the integral as the box grows (K^ is
  // discontinuous at the origin); both sign and value are checked.
  const Grid g = Grid::cube(64, 16.0);
  for (double z : {2.0, 3.0}) {
    const auto r = evaluate(anisotropic_gaussian({{1.0, 1.0, z}, 1.0}, g), {0.0, 1.0});
    const double o = dipolar_oracle(1.0, z, 1.0);
    CHECK(o < 0.0);
    CHECK_THAT(r.dipolar, WithinRel(o, 2e-4));
  }
  const Grid fine = Grid::cube(96, 12.0);
  const auto r = evaluate(anisotropic_gaussian({{1.0, 1.0, 0.5}, 1.0}, fine), {0.0, 1.0});
  const double o = dipolar_oracle(1.0, 0.5, 1.0);
  CHECK(o > 0.0);
  CHECK_THAT(r.dipolar, WithinRel(o, 5e-5));
}

TEST_CASE("dipolar term vanishes on radial states", "[functionals]") {
  std::mt19937_64 rng(3);
  const Grid g = Grid::cube(32, 6.0);
  for (int t = 0; t < 10; ++t) {
    const auto r = evaluate(verify::random_radial(g, rng), {0.0, 1.0});
    CHECK(std::abs(r.dipolar) <= 1e-9 * r.quartic);
  }
}

TEST_CASE("gradient is the derivative of E", "[functionals]") {
  std::mt19937_64 rng(11);
  const Grid g = Grid::cube(32, 6.0);
  const EnergyModel model(g, {-0.5, 0.7});
  for (int t = 0; t < 5; ++t) {
    const Field u = verify::random_blobs(g, rng, 2, true);
    const Field v = verify::random_blobs(g, rng, 2, true);
    const Field G = model.gradient(u);
    const double h = 1e-4;
    const double fd = (model.evaluate(u + h * v).E - model.evaluate(u - h * v).E) / (2 * h);
    CHECK(std::abs(fd - inner(G, v)) <= 1e-7 * std::sqrt(inner(G, G) * inner(v, v)));
  }
}

TEST_CASE("gradient of a Gaussian in closed form", "[functionals]") {
  // G = -Lap u + lambda1 |u|^2 u + lambda2 (K * |u|^2) u - |u|^4 u; for the
  // unit Gaussian -Lap u = (3 - r^2) u.
  const double s = 1.0;
  const Grid g = Grid::cube(64, 8.0);
  auto gauss = [&](double x, double y, double z) { return std::exp(-(x * x + y * y + z * z) / (2 * s * s)); };
  const Field u = Field::sample(g, gauss);
  const Field exact = Field::sample(g, [&](double x, double y, double z) {
    const double r2 = x * x + y * y + z * z;
    const double v = gauss(x, y, z);
    return -(r2 - 3.0) * v - v * v * v - std::pow(v, 5);
  });
  const Field G = EnergyModel(g, {-1.0, 0.0}).gradient(u);
  double worst = 0.0;
  for (std::size_t i = 0; i < G.size(); ++i) worst = std::max(worst, std::abs(G[i] - exact[i]));
  CHECK(worst <= 1e-9);
}

TEST_CASE("Rayleigh beta minimizes the residual over beta", "[functionals]") {
  std::mt19937_64 rng(19);
  const Grid g = Grid::cube(32, 6.0);
  const EnergyModel model(g, {-1.0, 0.3});
  const Field u = verify::random_blobs(g, rng, 3);
  const double b = model.rayleigh_beta(u);
  const double r0 = model.residual(u, b);
  for (double d : {-1e-2, -1e-4, 1e-4, 1e-2}) CHECK(model.residual(u, b + d) > r0);
}

TEST_CASE("residual of a Gaussian with only the Laplacian", "[functionals]") {
  // cp = (0, 0), beta = 0 leaves ||Lap u - |u|^4 u|| / ||u||.
  const double s = 1.0;
  const Grid g = Grid::cube(64, 8.0);
  const Field u = anisotropic_gaussian({{s, s, s}, 1e-6}, g);
  // At mass 1e-6 the quintic term is 1e-12 of the Laplacian, and
  // ||Lap g||^2 / ||g||^2 = 15 / (4 s^4) for g = exp(-r^2 / (2 s^2)).
  CHECK_THAT(residual(u, 0.0, {0.0, 0.0}), WithinRel(std::sqrt(15.0 / 4.0), 1e-8));
}

TEST_CASE("model rejects fields from another grid and non-finite values", "[functionals]") {
  const EnergyModel model(Grid::cube(16, 2.0), {-1.0, 0.0});
  CHECK_THROWS_AS(model.evaluate(Field(Grid::cube(16, 3.0))), StructuralError);
  Field bad(Grid::cube(16, 2.0));
  bad[5] = complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(model.evaluate(bad), Error);
}
