#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "fibering.hpp"
#include "functionals.hpp"
#include "grid.hpp"

namespace dbec {

struct BubbleParams {
  double epsilon = 0.1;
  double mass = 1.0;
  double r_inner = 1.0;
  double r_outer = 2.0;

  void validate() const {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw DomainError("bubble: need 0 < epsilon <= 1");
    if (!(mass > 0.0)) throw DomainError("bubble: mass must be positive");
    if (!(r_inner > 0.0) || !(r_inner < r_outer)) throw DomainError("bubble: need 0 < r_inner < r_outer");
  }
};

struct GaussianParams {
  std::array<double, 3> widths{1.0, 1.0, 1.0};
  double mass = 1.0;
};

/// Radial C^1 cut-off: 1 on [0, r_inner], 0 beyond r_outer, cubic smoothstep between.
inline double bubble_cutoff(const BubbleParams& p, double r) {
  if (r <= p.r_inner) return 1.0;
  if (r >= p.r_outer) return 0.0;
  const double s = (r - p.r_inner) / (p.r_outer - p.r_inner);
  return 1.0 - s * s * (3.0 - 2.0 * s);
}

inline double bubble_cutoff_derivative(const BubbleParams& p, double r) {
  if (r <= p.r_inner || r >= p.r_outer) return 0.0;
  const double w = p.r_outer - p.r_inner;
  const double s = (r - p.r_inner) / w;
  return -6.0 * s * (1.0 - s) / w;
}

/// Unnormalized cut-off profile phi(r) (eps / (eps^2 + r^2))^{1/2}.
inline double bubble_profile(const BubbleParams& p, double r) {
  const double e = p.epsilon;
  return bubble_cutoff(p, r) * std::sqrt(e / (e * e + r * r));
}

inline double bubble_profile_derivative(const BubbleParams& p, double r) {
  const double e = p.epsilon;
  const double q = e * e + r * r;
  const double w = std::sqrt(e / q);
  return bubble_cutoff_derivative(p, r) * w - bubble_cutoff(p, r) * r * std::sqrt(e) / (q * std::sqrt(q));
}

/// Cut-off bubble sampled on the grid and scaled to mass p.mass. Needs spacing
/// <= epsilon / 4 and the cut-off ball inside the box.
inline Field aubin_talenti_bubble(const BubbleParams& p, const Grid& grid) {
  p.validate();
  for (int a = 0; a < 3; ++a) {
    if (grid.spacing(a) > p.epsilon / 4.0) {
      throw ResolutionError(fmt::format("bubble: spacing {:.4g} does not resolve epsilon = {:.4g}",
                                        grid.spacing(a), p.epsilon));
    }
    if (grid.half_length(a) < p.r_outer) {
      throw ResolutionError("bubble: box does not contain the cut-off support");
    }
  }
  Field u = Field::sample(grid, [&](double x, double y, double z) {
    return bubble_profile(p, std::sqrt(x * x + y * y + z * z));
  });
  u *= std::sqrt(p.mass / mass(u));
  return u;
}

/// Continuum moments of a radial profile, normalized to a target mass.
struct RadialMoments {
  double mass = 0.0;
  double A = 0.0;
  double quartic = 0.0;
  double C = 0.0;

  /// Radial states carry no dipolar energy.
  FunctionalReport report(const CouplingPair& cp) const {
    return FunctionalReport::from_parts(mass, A, quartic, 0.0, C, cp);
  }
};

namespace detail {

template <typename F>
double shell_integral(F&& f, const std::vector<double>& breaks) {
  using boost::math::quadrature::gauss_kronrod;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double err = 0.0;
    total += gauss_kronrod<double, 61>::integrate(
        [&](double r) { return 4.0 * std::numbers::pi * r * r * f(r); }, breaks[i], breaks[i + 1],
        20, 1e-14, &err);
  }
  return total;
}

}  // namespace detail

/// Moments of the normalized bubble v_eps by radial quadrature. Exact up to
/// quadrature error for any epsilon, unlike the grid version.
inline RadialMoments bubble_moments(const BubbleParams& p) {
  p.validate();
  const double e = p.epsilon;
  std::vector<double> breaks{0.0};
  for (double r : {e, 10.0 * e}) {
    if (r < p.r_inner) breaks.push_back(r);
  }
  breaks.push_back(p.r_inner);
  breaks.push_back(p.r_outer);

  auto u = [&](double r) { return bubble_profile(p, r); };
  auto du = [&](double r) { return bubble_profile_derivative(p, r); };
  const double m = detail::shell_integral([&](double r) { return std::pow(u(r), 2); }, breaks);
  const double k = p.mass / m;
  RadialMoments out;
  out.mass = p.mass;
  out.A = k * detail::shell_integral([&](double r) { return std::pow(du(r), 2); }, breaks);
  out.quartic = k * k * detail::shell_integral([&](double r) { return std::pow(u(r), 4); }, breaks);
  out.C = k * k * k * detail::shell_integral([&](double r) { return std::pow(u(r), 6); }, breaks);
  return out;
}

struct ProjectedEnergy {
  double tstar = 1.0;
  double energy = 0.0;
};

inline ProjectedEnergy project_fiber(const FiberCoefficients& fc) {
  const double t = find_tstar(fc);
  return {t, fc.energy(t)};
}

/// E(v_eps^{t*}) from the radial moments.
inline ProjectedEnergy projected_bubble_energy(const BubbleParams& p, const CouplingPair& cp) {
  return project_fiber(FiberCoefficients::of(bubble_moments(p).report(cp)));
}

/// Fits E(eps) - threshold against eps^{1/2}.
struct ThresholdFit {
  /// Least-squares K1, K2 of d = K1 eps^{1/2} + K2 eps.
  double k1 = 0.0;
  double k2 = 0.0;
  /// Smallest K with d <= K eps^{1/2} at every sample.
  double envelope = 0.0;
};

inline ThresholdFit fit_threshold_excess(const std::vector<double>& eps,
                                         const std::vector<double>& excess) {
  if (eps.size() != excess.size() || eps.size() < 2) {
    throw DomainError("fit_threshold_excess: need at least two paired samples");
  }
  // Normal equations of the two-column design [sqrt(eps), eps].
  double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
  ThresholdFit f;
  f.envelope = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double x1 = std::sqrt(eps[i]);
    const double x2 = eps[i];
    s11 += x1 * x1;
    s12 += x1 * x2;
    s22 += x2 * x2;
    b1 += x1 * excess[i];
    b2 += x2 * excess[i];
    f.envelope = std::max(f.envelope, excess[i] / x1);
  }
  const double det = s11 * s22 - s12 * s12;
  if (!(std::abs(det) > 0.0)) throw NumericalError("fit_threshold_excess: singular design");
  f.k1 = (b1 * s22 - b2 * s12) / det;
  f.k2 = (s11 * b2 - s12 * b1) / det;
  return f;
}

/// Product Gaussian exp(-sum x_a^2 / (2 sigma_a^2)) scaled to the requested mass.
/// Each width needs at least two samples per sigma and five sigmas of box.
inline Field anisotropic_gaussian(const GaussianParams& p, const Grid& grid) {
  if (!(p.mass > 0.0)) throw DomainError("gaussian: mass must be positive");
  for (int a = 0; a < 3; ++a) {
    const double s = p.widths[a];
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("gaussian: widths must be positive");
    if (grid.spacing(a) > s / 2.0 || grid.half_length(a) < 5.0 * s) {
      throw ResolutionError(fmt::format("gaussian: width {:.4g} on axis {} not resolved by the grid",
                                        s, a));
    }
  }
  const auto& w = p.widths;
  Field u = Field::sample(grid, [&](double x, double y, double z) {
    return std::exp(-0.5 * (x * x / (w[0] * w[0]) + y * y / (w[1] * w[1]) + z * z / (w[2] * w[2])));
  });
  u *= std::sqrt(p.mass / mass(u));
  return u;
}

/// ||u||_2 ||grad u||_2^3 / (-B(u)); invariant under u -> q u(s x).
inline double gn_quotient(const FunctionalReport& r) {
  if (!(r.B < 0.0)) throw DomainError("gn_quotient: needs B(u) < 0");
  return std::sqrt(r.mass) * std::pow(r.A, 1.5) / (-r.B);
}

struct Rescale {
  double q = 1.0;
  double s = 1.0;
};

/// (q, s) taking (mass, B) = (m0, B0) to (n^2, -1): mass ~ q^2 s^-3, B ~ q^4 s^-3.
inline Rescale large_mass_scales(double m0, double b0, int n) {
  if (n < 1) throw DomainError("large_mass_scales: n must be positive");
  if (!(b0 < 0.0)) throw DomainError("large_mass_scales: seed needs B < 0");
  if (!(m0 > 0.0)) throw DomainError("large_mass_scales: seed has zero mass");
  const double target = static_cast<double>(n) * n;
  const double q2 = m0 / (-b0 * target);
  const double s3 = q2 * m0 / target;
  return {std::sqrt(q2), std::cbrt(s3)};
}

/// q u(s x), represented exactly on the grid whose half-lengths are divided by s.
inline Field rescale(const Field& u, const Rescale& r) {
  if (!(r.q > 0.0) || !(r.s > 0.0)) throw DomainError("rescale: q and s must be positive");
  const Grid& g = u.grid();
  Grid scaled(g.points(), {g.half_length(0) / r.s, g.half_length(1) / r.s, g.half_length(2) / r.s});
  std::vector<complex> v(u.values().begin(), u.values().end());
  for (auto& x : v) x *= r.q;
  return Field(std::move(scaled), std::move(v));
}

/// Seed with B < 0: a Gaussian elongated along x3 when lambda2 > 0, flattened
/// when lambda2 < 0, radial when lambda2 = 0. Among the aspect ratios that fit
/// the grid and give B < 0, the one with the smallest GN quotient wins.
inline Field large_mass_seed(const CouplingPair& cp, const Grid& grid) {
  const EnergyModel model(grid, cp);
  const double box = std::min({grid.half_length(0), grid.half_length(1), grid.half_length(2)});
  std::vector<double> aspects{1.0};
  if (cp.lambda2 != 0.0) aspects = {1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0};
  std::optional<Field> best;
  double best_q = std::numeric_limits<double>::infinity();
  for (double a : aspects) {
    for (double base : {box / 7.0, box / 10.0}) {
      GaussianParams gp;
      gp.widths = cp.lambda2 >= 0.0 ? std::array<double, 3>{base, base, base * a}
                                    : std::array<double, 3>{base * a, base * a, base};
      // Keep the long axis inside its own half-length.
      for (int ax = 0; ax < 3; ++ax) gp.widths[ax] = std::min(gp.widths[ax], grid.half_length(ax) / 7.0);
      Field u(grid);
      try {
        u = anisotropic_gaussian(gp, grid);
      } catch (const ResolutionError&) {
        continue;
      }
      const auto r = model.evaluate(u);
      if (!(r.B < 0.0)) continue;
      const double q = gn_quotient(r);
      if (q < best_q) {
        best_q = q;
        best = std::move(u);
      }
    }
  }
  if (!best) throw DomainError("large_mass_seed: no resolved Gaussian seed with B < 0");
  return std::move(*best);
}

/// u_n = q seed(s x) with mass n^2 and B = -1.
inline Field large_mass_sequence(int n, const Field& seed, const CouplingPair& cp) {
  const auto r = evaluate(seed, cp);
  if (!(r.B < 0.0)) throw DomainError("large_mass_sequence: seed has B >= 0");
  return rescale(seed, large_mass_scales(r.mass, r.B, n));
}

inline Field large_mass_sequence(int n, const CouplingPair& cp, const Grid& grid) {
  if (classify(cp).tag != Regime::Unstable) {
    throw RegimeError("large_mass_sequence: coupling is not in the unstable regime");
  }
  return large_mass_sequence(n, large_mass_seed(cp, grid), cp);
}

}  // namespace dbec
