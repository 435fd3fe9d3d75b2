#pragma once

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fibering.hpp"
#include "functionals.hpp"
#include "groundstate.hpp"
#include "grid.hpp"
#include "trialstates.hpp"

namespace dbec::verify {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

using Suite = std::vector<Check>;

inline bool all_passed(const Suite& s) {
  return std::all_of(s.begin(), s.end(), [](const Check& c) { return c.passed; });
}

inline std::string format_table(const Suite& s) {
  std::size_t width = 5;
  for (const auto& c : s) width = std::max(width, c.name.size());
  std::string out;
  for (const auto& c : s) {
    out += fmt::format("{:<{}}  {}  {}\n", c.name, width, c.passed ? "PASS" : "FAIL", c.detail);
  }
  return out;
}

/// Sum of a few Gaussian blobs with random centres, widths and signs. Smooth
/// and well inside the box.
inline Field random_blobs(const Grid& g, std::mt19937_64& rng, int blobs = 3, bool complex_phase = false) {
  const double box = std::min({g.half_length(0), g.half_length(1), g.half_length(2)});
  std::uniform_real_distribution<double> centre(-box / 4, box / 4), width(box / 8, box / 5),
      amp(0.3, 1.0), phase(0.0, 2.0 * std::numbers::pi);
  struct Blob {
    std::array<double, 3> c, s;
    complex a;
  };
  std::vector<Blob> bs;
  for (int b = 0; b < blobs; ++b) {
    Blob x;
    for (int a = 0; a < 3; ++a) x.c[a] = centre(rng);
    for (int a = 0; a < 3; ++a) x.s[a] = width(rng);
    x.a = complex_phase ? std::polar(amp(rng), phase(rng)) : complex(amp(rng));
    bs.push_back(x);
  }
  return Field::sample(g, [&](double x, double y, double z) {
    complex v = 0.0;
    for (const auto& b : bs) {
      const double d = std::pow((x - b.c[0]) / b.s[0], 2) + std::pow((y - b.c[1]) / b.s[1], 2) +
                       std::pow((z - b.c[2]) / b.s[2], 2);
      v += b.a * std::exp(-0.5 * d);
    }
    return v;
  });
}

/// Radial profile sum_k a_k exp(-r^2 / (2 s_k^2)) with random a_k > 0, s_k.
inline Field random_radial(const Grid& g, std::mt19937_64& rng) {
  const double box = std::min({g.half_length(0), g.half_length(1), g.half_length(2)});
  std::uniform_real_distribution<double> width(box / 10, box / 5), amp(0.2, 1.0);
  std::array<double, 3> a{amp(rng), amp(rng), amp(rng)}, s{width(rng), width(rng), width(rng)};
  return Field::sample(g, [&](double x, double y, double z) {
    const double r2 = x * x + y * y + z * z;
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += a[k] * std::exp(-0.5 * r2 / (s[k] * s[k]));
    return v;
  });
}

inline Check make_check(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok, std::move(detail)};
}

inline Suite fourier_suite(int n = 64, double half_length = 8.0) {
  Suite s;
  const Grid g = Grid::cube(n, half_length);
  std::mt19937_64 rng(11);
  const Field u = random_blobs(g, rng, 4, true);

  const Field back = inverse_transform(forward_transform(u));
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    err = std::max(err, std::abs(back[i] - u[i]));
    ref = std::max(ref, std::abs(u[i]));
  }
  s.push_back(make_check("round trip", err <= 1e-12 * ref, fmt::format("max rel err {:.2e}", err / ref)));

  const double m = mass(u);
  const double ms = spectral_mass(forward_transform(u));
  const double prel = std::abs(m - ms) / m;
  s.push_back(make_check("plancherel", prel <= 1e-12, fmt::format("rel err {:.2e}", prel)));

  // exp(-|x|^2 / 2) has transform (2 pi)^{3/2} exp(-|xi|^2 / 2).
  const Field gauss = Field::sample(g, [](double x, double y, double z) {
    return std::exp(-0.5 * (x * x + y * y + z * z));
  });
  const auto gh = forward_transform(gauss);
  double gerr = 0.0;
  const double peak = std::pow(2.0 * std::numbers::pi, 1.5);
  detail::for_each_frequency(g, [&](std::size_t i, double a, double b, double c) {
    const double exact = peak * std::exp(-0.5 * (a * a + b * b + c * c));
    gerr = std::max(gerr, std::abs(gh[i] - exact));
  });
  s.push_back(make_check("gaussian transform", gerr <= 1e-8 * peak,
                         fmt::format("max rel err {:.2e}", gerr / peak)));

  const Field lap = laplacian(gauss);
  double lerr = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double x = g.coordinate(0, i), y = g.coordinate(1, j), z = g.coordinate(2, k);
        const double r2 = x * x + y * y + z * z;
        lerr = std::max(lerr, std::abs(lap.at(i, j, k) - (r2 - 3.0) * std::exp(-0.5 * r2)));
      }
  s.push_back(make_check("gaussian laplacian", lerr <= 1e-8 * 3.0, fmt::format("max err {:.2e}", lerr)));
  return s;
}

inline Suite functionals_suite() {
  Suite s;
  const Grid g = Grid::cube(32, 8.0);
  const DipolarMultiplier K(g);
  double lo = 1e300, hi = -1e300;
  for (double v : K.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool range_ok = lo >= DipolarMultiplier::lower_bound && hi <= DipolarMultiplier::upper_bound &&
                        K[0] == 0.0;
  s.push_back(make_check("multiplier range", range_ok, fmt::format("[{:.17g}, {:.17g}]", lo, hi)));

  std::mt19937_64 rng(23);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto r = evaluate(random_radial(g, rng), {0.0, 1.0});
    worst = std::max(worst, std::abs(r.dipolar) / r.quartic);
  }
  s.push_back(make_check("radial dipolar vanishes", worst <= 1e-9, fmt::format("max ratio {:.2e}", worst)));

  // Closed-form Gaussian moments at mass c and width sigma.
  const double sigma = 1.3, c = 2.0;
  const auto gr = evaluate(anisotropic_gaussian({{sigma, sigma, sigma}, c}, g), {1.0, 0.0});
  const double pi = std::numbers::pi;
  const double A = 1.5 * c / (sigma * sigma);
  const double q = c * c / std::pow(2.0 * pi * sigma * sigma, 1.5);
  const double C = c * c * c / (std::pow(3.0, 1.5) * std::pow(pi * sigma * sigma, 3));
  const double merr = std::max({std::abs(gr.A - A) / A, std::abs(gr.quartic - q) / q, std::abs(gr.C - C) / C});
  s.push_back(make_check("gaussian moments", merr <= 1e-8, fmt::format("max rel err {:.2e}", merr)));

  const CouplingPair cp{-0.7, 0.4};
  const EnergyModel model(g, cp);
  // Central differences. The error is scaled by |G||v| so a direction nearly
  // orthogonal to G does not inflate it; the observed order comes from the
  // pair h = 1e-3, 5e-4, where truncation dominates rounding.
  double gworst = 0.0, order_lo = 1e300, order_hi = -1e300;
  for (int t = 0; t < 20; ++t) {
    const Field u = random_blobs(g, rng, 3);
    const Field v = random_blobs(g, rng, 2);
    const Field G = model.gradient(u);
    const double an = inner(G, v);
    const double scale = std::sqrt(inner(G, G) * inner(v, v));
    auto err = [&](double h) {
      const double fd = (model.evaluate(u + h * v).E - model.evaluate(u - h * v).E) / (2 * h);
      return std::abs(fd - an) / scale;
    };
    gworst = std::max(gworst, err(1e-4));
    const double order = std::log2(err(1e-3) / err(5e-4));
    order_lo = std::min(order_lo, order);
    order_hi = std::max(order_hi, order);
  }
  s.push_back(make_check("gradient vs finite differences", gworst <= 1e-6,
                         fmt::format("max rel err {:.2e} at h = 1e-4", gworst)));
  s.push_back(make_check("finite differences converge at second order", order_lo >= 1.8 && order_hi <= 2.2,
                         fmt::format("observed order in [{:.3f}, {:.3f}]", order_lo, order_hi)));
  return s;
}

inline Suite fibering_suite(int triples = 1000) {
  Suite s;
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> logu(-3.0, 3.0), sign(-1.0, 1.0);
  int bad_unique = 0, bad_root = 0, bad_sign = 0, bad_max = 0, bad_equiv = 0, bad_closed = 0;
  double worst_closed = 0.0;
  for (int t = 0; t < triples; ++t) {
    FiberCoefficients fc{std::pow(10.0, logu(rng)), sign(rng) * std::pow(10.0, logu(rng)),
                         std::pow(10.0, logu(rng))};
    const double ts = find_tstar(fc);
    int changes = 0;
    // Log scan over six decades centred on t*; y > 0 near 0 and y < 0 at
    // infinity, so one crossing here means exactly one on (0, inf).
    double prev = fc.y(1e-3 * ts);
    for (int k = 1; k <= 600; ++k) {
      const double y = fc.y(ts * std::pow(10.0, -3.0 + 6.0 * k / 600.0));
      if ((y > 0) != (prev > 0)) ++changes;
      prev = y;
    }
    if (changes != 1) ++bad_unique;
    if (std::abs(fc.y(ts)) > 1e-12 * std::max(fc.A, fc.C * std::pow(ts, 5))) ++bad_root;
    if (!(fc.virial(0.9 * ts) > 0.0 && fc.virial(1.1 * ts) < 0.0)) ++bad_sign;
    for (double f : {0.5, 0.8, 0.99, 1.01, 1.25, 2.0}) {
      if (!(fc.energy(f * ts) < fc.energy(ts))) {
        ++bad_max;
        break;
      }
    }
    const double q1 = fc.A + 0.75 * fc.B - fc.C;
    if ((ts < 1.0) != (q1 < 0.0) && std::abs(ts - 1.0) > 1e-12) ++bad_equiv;

    FiberCoefficients z{fc.A, 0.0, fc.C};
    const double closed = std::pow(fc.A / fc.C, 0.25);
    const double rel = std::abs(find_tstar(z) - closed) / closed;
    worst_closed = std::max(worst_closed, rel);
    if (rel > 1e-12) ++bad_closed;
  }
  s.push_back(make_check("unique sign change of y", bad_unique == 0, fmt::format("{} failures", bad_unique)));
  s.push_back(make_check("root accuracy", bad_root == 0, fmt::format("{} failures", bad_root)));
  s.push_back(make_check("Q sign pattern around t*", bad_sign == 0, fmt::format("{} failures", bad_sign)));
  s.push_back(make_check("energy maximal at t*", bad_max == 0, fmt::format("{} failures", bad_max)));
  s.push_back(make_check("t* < 1 iff Q < 0", bad_equiv == 0, fmt::format("{} failures", bad_equiv)));
  s.push_back(make_check("closed form for B = 0", bad_closed == 0,
                         fmt::format("max rel err {:.2e}", worst_closed)));
  return s;
}

/// Random pair in the requested regime. Unstable pairs keep a margin from the
/// boundary: lambda1 = kappa * threshold with kappa in [-1, 0.4].
inline CouplingPair random_pair(std::mt19937_64& rng, bool stable) {
  std::uniform_real_distribution<double> mag(0.1, 3.0), kappa_u(-1.0, 0.4), kappa_s(1.05, 4.0),
      coin(0.0, 1.0);
  const double l2 = mag(rng) * (coin(rng) < 0.5 ? 1.0 : -1.0);
  const double edge = l2 > 0 ? 4.0 * std::numbers::pi / 3.0 * l2 : 8.0 * std::numbers::pi / 3.0 * -l2;
  return {(stable ? kappa_s(rng) : kappa_u(rng)) * edge, l2};
}

/// First Gaussian with B < 0, elongated along x3 for lambda2 > 0 and flattened
/// for lambda2 < 0, each on a box fitted to its widths.
inline std::optional<Field> negative_trial_state(const CouplingPair& cp, int points = 32) {
  for (double a : {1.0, 1.5, 2.0, 3.0, 4.0, 6.0}) {
    std::array<double, 3> w = cp.lambda2 >= 0 ? std::array<double, 3>{1.0, 1.0, a}
                                              : std::array<double, 3>{a, a, 1.0};
    Grid g({points, points, points}, {6.0 * w[0], 6.0 * w[1], 6.0 * w[2]});
    Field u = anisotropic_gaussian({w, 1.0}, g);
    if (evaluate(u, cp).B < 0.0) return u;
    if (cp.lambda2 == 0.0) break;
  }
  return std::nullopt;
}

inline Suite regimes_suite(int pairs = 20, int fields_per_pair = 50) {
  Suite s;
  std::mt19937_64 rng(53);
  const Grid g = Grid::cube(16, 6.0);
  int stable_bad = 0, total = 0;
  for (int p = 0; p < pairs; ++p) {
    const auto cp = random_pair(rng, true);
    const EnergyModel model(g, cp);
    if (classify(cp).tag != Regime::Stable) ++stable_bad;
    for (int f = 0; f < fields_per_pair; ++f, ++total) {
      if (!(model.evaluate(random_blobs(g, rng, 3, f % 2 == 1)).B > 0.0)) ++stable_bad;
    }
  }
  s.push_back(make_check("stable pairs give B > 0", stable_bad == 0,
                         fmt::format("{} fields, {} failures", total, stable_bad)));
  int unstable_bad = 0;
  for (int p = 0; p < pairs; ++p) {
    const auto cp = random_pair(rng, false);
    if (classify(cp).tag != Regime::Unstable || !negative_trial_state(cp)) ++unstable_bad;
  }
  s.push_back(make_check("unstable pairs admit B < 0", unstable_bad == 0,
                         fmt::format("{} pairs, {} failures", pairs, unstable_bad)));
  return s;
}

inline Suite bubbles_suite() {
  Suite s;
  const auto S = sobolev_constant();
  const double thr = S.threshold();
  s.push_back(make_check("sobolev constant, two routes",
                         std::abs(S.quadrature - S.closed_form) <= 1e-6 * S.closed_form,
                         fmt::format("{:.12g} vs {:.12g}", S.quadrature, S.closed_form)));
  double inv = 0.0;
  for (double e : {0.5, 2.0}) {
    inv = std::max(inv, std::abs(aubin_talenti_ratio(100.0 * e, e) - aubin_talenti_ratio(100.0, 1.0)) /
                            aubin_talenti_ratio(100.0, 1.0));
  }
  s.push_back(make_check("ratio is scale invariant", inv <= 1e-8, fmt::format("max rel diff {:.2e}", inv)));

  const std::vector<double> eps{0.1, 0.05, 0.025};
  std::vector<double> excess;
  for (double e : eps) {
    BubbleParams p;
    p.epsilon = e;
    excess.push_back(projected_bubble_energy(p, {-1.0, 0.0}).energy - thr);
  }
  const auto fit = fit_threshold_excess(eps, excess);
  bool bound = std::isfinite(fit.envelope);
  for (std::size_t i = 0; i < eps.size(); ++i) bound = bound && excess[i] <= fit.envelope * std::sqrt(eps[i]) * (1 + 1e-12);
  s.push_back(make_check("bubble energies below threshold + K eps^1/2", bound,
                         fmt::format("K = {:.6g}", fit.envelope)));
  const bool mono = std::abs(excess[1]) < std::abs(excess[0]) && std::abs(excess[2]) < std::abs(excess[1]);
  s.push_back(make_check("approach to the threshold is monotone", mono,
                         fmt::format("E - thr = {:.6g}, {:.6g}, {:.6g}", excess[0], excess[1], excess[2])));
  return s;
}

/// Stationarity and Pohozaev relations of a stored state.
inline Suite pohozaev_suite(const Field& u, const CouplingPair& cp, double residual_tolerance,
                            double relation_tolerance) {
  Suite s;
  const EnergyModel model(u.grid(), cp);
  const auto r = model.evaluate(u);
  const auto b = estimate_beta(u, model);
  const double res = model.residual(u, b.rayleigh);
  const auto d = pohozaev_defects(r, b.rayleigh);
  s.push_back(make_check("residual", res <= residual_tolerance, fmt::format("{:.3e}", res)));
  s.push_back(make_check("A + 3 beta c + 3/2 B - C = 0", std::abs(d.full) <= relation_tolerance,
                         fmt::format("{:.3e}", d.full)));
  s.push_back(make_check("4 beta c + B = 0", std::abs(d.beta_relation) <= relation_tolerance,
                         fmt::format("{:.3e}", d.beta_relation)));
  s.push_back(make_check("Q = 0", std::abs(d.virial) <= relation_tolerance, fmt::format("{:.3e}", d.virial)));
  s.push_back(make_check("beta > 0", b.rayleigh > 0.0, fmt::format("{:.17g}", b.rayleigh)));
  s.push_back(make_check("B < 0", r.B < 0.0, fmt::format("{:.17g}", r.B)));
  return s;
}

}  // namespace dbec::verify
