#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "functionals.hpp"
#include "grid.hpp"

namespace dbec {

/// (A, B, C) of a state. Along the mass-preserving dilation u^t the energy is
/// the polynomial E(t) = t^2 A/2 + t^3 B/4 - t^6 C/6 and
/// y(t) = dE/dt = t A + 3/4 t^2 B - t^5 C = Q(u^t) / t.
struct FiberCoefficients {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;

  static FiberCoefficients of(const FunctionalReport& r) { return {r.A, r.B, r.C}; }

  double y(double t) const { return t * (A + 0.75 * t * B - std::pow(t, 4) * C); }
  double energy(double t) const {
    return 0.5 * t * t * A + 0.25 * t * t * t * B - std::pow(t, 6) * C / 6.0;
  }
  /// Q(u^t) = t y(t).
  double virial(double t) const { return t * y(t); }
};

/// Unique t* > 0 with y(t*) = 0.
///
/// Works on g(t) = y(t) / t = A + 3/4 t B - t^4 C, which is positive on (0, t*)
/// and negative beyond. The bracket is grown from t = 1 by factors of two,
/// then refined with Newton steps that fall back to bisection whenever they
/// leave the bracket.
inline double find_tstar(const FiberCoefficients& fc) {
  if (!(fc.A > 0.0) || !(fc.C > 0.0) || !std::isfinite(fc.A) || !std::isfinite(fc.B) ||
      !std::isfinite(fc.C)) {
    throw DomainError("find_tstar: degenerate fiber, need A > 0 and C > 0");
  }
  auto g = [&](double t) { return fc.A + 0.75 * t * fc.B - std::pow(t, 4) * fc.C; };
  auto dg = [&](double t) { return 0.75 * fc.B - 4.0 * std::pow(t, 3) * fc.C; };

  double lo = 1.0;
  double hi = 1.0;
  if (g(1.0) > 0.0) {
    while (g(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e150) throw NumericalError("find_tstar: bracket overflow");
    }
  } else {
    while (g(lo) <= 0.0) {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-150) throw NumericalError("find_tstar: bracket underflow");
    }
  }
  // g(lo) > 0 >= g(hi)
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gt = g(t);
    if (gt > 0.0) lo = t;
    else hi = t;
    if (gt == 0.0 || hi - lo <= 1e-15 * hi) break;
    const double d = dg(t);
    double next = d != 0.0 ? t - gt / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - t) <= 1e-16 * t) {
      t = next;
      break;
    }
    t = next;
  }
  return t;
}

struct DilationResult {
  Field field;
  /// (mass(u^t) - mass(u)) / mass(u); nonzero only through truncation.
  double relative_mass_change = 0.0;
};

namespace detail {

/// Periodic band-limited interpolation kernel of an n-point axis with
/// half-length L: (1/n) sum_k e^{i pi k d / L}, with the Nyquist mode split
/// symmetrically so the kernel is real.
inline double dirichlet_kernel(int n, double L, double d) {
  const double w = std::numbers::pi * d / L;
  const double half = std::sin(0.5 * w);
  // sum_{k=1}^{n/2-1} cos(k w) in closed form away from w = 0 mod 2 pi.
  double cos_sum;
  if (std::abs(half) > 1e-6) {
    cos_sum = std::sin((0.5 * n - 0.5) * w) / (2.0 * half) - 0.5;
  } else {
    cos_sum = 0.0;
    for (int k = 1; k < n / 2; ++k) cos_sum += std::cos(k * w);
  }
  return (1.0 + std::cos(0.5 * n * w) + 2.0 * cos_sum) / n;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Applies the n x n matrix m along one axis of a real row-major 3D array.
inline void apply_along_axis(const Grid& g, std::vector<double>& data, int axis, const RowMatrix& m) {
  const Eigen::Index n0 = g.points(0), n1 = g.points(1), n2 = g.points(2);
  using Map = Eigen::Map<RowMatrix>;
  if (axis == 2) {
    Map x(data.data(), n0 * n1, n2);
    RowMatrix y = x * m.transpose();
    x = y;
  } else if (axis == 0) {
    Map x(data.data(), n0, n1 * n2);
    RowMatrix y = m * x;
    x = y;
  } else {
    for (Eigen::Index i = 0; i < n0; ++i) {
      Map x(data.data() + i * n1 * n2, n1, n2);
      RowMatrix y = m * x;
      x = y;
    }
  }
}

/// Per-axis resampling matrix for u -> t^{1/2} u(t x).
/// t <= 1: evaluate the interpolant at t x_i (all points stay in the box).
/// t > 1: band-limit u to |xi| < K/t first, which is the same kernel with its
/// argument divided by t; frequencies the grid cannot hold are dropped.
inline RowMatrix dilation_matrix(const Grid& g, int axis, double t) {
  const int n = g.points(axis);
  const double L = g.half_length(axis);
  RowMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    const double xi = g.coordinate(axis, i);
    for (int j = 0; j < n; ++j) {
      const double xj = g.coordinate(axis, j);
      m(i, j) =
          t <= 1.0 ? std::sqrt(t) * dirichlet_kernel(n, L, t * xi - xj)
                   : dirichlet_kernel(n, L, xi - xj / t) / std::sqrt(t);
    }
  }
  return m;
}

}  // namespace detail

/// u^t(x) = t^{3/2} u(t x) by band-limited resampling, with the mass change
/// caused by truncation.
inline DilationResult dilate_with_report(const Field& u, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("dilate: t must be positive");
  if (t == 1.0) return {u, 0.0};
  const Grid& g = u.grid();
  std::array<detail::RowMatrix, 3> mats;
  for (int axis = 0; axis < 3; ++axis) mats[axis] = detail::dilation_matrix(g, axis, t);
  const bool real = std::all_of(u.values().begin(), u.values().end(),
                                [](const complex& v) { return v.imag() == 0.0; });
  std::vector<double> re(g.size()), im;
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = u[i].real();
  for (int axis = 0; axis < 3; ++axis) detail::apply_along_axis(g, re, axis, mats[axis]);
  if (!real) {
    im.resize(g.size());
    for (std::size_t i = 0; i < im.size(); ++i) im[i] = u[i].imag();
    for (int axis = 0; axis < 3; ++axis) detail::apply_along_axis(g, im, axis, mats[axis]);
  }
  std::vector<complex> data(g.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = complex(re[i], real ? 0.0 : im[i]);
  Field out(g, std::move(data));
  const double m0 = mass(u);
  const double m1 = mass(out);
  return {std::move(out), m0 > 0.0 ? (m1 - m0) / m0 : 0.0};
}

/// u^t; throws ResolutionError when truncation changes the mass by more than
/// `max_relative_mass_change`.
inline Field dilate(const Field& u, double t, double max_relative_mass_change = 1e-9) {
  auto r = dilate_with_report(u, t);
  if (std::abs(r.relative_mass_change) > max_relative_mass_change) {
    throw ResolutionError(fmt::format(
        "dilate: t = {:.6g} changes the mass by {:.3e} (limit {:.1e}); the grid does not "
        "resolve the dilated state",
        t, r.relative_mass_change, max_relative_mass_change));
  }
  return std::move(r.field);
}

struct Projection {
  Field field;
  double tstar = 1.0;
  FunctionalReport report;
  int refinements = 0;
};

struct ProjectionOptions {
  /// Target |Q| / (A + C).
  double tolerance = 1e-12;
  /// Accepted |Q| / (A + C) if the target is not reached.
  double acceptance = 1e-8;
  int max_refinements = 40;
  double max_relative_mass_change = 1e-9;
};

/// Projects u onto V(c) = {Q = 0} along its fiber. The first t* comes from the
/// fiber polynomial. Resampling is not exact on the grid, so t* is then refined
/// by secant steps in log t on the measured Q(u^t), falling back to the
/// polynomial correction when a secant step is unusable.
inline Projection project_to_V(const Field& u, const EnergyModel& model,
                               const ProjectionOptions& opt = {}) {
  if (!(mass(u) > 0.0)) throw DomainError("project_to_V: zero field");
  Projection p{u, 1.0, model.evaluate(u), 0};
  auto defect = [](const FunctionalReport& r) { return std::abs(r.Q) / (r.A + r.C); };
  double rel = defect(p.report);
  double prev_log_t = 0.0;
  double prev_q = 0.0;
  bool have_prev = false;
  for (int it = 0; it < opt.max_refinements && rel > opt.tolerance; ++it) {
    const double log_t = std::log(p.tstar);
    const double q = p.report.Q / (p.report.A + p.report.C);
    double next_log_t = log_t + std::log(find_tstar(FiberCoefficients::of(p.report)));
    if (have_prev && q != prev_q) {
      const double secant = log_t - q * (log_t - prev_log_t) / (q - prev_q);
      if (std::isfinite(secant) && std::abs(secant - log_t) < 0.5) next_log_t = secant;
    }
    if (std::abs(next_log_t - log_t) < 1e-15) break;
    prev_log_t = log_t;
    prev_q = q;
    have_prev = true;
    p.tstar = std::exp(next_log_t);
    p.field = dilate(u, p.tstar, opt.max_relative_mass_change);
    p.report = model.evaluate(p.field);
    p.refinements = it + 1;
    const double next = defect(p.report);
    const bool stagnant = next > 0.5 * rel;
    rel = next;
    if (stagnant && rel <= opt.acceptance) break;
  }
  if (rel <= opt.acceptance) return p;
  throw NumericalError(fmt::format("project_to_V: |Q|/(A+C) = {:.3e} after {} refinements", rel,
                                   p.refinements));
}

inline Projection project_to_V(const Field& u, const CouplingPair& cp,
                               const ProjectionOptions& opt = {}) {
  return project_to_V(u, EnergyModel(u.grid(), cp), opt);
}

}  // namespace dbec
