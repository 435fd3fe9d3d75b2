#pragma once

#include <fmt/format.h>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "dipolar.hpp"
#include "grid.hpp"

namespace dbec {

/// Contact coupling lambda1 and dipolar coupling lambda2.
struct CouplingPair {
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  /// lambda1 - (4 pi / 3) lambda2
  double d_plus() const { return lambda1 - 4.0 * std::numbers::pi / 3.0 * lambda2; }
  /// lambda1 + (8 pi / 3) lambda2
  double d_minus() const { return lambda1 + 8.0 * std::numbers::pi / 3.0 * lambda2; }

  friend bool operator==(const CouplingPair&, const CouplingPair&) = default;
};

enum class Regime { Unstable, Stable, Boundary };

struct RegimeClass {
  Regime tag;
  double d_plus;
  double d_minus;
};

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Unstable: return "unstable";
    case Regime::Stable: return "stable";
    case Regime::Boundary: return "boundary";
  }
  return "boundary";
}

inline RegimeClass classify(const CouplingPair& cp) {
  if (!std::isfinite(cp.lambda1) || !std::isfinite(cp.lambda2)) {
    throw DomainError("classify: couplings must be finite");
  }
  const double dp = cp.d_plus();
  const double dm = cp.d_minus();
  Regime tag = Regime::Boundary;
  if (cp.lambda2 > 0.0) {
    if (dp < 0.0) tag = Regime::Unstable;
    else if (dp > 0.0) tag = Regime::Stable;
  } else if (cp.lambda2 < 0.0) {
    if (dm < 0.0) tag = Regime::Unstable;
    else if (dm > 0.0) tag = Regime::Stable;
  } else {
    if (cp.lambda1 < 0.0) tag = Regime::Unstable;
    else if (cp.lambda1 > 0.0) tag = Regime::Stable;
  }
  return {tag, dp, dm};
}

/// Scalars of one state. E and Q are recombined from A, B, C on construction.
struct FunctionalReport {
  double mass = 0.0;
  double A = 0.0;  ///< ||grad u||_2^2
  double B = 0.0;  ///< lambda1 ||u||_4^4 + lambda2 int (K*|u|^2)|u|^2
  double C = 0.0;  ///< ||u||_6^6
  double E = 0.0;  ///< A/2 + B/4 - C/6
  double Q = 0.0;  ///< A + 3B/4 - C
  double quartic = 0.0;  ///< ||u||_4^4
  double dipolar = 0.0;  ///< int (K*|u|^2)|u|^2

  static FunctionalReport from_parts(double mass, double A, double quartic, double dipolar,
                                     double C, const CouplingPair& cp) {
    FunctionalReport r;
    r.mass = mass;
    r.A = A;
    r.quartic = quartic;
    r.dipolar = dipolar;
    r.B = cp.lambda1 * quartic + cp.lambda2 * dipolar;
    r.C = C;
    r.E = 0.5 * A + 0.25 * r.B - C / 6.0;
    r.Q = A + 0.75 * r.B - C;
    return r;
  }
};

/// Flat JSON object {mass, A, B, C, E, Q}, 17 significant digits.
inline std::string to_json(const FunctionalReport& r) {
  return fmt::format(R"({{"mass":{:.17g},"A":{:.17g},"B":{:.17g},"C":{:.17g},"E":{:.17g},"Q":{:.17g}}})",
                     r.mass, r.A, r.B, r.C, r.E, r.Q);
}

/// Energy of the stationary dipolar equation on a fixed grid and coupling.
/// Holds the dipolar multiplier so repeated evaluations skip its setup.
class EnergyModel {
 public:
  EnergyModel(const Grid& grid, CouplingPair cp) : kernel_(grid), cp_(cp) {
    if (!std::isfinite(cp.lambda1) || !std::isfinite(cp.lambda2)) {
      throw DomainError("coupling must be finite");
    }
  }

  const Grid& grid() const { return kernel_.grid(); }
  const CouplingPair& coupling() const { return cp_; }
  const DipolarMultiplier& kernel() const { return kernel_; }

  FunctionalReport evaluate(const Field& u) const {
    check(u, "evaluate");
    const Grid& g = grid();
    const std::size_t n = g.size();
    const double dv = g.cell_volume();
    // (2 pi)^-3 sum |f^|^2 dXi = dV / N sum |DFT f|^2
    const double fourier_weight = dv / static_cast<double>(n);

    std::vector<complex> spec(u.values().begin(), u.values().end());
    detail::dft_in_place(g, spec, FFTW_FORWARD);
    CompensatedSum a_sum;
    detail::for_each_frequency(g, [&](std::size_t i, double x1, double x2, double x3) {
      a_sum.add((x1 * x1 + x2 * x2 + x3 * x3) * std::norm(spec[i]));
    });
    const double A = a_sum.value() * fourier_weight;

    std::vector<complex> rho(n);
    CompensatedSum m_sum, c_sum;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = std::norm(u[i]);
      rho[i] = r;
      m_sum.add(r);
      c_sum.add(r * r * r);
    }
    detail::dft_in_place(g, rho, FFTW_FORWARD);
    CompensatedSum q_sum, d_sum;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = std::norm(rho[i]);
      q_sum.add(p);
      d_sum.add(kernel_[i] * p);
    }
    auto r = FunctionalReport::from_parts(m_sum.value() * dv, A, q_sum.value() * fourier_weight,
                                          d_sum.value() * fourier_weight, c_sum.value() * dv, cp_);
    require_finite(r.mass, "mass");
    require_finite(r.A, "A");
    require_finite(r.B, "B");
    require_finite(r.C, "C");
    return r;
  }

  /// -Lap u + lambda1 |u|^2 u + lambda2 (K*|u|^2) u - |u|^4 u.
  Field gradient(const Field& u) const {
    check(u, "gradient");
    Field out = laplacian(u);
    out *= -1.0;
    out.axpy(1.0, nonlinear_part(u));
    return out;
  }

  /// The explicit (non-Laplacian) part of the gradient.
  Field nonlinear_part(const Field& u) const {
    check(u, "nonlinear_part");
    const std::size_t n = u.size();
    std::vector<double> rho(n);
    for (std::size_t i = 0; i < n; ++i) rho[i] = std::norm(u[i]);
    std::vector<double> conv;
    if (cp_.lambda2 != 0.0) conv = dipolar_convolve(kernel_, std::span<const double>(rho));
    Field out(u.grid());
    for (std::size_t i = 0; i < n; ++i) {
      double w = cp_.lambda1 * rho[i] - rho[i] * rho[i];
      if (!conv.empty()) w += cp_.lambda2 * conv[i];
      out[i] = w * u[i];
    }
    if (!out.all_finite()) throw NumericalError("gradient: non-finite nonlinear term");
    return out;
  }

  /// -<G(u), u> / mass: the multiplier that minimizes ||G(u) + beta u||.
  double rayleigh_beta(const Field& u) const {
    const double m = mass(u);
    if (!(m > 0.0)) throw DomainError("rayleigh_beta: zero field");
    return -inner(gradient(u), u) / m;
  }

  /// ||G(u) + beta u||_2 / ||u||_2.
  double residual(const Field& u, double beta) const {
    const double norm_u = l2_norm(u);
    if (!(norm_u > 0.0)) throw DomainError("residual: zero field");
    Field r = gradient(u);
    r.axpy(beta, u);
    const double res = l2_norm(r) / norm_u;
    require_finite(res, "residual");
    return res;
  }

 private:
  void check(const Field& u, const char* where) const {
    if (!(u.grid() == grid())) throw StructuralError(std::string(where) + ": grid mismatch");
  }
  static void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw NumericalError(std::string("non-finite functional ") + name);
  }

  DipolarMultiplier kernel_;
  CouplingPair cp_;
};

inline FunctionalReport evaluate(const Field& u, const CouplingPair& cp) {
  return EnergyModel(u.grid(), cp).evaluate(u);
}

inline Field gradient(const Field& u, const CouplingPair& cp) {
  return EnergyModel(u.grid(), cp).gradient(u);
}

inline double residual(const Field& u, double beta, const CouplingPair& cp) {
  return EnergyModel(u.grid(), cp).residual(u, beta);
}

}  // namespace dbec
