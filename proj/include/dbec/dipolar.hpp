#pragma once

#include <numbers>
#include <vector>

#include "grid.hpp"

namespace dbec {

/// Dipolar Fourier multiplier (4 pi / 3) (2 xi3^2 - xi1^2 - xi2^2) / |xi|^2 on a
/// grid's frequency lattice, dipole axis x3. The xi = 0 entry is 0, the mean
/// of the multiplier over directions.
class DipolarMultiplier {
 public:
  static constexpr double lower_bound = -4.0 * std::numbers::pi / 3.0;
  static constexpr double upper_bound = 8.0 * std::numbers::pi / 3.0;

  explicit DipolarMultiplier(const Grid& grid) : grid_(grid), values_(grid.size()) {
    constexpr double pref = 4.0 * std::numbers::pi / 3.0;
    detail::for_each_frequency(grid, [&](std::size_t idx, double a, double b, double c) {
      const double r2 = a * a + b * b + c * c;
      values_[idx] = r2 > 0.0 ? pref * (2.0 * c * c - a * a - b * b) / r2 : 0.0;
    });
  }

  static double evaluate(double xi1, double xi2, double xi3) {
    const double r2 = xi1 * xi1 + xi2 * xi2 + xi3 * xi3;
    if (r2 == 0.0) return 0.0;
    return 4.0 * std::numbers::pi / 3.0 * (2.0 * xi3 * xi3 - xi1 * xi1 - xi2 * xi2) / r2;
  }

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// K * rho for a real density, evaluated as the inverse transform of K^ rho^.
/// Returns real samples; the imaginary residue is discarded.
inline std::vector<double> dipolar_convolve(const DipolarMultiplier& kernel,
                                            std::span<const double> rho) {
  const Grid& g = kernel.grid();
  if (rho.size() != g.size()) throw StructuralError("dipolar_convolve: grid mismatch");
  std::vector<complex> data(rho.begin(), rho.end());
  detail::dft_in_place(g, data, FFTW_FORWARD);
  const double inv_n = 1.0 / static_cast<double>(g.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= inv_n * kernel[i];
  detail::dft_in_place(g, data, FFTW_BACKWARD);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real();
  return out;
}

/// Field-valued overload: takes the real part of `rho`.
inline Field dipolar_convolve(const DipolarMultiplier& kernel, const Field& rho) {
  rho.require_same_grid(Field(kernel.grid()), "dipolar_convolve");
  std::vector<double> r(rho.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rho[i].real();
  auto k = dipolar_convolve(kernel, std::span<const double>(r));
  return Field(kernel.grid(), std::vector<complex>(k.begin(), k.end()));
}

}  // namespace dbec
