#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "summation.hpp"

namespace dbec {

using complex = std::complex<double>;

/// Periodic box [-L1,L1) x [-L2,L2) x [-L3,L3) sampled at n1 x n2 x n3 points.
///
/// Sample j along axis a sits at x = -L_a + j h_a with h_a = 2 L_a / n_a, so the
/// origin is sample n_a/2. The dual lattice is xi = pi k / L_a for
/// k = -n_a/2 ... n_a/2 - 1; spectral arrays keep FFTW storage order
/// (k = 0, 1, ..., n/2-1, -n/2, ..., -1).
class Grid {
 public:
  Grid(std::array<int, 3> points, std::array<double, 3> half_lengths)
      : n_(points), half_(half_lengths) {
    for (int a = 0; a < 3; ++a) {
      if (n_[a] < 8 || n_[a] % 2 != 0) {
        throw DomainError("grid: points per axis must be even and >= 8, got " +
                          std::to_string(n_[a]));
      }
      if (!(half_[a] > 0.0) || !std::isfinite(half_[a])) {
        throw DomainError("grid: half-lengths must be positive and finite");
      }
    }
  }

  /// Cubic grid with `n` points and half-length `L` on every axis.
  static Grid cube(int n, double half_length) {
    return Grid({n, n, n}, {half_length, half_length, half_length});
  }

  int points(int axis) const { return n_[axis]; }
  const std::array<int, 3>& points() const { return n_; }
  double half_length(int axis) const { return half_[axis]; }
  const std::array<double, 3>& half_lengths() const { return half_; }
  std::size_t size() const {
    return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
  }

  double spacing(int axis) const { return 2.0 * half_[axis] / n_[axis]; }
  double cell_volume() const { return spacing(0) * spacing(1) * spacing(2); }
  /// Volume of one cell of the frequency lattice, prod(pi / L_a).
  double frequency_cell_volume() const {
    const double pi = std::numbers::pi;
    return (pi / half_[0]) * (pi / half_[1]) * (pi / half_[2]);
  }
  /// Largest resolved frequency magnitude along an axis (the Nyquist value).
  double nyquist(int axis) const { return std::numbers::pi * n_[axis] / (2.0 * half_[axis]); }

  double coordinate(int axis, int j) const { return -half_[axis] + j * spacing(axis); }

  /// Signed lattice index for FFTW storage slot j.
  int wavenumber(int axis, int j) const { return j < n_[axis] / 2 ? j : j - n_[axis]; }
  double frequency(int axis, int j) const {
    return std::numbers::pi * wavenumber(axis, j) / half_[axis];
  }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_[1] + j) * n_[2] + k;
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.n_ == b.n_ && a.half_ == b.half_;
  }

 private:
  std::array<int, 3> n_;
  std::array<double, 3> half_;
};

/// Complex samples of a state on a grid, row-major in (x1, x2, x3).
class Field {
 public:
  explicit Field(Grid grid) : grid_(std::move(grid)), values_(grid_.size()) {}
  Field(Grid grid, std::vector<complex> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw StructuralError("field: " + std::to_string(values_.size()) +
                            " values for a grid of " + std::to_string(grid_.size()) +
                            " points");
    }
  }

  /// Samples `f(x1, x2, x3)` at every grid point.
  template <typename F>
  static Field sample(const Grid& grid, F&& f) {
    Field out(grid);
    for (int i = 0; i < grid.points(0); ++i) {
      const double x1 = grid.coordinate(0, i);
      for (int j = 0; j < grid.points(1); ++j) {
        const double x2 = grid.coordinate(1, j);
        for (int k = 0; k < grid.points(2); ++k) {
          out.values_[grid.index(i, j, k)] = complex(f(x1, x2, grid.coordinate(2, k)));
        }
      }
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<complex> values() { return values_; }
  std::span<const complex> values() const { return values_; }
  complex& operator[](std::size_t i) { return values_[i]; }
  const complex& operator[](std::size_t i) const { return values_[i]; }
  complex& at(int i, int j, int k) { return values_[grid_.index(i, j, k)]; }
  const complex& at(int i, int j, int k) const { return values_[grid_.index(i, j, k)]; }

  bool all_finite() const {
    for (const auto& v : values_) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
  }

  Field& operator+=(const Field& o) {
    require_same_grid(o, "field +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    require_same_grid(o, "field -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  Field& operator*=(complex s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  Field& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  /// this += s * o
  Field& axpy(double s, const Field& o) {
    require_same_grid(o, "field axpy");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += s * o.values_[i];
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(complex s, Field a) { return a *= s; }

  void require_same_grid(const Field& o, const char* where) const {
    if (!(grid_ == o.grid_)) throw StructuralError(std::string(where) + ": grid mismatch");
  }

 private:
  Grid grid_;
  std::vector<complex> values_;
};

/// Samples of a transform on the frequency lattice (FFTW storage order).
class SpectralField {
 public:
  explicit SpectralField(Grid grid) : grid_(std::move(grid)), values_(grid_.size()) {}
  const Grid& grid() const { return grid_; }
  std::span<complex> values() { return values_; }
  std::span<const complex> values() const { return values_; }
  complex& operator[](std::size_t i) { return values_[i]; }
  const complex& operator[](std::size_t i) const { return values_[i]; }
  /// Value at signed lattice indices (k1, k2, k3), each in [-n/2, n/2).
  const complex& at_wavenumber(int k1, int k2, int k3) const {
    auto slot = [&](int a, int k) { return k < 0 ? k + grid_.points(a) : k; };
    return values_[grid_.index(slot(0, k1), slot(1, k2), slot(2, k3))];
  }

 private:
  Grid grid_;
  std::vector<complex> values_;
};

namespace detail {

/// Process-wide cache of FFTW plans keyed by (dims, direction). Planning uses
/// FFTW_ESTIMATE so plans, and therefore results, are reproducible.
/// Creation is serialized; execution through the new-array interface is
/// thread-safe.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans plans;
    return plans;
  }

  fftw_plan get(const std::array<int, 3>& n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(n[0], n[1], n[2], sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    std::vector<complex> scratch(total);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan p = fftw_plan_dft_3d(n[0], n[1], n[2], buf, buf, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

 private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }
  std::mutex mutex_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

/// Unnormalized in-place 3D DFT on a buffer of grid.size() samples.
inline void dft_in_place(const Grid& grid, std::span<complex> data, int sign) {
  fftw_plan p = FftPlans::instance().get(grid.points(), sign);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(p, buf, buf);
}

/// (-1)^(j1+j2+j3): the phase e^{i xi . L} that moves the sample origin from
/// the box corner to the box centre.
inline double corner_phase(int i, int j, int k) { return ((i + j + k) & 1) ? -1.0 : 1.0; }

template <typename F>
void for_each_frequency(const Grid& grid, F&& f) {
  for (int i = 0; i < grid.points(0); ++i) {
    const double xi1 = grid.frequency(0, i);
    for (int j = 0; j < grid.points(1); ++j) {
      const double xi2 = grid.frequency(1, j);
      for (int k = 0; k < grid.points(2); ++k) {
        f(grid.index(i, j, k), xi1, xi2, grid.frequency(2, k));
      }
    }
  }
}

}  // namespace detail

/// Approximates the continuum transform f^(xi) = int f(x) e^{-i xi.x} dx:
/// the DFT is scaled by the cell volume and phase-shifted to the box centre.
inline SpectralField forward_transform(const Field& u) {
  if (u.size() != u.grid().size()) throw StructuralError("forward_transform: size mismatch");
  const Grid& g = u.grid();
  SpectralField out(g);
  std::copy(u.values().begin(), u.values().end(), out.values().begin());
  detail::dft_in_place(g, out.values(), FFTW_FORWARD);
  const double dv = g.cell_volume();
  for (int i = 0; i < g.points(0); ++i)
    for (int j = 0; j < g.points(1); ++j)
      for (int k = 0; k < g.points(2); ++k) out[g.index(i, j, k)] *= dv * detail::corner_phase(i, j, k);
  return out;
}

/// Inverse of forward_transform; carries dXi / (2 pi)^3.
inline Field inverse_transform(const SpectralField& s) {
  const Grid& g = s.grid();
  std::vector<complex> data(s.values().begin(), s.values().end());
  const double scale = g.frequency_cell_volume() / std::pow(2.0 * std::numbers::pi, 3);
  for (int i = 0; i < g.points(0); ++i)
    for (int j = 0; j < g.points(1); ++j)
      for (int k = 0; k < g.points(2); ++k) data[g.index(i, j, k)] *= scale * detail::corner_phase(i, j, k);
  detail::dft_in_place(g, data, FFTW_BACKWARD);
  return Field(g, std::move(data));
}

/// Applies a real Fourier multiplier m(index, xi1, xi2, xi3) to u.
/// The corner phase cancels between the two transforms, so it is skipped.
template <typename Multiplier>
Field apply_multiplier(const Field& u, Multiplier&& m) {
  const Grid& g = u.grid();
  std::vector<complex> data(u.values().begin(), u.values().end());
  detail::dft_in_place(g, data, FFTW_FORWARD);
  const double inv_n = 1.0 / static_cast<double>(g.size());
  detail::for_each_frequency(g, [&](std::size_t idx, double x1, double x2, double x3) {
    data[idx] *= inv_n * m(idx, x1, x2, x3);
  });
  detail::dft_in_place(g, data, FFTW_BACKWARD);
  return Field(g, std::move(data));
}

/// Spectral Laplacian, multiplier -|xi|^2.
inline Field laplacian(const Field& u) {
  return apply_multiplier(u, [](std::size_t, double a, double b, double c) {
    return -(a * a + b * b + c * c);
  });
}

/// Re int f conj(g) dx.
inline double inner(const Field& f, const Field& g) {
  f.require_same_grid(g, "inner");
  const double s = compensated_sum(f.size(), [&](std::size_t i) {
    return f[i].real() * g[i].real() + f[i].imag() * g[i].imag();
  });
  return s * f.grid().cell_volume();
}

/// ||u||_2^2.
inline double mass(const Field& u) {
  return compensated_sum(u.size(), [&](std::size_t i) { return std::norm(u[i]); }) *
         u.grid().cell_volume();
}

inline double l2_norm(const Field& u) { return std::sqrt(mass(u)); }

/// (2 pi)^{-3} sum |s|^2 dXi: the Fourier-side mass.
inline double spectral_mass(const SpectralField& s) {
  const Grid& g = s.grid();
  return compensated_sum(g.size(), [&](std::size_t i) { return std::norm(s[i]); }) *
         g.frequency_cell_volume() / std::pow(2.0 * std::numbers::pi, 3);
}

/// Spread sqrt(int (x_a - m_a)^2 |u|^2 / mass) about the centroid m_a.
inline double axis_width(const Field& u, int axis) {
  const Grid& g = u.grid();
  const double m = mass(u);
  if (m <= 0.0) throw DomainError("axis_width: zero field");
  CompensatedSum first, second;
  for (int i = 0; i < g.points(0); ++i)
    for (int j = 0; j < g.points(1); ++j)
      for (int k = 0; k < g.points(2); ++k) {
        const std::array<int, 3> idx{i, j, k};
        const double x = g.coordinate(axis, idx[axis]);
        const double w = std::norm(u.at(i, j, k));
        first.add(x * w);
        second.add(x * x * w);
      }
  const double dv = g.cell_volume();
  const double centre = first.value() * dv / m;
  return std::sqrt(std::max(0.0, second.value() * dv / m - centre * centre));
}

}  // namespace dbec
