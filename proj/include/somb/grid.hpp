#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "somb/fft.hpp"

namespace somb {

using cplx = std::complex<double>;

/// Uniform periodic 2D grid on [-Lx, Lx) x [-Ly, Ly) and its conjugate
/// momentum grid. Samples are stored row-major with x as the slow index.
///
/// Momentum samples follow FFT (wrap-around) ordering: index k < n/2 maps to
/// k*dp, k >= n/2 to (k-n)*dp, so the Nyquist point sits at -pi/dx.
class GridSpec {
 public:
  GridSpec() = default;
  /// Throws Error(Contract) unless nx, ny are powers of two >= 8 and the
  /// half-extents are positive.
  GridSpec(int nx, int ny, double Lx, double Ly);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double Lx() const { return Lx_; }
  double Ly() const { return Ly_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }

  double dx() const { return 2.0 * Lx_ / nx_; }
  double dy() const { return 2.0 * Ly_ / ny_; }
  double dpx() const;
  double dpy() const;
  double px_max() const;  // pi / dx
  double py_max() const;

  double x(int i) const { return -Lx_ + i * dx(); }
  double y(int j) const { return -Ly_ + j * dy(); }
  double px(int i) const;
  double py(int j) const;
  /// Momentum used for odd moments: the unpaired Nyquist sample counts as 0,
  /// so real fields have zero mean momentum.
  double px_odd(int i) const { return 2 * i == nx_ ? 0.0 : px(i); }
  double py_odd(int j) const { return 2 * j == ny_ ? 0.0 : py(j); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * ny_ + j;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  double Lx_ = 0.0;
  double Ly_ = 0.0;
};

bool is_power_of_two(int n);

enum class Rep { Position, Momentum };

const char* to_string(Rep rep);

/// One or two complex scalar fields on a grid, tagged with the
/// representation they are expressed in. Two components form a spinor on the
/// dark states |u1>, |u2>; a single component is used by the single-surface
/// engine.
///
/// Normalization convention: position samples are psi(x_i, y_j); momentum
/// samples are Phi(p) = (1/2pi) \int e^{-i p.r} psi(r) d^2r evaluated on the
/// momentum grid. The norm is sum |c|^2 dx dy in position and
/// sum |c|^2 dpx dpy in momentum, and the two agree to roundoff.
class SpinorField {
 public:
  using Buffer = std::vector<cplx, FftwAllocator<cplx>>;

  SpinorField() = default;
  SpinorField(const GridSpec& grid, int components, Rep rep);

  const GridSpec& grid() const { return grid_; }
  Rep rep() const { return rep_; }
  int components() const { return ncomp_; }

  std::span<cplx> comp(int c);
  std::span<const cplx> comp(int c) const;
  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }

  /// Quadrature weight of one sample in the current representation.
  double weight() const;
  double norm() const;
  double component_norm(int c) const;
  void scale(double factor);

  /// Only for transform routines: the caller guarantees the data has been
  /// converted.
  void set_rep_unchecked(Rep rep) { rep_ = rep; }

 private:
  GridSpec grid_;
  Rep rep_ = Rep::Position;
  int ncomp_ = 0;
  Buffer data_;
};

SpinorField to_momentum(const SpinorField& f);
SpinorField to_position(const SpinorField& f);

enum class Observable { X, Y, X2, Y2, Px, Py, Px2, Py2 };

/// <obs> summed over components, divided by the field norm. Transforms to the
/// representation in which obs is diagonal when needed.
double expectation(const SpinorField& f, Observable obs);

/// L2 distance sqrt(sum |a-b|^2 w); both fields must share grid, rep and
/// component count.
double l2_distance(const SpinorField& a, const SpinorField& b);

}  // namespace somb
