#pragma once

#include <Eigen/Core>

#include "somb/grid.hpp"

namespace somb {

/// Dimensionless couplings in units of the trap energy and oscillator length.
struct ModelParams {
  double v0 = 0.0;  // spin-orbit speed along x
  double v1 = 0.0;  // spin-orbit speed along y
  // Scattering matrix g. Both components feel the scalar potential
  // Psi^dagger g Psi; for g11 = g22 = g, g12 = 0 that is g (|psi1|^2 + |psi2|^2).
  double g11 = 0.0;
  double g22 = 0.0;
  double g12 = 0.0;
  bool trap_on = true;
  bool born_huang_on = false;  // single-surface engine only

  /// The Zeeman splitting is pinned to zero.
  static constexpr double zeeman = 0.0;

  /// Isotropic coupling v0 = v1 = v with g11 = g22 = g, g12 = 0.
  static ModelParams isotropic(double v, double g);

  bool has_nonlinearity() const { return g11 != 0.0 || g22 != 0.0 || g12 != 0.0; }
  void validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Minimum-uncertainty Gaussian initial state.
///
/// px0, py0 are the *physical* mean momenta: the state carries the plane-wave
/// factor exp(+i(px0 x + py0 y)), so that expectation(Px) == px0 under the
/// forward kernel exp(-i p.x). The literal factor exp(-i(px0 x + py0 y)) would
/// put the packet at -p0, where the spinor a1 = -a2 = 1/sqrt2 lies on the
/// *upper* cone rather than the sombrero minimum.
struct GaussianSpec {
  cplx a1{1.0, 0.0};
  cplx a2{0.0, 0.0};
  double x0 = 0.0;
  double y0 = 0.0;
  double px0 = 0.0;
  double py0 = 0.0;
  double width = 1.0;

  void validate() const;
  /// Rescales (a1, a2) to unit total weight.
  void normalize_amplitudes();

  friend bool operator==(const GaussianSpec&, const GaussianSpec&) = default;
};

/// Sign of the plane-wave exponent applied by make_initial.
inline constexpr int kPlaneWaveSign = +1;

/// Fraction of the continuum Gaussian density lying outside the periodic box.
double gaussian_mass_outside(const GaussianSpec& spec, const GridSpec& grid);

/// Two-component initial spinor, renormalized to unit norm on the grid.
/// Throws Error(Setup) when more than 1e-10 of the Gaussian mass falls outside
/// the domain.
SpinorField make_initial(const GaussianSpec& spec, const GridSpec& grid);

/// Scalar Gaussian with the same spatial profile (unit amplitude), used as the
/// initial state of the single-surface engine.
SpinorField make_initial_scalar(const GaussianSpec& spec, const GridSpec& grid);

/// Throws Error(Setup) when the momentum grid does not reach beyond the
/// sombrero: pi/dx must exceed v0 + 4/width (and likewise along y).
void check_momentum_reach(const GridSpec& grid, const ModelParams& params, double width);

struct Momentum {
  double px = 0.0;
  double py = 0.0;
};

enum class Branch { Upper, Lower };

inline constexpr double kConicalTolerance = 1e-12;

/// lambda = sqrt((v0 px)^2 + (v1 py)^2).
double soc_gap(Momentum p, const ModelParams& params);

/// Adiabatic potential surface p^2/2 +- lambda.
double aps(Momentum p, const ModelParams& params, Branch branch);

using Mat2 = Eigen::Matrix2cd;

/// Spin-orbit matrix v0 px sigma_x + v1 py sigma_y.
Mat2 soc_matrix(Momentum p, const ModelParams& params);

/// Unitary U with U M U^dagger = lambda sigma_z; the rows of U are the
/// conjugated upper/lower eigenvectors, each phase-fixed so its first
/// component is real and non-negative. Throws Error(Singular) at the conical
/// intersection.
Mat2 adiabatic_transform(Momentum p, const ModelParams& params);

/// exp(-i [p^2/2 + v0 px sigma_x + v1 py sigma_y] dt) in closed form.
Mat2 kinetic_soc_factor(Momentum p, const ModelParams& params, double dt);

/// sin(x)/x, with a short Taylor series below 1e-4.
double sinc(double x);

struct GaugeFields {
  Eigen::Vector2d berry;  // A(p) = (-py, px) / (2 p^2)
  double born_huang;      // 1 / (8 p^2)
};

/// Lower-surface Berry connection and Born-Huang scalar for the isotropic
/// model. Throws Error(Singular) for |p| < kConicalTolerance.
GaugeFields gauge_fields(Momentum p);

/// [A_x, A_y] for A = (v0 sigma_x, v1 sigma_y); equals 2i v0 v1 sigma_z.
Mat2 nonabelian_commutator(const ModelParams& params);

Mat2 pauli_x();
Mat2 pauli_y();
Mat2 pauli_z();

}  // namespace somb
