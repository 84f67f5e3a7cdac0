#pragma once

#include <Eigen/Core>

#include "somb/grid.hpp"
#include "somb/model.hpp"

namespace somb {

/// Largest grid side the dense oracle accepts (2 * 48 * 48 = 4608 states).
inline constexpr int kDenseOracleMaxSide = 48;

/// Brute-force reference propagator for the linear (g = 0) spinor equation.
///
/// Builds the full 2*nx*ny Hamiltonian from spectral derivative matrices
/// assembled by explicit Fourier sums (no FFT), diagonalizes it once, and
/// evolves by exp(-i H tau) = V exp(-i Lambda tau) V^dagger. Basis ordering is
/// component-major, then x, then y, matching SpinorField storage.
class DenseOracle {
 public:
  DenseOracle(const GridSpec& grid, const ModelParams& params);

  const Eigen::MatrixXcd& hamiltonian() const { return h_; }
  const Eigen::VectorXd& eigenvalues() const { return evals_; }

  SpinorField evolve(const SpinorField& f, double tau) const;

 private:
  GridSpec grid_;
  Eigen::MatrixXcd h_;
  Eigen::VectorXd evals_;
  Eigen::MatrixXcd evecs_;
};

/// Spectral first-derivative operator -i d/dx as a dense n x n matrix for a
/// periodic axis of n points and spacing d, with the same momentum set the
/// FFT grid uses (Nyquist at -pi/d). power selects p or p^2.
Eigen::MatrixXcd spectral_momentum_matrix(int n, double spacing, int power);

SpinorField dense_oracle_evolve(const SpinorField& f, const ModelParams& params, double tau);

}  // namespace somb
