#include "somb/oracle.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "somb/error.hpp"

namespace somb {

Eigen::MatrixXcd spectral_momentum_matrix(int n, double spacing, int power) {
  const double dp = 2.0 * std::numbers::pi / (n * spacing);
  Eigen::MatrixXcd m(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      cplx s{};
      for (int k = 0; k < n; ++k) {
        const double p = (k < n / 2 ? k : k - n) * dp;
        s += std::pow(p, power) * std::polar(1.0, p * (a - b) * spacing);
      }
      m(a, b) = s / static_cast<double>(n);
    }
  }
  return m;
}

DenseOracle::DenseOracle(const GridSpec& grid, const ModelParams& params) : grid_(grid) {
  if (grid.nx() > kDenseOracleMaxSide || grid.ny() > kDenseOracleMaxSide) {
    throw Error(ErrorKind::Setup, "dense oracle refuses grids larger than 48x48");
  }
  if (params.has_nonlinearity()) {
    throw Error(ErrorKind::Contract, "dense oracle covers the linear (g = 0) equation only");
  }
  const int nx = grid.nx();
  const int ny = grid.ny();
  const int n = nx * ny;
  const Eigen::MatrixXcd px = spectral_momentum_matrix(nx, grid.dx(), 1);
  const Eigen::MatrixXcd py = spectral_momentum_matrix(ny, grid.dy(), 1);
  const Eigen::MatrixXcd px2 = spectral_momentum_matrix(nx, grid.dx(), 2);
  const Eigen::MatrixXcd py2 = spectral_momentum_matrix(ny, grid.dy(), 2);

  // Single-component blocks on the (x, y) product space.
  Eigen::MatrixXcd kinetic = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd dx_op = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd dy_op = Eigen::MatrixXcd::Zero(n, n);
  auto idx = [ny](int i, int j) { return i * ny + j; };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      for (int i2 = 0; i2 < nx; ++i2) {
        kinetic(idx(i, j), idx(i2, j)) += 0.5 * px2(i, i2);
        dx_op(idx(i, j), idx(i2, j)) = px(i, i2);
      }
      for (int j2 = 0; j2 < ny; ++j2) {
        kinetic(idx(i, j), idx(i, j2)) += 0.5 * py2(j, j2);
        dy_op(idx(i, j), idx(i, j2)) = py(j, j2);
      }
      if (params.trap_on) {
        const double x = grid.x(i), y = grid.y(j);
        kinetic(idx(i, j), idx(i, j)) += 0.5 * (x * x + y * y);
      }
    }
  }

  // H = diag(K, K) + v0 Px sigma_x + v1 Py sigma_y.
  const cplx I{0.0, 1.0};
  h_ = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  h_.topLeftCorner(n, n) = kinetic;
  h_.bottomRightCorner(n, n) = kinetic;
  h_.topRightCorner(n, n) = params.v0 * dx_op - I * params.v1 * dy_op;
  h_.bottomLeftCorner(n, n) = params.v0 * dx_op + I * params.v1 * dy_op;

  // Divide-and-conquer Hermitian eigensolver on a column-major copy.
  evecs_ = h_;
  evals_.resize(2 * n);
  const lapack_int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(2 * n),
                     evecs_.data(),
                     static_cast<lapack_int>(2 * n), evals_.data());
  if (info != 0) {
    throw Error(ErrorKind::Numeric, "dense oracle eigendecomposition failed (info " +
                                        std::to_string(info) + ")");
  }
}

SpinorField DenseOracle::evolve(const SpinorField& f, double tau) const {
  if (!(f.grid() == grid_) || f.components() != 2) {
    throw Error(ErrorKind::Contract, "dense oracle: field must be a spinor on the oracle grid");
  }
  const SpinorField pos = f.rep() == Rep::Position ? f : to_position(f);
  const auto d = pos.data();
  Eigen::VectorXcd psi(static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) psi(static_cast<Eigen::Index>(k)) = d[k];
  Eigen::VectorXcd coeff = evecs_.adjoint() * psi;
  for (Eigen::Index k = 0; k < coeff.size(); ++k) coeff(k) *= std::polar(1.0, -evals_(k) * tau);
  const Eigen::VectorXcd out_vec = evecs_ * coeff;
  SpinorField out(grid_, 2, Rep::Position);
  auto o = out.data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = out_vec(static_cast<Eigen::Index>(k));
  return out;
}

SpinorField dense_oracle_evolve(const SpinorField& f, const ModelParams& params, double tau) {
  return DenseOracle(f.grid(), params).evolve(f, tau);
}

}  // namespace somb
