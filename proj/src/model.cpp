#include "somb/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "somb/error.hpp"

namespace somb {

namespace {
constexpr cplx kI{0.0, 1.0};

void fill_gaussian(const GaussianSpec& spec, const GridSpec& grid, std::span<cplx> out,
                   cplx amplitude) {
  const double w2 = spec.width * spec.width;
  const double pref = 1.0 / std::sqrt(std::numbers::pi * w2);
  for (int i = 0; i < grid.nx(); ++i) {
    const double x = grid.x(i);
    for (int j = 0; j < grid.ny(); ++j) {
      const double y = grid.y(j);
      const double r2 = (x - spec.x0) * (x - spec.x0) + (y - spec.y0) * (y - spec.y0);
      const double phase = kPlaneWaveSign * (spec.px0 * x + spec.py0 * y);
      out[grid.index(i, j)] =
          amplitude * pref * std::exp(-r2 / (2.0 * w2)) * std::polar(1.0, phase);
    }
  }
}

void normalize(SpinorField& f) {
  const double n = f.norm();
  if (!(n > 0.0)) throw Error(ErrorKind::Setup, "initial state has zero norm on the grid");
  f.scale(1.0 / std::sqrt(n));
}

void check_domain(const GaussianSpec& spec, const GridSpec& grid) {
  const double outside = gaussian_mass_outside(spec, grid);
  if (outside > 1e-10) {
    throw Error(ErrorKind::Setup, "initial Gaussian leaks outside the domain (mass " +
                                      std::to_string(outside) + " > 1e-10)");
  }
}

}  // namespace

ModelParams ModelParams::isotropic(double v, double g) {
  ModelParams p;
  p.v0 = v;
  p.v1 = v;
  p.g11 = g;
  p.g22 = g;
  return p;
}

void ModelParams::validate() const {
  if (!(v0 >= 0.0) || !(v1 >= 0.0)) {
    throw Error(ErrorKind::Contract, "spin-orbit speeds must be non-negative");
  }
  if (!std::isfinite(v0) || !std::isfinite(v1) || !std::isfinite(g11) ||
      !std::isfinite(g22) || !std::isfinite(g12)) {
    throw Error(ErrorKind::Contract, "model parameters must be finite");
  }
}

void GaussianSpec::validate() const {
  if (!(width > 0.0)) throw Error(ErrorKind::Contract, "Gaussian width must be positive");
  const double n = std::norm(a1) + std::norm(a2);
  if (std::abs(n - 1.0) > 1e-12) {
    throw Error(ErrorKind::Contract, "amplitudes must satisfy |a1|^2 + |a2|^2 = 1");
  }
}

void GaussianSpec::normalize_amplitudes() {
  const double n = std::sqrt(std::norm(a1) + std::norm(a2));
  if (!(n > 0.0)) throw Error(ErrorKind::Contract, "amplitudes a1, a2 are both zero");
  a1 /= n;
  a2 /= n;
}

double gaussian_mass_outside(const GaussianSpec& spec, const GridSpec& grid) {
  // Density exp(-(x-x0)^2 / width^2) is normal with sigma = width / sqrt 2.
  auto inside = [&](double c, double L) {
    return 0.5 * (std::erf((L - c) / spec.width) + std::erf((L + c) / spec.width));
  };
  return 1.0 - inside(spec.x0, grid.Lx()) * inside(spec.y0, grid.Ly());
}

SpinorField make_initial(const GaussianSpec& spec, const GridSpec& grid) {
  spec.validate();
  check_domain(spec, grid);
  SpinorField f(grid, 2, Rep::Position);
  fill_gaussian(spec, grid, f.comp(0), spec.a1);
  fill_gaussian(spec, grid, f.comp(1), spec.a2);
  normalize(f);
  return f;
}

SpinorField make_initial_scalar(const GaussianSpec& spec, const GridSpec& grid) {
  if (!(spec.width > 0.0)) throw Error(ErrorKind::Contract, "Gaussian width must be positive");
  check_domain(spec, grid);
  SpinorField f(grid, 1, Rep::Position);
  fill_gaussian(spec, grid, f.comp(0), 1.0);
  normalize(f);
  return f;
}

void check_momentum_reach(const GridSpec& grid, const ModelParams& params, double width) {
  const double margin = 4.0 / width;
  if (!(grid.px_max() > params.v0 + margin) || !(grid.py_max() > params.v1 + margin)) {
    throw Error(ErrorKind::Setup,
                "momentum grid too coarse: need pi/dx > v + 4/width (pi/dx = " +
                    std::to_string(grid.px_max()) + ", v0 + 4/width = " +
                    std::to_string(params.v0 + margin) + ")");
  }
}

double soc_gap(Momentum p, const ModelParams& params) {
  return std::hypot(params.v0 * p.px, params.v1 * p.py);
}

double aps(Momentum p, const ModelParams& params, Branch branch) {
  const double kinetic = 0.5 * (p.px * p.px + p.py * p.py);
  const double lambda = soc_gap(p, params);
  return branch == Branch::Upper ? kinetic + lambda : kinetic - lambda;
}

Mat2 pauli_x() {
  Mat2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Mat2 pauli_y() {
  Mat2 m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

Mat2 pauli_z() {
  Mat2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Mat2 soc_matrix(Momentum p, const ModelParams& params) {
  return params.v0 * p.px * pauli_x() + params.v1 * p.py * pauli_y();
}

Mat2 adiabatic_transform(Momentum p, const ModelParams& params) {
  const double lambda = soc_gap(p, params);
  if (lambda < kConicalTolerance) {
    throw Error(ErrorKind::Singular, "adiabatic transform undefined at the conical intersection");
  }
  // Eigenvectors of [[0, z*], [z, 0]] with z = v0 px + i v1 py:
  // (1, +-z/lambda)/sqrt2 for eigenvalues +-lambda.
  const cplx phase = cplx(params.v0 * p.px, params.v1 * p.py) / lambda;
  const double s = 1.0 / std::numbers::sqrt2;
  Eigen::Vector2cd upper(s, s * phase);
  Eigen::Vector2cd lower(s, -s * phase);
  auto fix_gauge = [](Eigen::Vector2cd& v) {
    const int k = std::abs(v(0)) > 1e-14 ? 0 : 1;
    v *= std::conj(v(k)) / std::abs(v(k));
  };
  fix_gauge(upper);
  fix_gauge(lower);
  Mat2 u;
  u.row(0) = upper.adjoint();
  u.row(1) = lower.adjoint();
  return u;
}

double sinc(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0));
  }
  return std::sin(x) / x;
}

Mat2 kinetic_soc_factor(Momentum p, const ModelParams& params, double dt) {
  const double lambda = soc_gap(p, params);
  const cplx kinetic = std::polar(1.0, -0.5 * (p.px * p.px + p.py * p.py) * dt);
  const double c = std::cos(lambda * dt);
  const double s = dt * sinc(lambda * dt);  // sin(lambda dt) / lambda
  const double bx = params.v0 * p.px;
  const double by = params.v1 * p.py;
  Mat2 m;
  // cos I - i sin/lambda (bx sigma_x + by sigma_y)
  m(0, 0) = c;
  m(1, 1) = c;
  m(0, 1) = -kI * s * cplx(bx, -by);
  m(1, 0) = -kI * s * cplx(bx, by);
  return kinetic * m;
}

GaugeFields gauge_fields(Momentum p) {
  const double p2 = p.px * p.px + p.py * p.py;
  if (std::sqrt(p2) < kConicalTolerance) {
    throw Error(ErrorKind::Singular, "gauge fields diverge at the conical intersection");
  }
  GaugeFields out;
  out.berry = Eigen::Vector2d(-p.py, p.px) / (2.0 * p2);
  out.born_huang = 1.0 / (8.0 * p2);
  return out;
}

Mat2 nonabelian_commutator(const ModelParams& params) {
  const Mat2 ax = params.v0 * pauli_x();
  const Mat2 ay = params.v1 * pauli_y();
  return ax * ay - ay * ax;
}

}  // namespace somb
