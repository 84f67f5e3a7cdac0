#include "somb/grid.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "somb/error.hpp"

namespace somb {

namespace {

constexpr double kPi = std::numbers::pi;

// (-1)^(i+j): the DFT index origin sits at -L rather than 0.
inline double checkerboard(int i, int j) { return ((i + j) & 1) ? -1.0 : 1.0; }

void require_finite(const SpinorField& f) {
  for (const auto& z : f.data()) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
      throw Error(ErrorKind::Numeric, "non-finite value in field");
    }
  }
}

}  // namespace

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

const char* to_string(Rep rep) {
  return rep == Rep::Position ? "position" : "momentum";
}

GridSpec::GridSpec(int nx, int ny, double Lx, double Ly)
    : nx_(nx), ny_(ny), Lx_(Lx), Ly_(Ly) {
  if (nx < 8 || ny < 8 || !is_power_of_two(nx) || !is_power_of_two(ny)) {
    throw Error(ErrorKind::Contract, "grid point counts must be powers of two >= 8, got " +
                                         std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (!(Lx > 0.0) || !(Ly > 0.0) || !std::isfinite(Lx) || !std::isfinite(Ly)) {
    throw Error(ErrorKind::Contract, "grid half-extents must be positive");
  }
}

double GridSpec::dpx() const { return kPi / Lx_; }
double GridSpec::dpy() const { return kPi / Ly_; }
double GridSpec::px_max() const { return kPi / dx(); }
double GridSpec::py_max() const { return kPi / dy(); }

double GridSpec::px(int i) const { return (i < nx_ / 2 ? i : i - nx_) * dpx(); }
double GridSpec::py(int j) const { return (j < ny_ / 2 ? j : j - ny_) * dpy(); }

SpinorField::SpinorField(const GridSpec& grid, int components, Rep rep)
    : grid_(grid), rep_(rep), ncomp_(components) {
  if (components != 1 && components != 2) {
    throw Error(ErrorKind::Contract, "field must have 1 or 2 components");
  }
  data_.assign(grid.size() * components, cplx{});
}

std::span<cplx> SpinorField::comp(int c) {
  return std::span<cplx>(data_).subspan(c * grid_.size(), grid_.size());
}

std::span<const cplx> SpinorField::comp(int c) const {
  return std::span<const cplx>(data_).subspan(c * grid_.size(), grid_.size());
}

double SpinorField::weight() const {
  return rep_ == Rep::Position ? grid_.dx() * grid_.dy() : grid_.dpx() * grid_.dpy();
}

double SpinorField::component_norm(int c) const {
  double s = 0.0;
  for (const auto& z : comp(c)) s += std::norm(z);
  return s * weight();
}

double SpinorField::norm() const {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return s * weight();
}

void SpinorField::scale(double factor) {
  for (auto& z : data_) z *= factor;
}

SpinorField to_momentum(const SpinorField& f) {
  if (f.rep() != Rep::Position) {
    throw Error(ErrorKind::Contract, "to_momentum expects a position-space field");
  }
  const auto& g = f.grid();
  SpinorField out = f;
  FftPlan(g.nx(), g.ny(), f.components(), -1).execute(out.data().data());
  const double s = g.dx() * g.dy() / (2.0 * kPi);
  for (int c = 0; c < f.components(); ++c) {
    auto d = out.comp(c);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) d[g.index(i, j)] *= s * checkerboard(i, j);
  }
  out.set_rep_unchecked(Rep::Momentum);
  return out;
}

SpinorField to_position(const SpinorField& f) {
  if (f.rep() != Rep::Momentum) {
    throw Error(ErrorKind::Contract, "to_position expects a momentum-space field");
  }
  const auto& g = f.grid();
  SpinorField out = f;
  for (int c = 0; c < f.components(); ++c) {
    auto d = out.comp(c);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) d[g.index(i, j)] *= checkerboard(i, j);
  }
  FftPlan(g.nx(), g.ny(), f.components(), +1).execute(out.data().data());
  out.scale(g.dpx() * g.dpy() / (2.0 * kPi));
  out.set_rep_unchecked(Rep::Position);
  return out;
}

double expectation(const SpinorField& f, Observable obs) {
  require_finite(f);
  const bool momentum_obs = obs == Observable::Px || obs == Observable::Py ||
                            obs == Observable::Px2 || obs == Observable::Py2;
  const Rep want = momentum_obs ? Rep::Momentum : Rep::Position;
  SpinorField tmp;
  const SpinorField* src = &f;
  if (f.rep() != want) {
    tmp = want == Rep::Momentum ? to_momentum(f) : to_position(f);
    src = &tmp;
  }
  const auto& g = src->grid();
  auto coord = [&](int i, int j) -> double {
    switch (obs) {
      case Observable::X: return g.x(i);
      case Observable::Y: return g.y(j);
      case Observable::X2: return g.x(i) * g.x(i);
      case Observable::Y2: return g.y(j) * g.y(j);
      case Observable::Px: return g.px_odd(i);
      case Observable::Py: return g.py_odd(j);
      case Observable::Px2: return g.px(i) * g.px(i);
      case Observable::Py2: return g.py(j) * g.py(j);
    }
    return 0.0;
  };
  double num = 0.0;
  double den = 0.0;
  for (int c = 0; c < src->components(); ++c) {
    auto d = src->comp(c);
    for (int i = 0; i < g.nx(); ++i) {
      for (int j = 0; j < g.ny(); ++j) {
        const double rho = std::norm(d[g.index(i, j)]);
        num += coord(i, j) * rho;
        den += rho;
      }
    }
  }
  if (den == 0.0) throw Error(ErrorKind::Numeric, "expectation of a zero field");
  return num / den;
}

double l2_distance(const SpinorField& a, const SpinorField& b) {
  if (!(a.grid() == b.grid()) || a.rep() != b.rep() || a.components() != b.components()) {
    throw Error(ErrorKind::Contract, "l2_distance: incompatible fields");
  }
  double s = 0.0;
  auto da = a.data();
  auto db = b.data();
  for (std::size_t k = 0; k < da.size(); ++k) s += std::norm(da[k] - db[k]);
  return std::sqrt(s * a.weight());
}

}  // namespace somb
