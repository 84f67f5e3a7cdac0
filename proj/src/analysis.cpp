#include "somb/analysis.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "somb/error.hpp"

namespace somb {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Circle samples a sorted axis in ascending order starting from FFT order.
std::vector<int> sorted_order(int n) {
  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = (k + n / 2) % n;
  return order;
}

MomentumDensity density_on_sorted_axes(const SpinorField& f, bool momentum) {
  const auto& g = f.grid();
  MomentumDensity out;
  const auto ox = sorted_order(g.nx());
  const auto oy = sorted_order(g.ny());
  out.px.resize(g.nx());
  out.py.resize(g.ny());
  for (int a = 0; a < g.nx(); ++a) out.px[a] = momentum ? g.px(ox[a]) : g.x(a);
  for (int b = 0; b < g.ny(); ++b) out.py[b] = momentum ? g.py(oy[b]) : g.y(b);
  out.dpx = momentum ? g.dpx() : g.dx();
  out.dpy = momentum ? g.dpy() : g.dy();
  out.values.assign(g.size(), 0.0);
  for (int c = 0; c < f.components(); ++c) {
    auto d = f.comp(c);
    for (int a = 0; a < g.nx(); ++a) {
      for (int b = 0; b < g.ny(); ++b) {
        const int i = momentum ? ox[a] : a;
        const int j = momentum ? oy[b] : b;
        out.values[static_cast<std::size_t>(a) * g.ny() + b] += std::norm(d[g.index(i, j)]);
      }
    }
  }
  return out;
}

}  // namespace

Mat2 reduced_density(double p1, double p2, cplx coherence) {
  Mat2 rho;
  rho << p1, coherence, std::conj(coherence), p2;
  return rho;
}

Mat2 reduced_density(const SpinorField& f) {
  if (f.components() != 2) throw Error(ErrorKind::Contract, "reduced density needs a spinor field");
  const double w = f.weight();
  auto a = f.comp(0);
  auto b = f.comp(1);
  double p1 = 0.0, p2 = 0.0;
  cplx c{};
  for (std::size_t k = 0; k < a.size(); ++k) {
    p1 += std::norm(a[k]);
    p2 += std::norm(b[k]);
    c += std::conj(a[k]) * b[k];
  }
  return reduced_density(p1 * w, p2 * w, c * w);
}

Vec3 bloch_vector(const Mat2& rho) {
  const cplx c = rho(0, 1);
  return Vec3(2.0 * c.real(), -2.0 * c.imag(), (rho(0, 0) - rho(1, 1)).real());
}

BlochSample bloch_sample(double tau, double p1, double p2, cplx coherence) {
  BlochSample s;
  s.tau = tau;
  s.p1 = p1;
  s.p2 = p2;
  s.coherence = coherence;
  s.r = Vec3(2.0 * coherence.real(), -2.0 * coherence.imag(), p1 - p2);
  return s;
}

BlochSample bloch_sample(const Observation& o) {
  return bloch_sample(o.tau, o.p1, o.p2, o.coherence);
}

Eigen2 eigen_hermitian(const Mat2& m) {
  const double a = m(0, 0).real();
  const double b = m(1, 1).real();
  const cplx c = m(0, 1);
  const double mean = 0.5 * (a + b);
  const double half = std::hypot(0.5 * (a - b), std::abs(c));
  Eigen2 out;
  out.values = {mean - half, mean + half};
  for (int k = 0; k < 2; ++k) {
    const double lam = out.values[k];
    Eigen::Vector2cd v1(c, lam - a);
    Eigen::Vector2cd v2(lam - b, std::conj(c));
    Eigen::Vector2cd v = v1.norm() >= v2.norm() ? v1 : v2;
    if (v.norm() < 1e-300) {
      v = (k == 1) == (a >= b) ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
    }
    out.vectors[k] = v.normalized();
  }
  return out;
}

double wrap_pi(double angle) {
  double r = std::remainder(angle, kTwoPi);  // [-pi, pi]
  if (r <= -kPi) r += kTwoPi;
  return r;
}

BerryTrace berry_phase(const std::vector<DensitySample>& samples) {
  if (samples.empty()) throw Error(ErrorKind::Contract, "berry_phase: empty sample sequence");
  BerryTrace out;
  const Eigen2 e0 = eigen_hermitian(samples.front().rho);
  const double trace0 = e0.values[0] + e0.values[1];
  if (!(e0.values[0] <= kPurityTolerance * trace0)) {
    throw Error(ErrorKind::Contract, "berry_phase: initial density matrix is not pure (lambda_min = " +
                                         std::to_string(e0.values[0]) + ")");
  }
  const Eigen::Vector2cd phi0 = e0.vectors[1];
  Eigen::Vector2cd phi = phi0;
  double sum_arg = 0.0;
  auto push = [&](double tau, double gamma, double l1, double l2, double ov, unsigned flag) {
    const double unwrapped =
        out.gamma.empty() ? gamma : out.gamma_unwrapped.back() + wrap_pi(gamma - out.gamma.back());
    out.times.push_back(tau);
    out.gamma.push_back(gamma);
    out.gamma_unwrapped.push_back(unwrapped);
    out.lambda1.push_back(l1);
    out.lambda2.push_back(l2);
    out.overlap.push_back(ov);
    out.flags.push_back(flag);
  };
  push(samples.front().tau, 0.0, e0.values[1], e0.values[0], 1.0, 0u);

  for (std::size_t k = 1; k < samples.size(); ++k) {
    const Eigen2 e = eigen_hermitian(samples[k].rho);
    unsigned flag = 0;
    Eigen::Vector2cd next;
    int pick = 1;
    if (e.values[1] - e.values[0] < kDegeneracyTolerance) {
      // Any vector is an eigenvector; keep the previous one.
      flag |= kBerryDegenerate;
      next = phi;
    } else {
      const double o0 = std::abs(phi.dot(e.vectors[0]));
      const double o1 = std::abs(phi.dot(e.vectors[1]));
      pick = o1 >= o0 ? 1 : 0;
      next = e.vectors[pick];
    }
    const cplx step = phi.dot(next);  // <phi_k|phi_k+1>
    const double ov = std::abs(step);
    if (ov < kMinTrackingOverlap) {
      throw Error(ErrorKind::Undersampled, "berry_phase: tracked eigenvector overlap " +
                                               std::to_string(ov) + " at tau=" +
                                               std::to_string(samples[k].tau));
    }
    out.min_overlap = std::min(out.min_overlap, ov);
    sum_arg += std::arg(step);
    phi = next;
    const double gamma = wrap_pi(std::arg(phi0.dot(phi)) - sum_arg);
    push(samples[k].tau, gamma, e.values[pick], e.values[1 - pick], ov, flag);
  }
  return out;
}

double pancharatnam_phase(const std::vector<Eigen::Vector2cd>& states) {
  if (states.empty()) return 0.0;
  double sum_arg = 0.0;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) sum_arg += std::arg(states[k].dot(states[k + 1]));
  return wrap_pi(std::arg(states.front().dot(states.back())) - sum_arg);
}

double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double num = a.dot(b.cross(c));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

double solid_angle(const std::vector<Vec3>& path) {
  if (path.size() < 2) return 0.0;
  for (const auto& n : path) {
    if (std::abs(n.norm() - 1.0) > 1e-9) {
      throw Error(ErrorKind::Contract, "solid_angle: path points must be unit vectors");
    }
  }
  constexpr double kAntipodal = 1e-9;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if ((path[k] + path[k + 1]).norm() < kAntipodal) {
      throw Error(ErrorKind::Geodesic, "solid_angle: consecutive points are antipodal");
    }
  }
  if ((path.front() + path.back()).norm() < kAntipodal) {
    throw Error(ErrorKind::Geodesic, "solid_angle: endpoint is antipodal to the start");
  }

  // Fan of triangles from an apex over every edge, including the closing
  // geodesic. With the apex at path[0] this is the plain fan; the sum mod 4pi
  // does not depend on the apex, so an apex far from every antipode is used
  // when path[0] would make a triangle degenerate.
  auto clearance = [&](const Vec3& q) {
    double m = 2.0;
    for (const auto& n : path) m = std::min(m, (q + n).norm());
    return m;
  };
  Vec3 apex = path.front();
  if (clearance(apex) < 1e-3) {
    const Vec3 candidates[] = {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(),
                               -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
    double best = clearance(apex);
    for (const auto& q : candidates) {
      const double c = clearance(q);
      if (c > best) {
        best = c;
        apex = q;
      }
    }
  }
  double omega = 0.0;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    omega += triangle_solid_angle(apex, path[k], path[k + 1]);
  }
  omega += triangle_solid_angle(apex, path.back(), path.front());
  double r = std::fmod(omega, 4.0 * kPi);
  if (r <= -kTwoPi) r += 4.0 * kPi;
  if (r > kTwoPi) r -= 4.0 * kPi;
  return r;
}

RelationReport relation_check(const BerryTrace& berry, const std::vector<double>& omega,
                              const std::vector<double>& purity, double min_purity) {
  if (omega.size() != berry.gamma.size() || purity.size() != berry.gamma.size()) {
    throw Error(ErrorKind::Contract, "relation_check: series lengths differ");
  }
  RelationReport rep;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (purity[k] <= min_purity) {
      ++rep.excluded;
      continue;
    }
    ++rep.used;
    rep.max_residual = std::max(rep.max_residual, std::abs(wrap_pi(berry.gamma[k] + 0.5 * omega[k])));
  }
  return rep;
}

PhononNumbers phonon_numbers(const SpinorField& f) {
  PhononNumbers n;
  n.nx = 0.5 * expectation(f, Observable::Px2) + 0.5 * expectation(f, Observable::X2);
  n.ny = 0.5 * expectation(f, Observable::Py2) + 0.5 * expectation(f, Observable::Y2);
  return n;
}

PhononNumbers phonon_numbers(const Observation& o) {
  return {0.5 * (o.px2 + o.x2), 0.5 * (o.py2 + o.y2)};
}

double MomentumDensity::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * dpx * dpy;
}

double MomentumDensity::interpolate(double qx, double qy) const {
  const double fx = (qx - px.front()) / dpx;
  const double fy = (qy - py.front()) / dpy;
  const double nx = static_cast<double>(px.size() - 1);
  const double ny = static_cast<double>(py.size() - 1);
  if (fx < 0.0 || fy < 0.0 || fx > nx || fy > ny) return 0.0;
  const auto ix = std::min(static_cast<std::size_t>(fx), px.size() - 2);
  const auto iy = std::min(static_cast<std::size_t>(fy), py.size() - 2);
  const double tx = fx - static_cast<double>(ix);
  const double ty = fy - static_cast<double>(iy);
  return (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
         (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1);
}

MomentumDensity momentum_distribution(const SpinorField& f) {
  const SpinorField m = f.rep() == Rep::Momentum ? f : to_momentum(f);
  return density_on_sorted_axes(m, true);
}

MomentumDensity position_distribution(const SpinorField& f) {
  const SpinorField p = f.rep() == Rep::Position ? f : to_position(f);
  return density_on_sorted_axes(p, false);
}

std::vector<double> ring_profile(const MomentumDensity& dist, double radius, int samples) {
  std::vector<double> out(samples);
  for (int m = 0; m < samples; ++m) {
    const double theta = kTwoPi * m / samples;
    out[m] = dist.interpolate(radius * std::cos(theta), radius * std::sin(theta));
  }
  return out;
}

double node_contrast(const MomentumDensity& dist, double radius, double window_degrees) {
  const auto ring = ring_profile(dist, radius, kRingSamples);
  const int centre = kRingSamples / 2;
  const int half = static_cast<int>(std::lround(window_degrees / 360.0 * kRingSamples));
  double window_max = 0.0;
  for (int m = centre - half; m <= centre + half; ++m) window_max = std::max(window_max, ring[m]);
  const double ring_max = *std::max_element(ring.begin(), ring.end());
  if (!(ring_max > 0.0)) throw Error(ErrorKind::Numeric, "node_contrast: empty ring");
  return (window_max - ring[centre]) / ring_max;
}

double azimuthal_resultant(const MomentumDensity& dist, double r_min, double r_max) {
  cplx s{};
  double total = 0.0;
  for (std::size_t a = 0; a < dist.px.size(); ++a) {
    for (std::size_t b = 0; b < dist.py.size(); ++b) {
      const double r = std::hypot(dist.px[a], dist.py[b]);
      if (r < r_min || r > r_max) continue;
      const double rho = dist.at(a, b);
      s += rho * std::polar(1.0, std::atan2(dist.py[b], dist.px[a]));
      total += rho;
    }
  }
  if (!(total > 0.0)) throw Error(ErrorKind::Numeric, "azimuthal_resultant: empty annulus");
  return std::abs(s) / total;
}

CollapseEstimate estimate_collapse_time(const std::vector<double>& times,
                                        const std::vector<double>& resultant, double r_floor,
                                        double r_ceiling) {
  if (times.size() != resultant.size()) {
    throw Error(ErrorKind::Contract, "estimate_collapse_time: series lengths differ");
  }
  // Least squares for sigma^2 = a + b t^2.
  double s1 = 0, st = 0, stt = 0, sy = 0, sty = 0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double R = resultant[k];
    if (R < r_floor || R > r_ceiling) continue;
    const double t2 = times[k] * times[k];
    const double y = -2.0 * std::log(R);
    s1 += 1;
    st += t2;
    stt += t2 * t2;
    sy += y;
    sty += t2 * y;
    ++used;
  }
  if (used < 3) throw Error(ErrorKind::Numeric, "estimate_collapse_time: fewer than 3 usable samples");
  const double det = s1 * stt - st * st;
  const double b = (s1 * sty - st * sy) / det;
  const double a = (sy - b * st) / s1;
  if (!(b > 0.0)) throw Error(ErrorKind::Numeric, "estimate_collapse_time: spread is not growing");
  CollapseEstimate est;
  est.spread_rate = std::sqrt(b);
  est.sigma0 = std::sqrt(std::max(a, 0.0));
  est.tau_col = std::sqrt(std::max(2.0 * kPi * kPi - a, 0.0) / b);
  est.samples_used = used;
  return est;
}

std::vector<std::array<double, 2>> populations_series(const std::vector<Observation>& run) {
  std::vector<std::array<double, 2>> out;
  out.reserve(run.size());
  for (const auto& o : run) out.push_back({o.p1, o.p2});
  return out;
}

}  // namespace somb
