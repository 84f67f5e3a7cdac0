#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "somb/analysis.hpp"
#include "somb/error.hpp"

using namespace somb;

namespace {
const double kPi = std::numbers::pi;

Mat2 pure_rho(const Vec3& n) {
  Mat2 rho = 0.5 * (Mat2::Identity() + n.x() * pauli_x() + n.y() * pauli_y() + n.z() * pauli_z());
  return rho;
}

std::vector<DensitySample> samples_from(const std::vector<Vec3>& path) {
  std::vector<DensitySample> out;
  for (std::size_t k = 0; k < path.size(); ++k) out.push_back({0.01 * k, pure_rho(path[k])});
  return out;
}

Vec3 slerp(const Vec3& a, const Vec3& b, double t) {
  const double ang = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
  if (ang < 1e-15) return a;
  return (std::sin((1 - t) * ang) * a + std::sin(t * ang) * b) / std::sin(ang);
}

std::vector<Vec3> great_circle_through_poles(int n) {
  std::vector<Vec3> path;
  for (int k = 0; k <= n; ++k) {
    const double t = 2 * kPi * k / n;
    path.emplace_back(std::sin(t), 0.0, std::cos(t));
  }
  return path;
}

double lhuilier(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double ea = std::acos(std::clamp(b.dot(c), -1.0, 1.0));
  const double eb = std::acos(std::clamp(c.dot(a), -1.0, 1.0));
  const double ec = std::acos(std::clamp(a.dot(b), -1.0, 1.0));
  const double s = 0.5 * (ea + eb + ec);
  const double t = std::tan(s / 2) * std::tan((s - ea) / 2) * std::tan((s - eb) / 2) *
                   std::tan((s - ec) / 2);
  return 4.0 * std::atan(std::sqrt(std::max(t, 0.0)));
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

MomentumDensity synthetic_ring(int fringes) {
  MomentumDensity d;
  const int n = 481;
  d.dpx = d.dpy = 0.05;
  for (int k = 0; k < n; ++k) {
    d.px.push_back(-12.0 + k * 0.05);
    d.py.push_back(-12.0 + k * 0.05);
  }
  d.values.resize(n * n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double r = std::hypot(d.px[a], d.py[b]);
      const double th = std::atan2(d.py[b], d.px[a]);
      d.values[a * n + b] = std::exp(-(r - 8.0) * (r - 8.0) / 0.5) * (1 + std::cos(fringes * th));
    }
  return d;
}
}  // namespace

TEST_CASE("reduced density of product and entangled states") {
  const GridSpec g(64, 64, 8.0, 8.0);
  GaussianSpec s;
  s.a1 = 1.0 / std::sqrt(2.0);
  s.a2 = -1.0 / std::sqrt(2.0);
  const auto rho = reduced_density(make_initial(s, g));
  const auto e = eigen_hermitian(rho);
  CHECK(std::abs(e.values[1] - 1.0) < 1e-12);
  CHECK(std::abs(e.values[0]) < 1e-12);
  CHECK(std::abs(rho.trace() - 1.0) < 1e-12);

  // psi1 and psi2 with orthogonal spatial parts (odd and even in x).
  SpinorField f(g, 2, Rep::Position);
  for (int i = 0; i < g.nx(); ++i)
    for (int j = 0; j < g.ny(); ++j) {
      const double x = g.x(i), y = g.y(j);
      const double gauss = std::exp(-0.5 * (x * x + y * y));
      f.comp(0)[g.index(i, j)] = gauss;
      f.comp(1)[g.index(i, j)] = std::sqrt(2.0) * x * gauss;
    }
  f.scale(1.0 / std::sqrt(f.norm()));
  // Equalize the component norms.
  const double n0 = f.component_norm(0), n1 = f.component_norm(1);
  for (auto& c : f.comp(0)) c /= std::sqrt(2 * n0);
  for (auto& c : f.comp(1)) c /= std::sqrt(2 * n1);
  const auto mixed = reduced_density(f);
  CHECK((mixed - 0.5 * Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(bloch_vector(mixed).norm() < 1e-12);
}

TEST_CASE("reduced density is a unit-trace positive matrix for random spinors") {
  const GridSpec g(32, 32, 5.0, 5.0);
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto f = test::random_field(g, 2, seed);
    const auto rho = reduced_density(f);
    CHECK(std::abs(rho.trace() - 1.0) < 1e-12);
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(eigen_hermitian(rho).values[0] >= -1e-12);
    const auto b = bloch_sample(0.0, rho(0, 0).real(), rho(1, 1).real(), rho(0, 1));
    CHECK(std::abs(b.p1 + b.p2 - 1.0) < 1e-10);
    CHECK(b.purity() <= 1.0 + 1e-10);
  }
}

TEST_CASE("Bloch map") {
  const auto b = bloch_sample(0.0, 0.5, 0.5, cplx(-0.5, 0.0));
  CHECK(b.r.x() == doctest::Approx(-1.0));
  CHECK(b.r.y() == 0.0);
  CHECK(b.r.z() == 0.0);
  const auto c = bloch_sample(0.0, 0.5, 0.5, cplx(0.0, 0.5));
  CHECK(c.r.y() == doctest::Approx(-1.0));
  CHECK((bloch_vector(reduced_density(0.9, 0.1, cplx(0.1, 0.2))) - Vec3(0.2, -0.4, 0.8)).norm() <
        1e-15);
}

TEST_CASE("2x2 Hermitian eigen decomposition") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 200; ++t) {
    Mat2 m;
    const double a = n(rng), d = n(rng);
    const cplx c(n(rng), n(rng));
    m << a, c, std::conj(c), d;
    if (t % 10 == 0) m(0, 1) = m(1, 0) = 0.0;
    const auto e = eigen_hermitian(m);
    CHECK(e.values[0] <= e.values[1]);
    for (int k = 0; k < 2; ++k) {
      CHECK((m * e.vectors[k] - e.values[k] * e.vectors[k]).norm() < 1e-12);
      CHECK(e.vectors[k].norm() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("Berry phase of a constant density is zero") {
  std::vector<DensitySample> s(50, DensitySample{0.0, pure_rho(Vec3(0.3, -0.4, std::sqrt(0.75)))});
  for (std::size_t k = 0; k < s.size(); ++k) s[k].tau = 0.05 * k;
  const auto bt = berry_phase(s);
  for (double gam : bt.gamma) CHECK(gam == 0.0);
  CHECK(bt.min_overlap == doctest::Approx(1.0));
}

TEST_CASE("Berry phase of a great circle through the poles is pi") {
  const auto path = great_circle_through_poles(400);
  const auto bt = berry_phase(samples_from(path));
  CHECK(bt.gamma.front() == 0.0);
  CHECK(std::abs(std::abs(bt.gamma.back()) - kPi) < 1e-6);
  CHECK(std::abs(std::abs(solid_angle(path)) - 2 * kPi) < 1e-9);
  CHECK(std::abs(std::abs(bt.gamma_unwrapped.back()) - kPi) < 1e-6);
  CHECK(bt.min_overlap > 0.99);
}

TEST_CASE("Berry phase is gauge invariant") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> ph(-kPi, kPi);
  std::vector<Eigen::Vector2cd> states;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.02 * k;
    const Vec3 n(std::sin(1.1 + 0.3 * std::sin(t)) * std::cos(2 * t),
                 std::sin(1.1 + 0.3 * std::sin(t)) * std::sin(2 * t), std::cos(1.1 + 0.3 * std::sin(t)));
    states.push_back(eigen_hermitian(pure_rho(n)).vectors[1]);
  }
  const double ref = pancharatnam_phase(states);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto s = states;
    for (std::size_t k = 1; k < s.size(); ++k) s[k] *= std::polar(1.0, ph(rng));
    worst = std::max(worst, std::abs(wrap_pi(pancharatnam_phase(s) - ref)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("Berry phase is reparameterization invariant on geodesic polygons") {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<Vec3> corners = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1),
                                     Vec3(-0.6, 0.0, 0.8)};
  auto build = [&](bool random, bool duplicate) {
    std::vector<Vec3> path;
    for (std::size_t c = 0; c + 1 < corners.size(); ++c) {
      std::vector<double> ts = {0.0};
      for (int k = 1; k < 40; ++k) ts.push_back(random ? u(rng) : k / 40.0);
      std::sort(ts.begin(), ts.end());
      for (double t : ts) {
        path.push_back(slerp(corners[c], corners[c + 1], t));
        if (duplicate) path.push_back(path.back());
      }
    }
    path.push_back(corners.back());
    return path;
  };
  const double base = berry_phase(samples_from(build(false, false))).gamma.back();
  CHECK(std::abs(base - berry_phase(samples_from(build(true, false))).gamma.back()) < 1e-8);
  CHECK(std::abs(base - berry_phase(samples_from(build(false, true))).gamma.back()) < 1e-8);
  CHECK(std::abs(base + 0.5 * solid_angle(build(false, false))) < 1e-9);
}

TEST_CASE("Berry phase error conditions") {
  std::vector<DensitySample> mixed = {{0.0, 0.5 * Mat2::Identity()}};
  try {
    berry_phase(mixed);
    FAIL("expected contract error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Contract);
  }
  // Quarter-turn jumps leave too little overlap.
  std::vector<Vec3> coarse = {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, -1)};
  try {
    berry_phase(samples_from(coarse));
    FAIL("expected undersampling error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Undersampled);
  }
  // A path that passes through the maximally mixed state is flagged.
  std::vector<DensitySample> s = {{0.0, pure_rho(Vec3(0, 0, 1))},
                                  {0.1, 0.5 * (Mat2::Identity() + 0.5 * pauli_z())},
                                  {0.2, 0.5 * Mat2::Identity()},
                                  {0.3, 0.5 * (Mat2::Identity() + 0.5 * pauli_z())}};
  const auto bt = berry_phase(s);
  CHECK(bt.flags[2] == kBerryDegenerate);
  CHECK(bt.flags[3] == 0u);
  CHECK(bt.gamma[3] == 0.0);
}

TEST_CASE("solid angle basics") {
  std::vector<Vec3> equator;
  for (int k = 0; k <= 4; ++k) equator.emplace_back(std::cos(k * kPi / 2), std::sin(k * kPi / 2), 0.0);
  CHECK(std::abs(solid_angle(equator) - 2 * kPi) < 1e-9);
  std::reverse(equator.begin(), equator.end());
  CHECK(std::abs(std::abs(solid_angle(equator)) - 2 * kPi) < 1e-9);
  std::vector<Vec3> still(10, Vec3(0.6, 0.0, 0.8));
  CHECK(solid_angle(still) == 0.0);
  // Octant triangle, counterclockwise seen from outside.
  CHECK(solid_angle({Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}) == doctest::Approx(kPi / 2));
  CHECK(solid_angle({Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(0, 1, 0)}) == doctest::Approx(-kPi / 2));
}

TEST_CASE("solid angle agrees with l'Huilier's theorem") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> cap(0.05, 1.5);
  std::normal_distribution<double> n(0, 1);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const Vec3 centre = random_unit(rng);
    const double r = cap(rng);
    std::array<Vec3, 3> v;
    for (auto& p : v) {
      p = (centre + r * Vec3(n(rng), n(rng), n(rng))).normalized();
    }
    const double ours = std::abs(solid_angle({v[0], v[1], v[2]}));
    worst = std::max(worst, std::abs(ours - lhuilier(v[0], v[1], v[2])));
    CHECK(std::abs(std::abs(triangle_solid_angle(v[0], v[1], v[2])) - ours) < 1e-12);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("solid angle is additive under a two-piece split") {
  std::mt19937_64 rng(66);
  std::normal_distribution<double> n(0, 0.15);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vec3> path;
    Vec3 p = random_unit(rng);
    for (int k = 0; k < 60; ++k) {
      path.push_back(p);
      p = (p + Vec3(n(rng), n(rng), n(rng))).normalized();
    }
    const std::size_t m = 20 + t % 20;
    // Split along the chord path[0] -> path[m].
    std::vector<Vec3> first(path.begin(), path.begin() + m + 1);
    std::vector<Vec3> second = {path[0]};
    second.insert(second.end(), path.begin() + m, path.end());
    const double whole = solid_angle(path);
    const double parts = solid_angle(first) + solid_angle(second);
    CHECK(std::abs(wrap_pi(0.5 * (whole - parts))) < 0.5e-9);
  }
}

TEST_CASE("solid angle uses another apex when the start is antipodal to a vertex") {
  // Loop around the equator starting at +x passes through -x.
  std::vector<Vec3> ring;
  for (int k = 0; k <= 360; ++k) {
    const double t = 2 * kPi * k / 360;
    ring.emplace_back(std::cos(t), std::sin(t) * std::cos(0.2), std::sin(t) * std::sin(0.2));
  }
  // A tilted great circle bounds a hemisphere.
  CHECK(std::abs(std::abs(solid_angle(ring)) - 2 * kPi) < 1e-9);
}

TEST_CASE("solid angle geodesic and contract errors") {
  try {
    solid_angle({Vec3(0, 0, 1), Vec3(0, 0, -1)});
    FAIL("expected geodesic error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geodesic);
  }
  try {
    solid_angle({Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 0, -1)});
    FAIL("expected geodesic error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geodesic);
  }
  try {
    solid_angle({Vec3(0, 0, 1.1), Vec3(1, 0, 0)});
    FAIL("expected contract error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Contract);
  }
}

TEST_CASE("relation between Berry phase and solid angle on pure paths") {
  for (const auto& path : {great_circle_through_poles(501), [] {
         std::vector<Vec3> p;
         for (int k = 0; k <= 300; ++k) {
           const double t = 0.015 * k;
           p.emplace_back(std::sin(0.7) * std::cos(t), std::sin(0.7) * std::sin(t), std::cos(0.7));
         }
         return p;
       }()}) {
    const auto bt = berry_phase(samples_from(path));
    std::vector<double> omega, purity;
    for (std::size_t k = 0; k < path.size(); ++k) {
      omega.push_back(solid_angle(std::vector<Vec3>(path.begin(), path.begin() + k + 1)));
      purity.push_back(1.0);
    }
    const auto rep = relation_check(bt, omega, purity);
    CHECK(rep.used == path.size());
    CHECK(rep.max_residual < 1e-6);
  }
}

TEST_CASE("relation check excludes mixed samples") {
  BerryTrace bt;
  bt.gamma = {0.0, 0.1, 2.0, 0.3};
  const std::vector<double> omega = {0.0, -0.2, 0.0, -0.6};
  const std::vector<double> purity = {1.0, 0.95, 0.5, 0.91};
  const auto rep = relation_check(bt, omega, purity);
  CHECK(rep.used == 3);
  CHECK(rep.excluded == 1);
  CHECK(rep.max_residual < 1e-15);
}

TEST_CASE("phonon numbers") {
  const GridSpec g(128, 128, 12.0, 12.0);
  GaussianSpec s;
  auto n = phonon_numbers(make_initial(s, g));
  CHECK(n.nx == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(n.ny == doctest::Approx(0.5).epsilon(1e-12));
  s.px0 = 8.0;
  const auto boosted = make_initial(s, g);
  n = phonon_numbers(boosted);
  CHECK(n.nx == doctest::Approx(32.5).epsilon(1e-10));
  CHECK(n.ny == doctest::Approx(0.5).epsilon(1e-10));
  // Definition-level identity with the oscillator energy.
  const auto f = test::random_field(GridSpec(32, 32, 5.0, 5.0), 2, 4);
  const auto m = phonon_numbers(f);
  const double e = 0.5 * (expectation(f, Observable::Px2) + expectation(f, Observable::Py2) +
                          expectation(f, Observable::X2) + expectation(f, Observable::Y2));
  CHECK(m.nx + m.ny == doctest::Approx(e).epsilon(1e-13));
}

TEST_CASE("momentum distribution") {
  const GridSpec g(64, 64, 8.0, 8.0);
  GaussianSpec s;
  const auto d = momentum_distribution(make_initial(s, g));
  CHECK(std::abs(d.integral() - 1.0) < 1e-10);
  for (std::size_t k = 1; k < d.px.size(); ++k) CHECK(d.px[k] > d.px[k - 1]);
  // Peak at the origin.
  std::size_t best = 0;
  for (std::size_t k = 0; k < d.values.size(); ++k)
    if (d.values[k] > d.values[best]) best = k;
  CHECK(d.px[best / d.py.size()] == 0.0);
  CHECK(d.py[best % d.py.size()] == 0.0);
  CHECK(d.interpolate(0.0, 0.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
  CHECK(d.interpolate(100.0, 0.0) == 0.0);
  const auto p = position_distribution(make_initial(s, g));
  CHECK(std::abs(p.integral() - 1.0) < 1e-12);
}

TEST_CASE("node contrast on synthetic rings") {
  const auto node = synthetic_ring(19);
  const auto anti = synthetic_ring(18);
  const double cn = node_contrast(node, 8.0);
  const double ca = node_contrast(anti, 8.0);
  MESSAGE("node " << cn << " antinode " << ca);
  CHECK(cn > 0.95);
  CHECK(ca <= 0.0);
  CHECK(ring_profile(node, 8.0).size() == static_cast<std::size_t>(kRingSamples));
}

TEST_CASE("azimuthal resultant and collapse estimate") {
  const auto uniform = synthetic_ring(0);
  CHECK(azimuthal_resultant(uniform, 6.0, 10.0) < 1e-6);
  std::vector<double> t, r;
  const double rate = 1.0 / (std::sqrt(2.0) * 8.0), s0 = 0.2;
  for (int k = 0; k <= 100; ++k) {
    t.push_back(0.5 * k);
    r.push_back(std::exp(-0.5 * (s0 * s0 + rate * rate * t.back() * t.back())));
  }
  const auto est = estimate_collapse_time(t, r);
  CHECK(est.spread_rate == doctest::Approx(rate).epsilon(1e-10));
  CHECK(est.sigma0 == doctest::Approx(s0).epsilon(1e-8));
  CHECK(est.tau_col == doctest::Approx(std::sqrt(2 * kPi * kPi - s0 * s0) / rate).epsilon(1e-10));
  CHECK_THROWS_AS(estimate_collapse_time({0.0, 1.0}, {0.9, 0.8}), Error);
}

TEST_CASE("populations series") {
  const GridSpec g(64, 64, 8.0, 8.0);
  GaussianSpec s;
  s.a1 = 1.0 / std::sqrt(2.0);
  s.a2 = -1.0 / std::sqrt(2.0);
  Propagator prop(Engine::Full, g, ModelParams::isotropic(2.0, 0.0), StepScheme{});
  auto st = prop.start(make_initial(s, g));
  std::vector<Observation> run = {prop.observe(st.field, 0.0)};
  prop.advance(st, 200);
  run.push_back(prop.observe(st.field, st.tau));
  const auto pops = populations_series(run);
  CHECK(pops[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pops[0][1] == doctest::Approx(0.5).epsilon(1e-12));
  for (const auto& p : pops) CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
}
