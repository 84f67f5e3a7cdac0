#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "helpers.hpp"
#include "somb/analysis.hpp"
#include "somb/error.hpp"
#include "somb/propagators.hpp"

using namespace somb;

namespace {
const double kPi = std::numbers::pi;

void coherent_state_check(Engine engine) {
  const GridSpec g(64, 64, 8.0, 8.0);
  const auto prm = ModelParams::isotropic(0.0, 0.0);
  GaussianSpec s;
  s.x0 = 2.0;
  const auto init = engine == Engine::SingleSurface ? make_initial_scalar(s, g) : make_initial(s, g);
  Propagator prop(engine, g, prm, StepScheme{});
  auto st = prop.start(init);
  double err = 0.0;
  for (int k = 1; k <= 25; ++k) {
    prop.advance(st, 250);
    const auto o = prop.observe(st.field, st.tau);
    err = std::max(err, std::abs(o.mean_x - 2.0 * std::cos(st.tau)));
    err = std::max(err, std::abs(o.mean_px + 2.0 * std::sin(st.tau)));
    // Widths stay those of the coherent state.
    err = std::max(err, std::abs(o.x2 - o.mean_x * o.mean_x - 0.5));
    err = std::max(err, std::abs(o.px2 - o.mean_px * o.mean_px - 0.5));
  }
  CHECK(st.tau == doctest::Approx(6.25));
  CHECK(err < 1e-4);
}
}  // namespace

TEST_CASE("step scheme validation") {
  StepScheme s;
  CHECK(s.kind == SplitKind::Strang);
  CHECK(s.dt == 1e-3);
  CHECK(s.density == DensityUpdate::Frozen);
  CHECK(s.steps_for(1.0) == 1000);
  CHECK(s.steps_for(100.0) == 100000);
  CHECK_THROWS_AS(s.steps_for(1.00055), Error);
  s.dt = -1.0;
  CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("coherent state in the trap, full engine") { coherent_state_check(Engine::Full); }
TEST_CASE("coherent state in the trap, single-surface engine") {
  coherent_state_check(Engine::SingleSurface);
}

TEST_CASE("norm drift stays at the roundoff floor for every engine") {
  const GridSpec g(64, 64, 8.0, 8.0);
  GaussianSpec s;
  s.a1 = 1.0 / std::sqrt(2.0);
  s.a2 = -1.0 / std::sqrt(2.0);
  s.px0 = 4.0;
  for (Engine e : {Engine::Full, Engine::SingleSurface, Engine::FreeFlight}) {
    for (double gval : {0.0, 0.25}) {
      const auto prm = ModelParams::isotropic(4.0, gval);
      Propagator prop(e, g, e == Engine::FreeFlight ? free_flight_params(prm, true) : prm,
                      StepScheme{});
      auto st = prop.start(e == Engine::SingleSurface ? make_initial_scalar(s, g) : make_initial(s, g));
      prop.advance(st, 10000);
      CAPTURE(std::string(to_string(e)));
      // Double-precision FFT round trips add about 1e-16 per step.
      CHECK(std::abs(st.field.norm() - 1.0) < 2e-12);
      CHECK(st.monitor.checks == 101);
    }
  }
}

TEST_CASE("norm within 1e-12 after 1e5 linear steps" * doctest::may_fail()) {
  const GridSpec g(64, 64, 8.0, 8.0);
  GaussianSpec s;
  s.a1 = 1.0 / std::sqrt(2.0);
  s.a2 = -1.0 / std::sqrt(2.0);
  s.px0 = 4.0;
  Propagator prop(Engine::Full, g, ModelParams::isotropic(4.0, 0.0), StepScheme{});
  auto st = prop.start(make_initial(s, g));
  prop.advance(st, 100000);
  MESSAGE("norm drift after 1e5 steps: " << st.field.norm() - 1.0);
  CHECK(std::abs(st.field.norm() - 1.0) < 1e-12);
}

TEST_CASE("Lie and midpoint variants are unitary and consistent") {
  const GridSpec g(32, 32, 6.0, 6.0);
  GaussianSpec s;
  s.a1 = 1.0 / std::sqrt(2.0);
  s.a2 = -1.0 / std::sqrt(2.0);
  s.px0 = 3.0;
  const auto prm = ModelParams::isotropic(3.0, 0.5);
  const auto init = make_initial(s, g);
  StepScheme ref;
  ref.dt = 1e-4;
  Propagator pref(Engine::Full, g, prm, ref);
  auto a = pref.start(init);
  pref.advance_to(a, 0.5);
  for (auto kind : {SplitKind::Lie, SplitKind::Strang}) {
    for (auto dens : {DensityUpdate::Frozen, DensityUpdate::Midpoint}) {
      StepScheme sc;
      sc.kind = kind;
      sc.density = dens;
      Propagator p(Engine::Full, g, prm, sc);
      auto b = p.start(init);
      p.advance_to(b, 0.5);
      CHECK(std::abs(b.field.norm() - 1.0) < 1e-12);
      CHECK(l2_distance(a.field, b.field) < (kind == SplitKind::Lie ? 5e-2 : 1e-3));
    }
  }
}

TEST_CASE("single surface gives the sombrero phase on the ring") {
  const GridSpec g(32, 32, 2.0 * kPi, 2.0 * kPi);  // dpx = 0.5
  ModelParams prm = ModelParams::isotropic(4.0, 0.0);
  prm.trap_on = false;
  SpinorField m(g, 1, Rep::Momentum);
  m.comp(0)[g.index(8, 0)] = 1.0;  // p = (4, 0)
  REQUIRE(g.px(8) == doctest::Approx(4.0));
  const auto start = to_position(m);
  Propagator prop(Engine::SingleSurface, g, prm, StepScheme{});
  auto st = prop.start(start);
  prop.step(st);
  const auto after = to_momentum(st.field);
  const cplx ratio = after.comp(0)[g.index(8, 0)] / m.comp(0)[g.index(8, 0)];
  CHECK(std::abs(ratio - std::polar(1.0, 16.0 * 1e-3 / 2.0)) < 1e-13);
}

TEST_CASE("free flight spreads a Gaussian ballistically") {
  const GridSpec g(128, 128, 24.0, 24.0);
  GaussianSpec s;
  const auto init = make_initial(s, g);
  StepScheme sc;
  sc.dt = kPi / 1000.0;
  Propagator prop(Engine::FreeFlight, g, free_flight_params(ModelParams{}, false), sc);
  auto st = prop.start(init);
  const auto before = momentum_distribution(init);
  prop.advance_to(st, kPi);
  const double width = std::sqrt(2.0 * expectation(st.field, Observable::X2));
  CHECK(std::abs(width / std::sqrt(1.0 + kPi * kPi) - 1.0) < 1e-3);
  const auto after = momentum_distribution(st.field);
  double dev = 0.0;
  for (std::size_t k = 0; k < before.values.size(); ++k)
    dev = std::max(dev, std::abs(before.values[k] - after.values[k]));
  CHECK(dev < 1e-12);
}

TEST_CASE("convenience steppers advance time") {
  const GridSpec g(32, 32, 6.0, 6.0);
  GaussianSpec s;
  RunState st;
  st.field = make_initial(s, g);
  st.params = ModelParams::isotropic(2.0, 0.0);
  step_full(st);
  CHECK(st.tau == doctest::Approx(1e-3));
  CHECK(st.steps == 1);
  st.params = free_flight_params(st.params, false);
  step_tof(st);
  CHECK(st.tau == doctest::Approx(2e-3));
  RunState sc;
  sc.field = make_initial_scalar(s, g);
  sc.params = ModelParams::isotropic(2.0, 0.0);
  step_single_surface(sc);
  CHECK(std::abs(sc.field.norm() - 1.0) < 1e-13);
}

TEST_CASE("energy is conserved for the linear model") {
  const GridSpec g(64, 64, 8.0, 8.0);
  GaussianSpec s;
  s.a1 = 1.0 / std::sqrt(2.0);
  s.a2 = -1.0 / std::sqrt(2.0);
  s.px0 = 4.0;
  s.y0 = -2.0;
  Propagator prop(Engine::Full, g, ModelParams::isotropic(4.0, 0.0), StepScheme{});
  auto st = prop.start(make_initial(s, g));
  prop.advance_to(st, 10.0);
  CHECK(st.monitor.max_rel_energy_drift < 1e-6);
  CHECK(std::abs(prop.energy(st.field) - st.monitor.energy0) < 1e-6 * std::abs(st.monitor.energy0));
}

TEST_CASE("energy is conserved with a common interaction potential") {
  const GridSpec g(64, 64, 8.0, 8.0);
  GaussianSpec s;
  s.a1 = 0.6;
  s.a2 = 0.8;
  s.px0 = 3.0;
  for (double gval : {0.5, -0.5}) {
    for (auto density : {DensityUpdate::Frozen, DensityUpdate::Midpoint}) {
      StepScheme sc;
      sc.density = density;
      Propagator prop(Engine::Full, g, ModelParams::isotropic(3.0, gval), sc);
      auto st = prop.start(make_initial(s, g));
      prop.advance_to(st, 4.0);
      CHECK(st.monitor.max_rel_energy_drift < 1e-5);
    }
  }
  // Both components feel g (|psi1|^2 + |psi2|^2): a uniform spinor ratio
  // is kept by the position substep alone.
  ModelParams prm = ModelParams::isotropic(0.0, 2.0);
  prm.trap_on = false;
  StepScheme sc;
  sc.kind = SplitKind::Lie;
  Propagator prop(Engine::Full, g, prm, sc);
  auto st = prop.start(make_initial(s, g));
  const auto before = st.field;
  prop.step(st);
  const std::size_t k = g.index(32, 32);
  const auto r0 = before.comp(1)[k] / before.comp(0)[k];
  const auto r1 = st.field.comp(1)[k] / st.field.comp(0)[k];
  CHECK(std::abs(r1 - r0) < 1e-12);
}

TEST_CASE("rotation by a quarter turn commutes with evolution") {
  const GridSpec g(64, 64, 8.0, 8.0);
  const auto prm = ModelParams::isotropic(2.0, 0.5);
  GaussianSpec s;
  s.a1 = cplx(0.6, 0.0);
  s.a2 = cplx(0.0, 0.8);
  s.x0 = 1.0;
  s.y0 = -0.5;
  s.px0 = 2.0;
  s.py0 = 0.5;
  GaussianSpec r = s;  // (x, y) -> (-y, x), spinor rotated by exp(-i pi sigma_z / 4)
  r.x0 = -s.y0;
  r.y0 = s.x0;
  r.px0 = -s.py0;
  r.py0 = s.px0;
  r.a1 = s.a1 * std::polar(1.0, -kPi / 4);
  r.a2 = s.a2 * std::polar(1.0, kPi / 4);
  Propagator prop(Engine::Full, g, prm, StepScheme{});
  auto a = prop.start(make_initial(s, g));
  auto b = prop.start(make_initial(r, g));
  prop.advance_to(a, 1.0);
  prop.advance_to(b, 1.0);
  const int n = g.nx();
  double dev = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // Rotated density at (x, y) equals the original at (y, -x).
      const auto rot = g.index(i, j);
      const auto orig = g.index(j, (n - i) % n);
      const double ra = std::norm(b.field.comp(0)[rot]) + std::norm(b.field.comp(1)[rot]);
      const double oa = std::norm(a.field.comp(0)[orig]) + std::norm(a.field.comp(1)[orig]);
      dev = std::max(dev, std::abs(ra - oa));
    }
  CHECK(dev < 1e-8);
}

TEST_CASE("monitors flag edge mass and strict mode throws") {
  const GridSpec g(32, 32, 4.0, 4.0);
  SpinorField f(g, 2, Rep::Position);
  for (auto& c : f.comp(0)) c = 1.0;
  f.scale(1.0 / std::sqrt(f.norm()));
  CHECK(edge_mass(f) > 0.1);
  StepScheme sc;
  sc.monitor_every = 1;
  Propagator lax(Engine::Full, g, ModelParams{}, sc);
  auto st = lax.start(f);
  lax.advance(st, 2);
  CHECK((st.monitor.flags & kFlagEdgeMass) != 0u);
  sc.strict = true;
  Propagator strict(Engine::Full, g, ModelParams{}, sc);
  try {
    strict.start(f);
    FAIL("expected a monitor error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Monitor);
  }
}

TEST_CASE("domain padding keeps spacing and norm") {
  const GridSpec g(32, 32, 4.0, 4.0);
  GaussianSpec s;
  s.px0 = 1.0;
  const auto f = make_initial(s, GridSpec(32, 32, 6.0, 6.0));
  const auto p = pad_domain(f, 4);
  CHECK(p.grid().nx() == 128);
  CHECK(p.grid().dx() == doctest::Approx(f.grid().dx()));
  CHECK(p.norm() == doctest::Approx(f.norm()).epsilon(1e-14));
  CHECK(expectation(p, Observable::Px) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(expectation(p, Observable::X) == doctest::Approx(expectation(f, Observable::X)).epsilon(1e-12));
  (void)g;
}
