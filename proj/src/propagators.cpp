#include "somb/propagators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "somb/error.hpp"

namespace somb {

namespace {

// Plain complex product; std::complex operator* goes through the Annex G
// inf/nan recovery path, which dominates the pointwise loops.
inline cplx mul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

inline cplx unit_phase(double angle) { return {std::cos(angle), std::sin(angle)}; }

double trap_potential(const GridSpec& g, int i, int j, bool on) {
  if (!on) return 0.0;
  return 0.5 * (g.x(i) * g.x(i) + g.y(j) * g.y(j));
}

}  // namespace

const char* to_string(SplitKind kind) { return kind == SplitKind::Lie ? "lie" : "strang"; }

const char* to_string(DensityUpdate update) {
  return update == DensityUpdate::Frozen ? "frozen" : "midpoint";
}

const char* to_string(Engine engine) {
  switch (engine) {
    case Engine::Full: return "full";
    case Engine::SingleSurface: return "single_surface";
    case Engine::FreeFlight: return "free_flight";
  }
  return "unknown";
}

void StepScheme::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::Contract, "time step must be positive");
  if (monitor_every < 1) throw Error(ErrorKind::Contract, "monitor cadence must be >= 1");
  if (!(norm_tol > 0.0) || !(edge_tol > 0.0)) {
    throw Error(ErrorKind::Contract, "monitor tolerances must be positive");
  }
}

long StepScheme::steps_for(double duration) const {
  if (duration < 0.0) throw Error(ErrorKind::Contract, "duration must be non-negative");
  const double n = duration / dt;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
    throw Error(ErrorKind::Contract, "duration " + std::to_string(duration) +
                                         " is not an integer multiple of dt " +
                                         std::to_string(dt));
  }
  return static_cast<long>(rounded);
}

ModelParams free_flight_params(const ModelParams& params, bool keep_interaction) {
  ModelParams p;
  p.trap_on = false;
  if (keep_interaction) {
    p.g11 = params.g11;
    p.g22 = params.g22;
    p.g12 = params.g12;
  }
  return p;
}

double edge_mass(const SpinorField& f, int cells) {
  const auto& g = f.grid();
  auto outer = [&](int i, int n) {
    if (f.rep() == Rep::Position) return i < cells || i >= n - cells;
    return i >= n / 2 - cells && i < n / 2 + cells;
  };
  double edge = 0.0;
  double total = 0.0;
  for (int c = 0; c < f.components(); ++c) {
    auto d = f.comp(c);
    for (int i = 0; i < g.nx(); ++i) {
      const bool oi = outer(i, g.nx());
      for (int j = 0; j < g.ny(); ++j) {
        const double rho = std::norm(d[g.index(i, j)]);
        total += rho;
        if (oi || outer(j, g.ny())) edge += rho;
      }
    }
  }
  return total > 0.0 ? edge / total : 0.0;
}

SpinorField pad_domain(const SpinorField& f, int factor) {
  if (f.rep() != Rep::Position) throw Error(ErrorKind::Contract, "pad_domain expects position rep");
  if (factor < 1 || !is_power_of_two(factor)) {
    throw Error(ErrorKind::Contract, "padding factor must be a power of two");
  }
  const auto& g = f.grid();
  GridSpec big(g.nx() * factor, g.ny() * factor, g.Lx() * factor, g.Ly() * factor);
  SpinorField out(big, f.components(), Rep::Position);
  const int ox = (factor - 1) * g.nx() / 2;
  const int oy = (factor - 1) * g.ny() / 2;
  for (int c = 0; c < f.components(); ++c) {
    auto src = f.comp(c);
    auto dst = out.comp(c);
    for (int i = 0; i < g.nx(); ++i)
      for (int j = 0; j < g.ny(); ++j) dst[big.index(i + ox, j + oy)] = src[g.index(i, j)];
  }
  return out;
}

Propagator::Propagator(Engine engine, const GridSpec& grid, const ModelParams& params,
                       const StepScheme& scheme)
    : engine_(engine), grid_(grid), params_(params), scheme_(scheme) {
  params_.validate();
  scheme_.validate();
  if (engine_ == Engine::FreeFlight) {
    params_.trap_on = false;
    params_.v0 = params_.v1 = 0.0;
  }
  const std::size_t n = grid_.size();
  const double dt = scheme_.dt;
  trap_full_.resize(n);
  trap_half_.resize(n);
  for (int i = 0; i < grid_.nx(); ++i) {
    for (int j = 0; j < grid_.ny(); ++j) {
      const double v = trap_potential(grid_, i, j, params_.trap_on);
      trap_full_[grid_.index(i, j)] = unit_phase(-v * dt);
      trap_half_[grid_.index(i, j)] = unit_phase(-v * 0.5 * dt);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  const double dp2_min = std::pow(std::min(grid_.dpx(), grid_.dpy()), 2);
  k_diag_.resize(n);
  if (engine_ == Engine::Full) {
    k_up_.resize(n);
    k_down_.resize(n);
  }
  for (int i = 0; i < grid_.nx(); ++i) {
    for (int j = 0; j < grid_.ny(); ++j) {
      const Momentum p{grid_.px(i), grid_.py(j)};
      const std::size_t k = grid_.index(i, j);
      switch (engine_) {
        case Engine::Full: {
          const Mat2 m = kinetic_soc_factor(p, params_, dt);
          k_diag_[k] = m(0, 0) * inv_n;
          k_up_[k] = m(0, 1) * inv_n;
          k_down_[k] = m(1, 0) * inv_n;
          break;
        }
        case Engine::SingleSurface: {
          double e = aps(p, params_, Branch::Lower);
          if (params_.born_huang_on) {
            e += 1.0 / (8.0 * std::max(p.px * p.px + p.py * p.py, dp2_min));
          }
          k_diag_[k] = unit_phase(-e * dt) * inv_n;
          break;
        }
        case Engine::FreeFlight: {
          const double e = 0.5 * (p.px * p.px + p.py * p.py);
          k_diag_[k] = unit_phase(-e * dt) * inv_n;
          break;
        }
      }
    }
  }
}

std::vector<double> Propagator::interaction_potential(const SpinorField& f) const {
  const std::size_t n = grid_.size();
  std::vector<double> pot(n);
  const cplx* d = f.data().data();
  if (f.components() == 1) {
    for (std::size_t k = 0; k < n; ++k) pot[k] = params_.g11 * std::norm(d[k]);
    return pot;
  }
  const double g11 = params_.g11, g22 = params_.g22, g12 = params_.g12;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx a = d[k], b = d[k + n];
    pot[k] = g11 * std::norm(a) + g22 * std::norm(b) + 2.0 * g12 * (std::conj(a) * b).real();
  }
  return pot;
}

void Propagator::apply_position(SpinorField& f, bool half,
                                const std::vector<double>* potential) const {
  const auto& trap = half ? trap_half_ : trap_full_;
  const double h = half ? 0.5 * scheme_.dt : scheme_.dt;
  const std::size_t n = grid_.size();
  const int nc = f.components();
  cplx* d = f.data().data();
  if (!params_.has_nonlinearity()) {
    for (int c = 0; c < nc; ++c) {
      cplx* dc = d + c * n;
      for (std::size_t k = 0; k < n; ++k) dc[k] = mul(dc[k], trap[k]);
    }
    return;
  }
  // Both components feel the same scalar potential Psi^dagger g Psi. A common
  // phase leaves it unchanged, so the substep is exact.
  const std::vector<double> own = potential ? std::vector<double>{} : interaction_potential(f);
  const std::vector<double>& pot = potential ? *potential : own;
  for (std::size_t k = 0; k < n; ++k) {
    const cplx ph = mul(trap[k], unit_phase(-pot[k] * h));
    for (int c = 0; c < nc; ++c) d[k + c * n] = mul(d[k + c * n], ph);
  }
}

void Propagator::apply_momentum(SpinorField& f) const {
  const std::size_t n = grid_.size();
  const int nc = f.components();
  cplx* d = f.data().data();
  FftPlan(grid_.nx(), grid_.ny(), nc, -1).execute(d);
  if (engine_ == Engine::Full) {
    cplx* d1 = d;
    cplx* d2 = d + n;
    for (std::size_t k = 0; k < n; ++k) {
      const cplx a = d1[k];
      const cplx b = d2[k];
      d1[k] = mul(k_diag_[k], a) + mul(k_up_[k], b);
      d2[k] = mul(k_down_[k], a) + mul(k_diag_[k], b);
    }
  } else {
    for (int c = 0; c < nc; ++c) {
      cplx* dc = d + c * n;
      for (std::size_t k = 0; k < n; ++k) dc[k] = mul(dc[k], k_diag_[k]);
    }
  }
  FftPlan(grid_.nx(), grid_.ny(), nc, +1).execute(d);
}

void Propagator::step_frozen(SpinorField& f) const {
  if (scheme_.kind == SplitKind::Lie) {
    apply_position(f, false, nullptr);
    apply_momentum(f);
  } else {
    apply_position(f, true, nullptr);
    apply_momentum(f);
    apply_position(f, true, nullptr);
  }
}

void Propagator::step_midpoint(SpinorField& f) const {
  SpinorField pred = f;
  step_frozen(pred);
  std::vector<double> mid = interaction_potential(f);
  const std::vector<double> end = interaction_potential(pred);
  for (std::size_t k = 0; k < mid.size(); ++k) mid[k] = 0.5 * (mid[k] + end[k]);
  if (scheme_.kind == SplitKind::Lie) {
    apply_position(f, false, &mid);
    apply_momentum(f);
  } else {
    apply_position(f, true, &mid);
    apply_momentum(f);
    apply_position(f, true, &mid);
  }
}

RunState Propagator::start(SpinorField initial) const {
  if (initial.rep() != Rep::Position) initial = to_position(initial);
  if (!accepts_components(initial.components())) {
    throw Error(ErrorKind::Contract, std::string("engine ") + to_string(engine_) + " expects " +
                                         std::to_string(components()) + " component(s)");
  }
  if (!(initial.grid() == grid_)) throw Error(ErrorKind::Contract, "field grid differs from propagator grid");
  RunState s;
  s.field = std::move(initial);
  s.engine = engine_;
  s.scheme = scheme_;
  s.params = params_;
  s.monitor.norm0 = s.field.norm();
  s.monitor.energy0 = energy(s.field);
  check_monitors(s);
  return s;
}

void Propagator::step(RunState& state) const {
  if (scheme_.density == DensityUpdate::Midpoint && params_.has_nonlinearity()) {
    step_midpoint(state.field);
  } else {
    step_frozen(state.field);
  }
  state.steps += 1;
  state.tau = state.steps * scheme_.dt;
}

void Propagator::advance(RunState& state, long nsteps) const {
  const bool merge = scheme_.kind == SplitKind::Strang &&
                     !(scheme_.density == DensityUpdate::Midpoint && params_.has_nonlinearity());
  long done = 0;
  while (done < nsteps) {
    const long to_monitor = scheme_.monitor_every - state.steps % scheme_.monitor_every;
    const long chunk = std::min(nsteps - done, to_monitor);
    if (merge) {
      // Position substeps leave |psi|^2 untouched, so adjacent half steps fuse
      // into one full step.
      apply_position(state.field, true, nullptr);
      for (long k = 0; k < chunk; ++k) {
        apply_momentum(state.field);
        apply_position(state.field, k + 1 < chunk ? false : true, nullptr);
      }
      state.steps += chunk;
      state.tau = state.steps * scheme_.dt;
    } else {
      for (long k = 0; k < chunk; ++k) step(state);
    }
    done += chunk;
    if (state.steps % scheme_.monitor_every == 0) check_monitors(state);
  }
}

void Propagator::advance_to(RunState& state, double tau) const {
  const long target = scheme_.steps_for(tau);
  if (target < state.steps) throw Error(ErrorKind::Contract, "cannot advance backwards in time");
  advance(state, target - state.steps);
}

void Propagator::check_monitors(RunState& state) const {
  auto& m = state.monitor;
  const double norm = state.field.norm();
  if (!std::isfinite(norm)) throw Error(ErrorKind::Numeric, "field norm is not finite");
  const double drift = std::abs(norm - m.norm0);
  const double edge = edge_mass(state.field);
  const double pedge = edge_mass(to_momentum(state.field));
  m.max_norm_drift = std::max(m.max_norm_drift, drift);
  m.max_edge_mass = std::max(m.max_edge_mass, edge);
  m.max_momentum_edge_mass = std::max(m.max_momentum_edge_mass, pedge);
  if (m.checks > 0) {
    const double e = energy(state.field);
    const double scale = std::max(std::abs(m.energy0), 1e-300);
    m.max_rel_energy_drift = std::max(m.max_rel_energy_drift, std::abs(e - m.energy0) / scale);
  }
  m.checks += 1;
  unsigned flags = 0;
  if (drift > scheme_.norm_tol) flags |= kFlagNormDrift;
  if (edge > scheme_.edge_tol) flags |= kFlagEdgeMass;
  if (pedge > scheme_.edge_tol) flags |= kFlagMomentumEdge;
  m.flags |= flags;
  if (flags && scheme_.strict) {
    throw Error(ErrorKind::Monitor,
                "monitor tolerance exceeded at tau=" + std::to_string(state.tau) +
                    " (norm drift " + std::to_string(drift) + ", edge mass " +
                    std::to_string(edge) + ", momentum edge mass " + std::to_string(pedge) + ")");
  }
}

double Propagator::momentum_energy_density(int i, int j, const cplx* comps,
                                           std::size_t stride, int nc) const {
  const Momentum p{grid_.px(i), grid_.py(j)};
  const double kin = 0.5 * (p.px * p.px + p.py * p.py);
  const std::size_t k = grid_.index(i, j);
  switch (engine_) {
    case Engine::Full: {
      const cplx a = comps[k];
      const cplx b = comps[k + stride];
      const cplx off(params_.v0 * p.px, -params_.v1 * p.py);
      return kin * (std::norm(a) + std::norm(b)) + 2.0 * (std::conj(a) * off * b).real();
    }
    case Engine::SingleSurface: {
      double e = aps(p, params_, Branch::Lower);
      if (params_.born_huang_on) {
        const double dp2_min = std::pow(std::min(grid_.dpx(), grid_.dpy()), 2);
        e += 1.0 / (8.0 * std::max(p.px * p.px + p.py * p.py, dp2_min));
      }
      return e * std::norm(comps[k]);
    }
    case Engine::FreeFlight: {
      double rho = 0.0;
      for (int c = 0; c < nc; ++c) rho += std::norm(comps[k + c * stride]);
      return kin * rho;
    }
  }
  return 0.0;
}

double Propagator::energy(const SpinorField& f) const {
  return observe(f).energy;
}

Observation Propagator::observe(const SpinorField& field, double tau) const {
  const SpinorField pos = field.rep() == Rep::Position ? field : to_position(field);
  const SpinorField mom = to_momentum(pos);
  const std::size_t n = grid_.size();
  const int nc = pos.components();
  Observation o;
  o.tau = tau;

  const double wx = pos.weight();
  const cplx* d = pos.data().data();
  double sx = 0, sy = 0, sx2 = 0, sy2 = 0;
  double rho1 = 0, rho2 = 0, trap = 0, interaction = 0;
  cplx coh{};
  for (int i = 0; i < grid_.nx(); ++i) {
    const double x = grid_.x(i);
    for (int j = 0; j < grid_.ny(); ++j) {
      const double y = grid_.y(j);
      const std::size_t k = grid_.index(i, j);
      const double r1 = std::norm(d[k]);
      const double r2 = nc == 2 ? std::norm(d[k + n]) : 0.0;
      const double r = r1 + r2;
      rho1 += r1;
      rho2 += r2;
      if (nc == 2) coh += std::conj(d[k]) * d[k + n];
      sx += x * r;
      sy += y * r;
      sx2 += x * x * r;
      sy2 += y * y * r;
      trap += trap_potential(grid_, i, j, params_.trap_on) * r;
      const double pot = nc == 2 ? params_.g11 * r1 + params_.g22 * r2 +
                                       2.0 * params_.g12 * (std::conj(d[k]) * d[k + n]).real()
                                 : params_.g11 * r1;
      interaction += 0.5 * pot * r;
    }
  }

  const double wp = mom.weight();
  const cplx* m = mom.data().data();
  double kin = 0.0;
  double spx = 0, spy = 0, spx2 = 0, spy2 = 0;
  for (int i = 0; i < grid_.nx(); ++i) {
    const double px = grid_.px(i);
    for (int j = 0; j < grid_.ny(); ++j) {
      const double py = grid_.py(j);
      const std::size_t k = grid_.index(i, j);
      double r = 0.0;
      for (int c = 0; c < nc; ++c) r += std::norm(m[k + c * n]);
      spx += grid_.px_odd(i) * r;
      spy += grid_.py_odd(j) * r;
      spx2 += px * px * r;
      spy2 += py * py * r;
      kin += momentum_energy_density(i, j, m, n, nc);
    }
  }

  o.norm = (rho1 + rho2) * wx;
  o.p1 = rho1 * wx;
  o.p2 = rho2 * wx;
  o.coherence = coh * wx;
  const double inv = 1.0 / (rho1 + rho2);
  o.mean_x = sx * inv;
  o.mean_y = sy * inv;
  o.x2 = sx2 * inv;
  o.y2 = sy2 * inv;
  const double pnorm = o.norm / wp;  // sum of |Phi|^2 equals norm / wp
  o.mean_px = spx / pnorm;
  o.mean_py = spy / pnorm;
  o.px2 = spx2 / pnorm;
  o.py2 = spy2 / pnorm;
  o.energy = kin * wp + trap * wx + interaction * wx;
  o.edge_mass = edge_mass(pos);
  o.momentum_edge_mass = edge_mass(mom);
  return o;
}

void step_full(RunState& state) {
  Propagator(Engine::Full, state.field.grid(), state.params, state.scheme).step(state);
}

void step_single_surface(RunState& state) {
  Propagator(Engine::SingleSurface, state.field.grid(), state.params, state.scheme).step(state);
}

void step_tof(RunState& state) {
  Propagator(Engine::FreeFlight, state.field.grid(), state.params, state.scheme).step(state);
}

}  // namespace somb
