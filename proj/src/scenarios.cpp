#include "somb/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

#include "somb/error.hpp"

namespace somb {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
std::vector<T> run_tasks(std::vector<std::function<T()>> tasks) {
  std::vector<T> out;
  out.reserve(tasks.size());
  const std::size_t workers = static_cast<std::size_t>(scenario_threads());
  if (workers <= 1 || tasks.size() <= 1) {
    for (auto& t : tasks) out.push_back(t());
    return out;
  }
  for (std::size_t begin = 0; begin < tasks.size(); begin += workers) {
    const std::size_t end = std::min(tasks.size(), begin + workers);
    std::vector<std::future<T>> pending;
    for (std::size_t k = begin; k < end; ++k)
      pending.push_back(std::async(std::launch::async, tasks[k]));
    for (auto& f : pending) out.push_back(f.get());
  }
  return out;
}

SpinorField initial_for(Engine engine, const GaussianSpec& spec, const GridSpec& grid) {
  return engine == Engine::SingleSurface ? make_initial_scalar(spec, grid)
                                         : make_initial(spec, grid);
}

std::vector<double> sweep_values(const ScenarioConfig& cfg, bool include_base) {
  std::vector<double> gs;
  if (include_base || cfg.g_sweep.empty()) gs.push_back(cfg.model.g11);
  for (double g : cfg.g_sweep)
    if (std::find(gs.begin(), gs.end(), g) == gs.end()) gs.push_back(g);
  return gs;
}

ModelParams with_g(ModelParams m, double g) {
  m.g11 = g;
  m.g22 = g;
  return m;
}

double unwrapped_azimuth_turn(const std::vector<Observation>& obs, std::vector<double>& turned) {
  turned.assign(obs.size(), 0.0);
  if (obs.empty()) return 0.0;
  double prev = std::atan2(obs[0].mean_py, obs[0].mean_px);
  double acc = 0.0;
  for (std::size_t k = 1; k < obs.size(); ++k) {
    const double a = std::atan2(obs[k].mean_py, obs[k].mean_px);
    acc += wrap_pi(a - prev);
    prev = a;
    turned[k] = acc;
  }
  return acc;
}

double value_at(const std::vector<double>& times, const std::vector<double>& values, double t) {
  if (times.empty()) return kNaN;
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return values.front();
  if (it == times.end()) return values.back();
  const std::size_t k = static_cast<std::size_t>(it - times.begin());
  const double w = (t - times[k - 1]) / (times[k] - times[k - 1]);
  return values[k - 1] + w * (values[k] - values[k - 1]);
}

std::vector<DensitySample> density_samples(const std::vector<Observation>& obs) {
  std::vector<DensitySample> s;
  s.reserve(obs.size());
  for (const auto& o : obs) s.push_back({o.tau, reduced_density(o.p1, o.p2, o.coherence)});
  return s;
}

/// Solid angle of the normalized Bloch path up to each sample; NaN where the
/// path is undefined (zero Bloch vector or antipodal closure).
std::vector<double> solid_angle_series(const std::vector<BlochSample>& bloch) {
  std::vector<double> omega(bloch.size(), kNaN);
  std::vector<Vec3> path;
  bool broken = false;
  for (std::size_t k = 0; k < bloch.size(); ++k) {
    const double r = bloch[k].r.norm();
    if (r < 1e-12) broken = true;
    if (broken) continue;
    path.push_back(bloch[k].r / r);
    try {
      omega[k] = solid_angle(path);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Geodesic) throw;
    }
  }
  return omega;
}

unsigned sample_flags(const Observation& o, const StepScheme& sc, double norm0) {
  unsigned f = 0;
  if (std::abs(o.norm - norm0) > sc.norm_tol) f |= kFlagNormDrift;
  if (o.edge_mass > sc.edge_tol) f |= kFlagEdgeMass;
  if (o.momentum_edge_mass > sc.edge_tol) f |= kFlagMomentumEdge;
  return f;
}

Series make_series(const std::string& label, Engine engine, double g,
                   const std::vector<Observation>& obs, const StepScheme& sc,
                   const BerryTrace* berry) {
  Series s{label, engine, g, {}};
  const int comps = engine == Engine::SingleSurface ? 1 : 2;
  const double norm0 = obs.empty() ? 1.0 : obs.front().norm;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    auto row = series_row(obs[k], comps);
    row.flags |= sample_flags(obs[k], sc, norm0);
    if (berry != nullptr && k < berry->gamma.size()) {
      row.gamma = berry->gamma[k];
      row.gamma_unwrapped = berry->gamma_unwrapped[k];
      row.flags |= berry->flags[k];
    }
    s.rows.push_back(row);
  }
  return s;
}

std::string g_label(double g) {
  std::ostringstream os;
  os << "g" << g;
  return os.str();
}

std::string engine_label(Engine e) {
  switch (e) {
    case Engine::Full: return "full";
    case Engine::SingleSurface: return "single_surface";
    case Engine::FreeFlight: return "free_flight";
  }
  return "unknown";
}

void add_monitor(Bundle& b, const std::string& label, const MonitorLog& m) {
  b.monitors.push_back(m);
  b.monitor_labels.push_back(label);
}

void common_notes(Bundle& b) {
  b.notes["time_unit"] = "1/omega of the trap; about 4 ms for omega/2pi = 40 Hz";
  b.notes["bloch_convention"] =
      "rho = [[P1, C], [C*, P2]], C = <psi1|psi2>, r = (2 Re C, -2 Im C, P1 - P2)";
}

}  // namespace

const char* to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::BerryTrace: return "berry_trace";
    case ScenarioId::SelfInterference: return "self_interference";
    case ScenarioId::TimeOfFlight: return "time_of_flight";
    case ScenarioId::PhononSwap: return "phonon_swap";
    case ScenarioId::NonabelianRoundtrip: return "nonabelian_roundtrip";
    case ScenarioId::Custom: return "custom";
  }
  return "unknown";
}

ScenarioId scenario_from_string(const std::string& name) {
  for (auto id : {ScenarioId::BerryTrace, ScenarioId::SelfInterference, ScenarioId::TimeOfFlight,
                  ScenarioId::PhononSwap, ScenarioId::NonabelianRoundtrip, ScenarioId::Custom})
    if (name == to_string(id)) return id;
  throw Error(ErrorKind::Parse, "unknown scenario '" + name + "'");
}

void ScenarioConfig::validate() const {
  model.validate();
  initial.validate();
  scheme.validate();
  auto bad = [](const std::string& what) { throw Error(ErrorKind::Contract, what); };
  if (duration && !(*duration > 0.0 && std::isfinite(*duration))) bad("duration must be positive");
  if (!(period_cap > 0.0)) bad("period_cap must be positive");
  if (!(sample_every > 0.0)) bad("sample_every must be positive");
  for (double t : snapshot_times)
    if (!(t >= 0.0) || (duration && t > *duration + 0.5 * scheme.dt))
      bad("snapshot time outside the run");
  for (double g : g_sweep)
    if (!std::isfinite(g)) bad("g_sweep entries must be finite");
  if (id == ScenarioId::TimeOfFlight) {
    if (!(tau_release >= 0.0)) bad("tau_release must be non-negative");
    if (!(tau_tof > 0.0)) bad("tau_tof must be positive");
    if (!(tof_dt > 0.0)) bad("tof_dt must be positive");
    if (tof_pad < 1 || !is_power_of_two(tof_pad)) bad("tof_pad must be a power of two");
  }
  if (engine != Engine::FreeFlight) check_momentum_reach(grid, model, initial.width);
  if (gaussian_mass_outside(initial, grid) > 1e-10)
    throw Error(ErrorKind::Setup, "initial Gaussian does not fit the domain");
}

long ScenarioConfig::steps_at(double tau) const {
  return static_cast<long>(std::llround(tau / scheme.dt));
}

ScenarioConfig default_config(ScenarioId id) {
  ScenarioConfig c;
  c.id = id;
  const double s = 1.0 / std::sqrt(2.0);
  c.initial.a1 = s;
  c.initial.a2 = -s;
  switch (id) {
    case ScenarioId::BerryTrace:
      c.model = ModelParams::isotropic(4.0, 0.0);
      c.initial.y0 = -3.0;
      c.initial.px0 = 4.0;
      c.period_cap = 10.0;
      c.sample_every = 0.05;
      break;
    case ScenarioId::SelfInterference:
      c.model = ModelParams::isotropic(8.0, 0.0);
      c.initial.px0 = 8.0;
      c.duration = 16.0 * kPi;
      c.snapshot_times = {8.0 * kPi, 12.0 * kPi, 16.0 * kPi};
      c.g_sweep = {0.25, -0.25};
      c.sample_every = 0.5;
      break;
    case ScenarioId::TimeOfFlight:
      c.model = ModelParams::isotropic(8.0, 0.0);
      c.initial.px0 = 8.0;
      c.tau_release = 16.0 * kPi;
      c.duration = c.tau_release;
      c.tau_tof = kPi;
      c.tof_dt = kPi / 8.0;
      c.sample_every = 1.0;
      break;
    case ScenarioId::PhononSwap:
      c.model = ModelParams::isotropic(8.0, 0.0);
      c.initial.px0 = 8.0;
      c.duration = 400.0;
      c.g_sweep = {0.25, 0.0, -0.25};
      c.sample_every = 1.0;
      break;
    case ScenarioId::NonabelianRoundtrip:
      c.model = ModelParams::isotropic(4.0, 0.0);
      c.initial.y0 = -3.0;
      c.initial.px0 = 4.0;
      c.period_cap = 10.0;
      c.sample_every = 0.05;
      break;
    case ScenarioId::Custom:
      c.initial.a1 = 1.0;
      c.initial.a2 = 0.0;
      c.duration = 1.0;
      c.sample_every = 0.1;
      break;
  }
  return c;
}

SeriesRow series_row(const Observation& o, int components) {
  SeriesRow r;
  r.tau = o.tau;
  r.norm = o.norm;
  r.energy = o.energy;
  const auto n = phonon_numbers(o);
  r.nx = n.nx;
  r.ny = n.ny;
  r.gamma = kNaN;
  r.gamma_unwrapped = kNaN;
  if (components == 2) {
    const auto b = bloch_sample(o);
    r.p1 = o.p1;
    r.p2 = o.p2;
    r.u = b.r.x();
    r.v = b.r.y();
    r.w = b.r.z();
    r.r = b.r.norm();
  } else {
    r.p1 = r.p2 = r.u = r.v = r.w = r.r = kNaN;
  }
  return r;
}

std::vector<Observation> sample_run(const Propagator& prop, RunState& state, double tau_end,
                                    double sample_every, const ScenarioConfig& cfg) {
  const long stride = std::max(1L, static_cast<long>(std::llround(sample_every / cfg.scheme.dt)));
  const long end = cfg.steps_at(tau_end);
  std::vector<Observation> obs;
  obs.push_back(prop.observe(state.field, state.tau));
  while (state.steps < end) {
    prop.advance(state, std::min(stride, end - state.steps));
    obs.push_back(prop.observe(state.field, state.tau));
  }
  return obs;
}

double azimuth_turn_time(const std::vector<Observation>& obs, double turn) {
  std::vector<double> turned;
  unwrapped_azimuth_turn(obs, turned);
  for (std::size_t k = 1; k < obs.size(); ++k) {
    const double a = std::abs(turned[k - 1]);
    const double b = std::abs(turned[k]);
    if (b >= turn && a < turn) {
      const double w = (turn - a) / (b - a);
      return obs[k - 1].tau + w * (obs[k].tau - obs[k - 1].tau);
    }
  }
  return kNaN;
}

PeriodEstimate orbital_period(const std::vector<Observation>& obs, double cap) {
  const double t = azimuth_turn_time(obs, 2.0 * kPi);
  if (std::isnan(t) || t > cap) return {cap, true};
  return {t, false};
}

JumpSummary summarize_jump(const std::vector<Observation>& obs, const BerryTrace& berry,
                           double period, double fraction) {
  JumpSummary j;
  j.tau_half = azimuth_turn_time(obs, kPi);
  if (std::isnan(j.tau_half)) {
    j.window_lo = j.window_hi = j.max_abs_gamma_before = j.delta_gamma = kNaN;
    return j;
  }
  j.window_lo = j.tau_half - fraction * period;
  j.window_hi = j.tau_half + fraction * period;
  for (std::size_t k = 0; k < berry.times.size(); ++k)
    if (berry.times[k] < j.window_lo)
      j.max_abs_gamma_before = std::max(j.max_abs_gamma_before, std::abs(berry.gamma[k]));
  j.delta_gamma = value_at(berry.times, berry.gamma_unwrapped, j.window_hi) -
                  value_at(berry.times, berry.gamma_unwrapped, j.window_lo);
  return j;
}

BerryTraceResult run_berry_trace(const ScenarioConfig& cfg) {
  cfg.validate();
  BerryTraceResult res;
  Propagator prop(Engine::Full, cfg.grid, cfg.model, cfg.scheme);
  auto st = prop.start(make_initial(cfg.initial, cfg.grid));
  if (cfg.duration) {
    res.observations = sample_run(prop, st, *cfg.duration, cfg.sample_every, cfg);
    res.period = orbital_period(res.observations, *cfg.duration);
    res.duration = *cfg.duration;
  } else {
    // Sample until <p> has completed one turn or the cap is reached.
    const long stride =
        std::max(1L, static_cast<long>(std::llround(cfg.sample_every / cfg.scheme.dt)));
    const long cap = cfg.steps_at(cfg.period_cap);
    res.observations.push_back(prop.observe(st.field, st.tau));
    std::vector<double> turned;
    while (st.steps < cap) {
      prop.advance(st, std::min(stride, cap - st.steps));
      res.observations.push_back(prop.observe(st.field, st.tau));
      if (std::abs(unwrapped_azimuth_turn(res.observations, turned)) >= 2.0 * kPi) break;
    }
    res.period = orbital_period(res.observations, cfg.period_cap);
    res.duration = st.tau;
  }
  res.monitor = st.monitor;
  for (const auto& o : res.observations) res.bloch.push_back(bloch_sample(o));
  res.berry = berry_phase(density_samples(res.observations));
  res.omega = solid_angle_series(res.bloch);
  std::vector<double> purity;
  for (std::size_t k = 0; k < res.bloch.size(); ++k)
    purity.push_back(std::isnan(res.omega[k]) ? 0.0 : res.bloch[k].purity());
  res.relation = relation_check(res.berry, res.omega, purity);
  res.jump = summarize_jump(res.observations, res.berry, res.period.period);
  return res;
}

const InterferenceRun* SelfInterferenceResult::find(Engine engine, double g) const {
  for (const auto& r : runs)
    if (r.engine == engine && r.g == g) return &r;
  return nullptr;
}

SelfInterferenceResult run_self_interference(const ScenarioConfig& cfg) {
  cfg.validate();
  const double duration = cfg.duration.value_or(16.0 * kPi);
  const double radius = cfg.model.v0;
  std::vector<std::function<InterferenceRun()>> tasks;
  for (double g : sweep_values(cfg, true)) {
    std::vector<Engine> engines{Engine::Full};
    if (cfg.compare_single_surface) engines.push_back(Engine::SingleSurface);
    for (Engine e : engines) {
      tasks.push_back([&cfg, g, e, duration, radius]() {
        InterferenceRun run;
        run.engine = e;
        run.g = g;
        Propagator prop(e, cfg.grid, with_g(cfg.model, g), cfg.scheme);
        auto st = prop.start(initial_for(e, cfg.initial, cfg.grid));
        std::vector<long> snap_steps;
        for (double t : cfg.snapshot_times) snap_steps.push_back(cfg.steps_at(t));
        const long stride =
            std::max(1L, static_cast<long>(std::llround(cfg.sample_every / cfg.scheme.dt)));
        const long end = cfg.steps_at(duration);
        auto record = [&]() {
          run.observations.push_back(prop.observe(st.field, st.tau));
          const bool sample = st.steps % stride == 0 || st.steps == end;
          const bool snap =
              std::find(snap_steps.begin(), snap_steps.end(), st.steps) != snap_steps.end();
          if (!sample && !snap) return;
          auto mom = to_momentum(st.field);
          auto dist = momentum_distribution(mom);
          if (sample) {
            run.times.push_back(st.tau);
            run.resultant.push_back(azimuthal_resultant(dist, std::max(0.0, radius - kRingHalfWidth),
                                                        radius + kRingHalfWidth));
          }
          if (snap) {
            const double c = node_contrast(dist, radius);
            run.snapshots.push_back({st.tau, c, std::move(dist), std::move(mom)});
          }
        };
        record();
        while (st.steps < end) {
          long next = std::min(end, (st.steps / stride + 1) * stride);
          for (long s : snap_steps)
            if (s > st.steps && s < next) next = s;
          prop.advance(st, next - st.steps);
          record();
        }
        try {
          run.collapse = estimate_collapse_time(run.times, run.resultant);
        } catch (const Error&) {
          run.collapse.reset();
        }
        run.monitor = st.monitor;
        return run;
      });
    }
  }
  SelfInterferenceResult res;
  res.runs = run_tasks(std::move(tasks));
  return res;
}

double ring_radius(const MomentumDensity& dist) {
  const double bin = std::min(dist.dpx, dist.dpy);
  double rmax = 0.0;
  for (double x : dist.px) rmax = std::max(rmax, std::abs(x));
  const std::size_t nbins = static_cast<std::size_t>(rmax / bin) + 1;
  std::vector<double> sum(nbins, 0.0);
  std::vector<std::size_t> count(nbins, 0);
  for (std::size_t i = 0; i < dist.px.size(); ++i)
    for (std::size_t j = 0; j < dist.py.size(); ++j) {
      const double r = std::hypot(dist.px[i], dist.py[j]);
      const auto b = static_cast<std::size_t>(r / bin);
      if (b >= nbins) continue;
      sum[b] += dist.at(i, j);
      ++count[b];
    }
  std::size_t best = 0;
  double best_mean = -1.0;
  for (std::size_t b = 0; b < nbins; ++b) {
    if (count[b] == 0) continue;
    const double m = sum[b] / static_cast<double>(count[b]);
    if (m > best_mean) {
      best_mean = m;
      best = b;
    }
  }
  return (static_cast<double>(best) + 0.5) * bin;
}

TimeOfFlightResult run_time_of_flight(const ScenarioConfig& cfg) {
  cfg.validate();
  std::vector<std::function<TofRun()>> tasks;
  std::vector<Engine> engines{Engine::Full};
  if (cfg.compare_single_surface) engines.push_back(Engine::SingleSurface);
  for (Engine e : engines) {
    tasks.push_back([&cfg, e]() {
      TofRun run;
      run.engine = e;
      Propagator trapped(e, cfg.grid, cfg.model, cfg.scheme);
      auto st = trapped.start(initial_for(e, cfg.initial, cfg.grid));
      trapped.advance(st, cfg.steps_at(cfg.tau_release));
      run.released = st.field;
      auto padded = pad_domain(st.field, cfg.tof_pad);
      const auto before = momentum_distribution(padded);
      StepScheme sc = cfg.scheme;
      sc.dt = cfg.tof_dt;
      sc.monitor_every = 1;
      Propagator flight(Engine::FreeFlight, padded.grid(),
                        free_flight_params(cfg.model, cfg.tof_keep_interaction), sc);
      auto fl = flight.start(std::move(padded));
      flight.advance(fl, std::max(1L, static_cast<long>(std::llround(cfg.tau_tof / cfg.tof_dt))));
      // The scalar field carries over as a one-component free flight.
      run.expanded = fl.field;
      const auto after = momentum_distribution(fl.field);
      for (std::size_t k = 0; k < before.values.size(); ++k)
        run.momentum_change = std::max(run.momentum_change, std::abs(after.values[k] - before.values[k]));
      const auto pos = position_distribution(fl.field);
      run.ring_radius = ring_radius(pos);
      run.contrast = node_contrast(pos, run.ring_radius);
      run.monitor = st.monitor;
      run.monitor.max_edge_mass = std::max(run.monitor.max_edge_mass, fl.monitor.max_edge_mass);
      run.monitor.flags |= fl.monitor.flags;
      return run;
    });
  }
  TimeOfFlightResult res;
  res.runs = run_tasks(std::move(tasks));
  return res;
}

SwapSummary summarize_swap(const std::vector<Observation>& obs, double threshold,
                           double min_length) {
  SwapSummary s;
  s.first_cross = s.longest_start = s.longest_length = s.longest_mid = kNaN;
  std::vector<double> excess;
  for (const auto& o : obs) {
    const auto n = phonon_numbers(o);
    excess.push_back((n.ny - n.nx) / (n.nx + n.ny));
  }
  double best = -1.0;
  std::size_t k = 0;
  while (k < obs.size()) {
    s.max_excess = std::max(s.max_excess, excess[k]);
    if (excess[k] <= threshold) {
      ++k;
      continue;
    }
    if (std::isnan(s.first_cross)) s.first_cross = obs[k].tau;
    std::size_t e = k;
    while (e + 1 < obs.size() && excess[e + 1] > threshold) {
      ++e;
      s.max_excess = std::max(s.max_excess, excess[e]);
    }
    const double len = obs[e].tau - obs[k].tau;
    if (len > best) {
      best = len;
      s.longest_start = obs[k].tau;
      s.longest_length = len;
      s.longest_mid = 0.5 * (obs[k].tau + obs[e].tau);
    }
    k = e + 1;
  }
  s.swapped = best >= min_length;
  return s;
}

const PhononRun* PhononSwapResult::find(Engine engine, double g) const {
  for (const auto& r : runs)
    if (r.engine == engine && r.g == g) return &r;
  return nullptr;
}

PhononSwapResult run_phonon_swap(const ScenarioConfig& cfg) {
  cfg.validate();
  const double duration = cfg.duration.value_or(400.0);
  std::vector<std::function<PhononRun()>> tasks;
  for (double g : sweep_values(cfg, false)) {
    std::vector<Engine> engines{Engine::Full};
    if (cfg.compare_single_surface) engines.push_back(Engine::SingleSurface);
    for (Engine e : engines) {
      tasks.push_back([&cfg, g, e, duration]() {
        PhononRun run;
        run.engine = e;
        run.g = g;
        Propagator prop(e, cfg.grid, with_g(cfg.model, g), cfg.scheme);
        auto st = prop.start(initial_for(e, cfg.initial, cfg.grid));
        run.observations = sample_run(prop, st, duration, cfg.sample_every, cfg);
        run.monitor = st.monitor;
        return run;
      });
    }
  }
  PhononSwapResult res;
  res.runs = run_tasks(std::move(tasks));
  return res;
}

RoundtripResult run_nonabelian_roundtrip(const ScenarioConfig& cfg) {
  cfg.validate();
  const double end = cfg.duration.value_or(cfg.period_cap);
  struct Leg {
    std::vector<Observation> obs;
    MonitorLog monitor;
  };
  std::vector<std::function<Leg()>> tasks;
  for (double sign : {1.0, -1.0}) {
    tasks.push_back([&cfg, sign, end]() {
      GaussianSpec spec = cfg.initial;
      spec.y0 = sign * std::abs(cfg.initial.y0);
      Propagator prop(Engine::Full, cfg.grid, cfg.model, cfg.scheme);
      auto st = prop.start(make_initial(spec, cfg.grid));
      Leg leg;
      leg.obs = sample_run(prop, st, end, cfg.sample_every, cfg);
      leg.monitor = st.monitor;
      return leg;
    });
  }
  auto legs = run_tasks(std::move(tasks));
  RoundtripResult res;
  if (cfg.duration) {
    res.period = orbital_period(legs[0].obs, *cfg.duration);
    res.duration = *cfg.duration;
  } else {
    res.period = orbital_period(legs[0].obs, cfg.period_cap);
    res.duration = res.period.period;
  }
  const double limit = res.duration + 0.5 * cfg.scheme.dt;
  for (auto* leg : {&legs[0], &legs[1]})
    std::erase_if(leg->obs, [limit](const Observation& o) { return o.tau > limit; });
  res.cw = std::move(legs[0].obs);
  res.ccw = std::move(legs[1].obs);
  res.monitor_cw = legs[0].monitor;
  res.monitor_ccw = legs[1].monitor;
  const std::size_t n = std::min(res.cw.size(), res.ccw.size());
  for (std::size_t k = 0; k < n; ++k)
    res.interchange_residual =
        std::max(res.interchange_residual, std::abs(res.cw[k].p1 - res.ccw[k].p2));
  return res;
}

CustomResult run_custom(const ScenarioConfig& cfg) {
  cfg.validate();
  CustomResult res;
  const Engine e = cfg.engine;
  const auto params = e == Engine::FreeFlight ? free_flight_params(cfg.model, true) : cfg.model;
  Propagator prop(e, cfg.grid, params, cfg.scheme);
  auto st = prop.start(initial_for(e, cfg.initial, cfg.grid));
  const double duration = cfg.duration.value_or(cfg.period_cap);
  std::vector<double> snaps = cfg.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  res.observations.push_back(prop.observe(st.field, st.tau));
  const long stride = std::max(1L, static_cast<long>(std::llround(cfg.sample_every / cfg.scheme.dt)));
  const long end = cfg.steps_at(duration);
  std::size_t next_snap = 0;
  auto take_snaps = [&]() {
    while (next_snap < snaps.size() && cfg.steps_at(snaps[next_snap]) == st.steps) {
      std::ostringstream label;
      label << "t" << next_snap;
      res.snapshots.push_back({label.str(), st.field, st.tau});
      ++next_snap;
    }
  };
  take_snaps();
  while (st.steps < end) {
    long next = std::min(end, (st.steps / stride + 1) * stride);
    if (next_snap < snaps.size()) next = std::min(next, std::max(st.steps + 1, cfg.steps_at(snaps[next_snap])));
    prop.advance(st, next - st.steps);
    if (st.steps % stride == 0 || st.steps == end)
      res.observations.push_back(prop.observe(st.field, st.tau));
    take_snaps();
  }
  if (prop.components() == 2) res.berry = berry_phase(density_samples(res.observations));
  res.final_field = st.field;
  res.monitor = st.monitor;
  return res;
}

Bundle to_bundle(const ScenarioConfig& cfg, const BerryTraceResult& r) {
  Bundle b;
  b.config = cfg;
  common_notes(b);
  b.series.push_back(make_series("full", Engine::Full, cfg.model.g11, r.observations, cfg.scheme, &r.berry));
  b.scalars["period"] = r.period.period;
  b.scalars["period_capped"] = r.period.capped ? 1.0 : 0.0;
  b.scalars["duration"] = r.duration;
  b.scalars["tau_half"] = r.jump.tau_half;
  b.scalars["jump_window_lo"] = r.jump.window_lo;
  b.scalars["jump_window_hi"] = r.jump.window_hi;
  b.scalars["max_abs_gamma_before"] = r.jump.max_abs_gamma_before;
  b.scalars["delta_gamma"] = r.jump.delta_gamma;
  b.scalars["min_overlap"] = r.berry.min_overlap;
  b.scalars["relation_max_residual"] = r.relation.max_residual;
  b.scalars["relation_used"] = static_cast<double>(r.relation.used);
  b.scalars["relation_excluded"] = static_cast<double>(r.relation.excluded);
  if (!r.omega.empty()) b.scalars["omega_final"] = r.omega.back();
  if (!r.berry.gamma.empty()) b.scalars["gamma_final"] = r.berry.gamma.back();
  b.notes["sign_convention"] =
      "the sign of gamma and Omega follows the Bloch convention above; compare magnitudes";
  if (r.period.capped)
    b.notes["period"] = "orbital period exceeds period_cap; duration capped";
  add_monitor(b, "full", r.monitor);
  return b;
}

Bundle to_bundle(const ScenarioConfig& cfg, const SelfInterferenceResult& r) {
  Bundle b;
  b.config = cfg;
  common_notes(b);
  for (const auto& run : r.runs) {
    const std::string label = engine_label(run.engine) + "_" + g_label(run.g);
    b.series.push_back(make_series(label, run.engine, run.g, run.observations, cfg.scheme, nullptr));
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
      const auto& s = run.snapshots[k];
      std::ostringstream sl;
      sl << label << "_snap" << k;
      b.snapshots.push_back({sl.str(), s.field, s.tau});
      b.scalars["contrast_" + sl.str()] = s.contrast;
      b.scalars["tau_" + sl.str()] = s.tau;
    }
    if (run.collapse) {
      b.scalars["tau_col_" + label] = run.collapse->tau_col;
      b.scalars["spread_rate_" + label] = run.collapse->spread_rate;
    }
    add_monitor(b, label, run.monitor);
  }
  b.notes["g_sweep"] =
      "assumed: the nonzero couplings {+0.25, -0.25} are those of the phonon-swap runs";
  b.notes["resultant_annulus"] = "|p| in [v - 3, v + 3]";
  b.notes["snapshot_times"] = "each time is rounded to the nearest step of dt";
  return b;
}

Bundle to_bundle(const ScenarioConfig& cfg, const TimeOfFlightResult& r) {
  Bundle b;
  b.config = cfg;
  common_notes(b);
  for (const auto& run : r.runs) {
    const std::string label = engine_label(run.engine);
    b.snapshots.push_back({label + "_released", run.released, cfg.tau_release});
    b.snapshots.push_back({label + "_expanded", run.expanded, cfg.tau_release + cfg.tau_tof});
    b.scalars["ring_radius_" + label] = run.ring_radius;
    b.scalars["contrast_" + label] = run.contrast;
    b.scalars["momentum_change_" + label] = run.momentum_change;
    add_monitor(b, label, run.monitor);
  }
  b.notes["tof_interaction"] = cfg.tof_keep_interaction ? "kept" : "switched off";
  b.notes["tof_domain"] = "free flight runs on a zero-padded grid with the same spacing";
  return b;
}

Bundle to_bundle(const ScenarioConfig& cfg, const PhononSwapResult& r) {
  Bundle b;
  b.config = cfg;
  common_notes(b);
  for (const auto& run : r.runs) {
    const std::string label = engine_label(run.engine) + "_" + g_label(run.g);
    b.series.push_back(make_series(label, run.engine, run.g, run.observations, cfg.scheme, nullptr));
    const auto s = summarize_swap(run.observations);
    b.scalars["swapped_" + label] = s.swapped ? 1.0 : 0.0;
    b.scalars["first_cross_" + label] = s.first_cross;
    b.scalars["longest_swap_mid_" + label] = s.longest_mid;
    b.scalars["longest_swap_length_" + label] = s.longest_length;
    b.scalars["max_excess_" + label] = s.max_excess;
    add_monitor(b, label, run.monitor);
  }
  return b;
}

Bundle to_bundle(const ScenarioConfig& cfg, const RoundtripResult& r) {
  Bundle b;
  b.config = cfg;
  common_notes(b);
  b.series.push_back(make_series("cw", Engine::Full, cfg.model.g11, r.cw, cfg.scheme, nullptr));
  b.series.push_back(make_series("ccw", Engine::Full, cfg.model.g11, r.ccw, cfg.scheme, nullptr));
  b.scalars["period"] = r.period.period;
  b.scalars["period_capped"] = r.period.capped ? 1.0 : 0.0;
  b.scalars["duration"] = r.duration;
  b.scalars["interchange_residual"] = r.interchange_residual;
  b.notes["orientation"] = "cw starts at y0 = +|y0|, ccw at y0 = -|y0|";
  if (r.period.capped)
    b.notes["period"] = "orbital period exceeds period_cap; duration capped";
  add_monitor(b, "cw", r.monitor_cw);
  add_monitor(b, "ccw", r.monitor_ccw);
  return b;
}

Bundle to_bundle(const ScenarioConfig& cfg, const CustomResult& r) {
  Bundle b;
  b.config = cfg;
  common_notes(b);
  const bool spinor = cfg.engine != Engine::SingleSurface;
  b.series.push_back(make_series(engine_label(cfg.engine), cfg.engine, cfg.model.g11, r.observations,
                                 cfg.scheme, spinor && !r.berry.gamma.empty() ? &r.berry : nullptr));
  for (const auto& s : r.snapshots) b.snapshots.push_back(s);
  b.snapshots.push_back({"final", r.final_field, r.observations.empty() ? 0.0 : r.observations.back().tau});
  add_monitor(b, engine_label(cfg.engine), r.monitor);
  return b;
}

Bundle run_scenario(const ScenarioConfig& cfg) {
  set_fft_planner(cfg.fft_plan);
  switch (cfg.id) {
    case ScenarioId::BerryTrace: return to_bundle(cfg, run_berry_trace(cfg));
    case ScenarioId::SelfInterference: return to_bundle(cfg, run_self_interference(cfg));
    case ScenarioId::TimeOfFlight: return to_bundle(cfg, run_time_of_flight(cfg));
    case ScenarioId::PhononSwap: return to_bundle(cfg, run_phonon_swap(cfg));
    case ScenarioId::NonabelianRoundtrip: return to_bundle(cfg, run_nonabelian_roundtrip(cfg));
    case ScenarioId::Custom: return to_bundle(cfg, run_custom(cfg));
  }
  throw Error(ErrorKind::Contract, "unknown scenario");
}

int scenario_threads() {
  const char* env = std::getenv("SOMB_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min(n, 64L));
}

}  // namespace somb
