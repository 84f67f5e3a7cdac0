#pragma once

#include <vector>

#include "somb/grid.hpp"
#include "somb/model.hpp"

namespace somb {

enum class SplitKind { Lie, Strang };
enum class DensityUpdate { Frozen, Midpoint };

const char* to_string(SplitKind kind);
const char* to_string(DensityUpdate update);

struct StepScheme {
  SplitKind kind = SplitKind::Strang;
  double dt = 1e-3;
  DensityUpdate density = DensityUpdate::Frozen;
  int monitor_every = 100;
  double norm_tol = 1e-8;
  double edge_tol = 1e-6;
  bool strict = false;

  void validate() const;
  /// Number of steps covering `duration`; throws Error(Contract) unless the
  /// duration is an integer multiple of dt (relative slack 1e-9).
  long steps_for(double duration) const;

  friend bool operator==(const StepScheme&, const StepScheme&) = default;
};

enum class Engine {
  Full,           // two-component spin-orbit GP equation
  SingleSurface,  // scalar dynamics on the lower adiabatic surface, no Berry phase
  FreeFlight,     // kinetic-only ballistic expansion (time of flight)
};

const char* to_string(Engine engine);

enum MonitorFlag : unsigned {
  kFlagNormDrift = 1u,
  kFlagEdgeMass = 2u,
  kFlagMomentumEdge = 4u,
};

struct MonitorLog {
  double norm0 = 0.0;
  double energy0 = 0.0;
  double max_norm_drift = 0.0;
  double max_rel_energy_drift = 0.0;
  double max_edge_mass = 0.0;
  double max_momentum_edge_mass = 0.0;
  long checks = 0;
  unsigned flags = 0;
};

struct RunState {
  SpinorField field;  // always in position representation between steps
  double tau = 0.0;
  long steps = 0;
  Engine engine = Engine::Full;
  StepScheme scheme;
  ModelParams params;
  MonitorLog monitor;
};

/// Everything the analysis layer needs from one snapshot, gathered with a
/// single forward transform.
struct Observation {
  double tau = 0.0;
  double norm = 0.0;
  double p1 = 0.0;  // <psi1|psi1>
  double p2 = 0.0;  // <psi2|psi2>
  cplx coherence{};  // <psi1|psi2>
  double mean_x = 0.0, mean_y = 0.0, mean_px = 0.0, mean_py = 0.0;
  double x2 = 0.0, y2 = 0.0, px2 = 0.0, py2 = 0.0;
  double energy = 0.0;
  double edge_mass = 0.0;
  double momentum_edge_mass = 0.0;
};

/// Density in the outermost `cells` grid cells along every boundary, divided
/// by the total. In momentum representation the boundary is |p| near pi/dx.
double edge_mass(const SpinorField& f, int cells = 4);

/// Split-operator stepper. Tables for the chosen engine are built once at
/// construction; step() and advance() reuse them.
class Propagator {
 public:
  Propagator(Engine engine, const GridSpec& grid, const ModelParams& params,
             const StepScheme& scheme);

  Engine engine() const { return engine_; }
  const GridSpec& grid() const { return grid_; }
  const ModelParams& params() const { return params_; }
  const StepScheme& scheme() const { return scheme_; }
  /// Components the engine evolves. Free flight takes either count.
  int components() const { return engine_ == Engine::SingleSurface ? 1 : 2; }
  bool accepts_components(int nc) const {
    return engine_ == Engine::FreeFlight ? (nc == 1 || nc == 2) : nc == components();
  }

  /// Wraps a position-space field into a run state and records the initial
  /// norm and energy.
  RunState start(SpinorField initial) const;

  void step(RunState& state) const;
  /// nsteps steps; monitors are sampled every scheme.monitor_every steps.
  void advance(RunState& state, long nsteps) const;
  void advance_to(RunState& state, double tau) const;

  /// Gross-Pitaevskii energy functional for this engine's Hamiltonian. The
  /// interaction part is (1/2) int (Psi^dagger g Psi) |Psi|^2, an exact
  /// invariant when g is a multiple of the identity.
  double energy(const SpinorField& f) const;
  Observation observe(const SpinorField& f, double tau = 0.0) const;

  /// Records norm drift and edge mass; throws Error(Monitor) in strict mode
  /// when a tolerance is exceeded.
  void check_monitors(RunState& state) const;

 private:
  void apply_position(SpinorField& f, bool half, const std::vector<double>* potential) const;
  void apply_momentum(SpinorField& f) const;
  void step_frozen(SpinorField& f) const;
  void step_midpoint(SpinorField& f) const;
  /// Psi^dagger g Psi per grid point (g11 |psi|^2 for a scalar field).
  std::vector<double> interaction_potential(const SpinorField& f) const;
  double momentum_energy_density(int i, int j, const cplx* comps, std::size_t stride, int nc) const;

  Engine engine_;
  GridSpec grid_;
  ModelParams params_;
  StepScheme scheme_;
  std::vector<cplx> trap_full_;
  std::vector<cplx> trap_half_;
  // Momentum factor scaled by 1/(nx ny): diagonal and off-diagonal parts of
  // the 2x2 matrix for the spinor engines, diagonal only for scalar engines.
  std::vector<cplx> k_diag_;
  std::vector<cplx> k_up_;
  std::vector<cplx> k_down_;
};

/// Convenience single steps; each call rebuilds the propagator tables.
void step_full(RunState& state);
void step_single_surface(RunState& state);
void step_tof(RunState& state);

/// Parameters of the ballistic expansion: trap and spin-orbit coupling off,
/// scattering kept as given.
ModelParams free_flight_params(const ModelParams& params, bool keep_interaction);

/// Embeds a position-space field into a grid `factor` times larger per axis
/// with the same spacing (zero padding).
SpinorField pad_domain(const SpinorField& f, int factor);

}  // namespace somb
