#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "somb/analysis.hpp"
#include "somb/fft.hpp"
#include "somb/propagators.hpp"

namespace somb {

enum class ScenarioId {
  BerryTrace,
  SelfInterference,
  TimeOfFlight,
  PhononSwap,
  NonabelianRoundtrip,
  Custom,
};

const char* to_string(ScenarioId id);
/// Throws Error(Parse) for an unknown name.
ScenarioId scenario_from_string(const std::string& name);

/// Fully resolved description of one experiment.
struct ScenarioConfig {
  ScenarioId id = ScenarioId::Custom;
  GridSpec grid{256, 256, 16.0, 16.0};
  ModelParams model;
  GaussianSpec initial;
  StepScheme scheme;
  FftPlanner fft_plan = FftPlanner::Measure;

  /// Total evolution time; nullopt means one measured orbital period of <p>,
  /// capped at period_cap (berry_trace, nonabelian_roundtrip).
  std::optional<double> duration;
  double period_cap = 10.0;
  double sample_every = 0.05;
  std::vector<double> snapshot_times;
  /// Interaction strengths run in addition to (self_interference) or instead
  /// of (phonon_swap) the base model's g.
  std::vector<double> g_sweep;
  bool compare_single_surface = true;
  Engine engine = Engine::Full;  // custom scenario only

  // Time of flight.
  double tau_release = 0.0;
  double tau_tof = 0.0;
  double tof_dt = 0.0;
  int tof_pad = 4;
  bool tof_keep_interaction = false;

  std::string output_dir;
  bool write_snapshots = true;

  void validate() const;
  /// Run length in steps of scheme.dt; a time is mapped to the nearest step.
  long steps_at(double tau) const;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// The parameter set of a scenario before any user override.
ScenarioConfig default_config(ScenarioId id);

/// One row of a series file.
struct SeriesRow {
  double tau = 0.0;
  double p1 = 0.0, p2 = 0.0;
  double u = 0.0, v = 0.0, w = 0.0, r = 0.0;
  double gamma = 0.0, gamma_unwrapped = 0.0;
  double nx = 0.0, ny = 0.0;
  double norm = 0.0, energy = 0.0;
  unsigned flags = 0;
};

struct Series {
  std::string label;
  Engine engine = Engine::Full;
  double g = 0.0;
  std::vector<SeriesRow> rows;
};

struct Snapshot {
  std::string label;
  SpinorField field;  // tau recorded alongside
  double tau = 0.0;
};

/// Everything a run produces, ready for serialization. Scalars and notes go
/// to metadata.json.
struct Bundle {
  ScenarioConfig config;
  std::vector<Series> series;
  std::vector<Snapshot> snapshots;
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> notes;
  std::vector<MonitorLog> monitors;
  std::vector<std::string> monitor_labels;
};

/// Builds a series row from an observation; gamma columns are NaN and filled
/// by the caller when a Berry trace exists. Scalar fields leave the spinor
/// columns NaN.
SeriesRow series_row(const Observation& o, int components);

/// Samples a run every sample_every and returns the observations; the state
/// is advanced to `tau_end`.
std::vector<Observation> sample_run(const Propagator& prop, RunState& state, double tau_end,
                                    double sample_every, const ScenarioConfig& cfg);

struct PeriodEstimate {
  double period = 0.0;
  bool capped = false;
};

/// Time at which the unwrapped azimuth of <p> has turned by `turn` (linear
/// interpolation between samples); NaN if it never does.
double azimuth_turn_time(const std::vector<Observation>& obs, double turn);

/// One orbital period: the azimuth of <p> turns by 2 pi. Returns the cap
/// (flagged) when the samples end first.
PeriodEstimate orbital_period(const std::vector<Observation>& obs, double cap);

// ---------------------------------------------------------------------------

struct JumpSummary {
  double tau_half = 0.0;          // <p> azimuth reaches pi
  double window_lo = 0.0;
  double window_hi = 0.0;
  double max_abs_gamma_before = 0.0;
  double delta_gamma = 0.0;       // gamma_unwrapped(window_hi) - gamma_unwrapped(window_lo)
};

/// Locates the half-period jump: tau_half is the first time the unwrapped
/// azimuth of <p> has turned by pi; the window is tau_half +- fraction * period.
JumpSummary summarize_jump(const std::vector<Observation>& obs, const BerryTrace& berry,
                           double period, double fraction = 0.1);

struct BerryTraceResult {
  PeriodEstimate period;
  double duration = 0.0;
  std::vector<Observation> observations;
  std::vector<BlochSample> bloch;
  BerryTrace berry;
  std::vector<double> omega;
  RelationReport relation;
  JumpSummary jump;
  MonitorLog monitor;
};

BerryTraceResult run_berry_trace(const ScenarioConfig& cfg);

struct RingSnapshot {
  double tau = 0.0;
  double contrast = 0.0;
  MomentumDensity density;
  SpinorField field;  // momentum representation
};

struct InterferenceRun {
  Engine engine = Engine::Full;
  double g = 0.0;
  std::vector<RingSnapshot> snapshots;
  std::vector<double> times;      // resultant samples
  std::vector<double> resultant;  // azimuthal resultant of the ring density
  std::optional<CollapseEstimate> collapse;
  std::vector<Observation> observations;
  MonitorLog monitor;
};

struct SelfInterferenceResult {
  std::vector<InterferenceRun> runs;
  const InterferenceRun* find(Engine engine, double g) const;
};

/// Half-width of the annulus |p| in [v - w, v + w] used for ring statistics.
inline constexpr double kRingHalfWidth = 3.0;

SelfInterferenceResult run_self_interference(const ScenarioConfig& cfg);

struct TofRun {
  Engine engine = Engine::Full;
  SpinorField released;  // position representation at tau_release
  SpinorField expanded;  // padded grid, after tau_tof
  double ring_radius = 0.0;
  double contrast = 0.0;  // node contrast of the position density
  double momentum_change = 0.0;  // max |rho_p after - rho_p before|
  MonitorLog monitor;
};

struct TimeOfFlightResult {
  std::vector<TofRun> runs;
};

/// Radius of the maximum of the azimuthally averaged density.
double ring_radius(const MomentumDensity& dist);

TimeOfFlightResult run_time_of_flight(const ScenarioConfig& cfg);

struct PhononRun {
  Engine engine = Engine::Full;
  double g = 0.0;
  std::vector<Observation> observations;
  MonitorLog monitor;
};

struct SwapSummary {
  bool swapped = false;
  double first_cross = 0.0;     // first time the excess passes the threshold, NaN if never
  double longest_start = 0.0;   // longest interval above the threshold
  double longest_length = 0.0;
  double longest_mid = 0.0;
  double max_excess = 0.0;      // max (n_y - n_x) / (n_x + n_y)
};

inline constexpr double kSwapThreshold = 0.1;
inline constexpr double kSwapMinLength = 10.0;

/// Sustained exchange: the excess (n_y - n_x) / (n_x + n_y) stays above
/// `threshold` for at least `min_length` in one stretch.
SwapSummary summarize_swap(const std::vector<Observation>& obs,
                           double threshold = kSwapThreshold,
                           double min_length = kSwapMinLength);

struct PhononSwapResult {
  std::vector<PhononRun> runs;
  const PhononRun* find(Engine engine, double g) const;
};

PhononSwapResult run_phonon_swap(const ScenarioConfig& cfg);

struct RoundtripResult {
  PeriodEstimate period;
  double duration = 0.0;
  std::vector<Observation> cw;   // y0 = +|y0|
  std::vector<Observation> ccw;  // y0 = -|y0|
  double interchange_residual = 0.0;  // max |P1_cw - P2_ccw|
  MonitorLog monitor_cw, monitor_ccw;
};

RoundtripResult run_nonabelian_roundtrip(const ScenarioConfig& cfg);

struct CustomResult {
  std::vector<Observation> observations;
  BerryTrace berry;  // empty for scalar engines
  std::vector<Snapshot> snapshots;
  SpinorField final_field;
  MonitorLog monitor;
};

CustomResult run_custom(const ScenarioConfig& cfg);

/// Runs the configured scenario and converts its result into a bundle.
Bundle run_scenario(const ScenarioConfig& cfg);

Bundle to_bundle(const ScenarioConfig& cfg, const BerryTraceResult& r);
Bundle to_bundle(const ScenarioConfig& cfg, const SelfInterferenceResult& r);
Bundle to_bundle(const ScenarioConfig& cfg, const TimeOfFlightResult& r);
Bundle to_bundle(const ScenarioConfig& cfg, const PhononSwapResult& r);
Bundle to_bundle(const ScenarioConfig& cfg, const RoundtripResult& r);
Bundle to_bundle(const ScenarioConfig& cfg, const CustomResult& r);

/// Worker count for concurrent sub-runs, from SOMB_THREADS (default 1).
int scenario_threads();

}  // namespace somb
