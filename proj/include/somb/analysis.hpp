#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "somb/grid.hpp"
#include "somb/model.hpp"
#include "somb/propagators.hpp"

namespace somb {

using Vec3 = Eigen::Vector3d;

/// Reduced spinor density matrix [[P1, C], [C*, P2]] with C = <psi1|psi2>.
///
/// This is the convention of the Bloch map u = 2 Re C, v = -2 Im C,
/// w = P1 - P2 (it is the complex conjugate of tr_space |Psi><Psi|). Solid
/// angles and geometric phases computed from it are consistent with each
/// other; their overall sign is mirrored relative to the other convention.
Mat2 reduced_density(const SpinorField& f);
Mat2 reduced_density(double p1, double p2, cplx coherence);

struct BlochSample {
  double tau = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  cplx coherence{};
  Vec3 r = Vec3::Zero();
  double purity() const { return r.norm(); }
};

BlochSample bloch_sample(double tau, double p1, double p2, cplx coherence);
BlochSample bloch_sample(const Observation& o);
Vec3 bloch_vector(const Mat2& rho);

// Shares the bit space of MonitorFlag so a series row carries one flags word.
enum BerryFlag : unsigned {
  kBerryDegenerate = 8u,
};

struct BerryTrace {
  std::vector<double> times;
  std::vector<double> gamma;            // wrapped to (-pi, pi]
  std::vector<double> gamma_unwrapped;  // continuous companion series
  std::vector<double> lambda1;          // eigenvalue of the tracked vector
  std::vector<double> lambda2;
  std::vector<double> overlap;          // |<phi_k-1|phi_k>|, 1 at k = 0
  std::vector<unsigned> flags;
  double min_overlap = 1.0;
};

struct DensitySample {
  double tau = 0.0;
  Mat2 rho;
};

inline constexpr double kPurityTolerance = 1e-6;
inline constexpr double kMinTrackingOverlap = 0.9;
inline constexpr double kDegeneracyTolerance = 1e-9;

/// Non-cyclic geometric phase of the dominant eigenvector of rho(tau).
///
/// gamma_N = arg<phi(0)|phi(N)> - sum_k arg<phi(k)|phi(k+1)>, which is
/// invariant under rephasing of any phi(k). The eigenvector is followed by
/// maximal overlap with its predecessor, starting from the largest-eigenvalue
/// eigenvector of the (pure) initial density matrix.
///
/// Throws Error(Contract) if rho(0) is not pure within kPurityTolerance and
/// Error(Undersampled) if consecutive tracked vectors overlap less than
/// kMinTrackingOverlap. Near-degenerate samples are flagged, not rejected.
BerryTrace berry_phase(const std::vector<DensitySample>& samples);

/// Same evaluation for an explicit sequence of state vectors (already
/// tracked); used to check gauge invariance.
double pancharatnam_phase(const std::vector<Eigen::Vector2cd>& states);

/// Dominant eigenvector of a 2x2 Hermitian matrix and its eigenvalues.
struct Eigen2 {
  std::array<double, 2> values;            // ascending
  std::array<Eigen::Vector2cd, 2> vectors;
};
Eigen2 eigen_hermitian(const Mat2& m);

/// Signed solid angle enclosed by a path of unit vectors closed by the
/// shortest geodesic from its last point back to the first, as a fan of
/// spherical triangles; result in (-2pi, 2pi].
///
/// Throws Error(Geodesic) if consecutive points, or the endpoint and the
/// start, are antipodal, and Error(Contract) if a point is not unit length.
double solid_angle(const std::vector<Vec3>& path);

/// Signed solid angle of the spherical triangle (a, b, c).
double triangle_solid_angle(const Vec3& a, const Vec3& b, const Vec3& c);

/// Wraps an angle to (-pi, pi].
double wrap_pi(double angle);

struct RelationReport {
  double max_residual = 0.0;  // max |wrap(gamma + Omega/2)|
  std::size_t used = 0;
  std::size_t excluded = 0;   // mixed samples, |r| <= 0.9
};

/// Compares gamma(tau) with -Omega(tau)/2 on the near-pure samples.
RelationReport relation_check(const BerryTrace& berry, const std::vector<double>& omega,
                              const std::vector<double>& purity, double min_purity = 0.9);

struct PhononNumbers {
  double nx = 0.0;
  double ny = 0.0;
};

/// n_i = <p_i^2>/2 + <i^2>/2.
PhononNumbers phonon_numbers(const SpinorField& f);
PhononNumbers phonon_numbers(const Observation& o);

/// Component-summed density on the momentum grid, axes sorted ascending.
struct MomentumDensity {
  std::vector<double> px;
  std::vector<double> py;
  std::vector<double> values;  // row-major [ix][iy]
  double dpx = 0.0;
  double dpy = 0.0;

  double at(std::size_t ix, std::size_t iy) const { return values[ix * py.size() + iy]; }
  double integral() const;
  /// Bilinear interpolation; zero outside the sampled square.
  double interpolate(double qx, double qy) const;
};

MomentumDensity momentum_distribution(const SpinorField& f);

/// Same layout for position-space density (used after time of flight).
MomentumDensity position_distribution(const SpinorField& f);

inline constexpr int kRingSamples = 720;
inline constexpr double kNodeWindowDegrees = 10.0;

/// Density sampled on the circle |p| = radius at `samples` equally spaced
/// azimuths starting from theta = 0.
std::vector<double> ring_profile(const MomentumDensity& dist, double radius,
                                 int samples = kRingSamples);

/// (max over the +-window around theta = pi  -  rho(pi)) / max over the ring.
/// Near 1 for a node at theta = pi, <= 0 for an antinode.
double node_contrast(const MomentumDensity& dist, double radius,
                     double window_degrees = kNodeWindowDegrees);

/// |<e^{i theta}>| of the density restricted to an annulus; for a wrapped
/// Gaussian in theta of width sigma this equals exp(-sigma^2 / 2).
double azimuthal_resultant(const MomentumDensity& dist, double r_min, double r_max);

struct CollapseEstimate {
  double spread_rate = 0.0;   // d sigma_theta / d tau from the fit
  double sigma0 = 0.0;
  double tau_col = 0.0;       // half-width arc reaches the ring circumference
  std::size_t samples_used = 0;
};

/// Fits sigma_theta(tau)^2 = sigma0^2 + (rate tau)^2 to the azimuthal spread
/// sigma_theta = sqrt(-2 ln R) over samples with R in [r_floor, r_ceiling],
/// and returns the time at which the 1/e half-width sqrt2 sigma_theta covers
/// a full turn (2 pi).
CollapseEstimate estimate_collapse_time(const std::vector<double>& times,
                                        const std::vector<double>& resultant,
                                        double r_floor = 0.5, double r_ceiling = 0.98);

/// P1, P2 per sample.
std::vector<std::array<double, 2>> populations_series(const std::vector<Observation>& run);

}  // namespace somb
