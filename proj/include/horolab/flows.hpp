#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "horolab/parallel.hpp"
#include "horolab/surface.hpp"

namespace horolab::flows {

using surface::Character;
using surface::CoverPoint;
using surface::FuchsianSpec;

enum class Flow { geodesic, horocycle };

inline constexpr double kGeodesicStep = 0.1;
inline constexpr double kHorocycleStep = 0.05;

// Cover geometry bundled for the flow routines.
struct Cover {
  const FuchsianSpec* spec;
  const Character* phi;
};

// Right translation by a_t (geodesic) or u_t (horocycle) followed by domain
// reduction; the deck coordinate accumulates the reduction increment. Long
// times are split into chunks so intermediate matrices stay bounded.
CoverPoint evolve(const CoverPoint& p, Flow kind, double t, const Cover& cover);

// Same point translated by a deck element with character value n.
CoverPoint deck_shift(const CoverPoint& p, const ZVec& n);

struct Trajectory {
  CoverPoint start;
  Flow kind;
  double step;
  std::vector<std::pair<double, CoverPoint>> samples;
};

Trajectory trace(const CoverPoint& start, Flow kind, double step, std::size_t count, const Cover& cover);

// Deck coordinate after geodesic time T, by stepped evolution.
ZVec xi_T(const CoverPoint& p, double T, const Cover& cover, double step = kGeodesicStep);

// xi_T at each time of an increasing grid, along one stepped geodesic.
std::vector<ZVec> xi_path(const CoverPoint& p, const std::vector<double>& times, const Cover& cover,
                          double step = kGeodesicStep);

using ScalarField = std::function<double(const CoverPoint&)>;

// Composite-midpoint quadrature of psi along the horocycle orbit on [0, T].
double birkhoff_integral(const CoverPoint& p, const ScalarField& psi, double T, double dt, const Cover& cover);

// Running integrals: entry j is the integral over [0, j*h] with h = T / n.
struct CumulativeIntegral {
  double h;
  std::vector<double> values;

  double at(double t) const;  // linear interpolation, clamped to [0, T]
};
CumulativeIntegral birkhoff_cumulative(const CoverPoint& p, const ScalarField& psi, double T, double dt,
                                       const Cover& cover);

// Running integral sampled at an increasing list of times (one walk to the
// last time; values between grid points are interpolated linearly).
std::vector<double> birkhoff_at_times(const CoverPoint& p, const ScalarField& psi, const std::vector<double>& times,
                                      double dt, const Cover& cover);

// Continuous bump supported on the sheet xi = sheet, within `radius` of i.
ScalarField domain_bump(const ZVec& sheet, double radius);

using Target = std::function<bool(const CoverPoint&)>;

// |xi|_inf <= R and the base point within `radius` of i.
Target ball_target(long R, double radius);
Target default_target(const FuchsianSpec& spec);

struct ReturnSet {
  double tmax = 0.0;
  double dt = 0.0;
  std::vector<std::pair<double, double>> intervals;  // disjoint, sorted, within [-tmax, tmax]

  bool empty() const { return intervals.empty(); }
  double measure() const;
};

ReturnSet return_set(const CoverPoint& p, const Target& target, double tmax, double dt, const Cover& cover);

struct ThickResult {
  bool pass = false;
  std::optional<double> first_failing_t;  // infimum of the t in range whose windows miss the set
};

// Does the set meet [-K t, -t] u [t, K t]?
bool meets_window(const ReturnSet& rs, double K, double t);

// Checks every t in [dt, tmax / K] exactly, from the interval structure.
ThickResult k_thick_check(const ReturnSet& rs, double K);

// Smallest K of the grid for which the check passes.
std::optional<double> smallest_thick_K(const ReturnSet& rs, const std::vector<double>& K_grid);

CoverPoint random_start(const FuchsianSpec& spec, const Character& phi, std::mt19937_64& rng);

// --- ensemble kernels ---

// xi_T for `samples` Haar-random starts at each grid time; row i uses seed derive_seed(seed, i).
std::vector<std::vector<ZVec>> xi_ensemble(const Cover& cover, std::size_t samples, std::uint64_t seed,
                                           const std::vector<double>& times, double step, Exec exec);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;         // least squares with intercept
  double slope0 = 0.0;     // through the origin
  double r2_origin = 0.0;  // 1 - SS_res / SS_tot (centred) for the through-origin fit
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct CltReport {
  std::vector<double> times;
  std::vector<double> mean;      // first component of xi_T
  std::vector<double> variance;  // first component
  LinearFit fit;
  double max_mean_over_T = 0.0;  // componentwise max |mean| / T at the last time
  double lil_statistic = 0.0;    // mean over samples of max_{t >= t0} |xi_t| / sqrt(t ln ln t)
};
CltReport clt_statistics(const std::vector<std::vector<ZVec>>& xi, const std::vector<double>& times);

} // namespace horolab::flows
