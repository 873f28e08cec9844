#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "horolab/flows.hpp"
#include "horolab/parallel.hpp"
#include "horolab/thermo.hpp"
#include "json.hpp"

namespace horolab::window {

using LegendreFn = std::function<double(std::span<const double>)>;

// m_E * T / (2 pi sigma T*)^{d/2} * exp(T* (H(xi / T*) - 1)) with T* = ln T.
double key_lemma_rhs(double mE, double sigma, int d, double T, std::span<const double> xi, const LegendreFn& H);

// Running integrals of psi along a family of sample orbits: evaluate(times)
// returns one row per sample with the integral over [0, t] for each time.
struct OccupationSource {
  std::string name;
  std::size_t samples = 0;
  double sup_psi = 1.0;
  std::function<std::vector<std::vector<double>>(const std::vector<double>& times, Exec exec)> evaluate;
};

// Horocycle orbits of Haar-random starts on sheet 0 of a cover, psi a bump
// over the ball of the given radius on sheet 0.
OccupationSource geometric_source(const flows::Cover& cover, double radius, std::size_t samples, std::uint64_t seed,
                                  double dt = flows::kHorocycleStep);

// psi identically equal to `value` (integral value * t).
OccupationSource constant_source(double value, std::size_t samples);

// Target set of the symbolic model: base cylinders times a list of sheets
// (an empty list means every sheet).
struct SymbolicEvent {
  std::function<bool(std::span<const int>)> base;
  std::vector<ZVec> sheets;
};
// Cylinders starting with symbol 0, on sheet 0 and the first unit sheet.
SymbolicEvent default_event(std::size_t d);

struct SymbolicSetup {
  const thermo::ShiftModel* model = nullptr;
  thermo::RpfData rpf;
  std::unique_ptr<thermo::Suspension> suspension;
  thermo::PressureCurve curve;
  double sigma = 0.0;
  SymbolicEvent event;
  double base_mass = 0.0;
  std::size_t pool_size = 0;
  std::uint64_t seed = 0;
  double H(std::span<const double> x) const { return thermo::legendre_H(curve, x); }
};

SymbolicSetup make_symbolic(const thermo::ShiftModel& m, SymbolicEvent event, std::size_t pool_size,
                            std::uint64_t seed, const std::vector<double>& axis);

// Distribution of the displacement D_s of Haar-started suspension orbits,
// joint with the event that the orbit starts in the base, at fixed times s.
class DisplacementTable {
public:
  DisplacementTable(const SymbolicSetup& setup, std::vector<double> s_values, Exec exec);
  // Pr(start in base, D_s = x), s one of the tabulated times.
  double probability(std::size_t s_index, const ZVec& x) const;
  std::size_t index_of(double s) const;
  // T * sum_e Pr(start in base, D_{ln T} = xi - e), with ln T clamped at 0.
  double occupation(double T, const ZVec& xi) const;
  const std::vector<double>& s_values() const { return s_; }

private:
  const SymbolicSetup* setup_;
  std::vector<double> s_;
  std::vector<std::vector<std::pair<std::int64_t, long>>> hist_;  // sorted by key
};

// Empirical occupation of the event along Haar-random suspension orbits,
// estimated from the pooled displacement law.
OccupationSource symbolic_source(const SymbolicSetup& setup, std::size_t samples, std::uint64_t seed);

struct WindowReport {
  std::string kind;    // "window1" or "window2"
  std::string source;
  double parameter = 0.0;  // eta or delta
  bool found = false;
  double fitted = 0.0;     // r or c
  double pass_rate = 0.0;
  double burn_factor = 10.0;
  std::vector<double> T_grid;
  std::vector<double> ratios;   // per sample, worst ratio over eligible T at the fitted value
  std::vector<double> burn_in;  // per sample T0 (NaN when never reached)
  std::size_t eligible = 0;
  bool degenerate = false;      // no sample ever passed the burn-in
  std::vector<std::pair<double, double>> scan;         // (r or c, pass rate)
  std::vector<std::pair<double, double>> sensitivity;  // (burn-in factor, pass rate at the fitted value)
  std::vector<double> quantiles() const;               // ratios at 10%, 50%, 90%
};

nlohmann::json to_json(const WindowReport& r);

// Largest r in {0.05, ..., 0.95} with int_0^{rT} <= eta int_0^T for at least
// 90% of the samples at every grid T past the sample's burn-in.
WindowReport verify_window_I(const OccupationSource& src, double eta, const std::vector<double>& T_grid,
                             Exec exec = Exec::parallel, double burn_factor = 10.0);
// Smallest c in {0.005, ..., 1} with int_T^{(1+delta)T} <= c int_0^T for at
// least 90% of the samples at every grid T past the burn-in.
WindowReport verify_window_II(const OccupationSource& src, double delta, const std::vector<double>& T_grid,
                              Exec exec = Exec::parallel, double burn_factor = 10.0);

struct KeyLemmaBox {
  double box = 0.0;          // |xi_{T*} / T*|_inf <= box
  std::size_t in_box = 0;
  bool underpowered = false;
  double median_abs_log = 0.0;
  double spread = 0.0;       // interquartile range of the log ratios
  std::vector<double> log_ratios;
};

struct KeyLemmaReport {
  double T = 0.0;
  double mE = 0.0;
  double sigma = 0.0;
  std::size_t samples = 0;
  std::vector<KeyLemmaBox> boxes;
};

nlohmann::json to_json(const KeyLemmaReport& r);

// Compares the pooled occupation estimate with the Key Lemma formula for
// samples whose displacement lies in each box.
std::vector<KeyLemmaReport> verify_key_lemma(const SymbolicSetup& setup, const std::vector<double>& T_grid,
                                             std::size_t samples, std::uint64_t seed,
                                             const std::vector<double>& boxes, Exec exec = Exec::parallel);

} // namespace horolab::window
