#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "horolab/parallel.hpp"
#include "horolab/zvec.hpp"

namespace horolab::thermo {

// Admissible words of length `depth` of a subshift of finite type. Functions
// on Sigma^+ are discretized as piecewise constants on these cylinders.
class CylinderSpace {
public:
  CylinderSpace() = default;
  CylinderSpace(std::vector<std::vector<int>> transitions, int depth);

  int num_states() const { return n_; }
  int depth() const { return depth_; }
  std::size_t size() const { return count_; }
  const std::vector<std::vector<int>>& transitions() const { return A_; }
  bool allowed(int a, int b) const { return A_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] != 0; }

  std::span<const int> word(std::size_t c) const {
    return {words_.data() + c * static_cast<std::size_t>(depth_), static_cast<std::size_t>(depth_)};
  }
  // Index of the cylinder spelled by the first `depth` symbols, or -1 if inadmissible.
  long index(std::span<const int> w) const;

  // Preimages y of cylinder x under the shift: y = (a, x_0, ..., x_{k-2}).
  const std::vector<std::size_t>& preimages(std::size_t c) const { return pre_[c]; }
  // Forward successors x = (y_1, ..., y_{k-1}, b).
  const std::vector<std::size_t>& successors(std::size_t c) const { return post_[c]; }

private:
  std::vector<std::vector<int>> A_;
  int n_ = 0;
  int depth_ = 0;
  std::size_t count_ = 0;
  std::vector<int> words_;
  std::vector<long> code_to_index_;
  std::vector<std::vector<std::size_t>> pre_;
  std::vector<std::vector<std::size_t>> post_;
};

using CylinderFunction = std::vector<double>;

struct ShiftModel {
  std::string name;
  CylinderSpace space;
  std::size_t d = 1;
  std::vector<double> tau;          // roof on depth-k cylinders (normalized when roof_scale is set)
  std::vector<double> tau_raw;      // roof as supplied
  double roof_scale = 1.0;          // tau = roof_scale * tau_raw
  std::vector<ZVec> f;              // jump f(x_0, x_1), tabulated on cylinders

  int depth() const { return space.depth(); }
  std::size_t size() const { return space.size(); }
};

// Builds a cylinder function by evaluating a function of the cylinder word.
CylinderFunction tabulate(const CylinderSpace& space, const std::function<double(std::span<const int>)>& F);

// F + F o sigma + ... + F o sigma^{n-1} along `word`; F reads `depth` symbols.
double birkhoff_sum(const std::function<double(std::span<const int>)>& F, int depth, std::span<const int> word, int n);
ZVec birkhoff_sum(const std::function<ZVec(std::span<const int>)>& F, int depth, std::span<const int> word, int n);

// (L_w phi)(x) = sum_{sigma y = x} e^{w(y)} phi(y), exact on the cylinder discretization.
CylinderFunction transfer_apply(const CylinderSpace& space, const CylinderFunction& weight,
                                const CylinderFunction& phi);
// (L_w^* nu)(y) = e^{w(y)} sum_{x : y in pre(x)} nu(x).
CylinderFunction transfer_adjoint(const CylinderSpace& space, const CylinderFunction& weight,
                                  const CylinderFunction& nu);

struct RpfData {
  double lambda = 0.0;
  CylinderFunction psi;  // L psi = lambda psi, psi > 0
  CylinderFunction nu;   // L* nu = lambda nu, sum nu = 1, sum psi nu = 1
  long iterations = 0;
  double residual = 0.0;  // |L psi - lambda psi|_inf
};

struct PowerOptions {
  double rel_tol = 1e-12;
  long max_iterations = 100000;
};

RpfData rpf_eigendata(const CylinderSpace& space, const CylinderFunction& weight, const PowerOptions& opt = {});

// log of the leading eigenvalue, from Collatz-Wielandt bounds on the power iterates.
double pressure(const CylinderSpace& space, const CylinderFunction& weight, const PowerOptions& opt = {});

// -beta * tau + <u, f>.
CylinderFunction potential(const ShiftModel& m, double beta, std::span<const double> u);

struct RootOptions {
  double tol = 1e-13;
  int max_iterations = 200;
};

// Root beta of beta -> pressure(-beta tau + <u, f>).
double pressure_root(const ShiftModel& m, std::span<const double> u, const RootOptions& opt = {});

// Rescales the roof so that the root at u = 0 equals one.
ShiftModel normalize_roof(ShiftModel m);

struct PressureCurve {
  std::size_t d = 1;
  std::vector<double> axis;    // the grid is axis^d (product grid)
  std::vector<double> values;  // P on the grid, first coordinate fastest
  double stencil_h = 1e-3;
  std::vector<double> stencil;  // P on the 5^d grid of spacing h/2 centred at 0
  std::vector<double> hessian0; // d x d row-major
  double sigma = 0.0;

  std::size_t grid_size() const;
  std::vector<double> point(std::size_t flat) const;
  double at(std::span<const double> u) const;  // exact grid lookup
};

// Samples P on axis^d and on the stencil around 0 used for the Hessian;
// fills hessian0 and sigma (throws NumericError when the Hessian is not PD).
PressureCurve pressure_curve(const ShiftModel& m, const std::vector<double>& axis, double h = 1e-3);

struct Covariance {
  std::vector<double> matrix;  // d x d
  double sigma;                // |det|^{1/d}
};
// Central differences at 0 with one Richardson level (h and h/2).
Covariance covariance_sigma(const PressureCurve& pc);

// H(x) = inf_u (P(u) - <u, x>) over the grid, refined by a local quadratic fit.
double legendre_H(const PressureCurve& pc, std::span<const double> x);

// Markov chain of the equilibrium state of the weight the RpfData was computed for.
class Suspension {
public:
  Suspension(const ShiftModel& m, const RpfData& rpf);

  const ShiftModel& model() const { return *m_; }
  std::size_t draw_stationary(std::mt19937_64& rng) const;
  std::size_t draw_haar(std::mt19937_64& rng) const;  // stationary, weighted by the roof
  std::size_t step(std::size_t c, std::mt19937_64& rng) const;
  double stationary(std::size_t c) const { return pi_[c]; }
  // Haar mass of the cylinders accepted by `pred` (normalization m(Omega_0) = 1).
  double haar_mass(const std::function<bool(std::span<const int>)>& pred) const;
  double mean_roof() const { return mean_roof_; }

private:
  const ShiftModel* m_;
  std::vector<double> pi_;
  std::vector<double> pi_cdf_;
  std::vector<double> haar_cdf_;
  std::vector<std::vector<double>> next_cdf_;
  double mean_roof_ = 0.0;
};

struct SuspensionSample {
  std::vector<int> word;  // symbols x_0 ... x_{n+k-1}
  ZVec xi;
  double leftover = 0.0;
  long shifts = 0;
};

// Orbit from (x, 0, 0), x stationary, until the accumulated roof exceeds T.
SuspensionSample suspension_sample(const Suspension& s, double T, std::mt19937_64& rng);

// Piecewise-constant record of xi along a suspension orbit started at a
// Haar-random point (x, 0, phase).
struct SuspensionPath {
  std::size_t start_cylinder = 0;
  std::vector<double> jump_times;
  std::vector<ZVec> xi_after;
  ZVec zero;

  const ZVec& xi_at(double t) const;
};
SuspensionPath suspension_path(const Suspension& s, double tmax, std::mt19937_64& rng);

std::vector<SuspensionSample> suspension_ensemble(const Suspension& s, double T, std::size_t samples,
                                                  std::uint64_t seed, Exec exec);

// e^{-s} * psi_val.
double local_stable_length(double s, double psi_val);

// Built-in models: "full2-cosh", "golden-mean", "product2d"; returned with
// normalized roof.
ShiftModel builtin_model(const std::string& name, int depth = 6);
std::vector<std::string> builtin_model_names();

// {states, transitions, depth, tau: {cylinder: value} | {"constant": v}, f: {edge: vector}}
ShiftModel model_from_json(const nlohmann::json& j);

} // namespace horolab::thermo
