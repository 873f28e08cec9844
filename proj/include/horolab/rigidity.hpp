#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "horolab/flows.hpp"
#include "horolab/parallel.hpp"
#include "horolab/surface.hpp"
#include "json.hpp"

namespace horolab::rigidity {

using psl2::GroupElement;
using surface::Character;
using surface::FuchsianSpec;

// Real polynomial, coefficients in increasing degree.
struct Poly {
  std::vector<double> coeffs;
  int degree() const;  // -1 for the zero polynomial
  double operator()(double x) const;
  Poly derivative() const;
};

// Real roots in [lo, hi], sorted; exact formulas up to degree 3.
std::vector<double> real_roots(const Poly& p, double lo, double hi);
double sup_abs(const Poly& p, double lo, double hi);

struct GoodCheck {
  double lhs = 0.0;  // |{x in J : |p(x)| < eps}|
  double rhs = 0.0;  // C (eps / sup_J |p|)^alpha |J|
  double C = 0.0;
  double alpha = 0.0;
  bool pass = false;
};

// C = k (k+1)^{1/k}, alpha = 1/k with k = max(1, degree) unless given.
GoodCheck c_alpha_good_check(const Poly& p, double lo, double hi, double eps, std::optional<int> k = std::nullopt);

struct WeakGood {
  double lhs = 0.0;     // int chi_K |Theta|
  double mass = 0.0;    // int chi_K
  double sup = 0.0;     // sup_[0,T] |Theta|
  double C_est = 0.0;   // lhs / (mass * sup); NaN when the orbit never meets K
  bool underpowered = false;
};

// Midpoint quadrature along the horocycle orbit of p on [0, T].
WeakGood weak_good_empirical(const flows::CoverPoint& p, const flows::Target& K, const Poly& theta, double T,
                             double dt, const flows::Cover& cover);

// Joint kernel of characters, each read modulo its modulus (0 = in Z).
struct SubgroupSpec {
  const FuchsianSpec* base = nullptr;
  std::vector<std::pair<Character, long>> components;
  std::size_t rows() const;
  // Label of the coset Gamma * gamma from the abelianization of gamma.
  ZVec label(const ZVec& ab) const;
  bool contains(const ZVec& ab) const { return label(ab).is_zero(); }
};

SubgroupSpec subgroup_from_json(const nlohmann::json& j, const FuchsianSpec& base);

// Generators of the lattice {v in Z^n : label(v) = 0}.
std::vector<ZVec> kernel_lattice(const SubgroupSpec& s);

struct IndexPair {
  std::optional<long> idx1;  // [Gamma_1 : Gamma_1 cap g0^-1 Gamma_2 g0]; nullopt = infinite
  std::optional<long> idx2;
};

// g0 is a word in the base lattice; kernels of characters are normal, so the
// conjugate subgroup is Gamma_2 itself.
IndexPair intersection_index(const SubgroupSpec& s1, const SubgroupSpec& s2, const std::vector<int>& g0);

struct JoiningModel {
  SubgroupSpec spec1;
  SubgroupSpec spec2;
  std::vector<int> g0;
  double translation = 0.0;  // second factor additionally moved by u_translation
};

struct FactorPoint {
  GroupElement rep;
  ZVec label;
};

struct JoiningPoint {
  double t = 0.0;
  FactorPoint first;
  FactorPoint second;
};

// Graph of g -> (Gamma_1 g, Gamma_2 g0 g u_s) and its diagonal horocycle orbits.
class JoiningSampler {
public:
  explicit JoiningSampler(JoiningModel jm);
  long fiber_size() const { return l_; }
  const JoiningModel& model() const { return jm_; }
  JoiningPoint at(const GroupElement& g) const;
  // Points at times k * step, k = 0..count, along g u_t.
  std::vector<JoiningPoint> orbit(const GroupElement& g, double step, std::size_t count) const;
  GroupElement random_start(std::mt19937_64& rng) const;

private:
  JoiningPoint make_point(double t, const GroupElement& rep, const ZVec& ab) const;
  JoiningModel jm_;
  long l_ = 0;
  ZVec g0_ab_;
};

// Sectors of the polar angle x bands of equal disk area x frame-angle bins.
struct CellPartition {
  std::size_t sectors = 1;
  std::size_t bands = 1;
  std::size_t frames = 1;
  double circumradius = 1.0;
  std::size_t size() const { return sectors * bands * frames; }
  std::size_t cell(const GroupElement& rep) const;
};

// cells = 1 or 8 * 2^e.
CellPartition make_partition(std::size_t cells, const FuchsianSpec& spec);

inline constexpr std::uint64_t kVolumeSeed = 20240611;
// Haar volume fractions of the cells, from Haar-uniform domain samples.
std::vector<double> haar_cell_volumes(const CellPartition& cp, const FuchsianSpec& spec,
                                      std::size_t points = 1000000, std::uint64_t seed = kVolumeSeed,
                                      Exec exec = Exec::parallel);

struct ProjectionTV {
  double T = 0.0;
  double tv1 = 0.0;
  double tv2 = 0.0;
};

// Total variation between the cell histograms of both projections of the
// orbit points with t <= T and the Haar cell volumes.
ProjectionTV projection_test(const std::vector<JoiningPoint>& orbit, const CellPartition& cp,
                             const std::vector<double>& volumes, double T);

// Largest number of distinct second labels over one first label.
struct FiberStats {
  std::size_t max_fiber = 0;
  std::size_t fibers = 0;
};
FiberStats fiber_statistics(const std::vector<JoiningPoint>& orbit);

struct OrbitResult {
  int L = 0;
  std::uint64_t words = 0;  // words with trivial label, acted on
  std::uint64_t nodes = 0;  // reduced words visited
  std::size_t hit = 0;
  double coverage = 0.0;
};

// Gamma_1-orbit of x in Gamma_0 \ G: x gamma for reduced words gamma of length
// <= L in Gamma_1, cell histogram in the base quotient.
OrbitResult orbit_density(const SubgroupSpec& s1, const GroupElement& x, int L, const CellPartition& cp,
                          Exec exec = Exec::parallel, std::uint64_t max_words = 100000000);

nlohmann::json to_json(const OrbitResult& r);

} // namespace horolab::rigidity
