#pragma once

#include <array>
#include <complex>
#include <iosfwd>

namespace horolab::psl2 {

using Complex = std::complex<double>;

// Element of PSL(2,R): a real 2x2 matrix of determinant one, identified with
// its negative. Construction renormalizes the determinant and fixes the sign
// so that the first nonzero entry of (a, b, c, d) is positive.
class GroupElement {
public:
  GroupElement() = default;  // identity

  static GroupElement from_entries(double a, double b, double c, double d);
  static GroupElement identity() { return {}; }

  double a() const { return m_[0]; }
  double b() const { return m_[1]; }
  double c() const { return m_[2]; }
  double d() const { return m_[3]; }
  const std::array<double, 4>& entries() const { return m_; }

  double det() const { return m_[0] * m_[3] - m_[1] * m_[2]; }
  double trace() const { return m_[0] + m_[3]; }
  double frobenius_sq() const;

  GroupElement inverse() const;

private:
  std::array<double, 4> m_{1.0, 0.0, 0.0, 1.0};
};

enum class FlowKind { U, Uplus, A };

// u_t = (1 t; 0 1), u+_t = (1 0; t 1), a_s = diag(e^{s/2}, e^{-s/2}).
GroupElement make_flow(FlowKind kind, double t);

// Rotation about i by angle theta (acts on the unit tangent circle at i by theta).
GroupElement rotation(double theta);

GroupElement compose(const GroupElement& g, const GroupElement& h);
inline GroupElement operator*(const GroupElement& g, const GroupElement& h) { return compose(g, h); }

// min(|g - I|_F, |g + I|_F).
double dist_id(const GroupElement& g);

// Frobenius distance between g and h modulo sign.
double dist_mod_sign(const GroupElement& g, const GroupElement& h);
bool approx_equal(const GroupElement& g, const GroupElement& h, double tol);

// cosh of the hyperbolic distance between g.i and i.
double cosh_dist_to_i(const GroupElement& g);

struct TimeChange {
  double beta;
  GroupElement gee;
};

// Returns (beta(t), g_t) with u+_{-e^{-s} r} u_t = u_{beta(t)} g_t, where
// beta(t) = t / (1 - e^{-s} r t). Throws SingularTime when the denominator
// is within 1e-9 of zero.
TimeChange change_of_time(double s, double r, double t);

// u_{-t} g u_t in closed form:
// (x - t z,  y + t(x - w) - t^2 z;  z,  w + t z).
GroupElement conjugate_by_u(const GroupElement& g, double t);

// (a z + b) / (c z + d) for Im z > 0.
Complex mobius_act(const GroupElement& g, Complex z);

std::ostream& operator<<(std::ostream& os, const GroupElement& g);

} // namespace horolab::psl2
