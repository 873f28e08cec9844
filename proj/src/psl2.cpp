#include "horolab/psl2.hpp"

#include <cmath>
#include <ostream>

#include "horolab/error.hpp"

namespace horolab::psl2 {

namespace {

void require_finite(double t, const char* what) {
  if (!std::isfinite(t)) throw InvalidInput(std::string(what) + ": non-finite parameter");
}

} // namespace

GroupElement GroupElement::from_entries(double a, double b, double c, double d) {
  const double det = a * d - b * c;
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw NumericError("GroupElement: determinant must be positive and finite");
  }
  const double s = 1.0 / std::sqrt(det);
  GroupElement g;
  g.m_ = {a * s, b * s, c * s, d * s};
  for (double v : g.m_) {
    if (v != 0.0) {
      if (v < 0.0) {
        for (double& e : g.m_) e = -e;
      }
      break;
    }
  }
  return g;
}

double GroupElement::frobenius_sq() const {
  return m_[0] * m_[0] + m_[1] * m_[1] + m_[2] * m_[2] + m_[3] * m_[3];
}

GroupElement GroupElement::inverse() const { return from_entries(m_[3], -m_[1], -m_[2], m_[0]); }

GroupElement make_flow(FlowKind kind, double t) {
  require_finite(t, "make_flow");
  switch (kind) {
    case FlowKind::U: return GroupElement::from_entries(1.0, t, 0.0, 1.0);
    case FlowKind::Uplus: return GroupElement::from_entries(1.0, 0.0, t, 1.0);
    case FlowKind::A: return GroupElement::from_entries(std::exp(t / 2), 0.0, 0.0, std::exp(-t / 2));
  }
  throw InvalidInput("make_flow: unknown kind");
}

GroupElement rotation(double theta) {
  require_finite(theta, "rotation");
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  return GroupElement::from_entries(c, s, -s, c);
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  return GroupElement::from_entries(g.a() * h.a() + g.b() * h.c(), g.a() * h.b() + g.b() * h.d(),
                                    g.c() * h.a() + g.d() * h.c(), g.c() * h.b() + g.d() * h.d());
}

double dist_mod_sign(const GroupElement& g, const GroupElement& h) {
  double minus = 0.0, plus = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double x = g.entries()[k], y = h.entries()[k];
    minus += (x - y) * (x - y);
    plus += (x + y) * (x + y);
  }
  return std::sqrt(std::min(minus, plus));
}

double dist_id(const GroupElement& g) { return dist_mod_sign(g, GroupElement::identity()); }

bool approx_equal(const GroupElement& g, const GroupElement& h, double tol) {
  return dist_mod_sign(g, h) <= tol;
}

double cosh_dist_to_i(const GroupElement& g) { return 0.5 * g.frobenius_sq(); }

TimeChange change_of_time(double s, double r, double t) {
  require_finite(s, "change_of_time");
  require_finite(r, "change_of_time");
  require_finite(t, "change_of_time");
  const double rho = std::exp(-s) * r;
  const double den = 1.0 - rho * t;
  if (std::abs(den) <= 1e-9) {
    throw SingularTime("change_of_time: 1 - e^{-s} r t vanishes (t = " + std::to_string(t) + ")");
  }
  return {t / den, GroupElement::from_entries(1.0 / den, 0.0, -rho, den)};
}

GroupElement conjugate_by_u(const GroupElement& g, double t) {
  require_finite(t, "conjugate_by_u");
  const double x = g.a(), y = g.b(), z = g.c(), w = g.d();
  return GroupElement::from_entries(x - t * z, y + t * (x - w) - t * t * z, z, w + t * z);
}

Complex mobius_act(const GroupElement& g, Complex z) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    throw InvalidInput("mobius_act: point must lie in the upper half-plane");
  }
  return (g.a() * z + g.b()) / (g.c() * z + g.d());
}

std::ostream& operator<<(std::ostream& os, const GroupElement& g) {
  return os << "[[" << g.a() << ", " << g.b() << "], [" << g.c() << ", " << g.d() << "]]";
}

} // namespace horolab::psl2
