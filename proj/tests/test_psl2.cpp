#include <cmath>
#include <random>

#include "doctest.h"
#include "horolab/error.hpp"
#include "horolab/psl2.hpp"

using namespace horolab;
using namespace horolab::psl2;

namespace {

// Plain 2x2 product without normalization, as an independent oracle.
std::array<double, 4> mul(const std::array<double, 4>& x, const std::array<double, 4>& y) {
  return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2], x[2] * y[1] + x[3] * y[3]};
}

double mod_sign_gap(const std::array<double, 4>& x, const std::array<double, 4>& y) {
  double p = 0, m = 0;
  for (int i = 0; i < 4; ++i) {
    p = std::max(p, std::abs(x[i] - y[i]));
    m = std::max(m, std::abs(x[i] + y[i]));
  }
  return std::min(p, m);
}

GroupElement random_element(std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> u(-spread, spread);
  return make_flow(FlowKind::U, u(rng)) * make_flow(FlowKind::A, u(rng)) * rotation(u(rng) * 3);
}

} // namespace

TEST_CASE("flows and canonical form") {
  CHECK(dist_id(make_flow(FlowKind::U, 0.0)) == 0.0);
  CHECK(dist_id(make_flow(FlowKind::A, 0.0)) == 0.0);
  const auto u = make_flow(FlowKind::U, 2.5);
  CHECK(u.b() == 2.5);
  const auto a = make_flow(FlowKind::A, 1.0);
  CHECK(a.a() == doctest::Approx(std::exp(0.5)));
  CHECK_THROWS_AS(make_flow(FlowKind::U, NAN), InvalidInput);
  const auto neg = GroupElement::from_entries(-1, -2, -3, -7);
  CHECK(neg.a() == 1.0);
  CHECK(neg.det() == doctest::Approx(1.0));
  CHECK_THROWS_AS(GroupElement::from_entries(1, 2, 2, 1), NumericError);
  const auto scaled = GroupElement::from_entries(2, 0, 0, 2);
  CHECK(dist_id(scaled) < 1e-15);
  for (double t : {-1.3, 0.2, 4.0}) {
    for (auto k : {FlowKind::U, FlowKind::Uplus, FlowKind::A}) {
      CHECK(dist_mod_sign(make_flow(k, t) * make_flow(k, 0.7), make_flow(k, t + 0.7)) < 1e-12);
    }
  }
}

TEST_CASE("dist_id") {
  const double d = dist_id(make_flow(FlowKind::U, 1e-3));
  CHECK(d >= 0.5e-3);
  CHECK(d <= 2e-3);
  CHECK(dist_id(rotation(2 * std::numbers::pi)) < 1e-12);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) CHECK(dist_id(random_element(rng, 2.0)) > 1e-6);
}

TEST_CASE("compose agrees with the raw matrix product") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_element(rng, 1.5), h = random_element(rng, 1.5);
    CHECK(mod_sign_gap((g * h).entries(), mul(g.entries(), h.entries())) < 1e-10);
    CHECK(dist_id(g * g.inverse()) < 1e-12);
  }
}

TEST_CASE("change of time") {
  const auto tc = change_of_time(0.0, 0.5, 1.0);
  CHECK(tc.beta == doctest::Approx(2.0));
  CHECK(approx_equal(tc.gee, GroupElement::from_entries(2, 0, -0.5, 0.5), 1e-14));
  const auto t0 = change_of_time(0.7, 0.3, 0.0);
  CHECK(t0.beta == 0.0);
  CHECK(approx_equal(t0.gee, make_flow(FlowKind::Uplus, -std::exp(-0.7) * 0.3), 1e-14));
  const auto r0 = change_of_time(0.7, 0.0, 2.0);
  CHECK(r0.beta == 2.0);
  CHECK(dist_id(r0.gee) < 1e-15);
  CHECK_THROWS_AS(change_of_time(0.0, 1.0, 1.0), SingularTime);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int tested = 0;
  double worst = 0.0;
  while (tested < 10000) {
    const double s = u(rng), r = u(rng), t = u(rng);
    if (std::abs(1 - std::exp(-s) * r * t) <= 0.1) continue;
    const auto c = change_of_time(s, r, t);
    const auto lhs = mul(make_flow(FlowKind::Uplus, -std::exp(-s) * r).entries(), make_flow(FlowKind::U, t).entries());
    const auto rhs = mul(make_flow(FlowKind::U, c.beta).entries(), c.gee.entries());
    double scale = 0;
    for (double v : lhs) scale = std::max(scale, std::abs(v));
    worst = std::max(worst, mod_sign_gap(lhs, rhs) / std::max(1.0, scale));
    ++tested;
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("conjugation by u") {
  CHECK(dist_id(conjugate_by_u(GroupElement::identity(), 3.0)) == 0.0);
  const double z = 0.4;
  CHECK(approx_equal(conjugate_by_u(GroupElement::from_entries(1, 0, z, 1), 1.0),
                     GroupElement::from_entries(1 - z, -z, z, 1 + z), 1e-14));
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto g = random_element(rng, 1.0);
    const double t = std::uniform_real_distribution<double>(-2, 2)(rng);
    const auto oracle = mul(mul(make_flow(FlowKind::U, -t).entries(), g.entries()), make_flow(FlowKind::U, t).entries());
    CHECK(mod_sign_gap(conjugate_by_u(g, t).entries(), oracle) < 1e-12);
  }
}

TEST_CASE("mobius action") {
  const Complex i(0, 1);
  CHECK(std::abs(mobius_act(GroupElement::identity(), i) - i) < 1e-15);
  CHECK(std::abs(mobius_act(make_flow(FlowKind::A, 0.8), i) - std::exp(0.8) * i) < 1e-14);
  CHECK(std::abs(mobius_act(make_flow(FlowKind::U, 1.5), i) - (i + 1.5)) < 1e-15);
  CHECK_THROWS_AS(mobius_act(GroupElement::identity(), Complex(1, 0)), InvalidInput);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    const auto g = random_element(rng, 1.0), h = random_element(rng, 1.0);
    const Complex z(0.3, 1.7);
    CHECK(std::abs(mobius_act(g * h, z) - mobius_act(g, mobius_act(h, z))) < 1e-10);
    CHECK(mobius_act(g, z).imag() > 0);
  }
  // cosh d(g i, i) from the upper half-plane distance formula.
  const auto g = make_flow(FlowKind::A, 1.2) * rotation(0.4);
  const Complex w = mobius_act(g, i);
  const double oracle = 1 + std::norm(w - i) / (2 * w.imag());
  CHECK(cosh_dist_to_i(g) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("commutation of a and u") {
  for (double s : {-1.0, 0.5, 2.0})
    for (double t : {-3.0, 0.25, 1.0}) {
      const auto lhs = make_flow(FlowKind::A, s) * make_flow(FlowKind::U, t);
      const auto rhs = make_flow(FlowKind::U, t * std::exp(s)) * make_flow(FlowKind::A, s);
      CHECK(dist_mod_sign(lhs, rhs) < 1e-12);
    }
}
