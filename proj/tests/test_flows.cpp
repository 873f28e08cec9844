#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "horolab/error.hpp"
#include "horolab/flows.hpp"

using namespace horolab;
using namespace horolab::flows;
using psl2::FlowKind;

namespace {

struct Fixture {
  surface::FuchsianSpec spec = surface::build_octagon_group();
  Cover cover{&spec, &spec.character("phi")};
};

ReturnSet make_set(double tmax, double dt, std::vector<std::pair<double, double>> iv) {
  return ReturnSet{tmax, dt, std::move(iv)};
}

} // namespace

TEST_CASE("evolve basics") {
  Fixture f;
  std::mt19937_64 rng(4);
  const auto p = random_start(f.spec, *f.cover.phi, rng);
  const auto same = evolve(p, Flow::horocycle, 0.0, f.cover);
  CHECK(psl2::dist_mod_sign(same.rep, p.rep) < 1e-14);
  CHECK(same.xi == p.xi);
  CHECK(xi_T(p, 0.0, f.cover) == p.xi);
  // Forward then backward returns to the start.
  const auto q = evolve(evolve(p, Flow::geodesic, 7.3, f.cover), Flow::geodesic, -7.3, f.cover);
  CHECK(q.xi == p.xi);
  CHECK(psl2::dist_mod_sign(q.rep, p.rep) < 1e-8);
  // Deck translation commutes with the flow.
  const auto shifted = evolve(deck_shift(p, ZVec{5}), Flow::horocycle, 3.0, f.cover);
  CHECK(shifted.xi == evolve(p, Flow::horocycle, 3.0, f.cover).xi + ZVec{5});
}

TEST_CASE("a_s u_t = u_{e^s t} a_s along trajectories") {
  Fixture f;
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_start(f.spec, *f.cover.phi, rng);
    const double s = 0.7, t = 1.3;
    const auto x = evolve(evolve(p, Flow::geodesic, s, f.cover), Flow::horocycle, t, f.cover);
    const auto y = evolve(evolve(p, Flow::horocycle, t * std::exp(s), f.cover), Flow::geodesic, s, f.cover);
    CHECK(x.xi == y.xi);
    CHECK(psl2::dist_mod_sign(x.rep, y.rep) < 1e-8);
  }
}

TEST_CASE("birkhoff integrals") {
  Fixture f;
  std::mt19937_64 rng(9);
  const auto p = random_start(f.spec, *f.cover.phi, rng);
  const ScalarField one = [](const CoverPoint&) { return 1.0; };
  const ScalarField zero = [](const CoverPoint&) { return 0.0; };
  CHECK(birkhoff_integral(p, one, 37.5, 0.05, f.cover) == doctest::Approx(37.5).epsilon(1e-12));
  CHECK(birkhoff_integral(p, zero, 37.5, 0.05, f.cover) == 0.0);
  const auto bump = domain_bump(ZVec{0}, f.spec.inradius);
  const double whole = birkhoff_integral(p, bump, 40.0, 0.05, f.cover);
  const double first = birkhoff_integral(p, bump, 15.0, 0.05, f.cover);
  const double second = birkhoff_integral(evolve(p, Flow::horocycle, 15.0, f.cover), bump, 25.0, 0.05, f.cover);
  CHECK(std::abs(whole - first - second) < 1e-9);
  const auto cum = birkhoff_cumulative(p, bump, 40.0, 0.05, f.cover);
  CHECK(cum.at(40.0) == doctest::Approx(whole).epsilon(1e-12));
  CHECK(cum.at(15.0) == doctest::Approx(first).epsilon(1e-12));
  // Linear in psi.
  const ScalarField twice = [&](const CoverPoint& q) { return 2 * bump(q) + 1; };
  CHECK(birkhoff_integral(p, twice, 40.0, 0.05, f.cover) == doctest::Approx(2 * whole + 40.0).epsilon(1e-12));
}

TEST_CASE("return sets") {
  Fixture f;
  std::mt19937_64 rng(10);
  const auto p = random_start(f.spec, *f.cover.phi, rng);
  const auto all = return_set(p, [](const CoverPoint&) { return true; }, 20.0, 0.05, f.cover);
  REQUIRE(all.intervals.size() == 1);
  CHECK(all.intervals[0].first == -20.0);
  CHECK(all.intervals[0].second == 20.0);
  const auto none = return_set(p, [](const CoverPoint&) { return false; }, 20.0, 0.05, f.cover);
  CHECK(none.empty());
  const auto rs = return_set(p, default_target(f.spec), 50.0, 0.05, f.cover);
  for (std::size_t i = 1; i < rs.intervals.size(); ++i) CHECK(rs.intervals[i].first > rs.intervals[i - 1].second);
}

TEST_CASE("K-thick check") {
  const auto full = make_set(100.0, 0.01, {{-100.0, 100.0}});
  for (double K : {1.01, 2.0, 50.0}) CHECK(k_thick_check(full, K).pass);

  const auto gap = make_set(100.0, 1.0, {{-2.0, -1.0}, {1.0, 2.0}});
  const auto r = k_thick_check(gap, 2.0);
  CHECK(!r.pass);
  REQUIRE(r.first_failing_t.has_value());
  CHECK(*r.first_failing_t == doctest::Approx(2.0));
  CHECK(!meets_window(gap, 2.0, 3.0));
  CHECK(meets_window(gap, 2.0, 1.5));

  std::vector<std::pair<double, double>> blocks;
  for (int k = -6; k <= 8; k += 2) {
    blocks.emplace_back(-std::ldexp(1.0, k + 1), -std::ldexp(1.0, k));
    blocks.emplace_back(std::ldexp(1.0, k), std::ldexp(1.0, k + 1));
  }
  std::sort(blocks.begin(), blocks.end());
  const auto dyadic = make_set(400.0, 0.02, blocks);
  CHECK(k_thick_check(dyadic, 4.0).pass);
  // [t, 2t] always reaches the next present block; [t, 1.5t] can fall in a gap.
  CHECK(!k_thick_check(dyadic, 1.5).pass);
  CHECK(smallest_thick_K(dyadic, {1.5, 2.0, 3.0, 4.0}) == 2.0);
  CHECK_THROWS_AS(k_thick_check(full, 1.0), InvalidInput);
}

TEST_CASE("ensembles are reproducible across execution policies") {
  Fixture f;
  const std::vector<double> times{5.0, 10.0};
  const auto a = xi_ensemble(f.cover, 16, 3, times, kGeodesicStep, Exec::serial);
  const auto b = xi_ensemble(f.cover, 16, 3, times, kGeodesicStep, Exec::parallel);
  CHECK(a == b);
}

TEST_CASE("line fit") {
  const std::vector<double> x{1, 2, 3, 4};
  const std::vector<double> y{3, 5, 7, 9};
  const auto fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r2 == doctest::Approx(1.0));
}
