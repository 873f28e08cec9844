#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "horolab/error.hpp"
#include "horolab/rigidity.hpp"

using namespace horolab;
using namespace horolab::rigidity;

namespace {

// Brute-force index oracle: distinct labels of s2 on the words of length <= L
// that lie in s1. Returns -1 when the count still grows from L-2 to L.
struct CosetCounter {
  const FuchsianSpec& spec;
  const SubgroupSpec& s1;
  const SubgroupSpec& s2;
  std::vector<std::set<ZVec>> by_length;

  void walk(const ZVec& ab, int depth, int last, int L) {
    if (s1.contains(ab)) by_length[static_cast<std::size_t>(depth)].insert(s2.label(ab));
    if (depth == L) return;
    for (int h = 0; h < 8; ++h) {
      if (last >= 0 && spec.inverse_of[static_cast<std::size_t>(last)] == h) continue;
      walk(ab + spec.generator_ab(h), depth + 1, h, L);
    }
  }
};

long brute_force_index(const FuchsianSpec& spec, const SubgroupSpec& s1, const SubgroupSpec& s2, int L = 8) {
  CosetCounter c{spec, s1, s2, std::vector<std::set<ZVec>>(static_cast<std::size_t>(L + 1))};
  c.walk(ZVec(spec.num_pairs()), 0, -1, L);
  auto upto = [&](int len) {
    std::set<ZVec> all;
    for (int k = 0; k <= len; ++k) all.insert(c.by_length[static_cast<std::size_t>(k)].begin(),
                                                c.by_length[static_cast<std::size_t>(k)].end());
    return all.size();
  };
  return upto(L) > upto(L - 2) ? -1 : static_cast<long>(upto(L));
}

long as_long(const std::optional<long>& v) { return v ? *v : -1; }

Poly random_poly(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int deg = static_cast<int>(rng() % 4);
  Poly p;
  for (int k = 0; k <= deg; ++k) p.coeffs.push_back(u(rng));
  return p;
}

} // namespace

TEST_CASE("polynomial roots") {
  // (x - 1)(x + 2)(x - 0.5) = x^3 + 0.5x^2 - 2.5x + 1
  const Poly p{{1.0, -2.5, 0.5, 1.0}};
  const auto r = real_roots(p, -10, 10);
  REQUIRE(r.size() == 3);
  CHECK(r[0] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(real_roots(Poly{{1.0, 0.0, 1.0}}, -5, 5).empty());
  const auto one = real_roots(Poly{{-8.0, 0.0, 0.0, 1.0}}, -5, 5);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sup_abs(Poly{{0.0, 0.0, 1.0}}, -1, 2) == doctest::Approx(4.0));
  CHECK(sup_abs(Poly{{0.0, -3.0, 0.0, 1.0}}, -1.5, 1.5) == doctest::Approx(2.0));
  CHECK_THROWS_AS(real_roots(Poly{{0, 0, 0, 0, 1}}, -1, 1), InvalidInput);
}

TEST_CASE("(C, alpha)-good examples") {
  const auto a = c_alpha_good_check(Poly{{0.0, 1.0}}, 0.0, 1.0, 0.1);
  CHECK(a.lhs == doctest::Approx(0.1));
  CHECK(a.rhs == doctest::Approx(0.2));
  CHECK(a.pass);
  const auto c = c_alpha_good_check(Poly{{0.7}}, -1.0, 3.0, 0.5);
  CHECK(c.lhs == 0.0);
  CHECK(c.pass);
  const auto q = c_alpha_good_check(Poly{{0.0, 0.0, 1.0}}, -1.0, 1.0, 0.01);
  CHECK(q.lhs == doctest::Approx(0.2));
  CHECK(q.rhs == doctest::Approx(2 * std::sqrt(3.0) * 0.1 * 2).epsilon(1e-12));
  CHECK(q.rhs == doctest::Approx(0.693).epsilon(1e-3));
  CHECK(q.pass);
  CHECK_THROWS_AS(c_alpha_good_check(Poly{{0.0, 0.0}}, 0.0, 1.0, 0.1), InvalidInput);
  CHECK_THROWS_AS(c_alpha_good_check(Poly{{0.0, 1.0}}, 1.0, 1.0, 0.1), InvalidInput);
}

TEST_CASE("sublevel measure against dense sampling") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Poly p{{u(rng), u(rng), u(rng), u(rng)}};
    const double lo = -2.0, hi = 2.0;
    const double eps = 0.5 * sup_abs(p, lo, hi) * std::abs(u(rng));
    if (!(eps > 0.0)) continue;
    const auto g = c_alpha_good_check(p, lo, hi, eps);
    const int n = 200000;
    double hits = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = lo + (hi - lo) * (i + 0.5) / n;
      hits += std::abs(p(x)) < eps ? 1.0 : 0.0;
    }
    CHECK(g.lhs == doctest::Approx(hits * (hi - lo) / n).epsilon(1e-3).scale(1.0));
  }
}

TEST_CASE("(C, alpha)-good bound holds on random instances") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    Poly p = random_poly(rng);
    if (p.degree() < 0) continue;
    double a = -10 + 20 * unit(rng), b = -10 + 20 * unit(rng);
    if (a > b) std::swap(a, b);
    if (b - a < 1e-6) continue;
    const double eps = sup_abs(p, a, b) * unit(rng);
    if (!(eps > 0.0)) continue;
    violations += c_alpha_good_check(p, a, b, eps).pass ? 0 : 1;
  }
  CHECK(violations == 0);
}

TEST_CASE("weak good inequality along a horocycle") {
  const auto spec = surface::build_octagon_group();
  const flows::Cover cover{&spec, &spec.character("phi")};
  std::mt19937_64 rng(3);
  const auto p = flows::random_start(spec, *cover.phi, rng);
  const flows::Target everywhere = [](const flows::CoverPoint&) { return true; };
  const auto one = weak_good_empirical(p, flows::default_target(spec), Poly{{1.0}}, 50.0, 0.05, cover);
  CHECK(one.C_est == doctest::Approx(1.0).epsilon(1e-12));
  const auto lin = weak_good_empirical(p, everywhere, Poly{{0.0, 1.0}}, 50.0, 0.05, cover);
  CHECK(lin.C_est == doctest::Approx(0.5).epsilon(1e-12));
  const flows::Target nowhere = [](const flows::CoverPoint&) { return false; };
  CHECK(weak_good_empirical(p, nowhere, Poly{{1.0}}, 10.0, 0.05, cover).underpowered);
  double min_c = 1.0;
  for (int i = 0; i < 20; ++i) {
    const auto q = flows::random_start(spec, *cover.phi, rng);
    Poly theta = random_poly(rng);
    if (theta.degree() < 0) continue;
    const auto w = weak_good_empirical(q, flows::default_target(spec), theta, 100.0, 0.05, cover);
    if (!w.underpowered) min_c = std::min(min_c, w.C_est);
  }
  CHECK(min_c > 0.0);
}

TEST_CASE("index arithmetic agrees with coset enumeration") {
  const auto spec = surface::build_octagon_group();
  const SubgroupSpec kerphi{&spec, {{spec.character("phi"), 0}}};
  const SubgroupSpec kerpsi2{&spec, {{spec.character("phi"), 0}, {spec.character("psi_b1"), 2}}};
  const SubgroupSpec kerb{&spec, {{spec.character("psi_b1"), 0}}};
  const SubgroupSpec mod3{&spec, {{spec.character("phi"), 3}}};
  const SubgroupSpec mod2{&spec, {{spec.character("phi"), 2}}};

  const auto same = intersection_index(kerphi, kerphi, {});
  CHECK(as_long(same.idx1) == 1);
  CHECK(as_long(same.idx2) == 1);
  const auto two = intersection_index(kerphi, kerpsi2, {});
  CHECK(as_long(two.idx1) == 2);
  CHECK(as_long(two.idx2) == 1);
  const auto inf = intersection_index(kerphi, kerb, spec.parse_word("a1 b1"));
  CHECK(!inf.idx1.has_value());
  CHECK(!inf.idx2.has_value());
  const auto m = intersection_index(mod3, mod2, {});
  CHECK(as_long(m.idx1) == 2);
  CHECK(as_long(m.idx2) == 3);

  const std::vector<std::pair<const SubgroupSpec*, const SubgroupSpec*>> cases{
      {&kerphi, &kerphi}, {&kerphi, &kerpsi2}, {&kerphi, &kerb}, {&mod3, &mod2}};
  for (const auto& [a, b] : cases) {
    const auto idx = intersection_index(*a, *b, {});
    CHECK(brute_force_index(spec, *a, *b) == as_long(idx.idx1));
    CHECK(brute_force_index(spec, *b, *a) == as_long(idx.idx2));
  }
  for (const auto& v : kernel_lattice(kerpsi2)) CHECK(kerpsi2.contains(v));
}

TEST_CASE("joining sampler") {
  const auto spec = surface::build_octagon_group();
  const SubgroupSpec kerphi{&spec, {{spec.character("phi"), 0}}};
  const SubgroupSpec kerpsi2{&spec, {{spec.character("phi"), 0}, {spec.character("psi_b1"), 2}}};
  const SubgroupSpec kerb{&spec, {{spec.character("psi_b1"), 0}}};
  std::mt19937_64 rng(5);

  const JoiningSampler diag({kerphi, kerphi, {}, 0.0});
  const auto g = diag.random_start(rng);
  for (const auto& pt : diag.orbit(g, 0.5, 200)) {
    CHECK(psl2::dist_mod_sign(pt.first.rep, pt.second.rep) == 0.0);
    CHECK(pt.first.label == pt.second.label);
  }

  const double t0 = 0.8;
  const JoiningSampler shifted({kerphi, kerphi, {}, t0});
  for (const auto& pt : shifted.orbit(g, 0.5, 50)) {
    const auto moved = surface::reduce_ab(pt.first.rep * psl2::make_flow(psl2::FlowKind::U, t0), spec);
    CHECK(psl2::dist_mod_sign(moved.rep, pt.second.rep) < 1e-12);
  }

  const JoiningSampler cover2({kerphi, kerpsi2, spec.parse_word("a1 b1"), 0.0});
  CHECK(cover2.fiber_size() == 2);
  const auto orbit = cover2.orbit(g, 0.5, 20000);
  const auto fs = fiber_statistics(orbit);
  CHECK(fs.max_fiber == 2);

  // Another coset representative of g0 leaves the first projection unchanged.
  const JoiningSampler relabeled({kerphi, kerpsi2, spec.parse_word("a1 b1 b1 b1"), 0.0});
  const auto other = relabeled.orbit(g, 0.5, 2000);
  const auto cp = make_partition(64, spec);
  for (std::size_t k = 0; k < other.size(); ++k) {
    CHECK(cp.cell(other[k].first.rep) == cp.cell(orbit[k].first.rep));
    CHECK(other[k].first.label == orbit[k].first.label);
  }

  CHECK_THROWS_AS(JoiningSampler({kerphi, kerb, {}, 0.0}), InvalidInput);
}

TEST_CASE("cell partitions and projection distances") {
  const auto spec = surface::build_octagon_group();
  const auto cp = make_partition(64, spec);
  CHECK(cp.size() == 64);
  CHECK(make_partition(1 << 20, spec).size() == (1u << 20));
  CHECK(make_partition(512, spec).size() == 512);
  CHECK_THROWS_AS(make_partition(48, spec), InvalidInput);
  const auto vol = haar_cell_volumes(cp, spec, 200000);
  double total = 0.0;
  for (double v : vol) {
    total += v;
    CHECK(v > 0.0);
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(haar_cell_volumes(cp, spec, 30000, 4, Exec::serial) == haar_cell_volumes(cp, spec, 30000, 4, Exec::parallel));

  const SubgroupSpec kerphi{&spec, {{spec.character("phi"), 0}}};
  const JoiningSampler diag({kerphi, kerphi, {}, 0.0});
  std::mt19937_64 rng(9);
  const auto orbit = diag.orbit(diag.random_start(rng), 0.5, 20000);
  const auto single = make_partition(1, spec);
  CHECK(projection_test(orbit, single, {1.0}, 1e4).tv1 == doctest::Approx(0.0));
  const auto early = projection_test(orbit, cp, vol, 1e2);
  const auto late = projection_test(orbit, cp, vol, 1e4);
  CHECK(late.tv1 < early.tv1);
  CHECK(late.tv1 == late.tv2);
  auto shuffled = vol;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(projection_test(orbit, cp, shuffled, 1e4).tv1 > 0.3);
}

TEST_CASE("orbit density") {
  const auto spec = surface::build_octagon_group();
  const SubgroupSpec kerphi{&spec, {{spec.character("phi"), 0}}};
  const SubgroupSpec whole{&spec, {{spec.character("trivial"), 0}}};
  const auto x = psl2::rotation(0.3) * psl2::make_flow(psl2::FlowKind::A, 0.2) * psl2::rotation(0.7);
  const auto fine = make_partition(1 << 14, spec);
  CHECK(orbit_density(kerphi, x, 0, fine).hit == 1);
  double prev = 0.0;
  for (int L : {2, 4, 6}) {
    const auto r = orbit_density(kerphi, x, L, fine);
    CHECK(r.coverage > prev);
    prev = r.coverage;
  }
  // Word counts of ker phi among reduced words.
  CHECK(orbit_density(kerphi, x, 4, fine).words == 1153);
  CHECK(orbit_density(whole, x, 4, make_partition(64, spec)).coverage == 1.0);
  const auto a = orbit_density(kerphi, x, 5, fine, Exec::serial);
  const auto b = orbit_density(kerphi, x, 5, fine, Exec::parallel);
  CHECK(a.hit == b.hit);
  CHECK(a.words == b.words);
  CHECK_THROWS_AS(orbit_density(kerphi, x, 6, fine, Exec::parallel, 1000), InvalidInput);
}
