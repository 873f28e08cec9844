#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "horolab/flows.hpp"
#include "horolab/psl2.hpp"
#include "horolab/rigidity.hpp"
#include "horolab/surface.hpp"
#include "horolab/thermo.hpp"
#include "horolab/window.hpp"

using namespace horolab;
using psl2::FlowKind;
using psl2::GroupElement;

namespace {

using Mat = std::array<double, 4>;

Mat mul(const Mat& x, const Mat& y) {
  return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
          x[2] * y[1] + x[3] * y[3]};
}

double gap_mod_sign(const Mat& x, const Mat& y) {
  double p = 0.0, m = 0.0;
  for (int k = 0; k < 4; ++k) {
    p = std::max(p, std::abs(x[k] - y[k]));
    m = std::max(m, std::abs(x[k] + y[k]));
  }
  return std::min(p, m);
}

Mat raw(FlowKind kind, double t) {
  switch (kind) {
  case FlowKind::U: return {1, t, 0, 1};
  case FlowKind::Uplus: return {1, 0, t, 1};
  case FlowKind::A: return {std::exp(t / 2), 0, 0, std::exp(-t / 2)};
  }
  return {1, 0, 0, 1};
}

int failures = 0;

void report(int id, bool pass, double seconds, const std::string& detail) {
  std::printf("criterion %2d: %s (%.1f s) %s\n", id, pass ? "PASS" : "FAIL", seconds, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

template <class Fn>
void run(int id, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(id, pass, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), detail);
}

std::string fmt(const char* f, auto... v) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, v...);
  return buf;
}

std::vector<int> random_reduced_word(const surface::FuchsianSpec& spec, std::size_t len, std::mt19937_64& rng) {
  std::vector<int> w;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(spec.num_generators()) - 1);
  while (w.size() < len) {
    const int k = pick(rng);
    if (!w.empty() && spec.inverse_of[static_cast<std::size_t>(w.back())] == k) continue;
    w.push_back(k);
  }
  return w;
}

// Distinct coset labels of s2 met by words of s1 of length <= L; -1 when the
// count is still growing between L - 2 and L.
long coset_enumeration(const surface::FuchsianSpec& spec, const rigidity::SubgroupSpec& s1,
                       const rigidity::SubgroupSpec& s2, int L) {
  std::vector<std::set<ZVec>> seen(static_cast<std::size_t>(L + 1));
  std::function<void(const ZVec&, int, int)> walk = [&](const ZVec& ab, int depth, int last) {
    if (s1.contains(ab))
      for (int k = depth; k <= L; ++k) seen[static_cast<std::size_t>(k)].insert(s2.label(ab));
    if (depth == L) return;
    for (int h = 0; h < static_cast<int>(spec.num_generators()); ++h) {
      if (last >= 0 && spec.inverse_of[static_cast<std::size_t>(last)] == h) continue;
      walk(ab + spec.generator_ab(h), depth + 1, h);
    }
  };
  walk(ZVec(spec.num_pairs()), 0, -1);
  const auto n = seen[static_cast<std::size_t>(L)].size();
  return n > seen[static_cast<std::size_t>(L - 2)].size() ? -1 : static_cast<long>(n);
}

std::vector<double> cosh_axis() {
  std::vector<double> axis;
  for (int i = -20; i <= 20; ++i) axis.push_back(0.1 * i);
  return axis;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

int main() {
  configure_threads_from_env();
  const auto spec = surface::build_octagon_group();
  const auto& phi = spec.character("phi");
  const flows::Cover cover{&spec, &phi};

  run(1, [](std::string& d) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst_ct = 0.0, worst_conj = 0.0;
    for (int n = 0; n < 10000;) {
      const double s = u(rng), r = u(rng), t = u(rng);
      if (std::abs(1 - std::exp(-s) * r * t) <= 0.1) continue;
      const auto c = psl2::change_of_time(s, r, t);
      const auto lhs = mul(raw(FlowKind::Uplus, -std::exp(-s) * r), raw(FlowKind::U, t));
      const auto rhs = mul(raw(FlowKind::U, c.beta), c.gee.entries());
      double scale = 1.0;
      for (double v : lhs) scale = std::max(scale, std::abs(v));
      worst_ct = std::max(worst_ct, gap_mod_sign(lhs, rhs) / scale);
      ++n;
    }
    for (int n = 0; n < 10000; ++n) {
      const auto g = psl2::rotation(6.3 * u(rng)) * psl2::make_flow(FlowKind::A, 0.5 * u(rng)) *
                     psl2::rotation(6.3 * u(rng));
      const double t = u(rng);
      const auto oracle = mul(mul(raw(FlowKind::U, -t), g.entries()), raw(FlowKind::U, t));
      worst_conj = std::max(worst_conj, gap_mod_sign(psl2::conjugate_by_u(g, t).entries(), oracle));
    }
    d = fmt("change-of-time residual %.2e, u-conjugation residual %.2e", worst_ct, worst_conj);
    return worst_ct < 1e-12 && worst_conj < 1e-12;
  });

  run(2, [&](std::string& d) {
    const double rel = surface::relation_residual(spec);
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int ok = 0;
    for (int i = 0; i < 200; ++i) {
      const auto w = random_reduced_word(spec, 1 + rng() % 12, rng);
      const auto h = psl2::rotation(2 * std::numbers::pi * unit(rng)) *
                     psl2::make_flow(FlowKind::A, 0.8 * spec.inradius * unit(rng)) *
                     psl2::rotation(2 * std::numbers::pi * unit(rng));
      const auto p = surface::reduce(spec.evaluate(w) * h, spec, phi);
      ok += p.xi == surface::character_value(w, spec, phi) ? 1 : 0;
    }
    d = fmt("relation residual %.2e, round trips %d/200", rel, ok);
    return rel < 1e-9 && ok == 200;
  });

  run(3, [](std::string& d) {
    const auto m = thermo::builtin_model("full2-cosh");
    const std::vector<double> zero{0.0}, one{1.0};
    const double ln2 = std::numbers::ln2;
    const double P0 = thermo::pressure_root(m, zero);
    const double P1 = thermo::pressure_root(m, one);
    const auto pc = thermo::pressure_curve(m, cosh_axis());
    const auto cov = thermo::covariance_sigma(pc);
    const double H0 = thermo::legendre_H(pc, zero);
    const double h = 0.02;
    const std::vector<double> xp{h}, xm{-h};
    const double H2 = (thermo::legendre_H(pc, xp) - 2 * H0 + thermo::legendre_H(pc, xm)) / (h * h);
    const double P1_oracle = std::log(2 * std::cosh(1.0)) / ln2;
    d = fmt("P(0)=%.9f P(1)=%.9f (oracle %.9f) Cov=%.6f (oracle %.6f) H(0)=%.9f H''(0)=%.5f (oracle %.5f)", P0, P1,
            P1_oracle, cov.sigma, 1 / ln2, H0, H2, -ln2);
    return std::abs(P0 - 1) < 1e-6 && std::abs(P1 - P1_oracle) < 1e-6 && std::abs(cov.sigma * ln2 - 1) < 0.01 &&
           std::abs(H0 - 1) < 1e-6 && std::abs(H2 / -ln2 - 1) < 0.02;
  });

  run(4, [](std::string& d) {
    bool pass = true;
    for (const auto& name : thermo::builtin_model_names()) {
      const auto m = thermo::builtin_model(name);
      const std::vector<double> zero(m.d, 0.0);
      const auto w = thermo::potential(m, 1.0, zero);
      const auto rpf = thermo::rpf_eigendata(m.space, w);
      // Independent residual from a direct application of the operator.
      const auto Lpsi = thermo::transfer_apply(m.space, w, rpf.psi);
      double res = 0.0, pairing = 0.0;
      for (std::size_t c = 0; c < m.size(); ++c) {
        res = std::max(res, std::abs(Lpsi[c] - rpf.lambda * rpf.psi[c]));
        pairing += rpf.psi[c] * rpf.nu[c];
      }
      d += fmt("%s: residual %.1e, int psi dnu - 1 = %.1e; ", name.c_str(), res, pairing - 1);
      pass = pass && res < 1e-8 && std::abs(pairing - 1) < 1e-10;
    }
    return pass;
  });

  run(5, [&](std::string& d) {
    std::vector<double> times;
    for (int k = 1; k <= 20; ++k) times.push_back(100.0 * k);
    const auto xi = flows::xi_ensemble(cover, 500, 505, times, flows::kGeodesicStep, Exec::parallel);
    const auto rep = flows::clt_statistics(xi, times);
    d = fmt("Var slope %.4f, R^2 %.4f, |mean|/T at 2000 = %.4f", rep.fit.slope, rep.fit.r2, rep.max_mean_over_T);
    return rep.fit.r2 > 0.98 && rep.max_mean_over_T < 0.05;
  });

  const auto cosh = thermo::builtin_model("full2-cosh");

  run(6, [&](std::string& d) {
    const auto setup = window::make_symbolic(cosh, window::default_event(1), 200000, 606, cosh_axis());
    const auto rep = window::verify_key_lemma(setup, {std::exp(6.0)}, 1000, 607, {0.1});
    const auto& box = rep[0].boxes[0];
    d = fmt("in-box samples %zu, median |log ratio| %.4f", box.in_box, box.median_abs_log);
    return !box.underpowered && box.median_abs_log < 0.5;
  });

  std::vector<double> grid;
  for (int k = 4; k <= 8; ++k) grid.push_back(std::exp(static_cast<double>(k)));
  const auto setup = window::make_symbolic(cosh, window::default_event(1), 200000, 700, cosh_axis());
  const auto src = window::symbolic_source(setup, 200, 701);

  run(7, [&](std::string& d) {
    std::vector<window::WindowReport> reps;
    for (double eta : {0.25, 0.5, 0.75}) reps.push_back(window::verify_window_I(src, eta, grid));
    const auto& half = reps[1];
    const bool monotone = reps[0].fitted <= reps[1].fitted && reps[1].fitted <= reps[2].fitted;
    d = fmt("r(0.25)=%.2f r(0.5)=%.2f r(0.75)=%.2f, pass rate at eta=0.5 %.3f", reps[0].fitted, reps[1].fitted,
            reps[2].fitted, half.pass_rate);
    return half.found && !half.degenerate && half.fitted > 0 && half.fitted < 1 && half.pass_rate >= 0.9 &&
           monotone && reps[0].found && reps[2].found;
  });

  run(8, [&](std::string& d) {
    const auto w = window::verify_window_II(src, 0.05, grid);
    d = fmt("c(0.05)=%.3f, pass rate %.3f", w.fitted, w.pass_rate);
    return w.found && !w.degenerate && w.fitted < 0.25 && w.pass_rate >= 0.9;
  });

  run(9, [](std::string& d) {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> unit(0.0, 1.0), coef(-1.0, 1.0);
    int tested = 0, violations = 0;
    while (tested < 10000) {
      rigidity::Poly p;
      const int deg = static_cast<int>(rng() % 4);
      for (int k = 0; k <= deg; ++k) p.coeffs.push_back(coef(rng));
      double a = -10 + 20 * unit(rng), b = -10 + 20 * unit(rng);
      if (a > b) std::swap(a, b);
      const double eps = rigidity::sup_abs(p, a, b) * unit(rng);
      if (b - a < 1e-6 || !(eps > 0.0)) continue;
      violations += rigidity::c_alpha_good_check(p, a, b, eps).pass ? 0 : 1;
      ++tested;
    }
    d = fmt("%d instances, %d violations", tested, violations);
    return violations == 0;
  });

  run(10, [&](std::string& d) {
    const auto target = flows::default_target(spec);
    const std::vector<double> K_grid{1.5, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 100};
    const std::size_t n = 100;
    const auto Ks = map_indices<double>(
        n,
        [&](std::size_t i) {
          std::mt19937_64 rng(derive_seed(1010, i));
          const auto p = flows::random_start(spec, phi, rng);
          const auto rs = flows::return_set(p, target, 1000.0, flows::kHorocycleStep, cover);
          const auto K = flows::smallest_thick_K(rs, K_grid);
          return K ? *K : std::numeric_limits<double>::infinity();
        },
        Exec::parallel);
    const auto passed = std::count_if(Ks.begin(), Ks.end(), [](double K) { return K <= 100; });
    d = fmt("%ld/%zu return sets K-thick with K <= 100 (median K %.1f)", static_cast<long>(passed), n, median(Ks));
    return static_cast<double>(passed) >= 0.9 * static_cast<double>(n);
  });

  run(11, [&](std::string& d) {
    using rigidity::SubgroupSpec;
    const SubgroupSpec kerphi{&spec, {{phi, 0}}};
    const SubgroupSpec kerpsi2{&spec, {{phi, 0}, {spec.character("psi_b1"), 2}}};
    const SubgroupSpec kerb{&spec, {{spec.character("psi_b1"), 0}}};
    const std::vector<std::pair<const SubgroupSpec*, const SubgroupSpec*>> cases{
        {&kerphi, &kerphi}, {&kerphi, &kerpsi2}, {&kerphi, &kerb}};
    bool exact = true;
    for (const auto& [a, b] : cases) {
      const auto idx = rigidity::intersection_index(*a, *b, spec.parse_word("a1 b1"));
      const long i1 = idx.idx1 ? *idx.idx1 : -1, i2 = idx.idx2 ? *idx.idx2 : -1;
      const long o1 = coset_enumeration(spec, *a, *b, 8), o2 = coset_enumeration(spec, *b, *a, 8);
      d += fmt("(%ld,%ld) vs enumeration (%ld,%ld); ", i1, i2, o1, o2);
      exact = exact && i1 == o1 && i2 == o2;
    }
    const auto cp = rigidity::make_partition(64, spec);
    const auto vol = rigidity::haar_cell_volumes(cp, spec);
    const rigidity::JoiningSampler diag({kerphi, kerphi, {}, 0.0});
    const std::array<double, 3> Ts{1e3, 1e4, 1e5};
    const double step = 0.5;
    const std::size_t orbits = 8;
    const auto tvs = map_indices<std::array<double, 3>>(
        orbits,
        [&](std::size_t i) {
          std::mt19937_64 rng(derive_seed(1111, i));
          const auto orbit = diag.orbit(diag.random_start(rng), step, static_cast<std::size_t>(Ts[2] / step));
          std::array<double, 3> out{};
          for (std::size_t k = 0; k < 3; ++k) {
            const auto pt = rigidity::projection_test(orbit, cp, vol, Ts[k]);
            out[k] = std::max(pt.tv1, pt.tv2);
          }
          return out;
        },
        Exec::parallel);
    std::array<double, 3> med{};
    for (std::size_t k = 0; k < 3; ++k) {
      std::vector<double> col;
      for (const auto& r : tvs) col.push_back(r[k]);
      med[k] = median(col);
    }
    d += fmt("median TV %.4f / %.4f / %.4f", med[0], med[1], med[2]);
    return exact && med[0] >= med[1] && med[1] >= med[2] && med[2] < 0.15;
  });

  run(12, [&](std::string& d) {
    const rigidity::SubgroupSpec kerphi{&spec, {{phi, 0}}};
    const auto cp = rigidity::make_partition(std::size_t{1} << 20, spec);
    const auto x = psl2::rotation(0.3) * psl2::make_flow(FlowKind::A, 0.2) * psl2::rotation(0.7);
    const auto control = rigidity::orbit_density(kerphi, x, 0, cp);
    d = fmt("L=0 hits %zu; coverage", control.hit);
    bool increasing = true;
    double prev = control.coverage;
    for (int L : {4, 6, 8, 10}) {
      const auto r = rigidity::orbit_density(kerphi, x, L, cp);
      d += fmt(" L=%d %.4f", L, r.coverage);
      increasing = increasing && r.coverage > prev;
      prev = r.coverage;
    }
    return control.hit == 1 && increasing;
  });

  std::printf("%s: %d of 12 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
