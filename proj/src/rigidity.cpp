#include "horolab/rigidity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "horolab/error.hpp"

namespace horolab::rigidity {

using nlohmann::json;
using psl2::FlowKind;

int Poly::degree() const {
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 0; --k)
    if (coeffs[static_cast<std::size_t>(k)] != 0.0) return k;
  return -1;
}

double Poly::operator()(double x) const {
  double v = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * x + *it;
  return v;
}

Poly Poly::derivative() const {
  Poly d;
  for (std::size_t k = 1; k < coeffs.size(); ++k) d.coeffs.push_back(static_cast<double>(k) * coeffs[k]);
  return d;
}

namespace {

std::vector<double> all_real_roots(const Poly& p) {
  const int deg = p.degree();
  const auto& c = p.coeffs;
  std::vector<double> r;
  if (deg > 3) throw InvalidInput("polynomial degree above 3 is not supported");
  if (deg <= 0) return r;
  if (deg == 1) return {-c[0] / c[1]};
  if (deg == 2) {
    const double a = c[2], b = c[1], cc = c[0];
    const double disc = b * b - 4 * a * cc;
    if (disc < 0) return r;
    if (disc == 0) return {-b / (2 * a)};
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    return {q / a, cc / q};
  }
  const double A = c[2] / c[3], B = c[1] / c[3], C = c[0] / c[3];
  const double P = B - A * A / 3.0;
  const double Q = 2 * A * A * A / 27.0 - A * B / 3.0 + C;
  const double disc = Q * Q / 4.0 + P * P * P / 27.0;
  if (disc < 0) {
    const double m = 2 * std::sqrt(-P / 3.0);
    const double arg = std::clamp(-Q / 2.0 / std::sqrt(-P * P * P / 27.0), -1.0, 1.0);
    const double phi = std::acos(arg);
    for (int k = 0; k < 3; ++k) r.push_back(m * std::cos((phi - 2 * std::numbers::pi * k) / 3.0) - A / 3.0);
  } else if (disc == 0 && P != 0) {
    r = {3 * Q / P - A / 3.0, -1.5 * Q / P - A / 3.0};
  } else {
    const double s = std::sqrt(disc);
    r.push_back(std::cbrt(-Q / 2.0 + s) + std::cbrt(-Q / 2.0 - s) - A / 3.0);
  }
  // Newton polish.
  const Poly dp = p.derivative();
  for (double& x : r) {
    for (int it = 0; it < 3; ++it) {
      const double f = p(x), g = dp(x);
      if (g == 0.0) break;
      const double nx = x - f / g;
      if (std::abs(p(nx)) >= std::abs(f)) break;
      x = nx;
    }
  }
  return r;
}

} // namespace

std::vector<double> real_roots(const Poly& p, double lo, double hi) {
  std::vector<double> out;
  for (double x : all_real_roots(p))
    if (x >= lo && x <= hi) out.push_back(x);
  std::sort(out.begin(), out.end());
  return out;
}

double sup_abs(const Poly& p, double lo, double hi) {
  double s = std::max(std::abs(p(lo)), std::abs(p(hi)));
  for (double x : real_roots(p.derivative(), lo, hi)) s = std::max(s, std::abs(p(x)));
  return s;
}

GoodCheck c_alpha_good_check(const Poly& p, double lo, double hi, double eps, std::optional<int> k) {
  if (!(hi > lo)) throw InvalidInput("c_alpha_good_check: interval must have positive length");
  if (!(eps > 0.0)) throw InvalidInput("c_alpha_good_check: eps must be positive");
  const int deg = p.degree();
  if (deg < 0) throw InvalidInput("c_alpha_good_check: polynomial vanishes identically");
  if (deg > 3) throw InvalidInput("c_alpha_good_check: degree above 3 is not supported");
  const int kk = k.value_or(std::max(1, deg));
  if (kk < std::max(1, deg)) throw InvalidInput("c_alpha_good_check: k below the degree");
  GoodCheck out;
  out.C = kk * std::pow(kk + 1.0, 1.0 / kk);
  out.alpha = 1.0 / kk;
  std::vector<double> cuts{lo, hi};
  for (double shift : {-eps, eps}) {
    Poly q = p;
    q.coeffs[0] += shift;
    if (q.degree() < 0) continue;
    for (double x : real_roots(q, lo, hi)) cuts.push_back(x);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b > a && std::abs(p(0.5 * (a + b))) < eps) out.lhs += b - a;
  }
  const double sup = sup_abs(p, lo, hi);
  out.rhs = out.C * std::pow(eps / sup, out.alpha) * (hi - lo);
  out.pass = out.lhs <= out.rhs + 1e-12 * (hi - lo);
  return out;
}

WeakGood weak_good_empirical(const flows::CoverPoint& p, const flows::Target& K, const Poly& theta, double T,
                             double dt, const flows::Cover& cover) {
  if (!(T > 0.0) || !(dt > 0.0)) throw InvalidInput("weak_good_empirical: need T > 0 and dt > 0");
  if (theta.degree() > 3) throw InvalidInput("weak_good_empirical: degree above 3 is not supported");
  WeakGood out;
  const auto n = static_cast<long>(std::ceil(T / dt - 1e-12));
  const double h = T / static_cast<double>(n);
  auto q = flows::evolve(p, flows::Flow::horocycle, 0.5 * h, cover);
  for (long k = 0; k < n; ++k) {
    if (K(q)) {
      out.mass += h;
      out.lhs += h * std::abs(theta((static_cast<double>(k) + 0.5) * h));
    }
    if (k + 1 < n) q = flows::evolve(q, flows::Flow::horocycle, h, cover);
  }
  out.sup = theta.degree() < 0 ? 0.0 : sup_abs(theta, 0.0, T);
  out.underpowered = out.mass == 0.0;
  out.C_est = out.mass > 0.0 && out.sup > 0.0 ? out.lhs / (out.mass * out.sup)
                                              : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::size_t SubgroupSpec::rows() const {
  std::size_t r = 0;
  for (const auto& [phi, m] : components) r += phi.d;
  return r;
}

ZVec SubgroupSpec::label(const ZVec& ab) const {
  ZVec out(rows());
  std::size_t r = 0;
  for (const auto& [phi, m] : components) {
    const ZVec v = phi.apply(ab);
    for (std::size_t j = 0; j < phi.d; ++j, ++r) out[r] = m > 0 ? ((v[j] % m) + m) % m : v[j];
  }
  return out;
}

SubgroupSpec subgroup_from_json(const json& j, const FuchsianSpec& base) {
  SubgroupSpec s;
  s.base = &base;
  try {
    for (const auto& c : j.at("characters")) {
      const long m = c.value("modulus", 0L);
      if (m < 0) throw ConfigError("subgroup spec: negative modulus");
      const auto& ch = c.at("character");
      Character phi;
      if (ch.is_string()) {
        phi = base.character(ch.get<std::string>());
      } else {
        std::map<std::string, std::vector<long>> by_name;
        std::size_t d = 1;
        for (const auto& [gen, v] : ch.items()) {
          by_name[gen] = v.is_array() ? v.get<std::vector<long>>() : std::vector<long>{v.get<long>()};
          d = by_name[gen].size();
        }
        phi = surface::make_character(base, d, by_name);
      }
      s.components.emplace_back(phi, m);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("subgroup spec: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("subgroup spec: ") + e.what());
  }
  if (s.rows() == 0 || s.rows() > ZVec::capacity) throw ConfigError("subgroup spec: need 1 to 8 character rows");
  return s;
}

namespace {

void check_spec(const SubgroupSpec& s) {
  if (s.base == nullptr) throw InvalidInput("subgroup: no base lattice");
  if (s.rows() > ZVec::capacity) throw InvalidInput("subgroup: too many character rows");
  for (const auto& [phi, m] : s.components) {
    if (m < 0) throw InvalidInput("subgroup: negative modulus");
    if (phi.values.size() != phi.d) throw InvalidInput("subgroup: character rank mismatch");
    for (const auto& row : phi.values)
      if (row.size() != s.base->num_pairs()) throw InvalidInput("subgroup: character does not match the lattice");
  }
}

// Size of the image of the lattice generated by `gens` under s.label, or
// nullopt if the Z-part of the image is nonzero (infinite image).
std::optional<long> image_size(const std::vector<ZVec>& gens, const SubgroupSpec& s) {
  std::vector<ZVec> imgs;
  std::vector<long> mod;
  for (const auto& [phi, m] : s.components)
    for (std::size_t j = 0; j < phi.d; ++j) mod.push_back(m);
  for (const auto& g : gens) {
    const ZVec v = s.label(g);
    for (std::size_t r = 0; r < v.size(); ++r)
      if (mod[r] == 0 && v[r] != 0) return std::nullopt;
    imgs.push_back(v);
  }
  // Closure of {0} under adding generators in the finite group.
  std::set<ZVec> seen{ZVec(s.rows())};
  std::vector<ZVec> frontier{ZVec(s.rows())};
  while (!frontier.empty()) {
    std::vector<ZVec> next;
    for (const auto& x : frontier) {
      for (const auto& g : imgs) {
        ZVec y = x + g;
        for (std::size_t r = 0; r < y.size(); ++r)
          if (mod[r] > 0) y[r] %= mod[r];
        if (seen.insert(y).second) next.push_back(y);
      }
    }
    if (seen.size() > 1000000) throw NumericError("intersection_index: finite quotient too large");
    frontier = std::move(next);
  }
  return static_cast<long>(seen.size());
}

} // namespace

std::vector<ZVec> kernel_lattice(const SubgroupSpec& s) {
  check_spec(s);
  const std::size_t n = s.base->num_pairs();
  // Rows: label components; columns: the n lattice coordinates, then one
  // slack column -m per modular row so that congruences become equations.
  std::vector<std::vector<long>> A;
  std::size_t slack = 0;
  for (const auto& [phi, m] : s.components) slack += m > 0 ? phi.d : 0;
  const std::size_t N = n + slack;
  std::size_t sc = n;
  for (const auto& [phi, m] : s.components) {
    for (std::size_t j = 0; j < phi.d; ++j) {
      std::vector<long> row(N, 0);
      for (std::size_t p = 0; p < n; ++p) row[p] = phi.values[j][p];
      if (m > 0) row[sc++] = -m;
      A.push_back(row);
    }
  }
  std::vector<std::vector<long>> U(N, std::vector<long>(N, 0));  // columns of U
  for (std::size_t k = 0; k < N; ++k) U[k][k] = 1;
  auto col_axpy = [&](std::size_t dst, std::size_t src, long q) {
    for (auto& row : A) row[dst] -= q * row[src];
    for (std::size_t i = 0; i < N; ++i) U[dst][i] -= q * U[src][i];
  };
  auto col_swap = [&](std::size_t a, std::size_t b) {
    for (auto& row : A) std::swap(row[a], row[b]);
    std::swap(U[a], U[b]);
  };
  std::size_t c = 0;
  for (auto& row : A) {
    if (c >= N) break;
    while (true) {
      std::size_t piv = N;
      for (std::size_t k = c; k < N; ++k)
        if (row[k] != 0 && (piv == N || std::abs(row[k]) < std::abs(row[piv]))) piv = k;
      if (piv == N) break;
      col_swap(c, piv);
      bool done = true;
      for (std::size_t k = c + 1; k < N; ++k) {
        if (row[k] == 0) continue;
        col_axpy(k, c, row[k] / row[c]);
        done = done && row[k] == 0;
      }
      if (done) {
        ++c;
        break;
      }
    }
  }
  std::vector<ZVec> out;
  for (std::size_t k = c; k < N; ++k) {
    ZVec v(n);
    for (std::size_t p = 0; p < n; ++p) v[p] = U[k][p];
    out.push_back(v);
  }
  return out;
}

IndexPair intersection_index(const SubgroupSpec& s1, const SubgroupSpec& s2, const std::vector<int>& g0) {
  check_spec(s1);
  check_spec(s2);
  if (s1.base != s2.base && s1.base->num_pairs() != s2.base->num_pairs()) {
    throw InvalidInput("intersection_index: subgroups of different lattices");
  }
  (void)s1.base->abelianize(g0);  // validates the word
  // Both subgroups contain the commutator subgroup, hence are normal and
  // g0^-1 Gamma_2 g0 = Gamma_2 for g0 in the base lattice.
  IndexPair out;
  out.idx1 = image_size(kernel_lattice(s1), s2);
  out.idx2 = image_size(kernel_lattice(s2), s1);
  return out;
}

JoiningSampler::JoiningSampler(JoiningModel jm) : jm_(std::move(jm)) {
  const auto idx = intersection_index(jm_.spec1, jm_.spec2, jm_.g0);
  if (!idx.idx1 || !idx.idx2) throw InvalidInput("build_joining: the subgroups are not commensurable");
  l_ = *idx.idx1;
  g0_ab_ = jm_.spec1.base->abelianize(jm_.g0);
}

JoiningPoint JoiningSampler::make_point(double t, const GroupElement& rep, const ZVec& ab) const {
  JoiningPoint pt;
  pt.t = t;
  pt.first = {rep, jm_.spec1.label(ab)};
  if (jm_.translation == 0.0) {
    pt.second = {rep, jm_.spec2.label(g0_ab_ + ab)};
  } else {
    const auto r = surface::reduce_ab(rep * psl2::make_flow(FlowKind::U, jm_.translation), *jm_.spec2.base);
    pt.second = {r.rep, jm_.spec2.label(g0_ab_ + ab + r.ab)};
  }
  return pt;
}

JoiningPoint JoiningSampler::at(const GroupElement& g) const {
  const auto r = surface::reduce_ab(g, *jm_.spec1.base);
  return make_point(0.0, r.rep, r.ab);
}

std::vector<JoiningPoint> JoiningSampler::orbit(const GroupElement& g, double step, std::size_t count) const {
  if (!(step > 0.0)) throw InvalidInput("JoiningSampler::orbit: step must be positive");
  const auto& spec = *jm_.spec1.base;
  auto r = surface::reduce_ab(g, spec);
  GroupElement rep = r.rep;
  ZVec ab = r.ab;
  const auto chunks = static_cast<long>(std::ceil(step / 0.5));
  const GroupElement u = psl2::make_flow(FlowKind::U, step / static_cast<double>(chunks));
  std::vector<JoiningPoint> out;
  out.reserve(count + 1);
  for (std::size_t k = 0; k <= count; ++k) {
    out.push_back(make_point(static_cast<double>(k) * step, rep, ab));
    for (long c = 0; c < chunks; ++c) {
      const auto s = surface::reduce_ab(rep * u, spec);
      rep = s.rep;
      ab += s.ab;
    }
  }
  return out;
}

GroupElement JoiningSampler::random_start(std::mt19937_64& rng) const {
  return surface::sample_domain(*jm_.spec1.base, rng);
}

std::size_t CellPartition::cell(const GroupElement& rep) const {
  const auto fc = surface::frame_coords(rep);
  const double two_pi = 2 * std::numbers::pi;
  // Values within 1e-6 bins below a boundary snap upward, so rounding noise
  // cannot split points that sit exactly on a boundary; angles wrap around.
  auto bin = [](double x, std::size_t n, bool periodic) {
    const auto k = static_cast<long>(std::floor(x * static_cast<double>(n) + 1e-6));
    const auto m = static_cast<long>(n);
    if (periodic) return static_cast<std::size_t>(((k % m) + m) % m);
    return static_cast<std::size_t>(std::clamp<long>(k, 0, m - 1));
  };
  // The polar angle is meaningless at the centre (acosh turns 1e-16 noise into 1e-8).
  const std::size_t s = fc.radius < 1e-6 ? 0 : bin(fc.polar_angle / two_pi, sectors, true);
  const std::size_t b = bin((std::cosh(fc.radius) - 1.0) / (std::cosh(circumradius) - 1.0), bands, false);
  const std::size_t f = bin(fc.frame_angle / two_pi, frames, true);
  return (s * bands + b) * frames + f;
}

CellPartition make_partition(std::size_t cells, const FuchsianSpec& spec) {
  CellPartition cp;
  cp.circumradius = spec.circumradius;
  if (cells == 1) return cp;
  if (cells < 8 || cells % 8 != 0 || ((cells / 8) & (cells / 8 - 1)) != 0) {
    throw InvalidInput("cell partition: cell count must be 1 or 8 times a power of two");
  }
  std::size_t e = 0;
  while ((std::size_t{8} << e) < cells) ++e;
  const std::size_t third = e / 3;
  cp.sectors = std::size_t{8} << third;
  cp.bands = std::size_t{1} << (third + (e % 3 >= 1 ? 1 : 0));
  cp.frames = std::size_t{1} << (third + (e % 3 >= 2 ? 1 : 0));
  return cp;
}

std::vector<double> haar_cell_volumes(const CellPartition& cp, const FuchsianSpec& spec, std::size_t points,
                                      std::uint64_t seed, Exec exec) {
  if (points == 0) throw InvalidInput("haar_cell_volumes: need points");
  constexpr std::size_t chunk = 10000;
  const std::size_t chunks = (points + chunk - 1) / chunk;
  std::vector<double> counts(cp.size(), 0.0);
  constexpr std::size_t batch = 64;
  for (std::size_t first = 0; first < chunks; first += batch) {
    const std::size_t n = std::min(batch, chunks - first);
    const auto part = map_indices<std::vector<std::uint32_t>>(
        n,
        [&](std::size_t k) {
          const std::size_t c = first + k;
          std::mt19937_64 rng(derive_seed(seed, c));
          std::vector<std::uint32_t> h(cp.size(), 0);
          const std::size_t m = std::min(chunk, points - c * chunk);
          for (std::size_t i = 0; i < m; ++i) ++h[cp.cell(surface::sample_domain(spec, rng))];
          return h;
        },
        exec);
    for (const auto& h : part)
      for (std::size_t c = 0; c < h.size(); ++c) counts[c] += h[c];
  }
  for (double& v : counts) v /= static_cast<double>(points);
  return counts;
}

ProjectionTV projection_test(const std::vector<JoiningPoint>& orbit, const CellPartition& cp,
                             const std::vector<double>& volumes, double T) {
  if (volumes.size() != cp.size()) throw InvalidInput("projection_test: volumes do not match the partition");
  std::vector<double> h1(cp.size(), 0.0), h2(cp.size(), 0.0);
  double n = 0.0;
  for (const auto& pt : orbit) {
    if (pt.t > T) break;
    h1[cp.cell(pt.first.rep)] += 1.0;
    h2[cp.cell(pt.second.rep)] += 1.0;
    n += 1.0;
  }
  if (n == 0.0) throw InvalidInput("projection_test: no orbit points up to T");
  ProjectionTV out;
  out.T = T;
  for (std::size_t c = 0; c < cp.size(); ++c) {
    out.tv1 += 0.5 * std::abs(h1[c] / n - volumes[c]);
    out.tv2 += 0.5 * std::abs(h2[c] / n - volumes[c]);
  }
  return out;
}

FiberStats fiber_statistics(const std::vector<JoiningPoint>& orbit) {
  std::map<ZVec, std::set<ZVec>> fibers;
  for (const auto& pt : orbit) fibers[pt.first.label].insert(pt.second.label);
  FiberStats out;
  out.fibers = fibers.size();
  for (const auto& [k, v] : fibers) out.max_fiber = std::max(out.max_fiber, v.size());
  return out;
}

namespace {

struct Branch {
  std::vector<std::uint64_t> bits;
  std::uint64_t words = 0;
  std::uint64_t nodes = 0;
};

struct OrbitWalker {
  const SubgroupSpec& s;
  const FuchsianSpec& spec;
  const CellPartition& cp;
  int L;
  std::vector<ZVec> gen_ab;
  std::vector<std::size_t> z_rows;  // label rows valued in Z, for pruning
  std::vector<long> z_step;         // largest change of such a row per letter
  std::atomic<std::uint64_t>& total;
  std::uint64_t max_words;

  void visit(const GroupElement& rep, const ZVec& ab, int depth, int last, Branch& br) const {
    ++br.nodes;
    const ZVec lab = s.label(ab);
    if (lab.is_zero()) {
      ++br.words;
      if (total.fetch_add(1, std::memory_order_relaxed) + 1 > max_words) {
        throw InvalidInput("orbit_density: more than " + std::to_string(max_words) + " words; lower L");
      }
      const std::size_t c = cp.cell(rep);
      br.bits[c / 64] |= std::uint64_t{1} << (c % 64);
    }
    if (depth == L) return;
    const int remaining = L - depth - 1;
    for (int h = 0; h < static_cast<int>(spec.num_generators()); ++h) {
      if (last >= 0 && spec.inverse_of[static_cast<std::size_t>(last)] == h) continue;
      const ZVec next_ab = ab + gen_ab[static_cast<std::size_t>(h)];
      if (!viable(next_ab, remaining)) continue;
      const auto r = surface::reduce_ab(rep * spec.generators[static_cast<std::size_t>(h)], spec);
      visit(r.rep, next_ab, depth + 1, h, br);
    }
  }

  bool viable(const ZVec& ab, int remaining) const {
    const ZVec lab = s.label(ab);
    for (std::size_t k = 0; k < z_rows.size(); ++k)
      if (std::abs(lab[z_rows[k]]) > static_cast<long>(remaining) * z_step[k]) return false;
    return true;
  }
};

} // namespace

OrbitResult orbit_density(const SubgroupSpec& s1, const GroupElement& x, int L, const CellPartition& cp, Exec exec,
                          std::uint64_t max_words) {
  check_spec(s1);
  if (L < 0) throw InvalidInput("orbit_density: L must be nonnegative");
  const auto& spec = *s1.base;
  std::atomic<std::uint64_t> total{0};
  OrbitWalker w{s1, spec, cp, L, {}, {}, {}, total, max_words};
  for (std::size_t k = 0; k < spec.num_generators(); ++k) w.gen_ab.push_back(spec.generator_ab(static_cast<int>(k)));
  std::size_t r = 0;
  for (const auto& [phi, m] : s1.components) {
    for (std::size_t j = 0; j < phi.d; ++j, ++r) {
      if (m != 0) continue;
      long step = 0;
      for (const auto& g : w.gen_ab) step = std::max(step, std::abs(s1.label(g)[r]));
      w.z_rows.push_back(r);
      w.z_step.push_back(step);
    }
  }
  const std::size_t nwords = (cp.size() + 63) / 64;
  const auto root = surface::reduce_ab(x, spec);
  Branch head;
  head.bits.assign(nwords, 0);
  // Root: the empty word.
  {
    ++head.nodes;
    ++head.words;
    ++total;
    const std::size_t c = cp.cell(root.rep);
    head.bits[c / 64] |= std::uint64_t{1} << (c % 64);
  }
  std::vector<Branch> branches;
  if (L > 0) {
    branches = map_indices<Branch>(
        spec.num_generators(),
        [&](std::size_t h) {
          Branch br;
          br.bits.assign(nwords, 0);
          const ZVec ab = w.gen_ab[h];
          if (!w.viable(ab, L - 1)) return br;
          const auto red = surface::reduce_ab(root.rep * spec.generators[h], spec);
          w.visit(red.rep, ab, 1, static_cast<int>(h), br);
          return br;
        },
        exec);
  }
  OrbitResult out;
  out.L = L;
  std::vector<std::uint64_t> bits = head.bits;
  out.words = head.words;
  out.nodes = head.nodes;
  for (const auto& br : branches) {
    out.words += br.words;
    out.nodes += br.nodes;
    for (std::size_t k = 0; k < nwords; ++k) bits[k] |= br.bits[k];
  }
  for (auto b : bits) out.hit += static_cast<std::size_t>(std::popcount(b));
  out.coverage = static_cast<double>(out.hit) / static_cast<double>(cp.size());
  return out;
}

json to_json(const OrbitResult& r) {
  return {{"L", r.L}, {"words", r.words}, {"nodes", r.nodes}, {"cells_hit", r.hit}, {"coverage", r.coverage}};
}

} // namespace horolab::rigidity
