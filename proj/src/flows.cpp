#include "horolab/flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "horolab/error.hpp"

namespace horolab::flows {

using psl2::FlowKind;
using psl2::GroupElement;

namespace {

constexpr double kMaxChunk = 0.5;

FlowKind to_kind(Flow f) { return f == Flow::geodesic ? FlowKind::A : FlowKind::U; }

CoverPoint step_once(const CoverPoint& p, FlowKind kind, double t, const Cover& cover) {
  surface::Reduction r = surface::reduce_ab(p.rep * psl2::make_flow(kind, t), *cover.spec);
  return {r.rep, p.xi + cover.phi->apply(r.ab)};
}

} // namespace

CoverPoint evolve(const CoverPoint& p, Flow kind, double t, const Cover& cover) {
  if (!std::isfinite(t)) throw InvalidInput("evolve: non-finite time");
  if (t == 0.0) return p;
  const auto chunks = static_cast<long>(std::ceil(std::abs(t) / kMaxChunk));
  const double h = t / static_cast<double>(chunks);
  CoverPoint q = p;
  for (long k = 0; k < chunks; ++k) q = step_once(q, to_kind(kind), h, cover);
  return q;
}

CoverPoint deck_shift(const CoverPoint& p, const ZVec& n) { return {p.rep, p.xi + n}; }

Trajectory trace(const CoverPoint& start, Flow kind, double step, std::size_t count, const Cover& cover) {
  if (!(step > 0.0)) throw InvalidInput("trace: step must be positive");
  Trajectory tr{start, kind, step, {}};
  tr.samples.reserve(count + 1);
  CoverPoint q = start;
  tr.samples.emplace_back(0.0, q);
  for (std::size_t k = 1; k <= count; ++k) {
    q = evolve(q, kind, step, cover);
    tr.samples.emplace_back(static_cast<double>(k) * step, q);
  }
  return tr;
}

std::vector<ZVec> xi_path(const CoverPoint& p, const std::vector<double>& times, const Cover& cover, double step) {
  if (!(step > 0.0)) throw InvalidInput("xi_path: step must be positive");
  std::vector<ZVec> out;
  out.reserve(times.size());
  CoverPoint q = p;
  double now = 0.0;
  for (double T : times) {
    if (!std::isfinite(T)) throw InvalidInput("xi_path: non-finite time");
    if (T < now) throw InvalidInput("xi_path: times must be increasing");
    const double span = T - now;
    const auto n = static_cast<long>(std::ceil(span / step - 1e-12));
    if (n > 0) {
      const double h = span / static_cast<double>(n);
      for (long k = 0; k < n; ++k) q = step_once(q, FlowKind::A, h, cover);
    }
    now = T;
    out.push_back(q.xi);
  }
  return out;
}

ZVec xi_T(const CoverPoint& p, double T, const Cover& cover, double step) {
  if (!std::isfinite(T)) throw InvalidInput("xi_T: non-finite time");
  if (T == 0.0) return p.xi;
  if (T > 0.0) return xi_path(p, {T}, cover, step).front();
  const auto n = static_cast<long>(std::ceil(-T / step - 1e-12));
  CoverPoint q = p;
  for (long k = 0; k < n; ++k) q = step_once(q, FlowKind::A, T / static_cast<double>(n), cover);
  return q.xi;
}

namespace {

template <class Visit>
void midpoint_walk(const CoverPoint& p, double T, double dt, const Cover& cover, Visit&& visit) {
  if (!(dt > 0.0) || !std::isfinite(T) || T < 0.0) throw InvalidInput("birkhoff: need T >= 0 and dt > 0");
  const auto n = static_cast<long>(std::ceil(T / dt - 1e-12));
  if (n == 0) return;
  const double h = T / static_cast<double>(n);
  CoverPoint q = step_once(p, FlowKind::U, 0.5 * h, cover);
  for (long k = 0; k < n; ++k) {
    visit(k, h, q);
    if (k + 1 < n) q = step_once(q, FlowKind::U, h, cover);
  }
}

} // namespace

double birkhoff_integral(const CoverPoint& p, const ScalarField& psi, double T, double dt, const Cover& cover) {
  double sum = 0.0;
  midpoint_walk(p, T, dt, cover, [&](long, double h, const CoverPoint& q) { sum += psi(q) * h; });
  return sum;
}

CumulativeIntegral birkhoff_cumulative(const CoverPoint& p, const ScalarField& psi, double T, double dt,
                                       const Cover& cover) {
  CumulativeIntegral out{dt, {0.0}};
  double sum = 0.0;
  midpoint_walk(p, T, dt, cover, [&](long, double h, const CoverPoint& q) {
    out.h = h;
    sum += psi(q) * h;
    out.values.push_back(sum);
  });
  return out;
}

std::vector<double> birkhoff_at_times(const CoverPoint& p, const ScalarField& psi, const std::vector<double>& times,
                                      double dt, const Cover& cover) {
  if (!std::is_sorted(times.begin(), times.end())) throw InvalidInput("birkhoff_at_times: times must be increasing");
  std::vector<double> out(times.size(), 0.0);
  if (times.empty() || times.back() <= 0.0) return out;
  std::size_t j = 0;
  while (j < times.size() && times[j] <= 0.0) ++j;
  double sum = 0.0;
  midpoint_walk(p, times.back(), dt, cover, [&](long k, double h, const CoverPoint& q) {
    const double piece = psi(q) * h;
    const double right = static_cast<double>(k + 1) * h;
    while (j < times.size() && times[j] <= right) {
      out[j] = sum + std::clamp((times[j] - right + h) / h, 0.0, 1.0) * piece;
      ++j;
    }
    sum += piece;
  });
  for (; j < times.size(); ++j) out[j] = sum;
  return out;
}

double CumulativeIntegral::at(double t) const {
  if (values.size() < 2 || t <= 0.0) return 0.0;
  const double x = t / h;
  const auto last = static_cast<double>(values.size() - 1);
  if (x >= last) return values.back();
  const auto j = static_cast<std::size_t>(x);
  const double frac = x - static_cast<double>(j);
  return values[j] + frac * (values[j + 1] - values[j]);
}

ScalarField domain_bump(const ZVec& sheet, double radius) {
  return [sheet, radius](const CoverPoint& q) {
    if (!(q.xi == sheet)) return 0.0;
    const double r = surface::hyperbolic_dist_to_center(q.rep);
    if (r >= radius) return 0.0;
    const double s = 1.0 - r / radius;
    return s * s;
  };
}

Target ball_target(long R, double radius) {
  const double cosh_radius = std::cosh(radius);
  return [R, cosh_radius](const CoverPoint& q) {
    for (long v : q.xi)
      if (std::abs(v) > R) return false;
    return psl2::cosh_dist_to_i(q.rep) <= cosh_radius;
  };
}

Target default_target(const FuchsianSpec& spec) { return ball_target(1, spec.inradius); }

double ReturnSet::measure() const {
  double m = 0.0;
  for (const auto& [a, b] : intervals) m += b - a;
  return m;
}

ReturnSet return_set(const CoverPoint& p, const Target& target, double tmax, double dt, const Cover& cover) {
  if (!(dt > 0.0) || !(tmax > 0.0)) throw InvalidInput("return_set: need tmax > 0 and dt > 0");
  ReturnSet rs{tmax, dt, {}};
  const auto n = static_cast<long>(std::llround(tmax / dt));
  std::vector<char> hit(static_cast<std::size_t>(2 * n + 1), 0);
  hit[static_cast<std::size_t>(n)] = target(p) ? 1 : 0;
  for (int dir : {1, -1}) {
    CoverPoint q = p;
    for (long k = 1; k <= n; ++k) {
      q = step_once(q, FlowKind::U, dir * dt, cover);
      hit[static_cast<std::size_t>(n + dir * k)] = target(q) ? 1 : 0;
    }
  }
  for (long j = -n; j <= n; ++j) {
    if (!hit[static_cast<std::size_t>(j + n)]) continue;
    const double t = static_cast<double>(j) * dt;
    const double a = std::max(-tmax, t - 0.5 * dt), b = std::min(tmax, t + 0.5 * dt);
    if (!rs.intervals.empty() && rs.intervals.back().second >= a - 1e-12 * dt) {
      rs.intervals.back().second = b;
    } else {
      rs.intervals.emplace_back(a, b);
    }
  }
  return rs;
}

bool meets_window(const ReturnSet& rs, double K, double t) {
  for (const auto& [a, b] : rs.intervals) {
    if (b >= t && a <= K * t) return true;
    if (a <= -t && b >= -K * t) return true;
  }
  return false;
}

ThickResult k_thick_check(const ReturnSet& rs, double K) {
  if (!(K > 1.0)) throw InvalidInput("k_thick_check: K must exceed 1");
  // t passes iff it lies in [max(a,0)/K, b] for a positive-side interval [a, b]
  // or in the mirrored range for a negative-side one.
  std::vector<std::pair<double, double>> covered;
  for (const auto& [a, b] : rs.intervals) {
    if (b > 0.0) covered.emplace_back(std::max(a, 0.0) / K, b);
    if (a < 0.0) covered.emplace_back(std::max(-b, 0.0) / K, -a);
  }
  std::sort(covered.begin(), covered.end());
  const double lo = rs.dt, hi = rs.tmax / K;
  ThickResult out;
  double reach = lo;  // [lo, reach] is known to be covered once started
  bool started = false;
  for (const auto& [a, b] : covered) {
    if (a > reach) break;
    if (b >= reach) {
      reach = b;
      started = true;
    }
  }
  if (!started) {
    out.first_failing_t = lo;
  } else if (reach < hi) {
    out.first_failing_t = reach;
  }
  out.pass = !out.first_failing_t.has_value();
  return out;
}

std::optional<double> smallest_thick_K(const ReturnSet& rs, const std::vector<double>& K_grid) {
  for (double K : K_grid)
    if (k_thick_check(rs, K).pass) return K;
  return std::nullopt;
}

CoverPoint random_start(const FuchsianSpec& spec, const Character& phi, std::mt19937_64& rng) {
  return {surface::sample_domain(spec, rng), ZVec(phi.d)};
}

std::vector<std::vector<ZVec>> xi_ensemble(const Cover& cover, std::size_t samples, std::uint64_t seed,
                                           const std::vector<double>& times, double step, Exec exec) {
  return map_indices<std::vector<ZVec>>(
      samples,
      [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(seed, i));
        return xi_path(random_start(*cover.spec, *cover.phi, rng), times, cover, step);
      },
      exec);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("fit_line: need at least two paired points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  LinearFit f;
  const double mx = sx / n, my = sy / n;
  const double cxx = sxx - n * mx * mx, cxy = sxy - n * mx * my, cyy = syy - n * my * my;
  f.slope = cxy / cxx;
  f.intercept = my - f.slope * mx;
  f.r2 = cyy > 0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  f.slope0 = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - f.slope0 * x[i];
    ss_res += e * e;
  }
  f.r2_origin = cyy > 0 ? 1.0 - ss_res / cyy : 1.0;
  return f;
}

CltReport clt_statistics(const std::vector<std::vector<ZVec>>& xi, const std::vector<double>& times) {
  if (xi.empty() || times.empty()) throw InvalidInput("clt_statistics: empty ensemble");
  CltReport rep;
  rep.times = times;
  const auto m = static_cast<double>(xi.size());
  const std::size_t d = xi.front().front().size();
  for (std::size_t j = 0; j < times.size(); ++j) {
    double s = 0.0, ss = 0.0;
    for (const auto& row : xi) {
      const auto v = static_cast<double>(row[j][0]);
      s += v;
      ss += v * v;
    }
    const double mean = s / m;
    rep.mean.push_back(mean);
    rep.variance.push_back((ss - m * mean * mean) / (m - 1.0));
  }
  rep.fit = fit_line(times, rep.variance);
  const std::size_t last = times.size() - 1;
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (const auto& row : xi) s += static_cast<double>(row[last][c]);
    rep.max_mean_over_T = std::max(rep.max_mean_over_T, std::abs(s / m) / times[last]);
  }
  double lil = 0.0;
  for (const auto& row : xi) {
    double best = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double t = times[j];
      if (t <= std::exp(1.0)) continue;
      const double denom = std::sqrt(t * std::log(std::log(t)));
      if (!(denom > 0.0)) continue;
      double norm = 0.0;
      for (long v : row[j]) norm += static_cast<double>(v) * static_cast<double>(v);
      best = std::max(best, std::sqrt(norm) / denom);
    }
    lil += best;
  }
  rep.lil_statistic = lil / m;
  return rep;
}

} // namespace horolab::flows
