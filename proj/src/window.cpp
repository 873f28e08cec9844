#include "horolab/window.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "horolab/error.hpp"

namespace horolab::window {

using nlohmann::json;

namespace {

constexpr double kPassThreshold = 0.9;
constexpr double kRelSlack = 1e-9;
constexpr std::uint64_t kPoolStream = 0x5bd1e9955bd1e995ULL;

std::int64_t pack(const ZVec& x) {
  constexpr std::int64_t off = std::int64_t{1} << 30;
  const std::int64_t a = x[0] + off;
  const std::int64_t b = (x.size() > 1 ? x[1] : 0) + off;
  return (a << 32) | b;
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::size_t find_time(const std::vector<double>& times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end() || *it != t) throw InvalidInput("occupation: time not evaluated");
  return static_cast<std::size_t>(it - times.begin());
}

double quantile(std::vector<double> v, double q) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::min(v.size() - 1, rank == 0 ? 0 : rank - 1)];
}

void check_grid(const std::vector<double>& T_grid) {
  if (T_grid.empty()) throw InvalidInput("window: empty T grid");
  for (double T : T_grid)
    if (!(T > 0.0) || !std::isfinite(T)) throw InvalidInput("window: grid times must be positive");
  if (!std::is_sorted(T_grid.begin(), T_grid.end())) throw InvalidInput("window: T grid must be increasing");
}

// Per-sample burn-in: first grid T whose integral exceeds factor * sup psi.
std::vector<double> burn_in_times(const std::vector<std::vector<double>>& I, const std::vector<double>& times,
                                  const std::vector<double>& T_grid, double threshold) {
  std::vector<double> out(I.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < I.size(); ++i) {
    for (double T : T_grid) {
      if (I[i][find_time(times, T)] > threshold) {
        out[i] = T;
        break;
      }
    }
  }
  return out;
}

// Worst ratio per sample over the eligible grid times; NaN when the sample is
// not eligible. `ratio(i, T)` evaluates one sample at one grid time.
template <class Ratio>
std::vector<double> worst_ratios(std::size_t samples, const std::vector<double>& T_grid,
                                 const std::vector<double>& burn, bool all_eligible, Ratio&& ratio) {
  std::vector<double> out(samples, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < samples; ++i) {
    if (!all_eligible && std::isnan(burn[i])) continue;
    double worst = -std::numeric_limits<double>::infinity();
    for (double T : T_grid) {
      if (!all_eligible && T < burn[i]) continue;
      worst = std::max(worst, ratio(i, T));
    }
    out[i] = worst;
  }
  return out;
}

double pass_fraction(const std::vector<double>& worst, double bound) {
  std::size_t eligible = 0, pass = 0;
  for (double w : worst) {
    if (std::isnan(w)) continue;
    ++eligible;
    pass += w <= bound * (1 + kRelSlack) + kRelSlack * std::numeric_limits<double>::min() ? 1 : 0;
  }
  return eligible == 0 ? 0.0 : static_cast<double>(pass) / static_cast<double>(eligible);
}

// I(a) / I(b) with 0/0 read as 0 (the inequality 0 <= c * 0 holds).
double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
}

struct Prepared {
  std::vector<double> times;
  std::vector<std::vector<double>> I;
  std::vector<double> burn;
  std::size_t eligible = 0;
  bool degenerate = false;
};

Prepared prepare(const OccupationSource& src, const std::vector<double>& T_grid, std::vector<double> extra,
                 Exec exec, double burn_factor) {
  Prepared p;
  extra.insert(extra.end(), T_grid.begin(), T_grid.end());
  p.times = sorted_unique(std::move(extra));
  p.I = src.evaluate(p.times, exec);
  if (p.I.size() != src.samples) throw NumericError("occupation source returned the wrong number of samples");
  p.burn = burn_in_times(p.I, p.times, T_grid, burn_factor * src.sup_psi);
  for (double b : p.burn) p.eligible += std::isnan(b) ? 0 : 1;
  p.degenerate = p.eligible == 0;
  if (p.degenerate) p.eligible = src.samples;
  return p;
}

} // namespace

double key_lemma_rhs(double mE, double sigma, int d, double T, std::span<const double> xi, const LegendreFn& H) {
  if (!(T > std::numbers::e)) throw InvalidInput("key_lemma_rhs: need T > e");
  if (!(sigma > 0.0)) throw InvalidInput("key_lemma_rhs: sigma must be positive");
  if (d < 1 || xi.size() != static_cast<std::size_t>(d)) throw InvalidInput("key_lemma_rhs: xi must have d components");
  const double Ts = std::log(T);
  std::vector<double> x(xi.begin(), xi.end());
  for (double& v : x) v /= Ts;
  const double h = H(x);
  return mE * T / std::pow(2 * std::numbers::pi * sigma * Ts, 0.5 * d) * std::exp(Ts * (h - 1.0));
}

OccupationSource geometric_source(const flows::Cover& cover, double radius, std::size_t samples, std::uint64_t seed,
                                  double dt) {
  OccupationSource src;
  src.name = "geometric";
  src.samples = samples;
  src.sup_psi = 1.0;
  src.evaluate = [cover, radius, samples, seed, dt](const std::vector<double>& times, Exec exec) {
    const auto psi = flows::domain_bump(ZVec(cover.phi->d), radius);
    return map_indices<std::vector<double>>(
        samples,
        [&](std::size_t i) {
          std::mt19937_64 rng(derive_seed(seed, i));
          const auto p = flows::random_start(*cover.spec, *cover.phi, rng);
          return flows::birkhoff_at_times(p, psi, times, dt, cover);
        },
        exec);
  };
  return src;
}

OccupationSource constant_source(double value, std::size_t samples) {
  OccupationSource src;
  src.name = "constant";
  src.samples = samples;
  src.sup_psi = std::abs(value);
  src.evaluate = [value, samples](const std::vector<double>& times, Exec) {
    std::vector<double> row(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) row[k] = value * times[k];
    return std::vector<std::vector<double>>(samples, row);
  };
  return src;
}

SymbolicEvent default_event(std::size_t d) {
  SymbolicEvent e;
  e.base = [](std::span<const int> w) { return w[0] == 0; };
  ZVec unit(d);
  unit[0] = 1;
  e.sheets = {ZVec(d), unit};
  return e;
}

SymbolicSetup make_symbolic(const thermo::ShiftModel& m, SymbolicEvent event, std::size_t pool_size,
                            std::uint64_t seed, const std::vector<double>& axis) {
  if (m.d < 1 || m.d > 2) throw InvalidInput("symbolic window: model rank must be 1 or 2");
  for (const auto& e : event.sheets)
    if (e.size() != m.d) throw InvalidInput("symbolic window: sheet has the wrong dimension");
  if (pool_size == 0) throw InvalidInput("symbolic window: empty pool");
  SymbolicSetup s;
  s.model = &m;
  const std::vector<double> zero(m.d, 0.0);
  s.rpf = thermo::rpf_eigendata(m.space, thermo::potential(m, 1.0, zero));
  s.suspension = std::make_unique<thermo::Suspension>(m, s.rpf);
  s.curve = thermo::pressure_curve(m, axis);
  s.sigma = thermo::covariance_sigma(s.curve).sigma;
  s.event = std::move(event);
  if (!s.event.base) s.event.base = [](std::span<const int>) { return true; };
  s.base_mass = s.suspension->haar_mass(s.event.base);
  s.pool_size = pool_size;
  s.seed = seed;
  return s;
}

DisplacementTable::DisplacementTable(const SymbolicSetup& setup, std::vector<double> s_values, Exec exec)
    : setup_(&setup), s_(sorted_unique(std::move(s_values))) {
  if (s_.empty()) throw InvalidInput("DisplacementTable: no times");
  const double s_max = s_.back();
  const std::size_t ns = s_.size();
  std::vector<std::unordered_map<std::int64_t, long>> counts(ns);
  constexpr std::int64_t kOutside = -1;
  constexpr std::size_t chunk = 8192;
  const auto& base = setup.event.base;
  const auto& model = *setup.model;
  for (std::size_t start = 0; start < setup.pool_size; start += chunk) {
    const std::size_t n = std::min(chunk, setup.pool_size - start);
    const auto keys = map_indices<std::vector<std::int64_t>>(
        n,
        [&](std::size_t k) {
          std::mt19937_64 rng(derive_seed(setup.seed ^ kPoolStream, start + k));
          const auto path = thermo::suspension_path(*setup.suspension, s_max, rng);
          std::vector<std::int64_t> row(ns, kOutside);
          if (!base(model.space.word(path.start_cylinder))) return row;
          for (std::size_t j = 0; j < ns; ++j) row[j] = pack(path.xi_at(s_[j]));
          return row;
        },
        exec);
    for (const auto& row : keys)
      for (std::size_t j = 0; j < ns; ++j)
        if (row[j] != kOutside) ++counts[j][row[j]];
  }
  hist_.resize(ns);
  for (std::size_t j = 0; j < ns; ++j) {
    hist_[j].assign(counts[j].begin(), counts[j].end());
    std::sort(hist_[j].begin(), hist_[j].end());
  }
}

std::size_t DisplacementTable::index_of(double s) const {
  const auto it = std::lower_bound(s_.begin(), s_.end(), s - 1e-12);
  if (it == s_.end() || std::abs(*it - s) > 1e-12) throw InvalidInput("DisplacementTable: time not tabulated");
  return static_cast<std::size_t>(it - s_.begin());
}

double DisplacementTable::probability(std::size_t j, const ZVec& x) const {
  const auto& h = hist_.at(j);
  const std::int64_t key = pack(x);
  const auto it = std::lower_bound(h.begin(), h.end(), std::make_pair(key, 0L));
  if (it == h.end() || it->first != key) return 0.0;
  return static_cast<double>(it->second) / static_cast<double>(setup_->pool_size);
}

double DisplacementTable::occupation(double T, const ZVec& xi) const {
  const std::size_t j = index_of(T <= 1.0 ? 0.0 : std::log(T));
  double p = 0.0;
  if (setup_->event.sheets.empty()) {
    for (const auto& [key, c] : hist_[j]) p += static_cast<double>(c);
    p /= static_cast<double>(setup_->pool_size);
  } else {
    for (const auto& e : setup_->event.sheets) p += probability(j, xi - e);
  }
  return T * p;
}

OccupationSource symbolic_source(const SymbolicSetup& setup, std::size_t samples, std::uint64_t seed) {
  OccupationSource src;
  src.name = "symbolic:" + setup.model->name;
  src.samples = samples;
  src.sup_psi = 1.0;
  src.evaluate = [&setup, samples, seed](const std::vector<double>& times, Exec exec) {
    std::vector<double> s_values;
    for (double t : times) s_values.push_back(t <= 1.0 ? 0.0 : std::log(t));
    const DisplacementTable table(setup, s_values, exec);
    const double s_max = table.s_values().back();
    return map_indices<std::vector<double>>(
        samples,
        [&](std::size_t i) {
          std::mt19937_64 rng(derive_seed(seed, i));
          const auto path = thermo::suspension_path(*setup.suspension, s_max, rng);
          std::vector<double> row(times.size());
          for (std::size_t k = 0; k < times.size(); ++k) {
            const double t = times[k];
            row[k] = table.occupation(t, path.xi_at(t <= 1.0 ? 0.0 : std::log(t)));
          }
          return row;
        },
        exec);
  };
  return src;
}

std::vector<double> WindowReport::quantiles() const {
  return {quantile(ratios, 0.1), quantile(ratios, 0.5), quantile(ratios, 0.9)};
}

json to_json(const WindowReport& r) {
  const bool first = r.kind == "window1";
  json j;
  j["kind"] = r.kind;
  j["source"] = r.source;
  j[first ? "eta" : "delta"] = r.parameter;
  j[first ? "r" : "c"] = r.found ? json(r.fitted) : json(nullptr);
  j["found"] = r.found;
  j["pass_rate"] = r.pass_rate;
  j["T_grid"] = r.T_grid;
  const auto q = r.quantiles();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  j["quantiles"] = {{"q10", num(q[0])}, {"q50", num(q[1])}, {"q90", num(q[2])}};
  j["samples"] = r.ratios.size();
  j["eligible"] = r.eligible;
  j["degenerate"] = r.degenerate;
  j["burn_factor"] = r.burn_factor;
  j["scan"] = json::array();
  for (const auto& [v, rate] : r.scan) j["scan"].push_back({v, rate});
  j["sensitivity"] = json::array();
  for (const auto& [f, rate] : r.sensitivity) j["sensitivity"].push_back({{"burn_factor", f}, {"pass_rate", rate}});
  return j;
}

WindowReport verify_window_I(const OccupationSource& src, double eta, const std::vector<double>& T_grid, Exec exec,
                             double burn_factor) {
  if (!(eta > 0.0 && eta <= 1.0)) throw InvalidInput("verify_window_I: eta must lie in (0, 1]");
  check_grid(T_grid);
  std::vector<double> r_grid;
  for (int k = 1; k <= 19; ++k) r_grid.push_back(0.05 * k);
  std::vector<double> extra;
  for (double r : r_grid)
    for (double T : T_grid) extra.push_back(r * T);
  const auto P = prepare(src, T_grid, extra, exec, burn_factor);

  auto worst_at = [&](double r, const std::vector<double>& burn, bool all) {
    return worst_ratios(src.samples, T_grid, burn, all, [&](std::size_t i, double T) {
      return safe_ratio(P.I[i][find_time(P.times, r * T)], P.I[i][find_time(P.times, T)]);
    });
  };

  WindowReport rep;
  rep.kind = "window1";
  rep.source = src.name;
  rep.parameter = eta;
  rep.burn_factor = burn_factor;
  rep.T_grid = T_grid;
  rep.burn_in = P.burn;
  rep.eligible = P.eligible;
  rep.degenerate = P.degenerate;
  std::size_t best = 0;
  for (std::size_t k = 0; k < r_grid.size(); ++k) {
    const double rate = pass_fraction(worst_at(r_grid[k], P.burn, P.degenerate), eta);
    rep.scan.emplace_back(r_grid[k], rate);
    if (rate >= kPassThreshold) {
      rep.found = true;
      best = k;
    }
  }
  rep.fitted = rep.found ? r_grid[best] : 0.0;
  rep.pass_rate = rep.scan[best].second;
  rep.ratios = worst_at(r_grid[best], P.burn, P.degenerate);
  for (double f : {0.5 * burn_factor, 2.0 * burn_factor}) {
    const auto burn = burn_in_times(P.I, P.times, T_grid, f * src.sup_psi);
    rep.sensitivity.emplace_back(f, pass_fraction(worst_at(r_grid[best], burn, P.degenerate), eta));
  }
  return rep;
}

WindowReport verify_window_II(const OccupationSource& src, double delta, const std::vector<double>& T_grid, Exec exec,
                              double burn_factor) {
  if (!(delta >= 0.0 && delta <= 0.5)) throw InvalidInput("verify_window_II: delta must lie in [0, 0.5]");
  check_grid(T_grid);
  std::vector<double> extra;
  for (double T : T_grid) extra.push_back((1 + delta) * T);
  const auto P = prepare(src, T_grid, extra, exec, burn_factor);

  auto worst_for = [&](const std::vector<double>& burn) {
    return worst_ratios(src.samples, T_grid, burn, P.degenerate, [&](std::size_t i, double T) {
      const double base = P.I[i][find_time(P.times, T)];
      return safe_ratio(P.I[i][find_time(P.times, (1 + delta) * T)] - base, base);
    });
  };

  WindowReport rep;
  rep.kind = "window2";
  rep.source = src.name;
  rep.parameter = delta;
  rep.burn_factor = burn_factor;
  rep.T_grid = T_grid;
  rep.burn_in = P.burn;
  rep.eligible = P.eligible;
  rep.degenerate = P.degenerate;
  rep.ratios = worst_for(P.burn);
  std::vector<double> c_grid;
  for (int k = 1; k <= 200; ++k) c_grid.push_back(0.005 * k);
  for (double c : c_grid) {
    const double rate = pass_fraction(rep.ratios, c);
    rep.scan.emplace_back(c, rate);
    if (!rep.found && rate >= kPassThreshold) {
      rep.found = true;
      rep.fitted = c;
      rep.pass_rate = rate;
    }
  }
  if (!rep.found) rep.pass_rate = rep.scan.back().second;
  const double at = rep.found ? rep.fitted : c_grid.back();
  for (double f : {0.5 * burn_factor, 2.0 * burn_factor}) {
    const auto burn = burn_in_times(P.I, P.times, T_grid, f * src.sup_psi);
    rep.sensitivity.emplace_back(f, pass_fraction(worst_for(burn), at));
  }
  return rep;
}

json to_json(const KeyLemmaReport& r) {
  json j;
  j["T"] = r.T;
  j["T_star"] = std::log(r.T);
  j["mE"] = r.mE;
  j["sigma"] = r.sigma;
  j["samples"] = r.samples;
  j["boxes"] = json::array();
  for (const auto& b : r.boxes) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    j["boxes"].push_back({{"box", b.box},
                          {"in_box", b.in_box},
                          {"underpowered", b.underpowered},
                          {"median_abs_log_ratio", num(b.median_abs_log)},
                          {"log_ratio_iqr", num(b.spread)}});
  }
  return j;
}

std::vector<KeyLemmaReport> verify_key_lemma(const SymbolicSetup& setup, const std::vector<double>& T_grid,
                                             std::size_t samples, std::uint64_t seed,
                                             const std::vector<double>& boxes, Exec exec) {
  check_grid(T_grid);
  std::vector<double> s_values;
  for (double T : T_grid) {
    if (!(T > std::numbers::e)) throw InvalidInput("verify_key_lemma: grid times must exceed e");
    s_values.push_back(std::log(T));
  }
  const DisplacementTable table(setup, s_values, exec);
  const double s_max = table.s_values().back();
  const auto paths = map_indices<std::vector<ZVec>>(
      samples,
      [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(seed, i));
        const auto path = thermo::suspension_path(*setup.suspension, s_max, rng);
        std::vector<ZVec> xs;
        for (double s : s_values) xs.push_back(path.xi_at(s));
        return xs;
      },
      exec);
  const auto d = static_cast<int>(setup.model->d);
  const LegendreFn H = [&setup](std::span<const double> x) { return setup.H(x); };

  std::vector<KeyLemmaReport> out;
  for (std::size_t t = 0; t < T_grid.size(); ++t) {
    const double T = T_grid[t], Ts = s_values[t];
    KeyLemmaReport rep;
    rep.T = T;
    rep.mE = setup.base_mass;
    rep.sigma = setup.sigma;
    rep.samples = samples;
    for (double box : boxes) {
      KeyLemmaBox b;
      b.box = box;
      for (std::size_t i = 0; i < samples; ++i) {
        const ZVec& xi = paths[i][t];
        double norm = 0.0;
        for (long v : xi) norm = std::max(norm, std::abs(static_cast<double>(v)) / Ts);
        if (norm > box + 1e-12) continue;
        ++b.in_box;
        const double empirical = table.occupation(T, xi);
        double formula = 0.0;
        if (setup.event.sheets.empty()) {
          formula = setup.base_mass * T;
        } else {
          for (const auto& e : setup.event.sheets) {
            const ZVec x = xi - e;
            std::vector<double> xv(x.begin(), x.end());
            formula += key_lemma_rhs(setup.base_mass, setup.sigma, d, T, xv, H);
          }
        }
        b.log_ratios.push_back(empirical > 0.0 ? std::log(empirical / formula)
                                               : -std::numeric_limits<double>::infinity());
      }
      b.underpowered = b.in_box < 20;
      std::vector<double> abs_log;
      for (double v : b.log_ratios) abs_log.push_back(std::abs(v));
      b.median_abs_log = quantile(abs_log, 0.5);
      b.spread = quantile(b.log_ratios, 0.75) - quantile(b.log_ratios, 0.25);
      rep.boxes.push_back(std::move(b));
    }
    out.push_back(std::move(rep));
  }
  return out;
}

} // namespace horolab::window
