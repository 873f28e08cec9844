#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "horolab/error.hpp"
#include "horolab/flows.hpp"
#include "horolab/parallel.hpp"
#include "horolab/rigidity.hpp"
#include "horolab/surface.hpp"
#include "horolab/thermo.hpp"
#include "horolab/window.hpp"
#include "json.hpp"

#ifndef HOROLAB_DATA_DIR
#define HOROLAB_DATA_DIR "data"
#endif

using namespace horolab;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Thrown for failed numerical diagnostics (exit code 1).
struct DiagnosticFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path resolve(const std::string& name) {
  const fs::path p(name);
  if (fs::exists(p)) return p;
  if (const char* dir = std::getenv("HOROLAB_DATA"); dir && fs::exists(fs::path(dir) / p)) return fs::path(dir) / p;
  if (fs::exists(fs::path(HOROLAB_DATA_DIR) / p)) return fs::path(HOROLAB_DATA_DIR) / p;
  throw ConfigError("cannot find file: " + name);
}

json read_json(const std::string& name) {
  std::ifstream in(resolve(name));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

void emit(const json& report, const std::string& out) {
  const auto text = report.dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_text(out, text);
}

// Streams CSV rows to a file; inactive when the path is empty.
class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::string& header) {
    if (path.empty()) return;
    out_.open(path);
    if (!out_) throw ConfigError("cannot write " + path);
    out_ << header << "\n";
  }
  bool active() const { return out_.is_open(); }
  template <class... T>
  void row(const T&... v) {
    if (!active()) return;
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(v), first = false), ...);
    out_ << "\n";
  }

private:
  static std::string cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const ZVec& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
    return s;
  }
  std::ofstream out_;
};

std::string xi_header(const std::string& prefix, std::size_t d) {
  std::string h;
  for (std::size_t k = 0; k < d; ++k) h += (k ? "," : "") + prefix + std::to_string(k);
  return h;
}

std::vector<double> parse_grid(const std::string& text) {
  double a, b, step;
  char c1, c2;
  std::istringstream in(text);
  if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || b < a)
    throw InvalidInput("grid must read a:b:step with a <= b and step > 0");
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(a + step * static_cast<double>(k));
  return out;
}

thermo::ShiftModel load_model(const std::string& name, int depth) {
  for (const auto& b : thermo::builtin_model_names())
    if (b == name) return thermo::builtin_model(name, depth);
  return thermo::model_from_json(read_json(name));
}

surface::FuchsianSpec load_group(const std::string& name) {
  if (name.empty() || name == "octagon") return surface::build_octagon_group();
  return surface::spec_from_json(read_json(name));
}

std::string character_name(std::size_t d) { return d == 1 ? "phi" : "phi2"; }

std::vector<double> symbolic_axis(const thermo::ShiftModel& m) {
  const int n = m.d == 1 ? 20 : 8;
  const double h = m.d == 1 ? 0.1 : 0.25;
  std::vector<double> axis;
  for (int i = -n; i <= n; ++i) axis.push_back(h * i);
  return axis;
}

json vec_json(const ZVec& v) {
  json a = json::array();
  for (std::size_t k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

struct Common {
  std::uint64_t seed = 1;
  std::size_t samples = 100;
  std::string out;
  std::string csv;
  std::string group;
};

void add_common(CLI::App* app, Common& c, std::size_t default_samples) {
  c.samples = default_samples;
  app->add_option("--seed", c.seed, "run seed");
  app->add_option("--samples", c.samples, "number of sample orbits");
  app->add_option("--out", c.out, "JSON report path (stdout when omitted)");
  app->add_option("--csv", c.csv, "CSV path for raw per-sample rows");
  app->add_option("--group", c.group, "group spec JSON (default: built-in octagon)");
}

// ---------------------------------------------------------------- subcommands

void run_flow(const Common& c, double T, double dt, std::size_t points, std::size_t d) {
  const auto spec = load_group(c.group);
  const flows::Cover cover{&spec, &spec.character(character_name(d))};
  std::vector<double> times;
  for (std::size_t k = 1; k <= points; ++k) times.push_back(T * static_cast<double>(k) / static_cast<double>(points));
  const auto psi = flows::domain_bump(ZVec(d), spec.inradius);
  struct Row {
    std::vector<ZVec> xi;
    std::vector<double> birkhoff;
  };
  const auto rows = map_indices<Row>(
      c.samples,
      [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(c.seed, i));
        const auto p = flows::random_start(spec, *cover.phi, rng);
        return Row{flows::xi_path(p, times, cover), flows::birkhoff_at_times(p, psi, times, dt, cover)};
      },
      Exec::parallel);
  CsvWriter csv(c.csv, "sample_id,T," + xi_header("xi", d) + ",birkhoff");
  std::vector<double> mean_b(times.size(), 0.0), mean_abs_xi(times.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < times.size(); ++k) {
      csv.row(i, times[k], rows[i].xi[k], rows[i].birkhoff[k]);
      mean_b[k] += rows[i].birkhoff[k] / static_cast<double>(rows.size());
      mean_abs_xi[k] += std::abs(static_cast<double>(rows[i].xi[k][0])) / static_cast<double>(rows.size());
    }
  emit({{"command", "flow"}, {"T", T}, {"dt", dt}, {"samples", c.samples}, {"seed", c.seed}, {"d", d},
        {"times", times}, {"mean_birkhoff", mean_b}, {"mean_abs_xi0", mean_abs_xi}},
       c.out);
  std::fprintf(stderr, "flow: %zu samples to T=%g, mean birkhoff %.6g\n", c.samples, T, mean_b.back());
}

void run_clt(const Common& c, double T0, double T, std::size_t points, std::size_t d) {
  const auto spec = load_group(c.group);
  const flows::Cover cover{&spec, &spec.character(character_name(d))};
  std::vector<double> times;
  for (std::size_t k = 0; k < points; ++k)
    times.push_back(T0 + (T - T0) * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(points - 1, 1)));
  const auto xi = flows::xi_ensemble(cover, c.samples, c.seed, times, flows::kGeodesicStep, Exec::parallel);
  const auto rep = flows::clt_statistics(xi, times);
  CsvWriter csv(c.csv, "sample_id,T," + xi_header("xi", d));
  for (std::size_t i = 0; i < xi.size(); ++i)
    for (std::size_t k = 0; k < times.size(); ++k) csv.row(i, times[k], xi[i][k]);
  emit({{"command", "clt"},
        {"samples", c.samples},
        {"seed", c.seed},
        {"d", d},
        {"times", rep.times},
        {"mean", rep.mean},
        {"variance", rep.variance},
        {"fit", {{"slope", rep.fit.slope}, {"intercept", rep.fit.intercept}, {"r2", rep.fit.r2},
                 {"slope_origin", rep.fit.slope0}, {"r2_origin", rep.fit.r2_origin}}},
        {"max_mean_over_T", rep.max_mean_over_T},
        {"lil_statistic", rep.lil_statistic}},
       c.out);
  std::fprintf(stderr, "clt: Var slope %.4f, R^2 %.4f, |mean|/T %.4f\n", rep.fit.slope, rep.fit.r2,
               rep.max_mean_over_T);
}

struct WindowArgs {
  std::string model = "full2-cosh";
  int depth = 6;
  std::size_t pool = 200000;
  double log_tmin = 4.0;
  double log_tmax = 8.0;
  double tmax_geometric = 1e4;
  double burn = 10.0;
};

void run_window(const Common& c, const WindowArgs& w, bool first_kind, double param) {
  std::vector<double> grid;
  window::OccupationSource src;
  // Objects the source refers to must outlive it.
  std::unique_ptr<surface::FuchsianSpec> spec;
  std::unique_ptr<thermo::ShiftModel> model;
  std::unique_ptr<window::SymbolicSetup> setup;
  if (w.model == "geometric") {
    spec = std::make_unique<surface::FuchsianSpec>(load_group(c.group));
    const flows::Cover cover{spec.get(), &spec->character("phi")};
    src = window::geometric_source(cover, spec->inradius, c.samples, c.seed);
    for (double T = 100.0; T <= w.tmax_geometric * (1 + 1e-9); T *= std::sqrt(10.0)) grid.push_back(T);
  } else {
    model = std::make_unique<thermo::ShiftModel>(load_model(w.model, w.depth));
    setup = std::make_unique<window::SymbolicSetup>(window::make_symbolic(
        *model, window::default_event(model->d), w.pool, derive_seed(c.seed, 0xdead), symbolic_axis(*model)));
    src = window::symbolic_source(*setup, c.samples, c.seed);
    for (double s = w.log_tmin; s <= w.log_tmax + 1e-9; s += 1.0) grid.push_back(std::exp(s));
  }
  const auto rep = first_kind ? window::verify_window_I(src, param, grid, Exec::parallel, w.burn)
                              : window::verify_window_II(src, param, grid, Exec::parallel, w.burn);
  CsvWriter csv(c.csv, "sample_id,ratio,burn_in");
  for (std::size_t i = 0; i < rep.ratios.size(); ++i) csv.row(i, rep.ratios[i], rep.burn_in[i]);
  auto j = window::to_json(rep);
  j["model"] = w.model;
  j["seed"] = c.seed;
  emit(j, c.out);
  std::fprintf(stderr, "%s: %s=%g %s=%s pass_rate %.3f\n", rep.kind.c_str(), first_kind ? "eta" : "delta", param,
               first_kind ? "r" : "c", rep.found ? std::to_string(rep.fitted).c_str() : "none", rep.pass_rate);
}

void run_keylemma(const Common& c, const std::string& model_name, int depth, std::size_t pool,
                  std::vector<double> log_T, std::vector<double> boxes) {
  const auto m = load_model(model_name, depth);
  const auto setup = window::make_symbolic(m, window::default_event(m.d), pool, derive_seed(c.seed, 0xdead),
                                           symbolic_axis(m));
  std::vector<double> T_grid;
  for (double s : log_T) T_grid.push_back(std::exp(s));
  const auto reps = window::verify_key_lemma(setup, T_grid, c.samples, c.seed, boxes);
  json arr = json::array();
  CsvWriter csv(c.csv, "T,box,log_ratio");
  for (const auto& r : reps) {
    arr.push_back(window::to_json(r));
    for (const auto& b : r.boxes)
      for (double lr : b.log_ratios) csv.row(r.T, b.box, lr);
  }
  emit({{"command", "keylemma"}, {"model", model_name}, {"seed", c.seed}, {"pool", pool}, {"reports", arr}}, c.out);
  for (const auto& r : reps)
    std::fprintf(stderr, "keylemma: T=%g box %g median |log ratio| %.4f (%zu in box)\n", r.T, r.boxes[0].box,
                 r.boxes[0].median_abs_log, r.boxes[0].in_box);
}

void run_pressure(const std::string& model_name, int depth, const std::string& grid_text, const std::string& out,
                  const std::string& csv_path) {
  const auto m = load_model(model_name, depth);
  const auto axis = parse_grid(grid_text);
  const auto pc = thermo::pressure_curve(m, axis);
  const std::vector<double> zero(m.d, 0.0);
  const auto rpf = thermo::rpf_eigendata(m.space, thermo::potential(m, 1.0, zero));
  json grid = json::array();
  CsvWriter csv(csv_path, xi_header("u", m.d) + ",P");
  for (std::size_t k = 0; k < pc.grid_size(); ++k) {
    const auto u = pc.point(k);
    grid.push_back({{"u", u}, {"P", pc.values[k]}});
    if (csv.active()) {
      std::ostringstream line;
      line.precision(17);
      for (double x : u) line << x << ",";
      line << pc.values[k];
      csv.row(line.str());
    }
  }
  json j = {{"command", "pressure"},
            {"model", m.name},
            {"d", m.d},
            {"depth", m.depth()},
            {"roof_scale", m.roof_scale},
            {"P0", thermo::pressure_root(m, zero)},
            {"H0", thermo::legendre_H(pc, zero)},
            {"hessian0", pc.hessian0},
            {"sigma", std::isnan(pc.sigma) ? json(nullptr) : json(pc.sigma)},
            {"rpf", {{"lambda", rpf.lambda}, {"residual", rpf.residual}, {"iterations", rpf.iterations}}},
            {"grid", grid}};
  emit(j, out);
  std::fprintf(stderr, "pressure: %s P(0)=%.12f sigma=%s\n", m.name.c_str(), j["P0"].get<double>(),
               j["sigma"].dump().c_str());
  if (rpf.residual > 1e-8) throw DiagnosticFailure("RPF residual above 1e-8");
}

void run_good(std::size_t trials, std::uint64_t seed, int max_degree, const std::string& out) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), coef(-1.0, 1.0);
  std::size_t tested = 0, passed = 0;
  double worst = 0.0;
  while (tested < trials) {
    rigidity::Poly p;
    const int deg = static_cast<int>(rng() % static_cast<std::uint64_t>(max_degree + 1));
    for (int k = 0; k <= deg; ++k) p.coeffs.push_back(coef(rng));
    double a = -10 + 20 * unit(rng), b = -10 + 20 * unit(rng);
    if (a > b) std::swap(a, b);
    const double eps = rigidity::sup_abs(p, a, b) * unit(rng);
    if (b - a < 1e-6 || !(eps > 0.0)) continue;
    const auto g = rigidity::c_alpha_good_check(p, a, b, eps);
    passed += g.pass ? 1 : 0;
    worst = std::max(worst, g.lhs / g.rhs);
    ++tested;
  }
  emit({{"command", "good"}, {"trials", trials}, {"seed", seed}, {"max_degree", max_degree},
        {"pass_count", passed}, {"worst_ratio", worst}},
       out);
  std::fprintf(stderr, "good: %zu/%zu instances satisfy the bound\n", passed, trials);
  if (passed != trials) throw DiagnosticFailure("(C, alpha)-good bound violated");
}

struct JoiningArgs {
  std::string spec1 = "kerphi.json";
  std::string spec2 = "kerphi.json";
  std::string g0;
  double T = 1e5;
  double step = 0.5;
  double translation = 0.0;
  std::size_t cells = 64;
  std::size_t volume_points = 1000000;
};

void run_joining(const Common& c, const JoiningArgs& a) {
  const auto spec = load_group(c.group);
  const auto s1 = rigidity::subgroup_from_json(read_json(a.spec1), spec);
  const auto s2 = rigidity::subgroup_from_json(read_json(a.spec2), spec);
  const auto g0 = spec.parse_word(a.g0);
  const auto idx = rigidity::intersection_index(s1, s2, g0);
  auto opt = [](const std::optional<long>& v) { return v ? json(*v) : json("inf"); };
  json j = {{"command", "joining"}, {"spec1", a.spec1}, {"spec2", a.spec2}, {"g0", a.g0},
            {"translation", a.translation}, {"seed", c.seed}, {"idx1", opt(idx.idx1)}, {"idx2", opt(idx.idx2)}};
  if (!idx.idx1 || !idx.idx2) {
    j["commensurable"] = false;
    emit(j, c.out);
    std::fprintf(stderr, "joining: subgroups are not commensurable; no finite-cover joining\n");
    return;
  }
  j["commensurable"] = true;
  const rigidity::JoiningSampler sampler({s1, s2, g0, a.translation});
  const auto cp = rigidity::make_partition(a.cells, spec);
  const auto vol = rigidity::haar_cell_volumes(cp, spec, a.volume_points);
  std::vector<double> Ts;
  for (double T = 1e3; T <= a.T * (1 + 1e-9); T *= 10) Ts.push_back(T);
  if (Ts.empty() || Ts.back() < a.T * (1 - 1e-9)) Ts.push_back(a.T);
  const auto count = static_cast<std::size_t>(a.T / a.step);
  struct OrbitStats {
    std::vector<rigidity::ProjectionTV> tv;
    rigidity::FiberStats fiber;
  };
  const auto stats = map_indices<OrbitStats>(
      c.samples,
      [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(c.seed, i));
        const auto orbit = sampler.orbit(sampler.random_start(rng), a.step, count);
        OrbitStats s;
        for (double T : Ts) s.tv.push_back(rigidity::projection_test(orbit, cp, vol, T));
        s.fiber = rigidity::fiber_statistics(orbit);
        return s;
      },
      Exec::parallel);
  CsvWriter csv(c.csv, "sample_id,T,tv1,tv2");
  json per_T = json::array();
  std::size_t max_fiber = 0;
  for (const auto& s : stats) max_fiber = std::max(max_fiber, s.fiber.max_fiber);
  for (std::size_t k = 0; k < Ts.size(); ++k) {
    std::vector<double> t1, t2;
    for (std::size_t i = 0; i < stats.size(); ++i) {
      t1.push_back(stats[i].tv[k].tv1);
      t2.push_back(stats[i].tv[k].tv2);
      csv.row(i, Ts[k], stats[i].tv[k].tv1, stats[i].tv[k].tv2);
    }
    std::sort(t1.begin(), t1.end());
    std::sort(t2.begin(), t2.end());
    per_T.push_back({{"T", Ts[k]}, {"median_tv1", t1[t1.size() / 2]}, {"median_tv2", t2[t2.size() / 2]}});
  }
  j["cells"] = cp.size();
  j["orbits"] = c.samples;
  j["step"] = a.step;
  j["fiber_size"] = sampler.fiber_size();
  j["max_fiber"] = max_fiber;
  j["tv"] = per_T;
  emit(j, c.out);
  std::fprintf(stderr, "joining: index (%ld, %ld), fiber %ld, median tv at T=%g: %.4f\n", *idx.idx1, *idx.idx2,
               sampler.fiber_size(), Ts.back(), per_T.back()["median_tv1"].get<double>());
}

void run_orbit(const Common& c, const std::string& subgroup, std::vector<int> Ls, std::size_t cells,
               std::vector<double> x_params, std::uint64_t max_words) {
  const auto spec = load_group(c.group);
  const auto s1 = rigidity::subgroup_from_json(read_json(subgroup), spec);
  if (x_params.size() != 3) throw InvalidInput("--x takes three numbers: theta1 radius theta2");
  const auto x = psl2::rotation(x_params[0]) * psl2::make_flow(psl2::FlowKind::A, x_params[1]) *
                 psl2::rotation(x_params[2]);
  const auto cp = rigidity::make_partition(cells, spec);
  json arr = json::array();
  CsvWriter csv(c.csv, "L,words,nodes,hit,coverage");
  for (int L : Ls) {
    const auto r = rigidity::orbit_density(s1, x, L, cp, Exec::parallel, max_words);
    arr.push_back(rigidity::to_json(r));
    csv.row(static_cast<std::size_t>(L), static_cast<std::size_t>(r.words), static_cast<std::size_t>(r.nodes), r.hit,
            r.coverage);
    std::fprintf(stderr, "orbit: L=%d words %llu cells hit %zu coverage %.4f\n", L,
                 static_cast<unsigned long long>(r.words), r.hit, r.coverage);
  }
  emit({{"command", "orbit"}, {"subgroup", subgroup}, {"cells", cp.size()}, {"x", x_params}, {"results", arr}}, c.out);
}

} // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"horolab: horocycle flows on abelian covers, numerics and verification harnesses"};
  app.require_subcommand(1);

  Common flow_c, clt_c, w1_c, w2_c, kl_c, join_c, orbit_c;

  auto* flow = app.add_subcommand("flow", "xi_T and horocycle Birkhoff integrals along sample orbits");
  add_common(flow, flow_c, 100);
  double flow_T = 100.0, flow_dt = flows::kHorocycleStep;
  std::size_t flow_points = 10, flow_d = 1;
  flow->add_option("--T", flow_T, "final time")->check(CLI::PositiveNumber);
  flow->add_option("--dt", flow_dt, "horocycle quadrature step")->check(CLI::PositiveNumber);
  flow->add_option("--points", flow_points, "output times per sample")->check(CLI::PositiveNumber);
  flow->add_option("--d", flow_d, "cover rank (1 or 2)")->check(CLI::Range(1, 2));

  auto* clt = app.add_subcommand("clt", "variance growth of xi_T over Haar-random starts");
  add_common(clt, clt_c, 500);
  double clt_T0 = 100.0, clt_T = 2000.0;
  std::size_t clt_points = 20, clt_d = 1;
  clt->add_option("--T0", clt_T0, "first time")->check(CLI::PositiveNumber);
  clt->add_option("--T", clt_T, "last time")->check(CLI::PositiveNumber);
  clt->add_option("--points", clt_points, "times in the grid")->check(CLI::Range(2, 100000));
  clt->add_option("--d", clt_d, "cover rank (1 or 2)")->check(CLI::Range(1, 2));

  WindowArgs w1_a, w2_a;
  double eta = 0.5, delta = 0.05;
  auto add_window = [&](CLI::App* sub, Common& c, WindowArgs& a) {
    add_common(sub, c, 200);
    sub->add_option("--model", a.model, "built-in shift model, shift spec JSON, or 'geometric'");
    sub->add_option("--depth", a.depth, "cylinder depth")->check(CLI::Range(2, 16));
    sub->add_option("--pool", a.pool, "displacement pool size (symbolic models)");
    sub->add_option("--log-tmin", a.log_tmin, "smallest ln T of the grid (symbolic models)");
    sub->add_option("--log-tmax", a.log_tmax, "largest ln T of the grid (symbolic models)");
    sub->add_option("--tmax", a.tmax_geometric, "largest T (geometric model)");
    sub->add_option("--burn-factor", a.burn, "burn-in multiple of sup psi")->check(CLI::PositiveNumber);
  };
  auto* w1 = app.add_subcommand("window1", "Window Property I harness");
  add_window(w1, w1_c, w1_a);
  w1->add_option("--eta", eta, "window fraction")->check(CLI::Range(0.0, 1.0));
  auto* w2 = app.add_subcommand("window2", "Window Property II harness");
  add_window(w2, w2_c, w2_a);
  w2->add_option("--delta", delta, "window extension")->check(CLI::PositiveNumber);

  auto* kl = app.add_subcommand("keylemma", "Key Lemma occupation asymptotic on a symbolic model");
  add_common(kl, kl_c, 1000);
  std::string kl_model = "full2-cosh";
  int kl_depth = 6;
  std::size_t kl_pool = 200000;
  std::vector<double> kl_logT{6.0}, kl_boxes{0.1, 0.3, 0.5};
  kl->add_option("--model", kl_model, "built-in shift model or shift spec JSON");
  kl->add_option("--depth", kl_depth, "cylinder depth")->check(CLI::Range(2, 16));
  kl->add_option("--pool", kl_pool, "displacement pool size");
  kl->add_option("--log-T", kl_logT, "ln T values")->check(CLI::PositiveNumber);
  kl->add_option("--boxes", kl_boxes, "box half-widths for |xi/T*|")->check(CLI::PositiveNumber);

  auto* pr = app.add_subcommand("pressure", "pressure function, covariance and Legendre dual");
  std::string pr_model = "full2-cosh", pr_grid = "-2:2:0.1", pr_out, pr_csv;
  int pr_depth = 6;
  pr->add_option("--model", pr_model, "built-in shift model or shift spec JSON");
  pr->add_option("--depth", pr_depth, "cylinder depth")->check(CLI::Range(2, 16));
  pr->add_option("--u-grid", pr_grid, "axis a:b:step (product grid for d > 1)");
  pr->add_option("--out", pr_out, "JSON report path");
  pr->add_option("--csv", pr_csv, "CSV path for the grid values");

  auto* good = app.add_subcommand("good", "(C, alpha)-good bound on random polynomials");
  std::size_t trials = 10000;
  std::uint64_t good_seed = 1;
  int good_degree = 3;
  std::string good_out;
  good->add_option("--trials", trials, "number of random instances");
  good->add_option("--seed", good_seed, "run seed");
  good->add_option("--max-degree", good_degree, "largest degree")->check(CLI::Range(0, 3));
  good->add_option("--out", good_out, "JSON report path");

  auto* join = app.add_subcommand("joining", "finite-cover self-joinings: index and projection statistics");
  add_common(join, join_c, 8);
  JoiningArgs ja;
  join->add_option("--spec1", ja.spec1, "first subgroup spec JSON");
  join->add_option("--spec2", ja.spec2, "second subgroup spec JSON");
  join->add_option("--g0", ja.g0, "conjugating word, e.g. \"a1 b1\"");
  join->add_option("--T", ja.T, "orbit length")->check(CLI::PositiveNumber);
  join->add_option("--step", ja.step, "orbit sampling step")->check(CLI::PositiveNumber);
  join->add_option("--translation", ja.translation, "u-translation of the second factor");
  join->add_option("--cells", ja.cells, "cells of the partition (1 or 8*2^e)");
  join->add_option("--volume-points", ja.volume_points, "Monte Carlo points for the Haar cell volumes");

  auto* orbit = app.add_subcommand("orbit", "orbit density of a subgroup acting on the base quotient");
  add_common(orbit, orbit_c, 1);
  std::string orbit_sub = "kerphi.json";
  std::vector<int> Ls{10};
  std::size_t orbit_cells = std::size_t{1} << 20;
  std::vector<double> x_params{0.3, 0.2, 0.7};
  std::uint64_t max_words = 100000000;
  orbit->add_option("--subgroup", orbit_sub, "subgroup spec JSON");
  orbit->add_option("--L", Ls, "word lengths")->check(CLI::Range(0, 20));
  orbit->add_option("--cells", orbit_cells, "cells of the partition (1 or 8*2^e)");
  orbit->add_option("--x", x_params, "base point rotation(t1) a(r) rotation(t2)")->expected(3);
  orbit->add_option("--max-words", max_words, "enumeration guard");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*flow) run_flow(flow_c, flow_T, flow_dt, flow_points, flow_d);
    else if (*clt) run_clt(clt_c, clt_T0, clt_T, clt_points, clt_d);
    else if (*w1) run_window(w1_c, w1_a, true, eta);
    else if (*w2) run_window(w2_c, w2_a, false, delta);
    else if (*kl) run_keylemma(kl_c, kl_model, kl_depth, kl_pool, kl_logT, kl_boxes);
    else if (*pr) run_pressure(pr_model, pr_depth, pr_grid, pr_out, pr_csv);
    else if (*good) run_good(trials, good_seed, good_degree, good_out);
    else if (*join) run_joining(join_c, ja);
    else if (*orbit) run_orbit(orbit_c, orbit_sub, Ls, orbit_cells, x_params, max_words);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const InvalidInput& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 1;
  } catch (const DiagnosticFailure& e) {
    std::fprintf(stderr, "diagnostic failure: %s\n", e.what());
    return 1;
  }
  return 0;
}
