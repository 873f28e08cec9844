#include "horolab/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "horolab/error.hpp"

namespace horolab::thermo {

using nlohmann::json;

CylinderSpace::CylinderSpace(std::vector<std::vector<int>> transitions, int depth)
    : A_(std::move(transitions)), n_(static_cast<int>(A_.size())), depth_(depth) {
  if (n_ == 0 || depth_ < 1) throw InvalidInput("CylinderSpace: need states and depth >= 1");
  for (const auto& row : A_) {
    if (static_cast<int>(row.size()) != n_) throw InvalidInput("CylinderSpace: transition matrix must be square");
    for (int v : row)
      if (v != 0 && v != 1) throw InvalidInput("CylinderSpace: transitions must be 0/1");
  }
  double codes = std::pow(static_cast<double>(n_), depth_);
  if (codes > 5e7) throw InvalidInput("CylinderSpace: states^depth too large");
  code_to_index_.assign(static_cast<std::size_t>(codes), -1);

  std::vector<int> w(static_cast<std::size_t>(depth_));
  // Depth-first enumeration in lexicographic order.
  std::function<void(int)> rec = [&](int pos) {
    if (pos == depth_) {
      long code = 0;
      for (int s : w) code = code * n_ + s;
      code_to_index_[static_cast<std::size_t>(code)] = static_cast<long>(count_++);
      words_.insert(words_.end(), w.begin(), w.end());
      return;
    }
    for (int s = 0; s < n_; ++s) {
      if (pos > 0 && !allowed(w[static_cast<std::size_t>(pos - 1)], s)) continue;
      w[static_cast<std::size_t>(pos)] = s;
      rec(pos + 1);
    }
  };
  rec(0);

  pre_.resize(count_);
  post_.resize(count_);
  std::vector<int> y(static_cast<std::size_t>(depth_));
  for (std::size_t c = 0; c < count_; ++c) {
    auto x = word(c);
    for (int a = 0; a < n_; ++a) {
      if (!allowed(a, x[0])) continue;
      y[0] = a;
      for (int j = 1; j < depth_; ++j) y[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j - 1)];
      pre_[c].push_back(static_cast<std::size_t>(index(y)));
    }
    for (int b = 0; b < n_; ++b) {
      if (!allowed(x[static_cast<std::size_t>(depth_ - 1)], b)) continue;
      for (int j = 0; j + 1 < depth_; ++j) y[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j + 1)];
      y[static_cast<std::size_t>(depth_ - 1)] = b;
      post_[c].push_back(static_cast<std::size_t>(index(y)));
    }
  }
}

long CylinderSpace::index(std::span<const int> w) const {
  if (static_cast<int>(w.size()) < depth_) return -1;
  long code = 0;
  for (int j = 0; j < depth_; ++j) {
    const int s = w[static_cast<std::size_t>(j)];
    if (s < 0 || s >= n_) return -1;
    code = code * n_ + s;
  }
  return code_to_index_[static_cast<std::size_t>(code)];
}

namespace {

bool is_primitive(const std::vector<std::vector<int>>& A) {
  const std::size_t n = A.size();
  std::vector<std::vector<char>> P(n, std::vector<char>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) P[i][j] = A[i][j] != 0;
  const std::size_t bound = (n - 1) * (n - 1) + 1;  // Wielandt
  for (std::size_t step = 1; step <= bound; ++step) {
    bool all = true;
    for (const auto& row : P)
      for (char v : row) all = all && v;
    if (all) return true;
    std::vector<std::vector<char>> Q(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (P[i][k])
          for (std::size_t j = 0; j < n; ++j) Q[i][j] = Q[i][j] || A[k][j];
    P = std::move(Q);
  }
  return false;
}

std::vector<double> exp_weight(const CylinderFunction& w) {
  std::vector<double> e(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) e[i] = std::exp(w[i]);
  return e;
}

void apply_pre(const CylinderSpace& space, const std::vector<double>& ew, const CylinderFunction& phi,
               CylinderFunction& out) {
  for (std::size_t x = 0; x < space.size(); ++x) {
    double s = 0.0;
    for (std::size_t y : space.preimages(x)) s += ew[y] * phi[y];
    out[x] = s;
  }
}

void apply_post(const CylinderSpace& space, const std::vector<double>& ew, const CylinderFunction& nu,
                CylinderFunction& out) {
  for (std::size_t y = 0; y < space.size(); ++y) {
    double s = 0.0;
    for (std::size_t x : space.successors(y)) s += nu[x];
    out[y] = ew[y] * s;
  }
}

void check_weight(const CylinderSpace& space, const CylinderFunction& w) {
  if (w.size() != space.size()) throw InvalidInput("weight is not a function on the cylinder space");
}

} // namespace

CylinderFunction tabulate(const CylinderSpace& space, const std::function<double(std::span<const int>)>& F) {
  CylinderFunction out(space.size());
  for (std::size_t c = 0; c < space.size(); ++c) out[c] = F(space.word(c));
  return out;
}

double birkhoff_sum(const std::function<double(std::span<const int>)>& F, int depth, std::span<const int> word,
                    int n) {
  if (n < 0 || depth < 1) throw InvalidInput("birkhoff_sum: need n >= 0 and depth >= 1");
  if (static_cast<long>(word.size()) < static_cast<long>(n) + depth) throw InvalidInput("birkhoff_sum: word too short");
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += F(word.subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(depth)));
  return s;
}

ZVec birkhoff_sum(const std::function<ZVec(std::span<const int>)>& F, int depth, std::span<const int> word, int n) {
  if (n < 0 || depth < 1) throw InvalidInput("birkhoff_sum: need n >= 0 and depth >= 1");
  if (static_cast<long>(word.size()) < static_cast<long>(n) + depth) throw InvalidInput("birkhoff_sum: word too short");
  ZVec s = F(word.subspan(0, static_cast<std::size_t>(depth)));
  if (n == 0) return ZVec(s.size());
  for (int j = 1; j < n; ++j) s += F(word.subspan(static_cast<std::size_t>(j), static_cast<std::size_t>(depth)));
  return s;
}

CylinderFunction transfer_apply(const CylinderSpace& space, const CylinderFunction& weight,
                                const CylinderFunction& phi) {
  check_weight(space, weight);
  check_weight(space, phi);
  CylinderFunction out(space.size());
  apply_pre(space, exp_weight(weight), phi, out);
  return out;
}

CylinderFunction transfer_adjoint(const CylinderSpace& space, const CylinderFunction& weight,
                                  const CylinderFunction& nu) {
  check_weight(space, weight);
  check_weight(space, nu);
  CylinderFunction out(space.size());
  apply_post(space, exp_weight(weight), nu, out);
  return out;
}

RpfData rpf_eigendata(const CylinderSpace& space, const CylinderFunction& weight, const PowerOptions& opt) {
  check_weight(space, weight);
  const std::size_t N = space.size();
  const auto ew = exp_weight(weight);
  RpfData out;
  CylinderFunction psi(N, 1.0), next(N);
  double change = 1.0;
  long it = 0;
  for (; it < opt.max_iterations && change >= opt.rel_tol; ++it) {
    apply_pre(space, ew, psi, next);
    const double top = *std::max_element(next.begin(), next.end());
    if (!(top > 0.0) || !std::isfinite(top)) throw NumericError("rpf_eigendata: iterate degenerated");
    change = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      next[i] /= top;
      change = std::max(change, std::abs(next[i] - psi[i]));
    }
    psi.swap(next);
  }
  CylinderFunction nu(N, 1.0 / static_cast<double>(N));
  double nu_change = 1.0;
  long jt = 0;
  for (; jt < opt.max_iterations && nu_change >= opt.rel_tol; ++jt) {
    apply_post(space, ew, nu, next);
    double total = 0.0;
    for (double v : next) total += v;
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericError("rpf_eigendata: adjoint iterate degenerated");
    nu_change = 0.0;
    double top = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      next[i] /= total;
      nu_change = std::max(nu_change, std::abs(next[i] - nu[i]));
      top = std::max(top, next[i]);
    }
    nu_change /= top;
    nu.swap(next);
  }
  out.iterations = std::max(it, jt);

  apply_pre(space, ew, psi, next);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    num += next[i] * nu[i];
    den += psi[i] * nu[i];
  }
  out.lambda = num / den;
  for (double& v : psi) v /= den;
  double res = 0.0;
  apply_pre(space, ew, psi, next);
  for (std::size_t i = 0; i < N; ++i) res = std::max(res, std::abs(next[i] - out.lambda * psi[i]));
  out.residual = res;
  if (change >= opt.rel_tol || nu_change >= opt.rel_tol) {
    std::ostringstream msg;
    msg << "rpf_eigendata: no convergence after " << opt.max_iterations << " iterations (residual " << res << ")";
    throw NumericError(msg.str());
  }
  out.psi = std::move(psi);
  out.nu = std::move(nu);
  return out;
}

double pressure(const CylinderSpace& space, const CylinderFunction& weight, const PowerOptions& opt) {
  check_weight(space, weight);
  const std::size_t N = space.size();
  const auto ew = exp_weight(weight);
  CylinderFunction psi(N, 1.0), next(N);
  // Collatz-Wielandt: min (L psi / psi) <= lambda <= max (L psi / psi).
  for (long it = 0; it < opt.max_iterations; ++it) {
    apply_pre(space, ew, psi, next);
    double lo = INFINITY, hi = 0.0, top = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double r = next[i] / psi[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
      top = std::max(top, next[i]);
    }
    if (!(lo > 0.0) || !std::isfinite(hi)) throw NumericError("pressure: iterate degenerated");
    if (hi - lo <= opt.rel_tol * 0.1 * lo) return 0.5 * (std::log(lo) + std::log(hi));
    for (std::size_t i = 0; i < N; ++i) psi[i] = next[i] / top;
  }
  throw NumericError("pressure: power iteration did not converge");
}

CylinderFunction potential(const ShiftModel& m, double beta, std::span<const double> u) {
  if (u.size() != m.d) throw InvalidInput("potential: u has wrong dimension");
  CylinderFunction w(m.size());
  for (std::size_t c = 0; c < m.size(); ++c) {
    double s = -beta * m.tau[c];
    for (std::size_t j = 0; j < m.d; ++j) s += u[j] * static_cast<double>(m.f[c][j]);
    w[c] = s;
  }
  return w;
}

double pressure_root(const ShiftModel& m, std::span<const double> u, const RootOptions& opt) {
  for (double t : m.tau)
    if (!(t > 0.0)) throw InvalidInput("pressure_root: roof must be positive");
  auto g = [&](double beta) { return pressure(m.space, potential(m, beta, u)); };
  double lo = 0.0, hi = 4.0;
  double glo = g(lo), ghi = g(hi);
  for (int k = 0; glo <= 0.0; ++k) {
    if (k > 60) {
      throw NumericError("pressure_root: bracket failure, pressure(" + std::to_string(lo) + ") = " +
                         std::to_string(glo) + ", pressure(" + std::to_string(hi) + ") = " + std::to_string(ghi));
    }
    hi = lo, ghi = glo;
    lo = lo - 4.0 * std::pow(2.0, k);
    glo = g(lo);
  }
  for (int k = 0; ghi >= 0.0; ++k) {
    if (k > 60) {
      throw NumericError("pressure_root: bracket failure, pressure(" + std::to_string(lo) + ") = " +
                         std::to_string(glo) + ", pressure(" + std::to_string(hi) + ") = " + std::to_string(ghi));
    }
    lo = hi, glo = ghi;
    hi *= 2.0;
    ghi = g(hi);
  }
  // Illinois false position with bisection fallback.
  int side = 0;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < opt.max_iterations; ++it) {
    double cand = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    x = cand;
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx > 0.0) {
      lo = x, glo = gx;
      if (side == 1) ghi *= 0.5;
      side = 1;
    } else {
      hi = x, ghi = gx;
      if (side == -1) glo *= 0.5;
      side = -1;
    }
    if (hi - lo <= opt.tol * std::max(1.0, std::abs(x)) || std::abs(gx) < 1e-15) {
      return std::abs(glo) < std::abs(ghi) ? lo : hi;
    }
  }
  throw NumericError("pressure_root: no convergence, bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

ShiftModel normalize_roof(ShiftModel m) {
  const std::vector<double> zero(m.d, 0.0);
  const double beta0 = pressure_root(m, zero);
  for (double& t : m.tau) t *= beta0;
  m.roof_scale *= beta0;
  return m;
}

std::size_t PressureCurve::grid_size() const {
  std::size_t n = 1;
  for (std::size_t j = 0; j < d; ++j) n *= axis.size();
  return n;
}

std::vector<double> PressureCurve::point(std::size_t flat) const {
  std::vector<double> u(d);
  for (std::size_t j = 0; j < d; ++j) {
    u[j] = axis[flat % axis.size()];
    flat /= axis.size();
  }
  return u;
}

double PressureCurve::at(std::span<const double> u) const {
  std::size_t flat = 0, mul = 1;
  for (std::size_t j = 0; j < d; ++j) {
    auto it = std::find_if(axis.begin(), axis.end(), [&](double a) { return std::abs(a - u[j]) < 1e-12; });
    if (it == axis.end()) throw DomainError("PressureCurve::at: point not on the grid");
    flat += static_cast<std::size_t>(it - axis.begin()) * mul;
    mul *= axis.size();
  }
  return values[flat];
}

PressureCurve pressure_curve(const ShiftModel& m, const std::vector<double>& axis, double h) {
  if (axis.size() < 3) throw InvalidInput("pressure_curve: need at least three grid values per axis");
  if (!std::is_sorted(axis.begin(), axis.end())) throw InvalidInput("pressure_curve: axis must be increasing");
  PressureCurve pc;
  pc.d = m.d;
  pc.axis = axis;
  pc.stencil_h = h;
  const std::size_t n = pc.grid_size();
  pc.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) pc.values[i] = pressure_root(m, pc.point(i));
  std::size_t sn = 1;
  for (std::size_t j = 0; j < m.d; ++j) sn *= 5;
  pc.stencil.resize(sn);
  for (std::size_t i = 0; i < sn; ++i) {
    std::vector<double> u(m.d);
    std::size_t r = i;
    for (std::size_t j = 0; j < m.d; ++j) {
      u[j] = (static_cast<double>(r % 5) - 2.0) * 0.5 * h;
      r /= 5;
    }
    pc.stencil[i] = pressure_root(m, u);
  }
  try {
    Covariance cov = covariance_sigma(pc);
    pc.hessian0 = cov.matrix;
    pc.sigma = cov.sigma;
  } catch (const NumericError&) {
    pc.sigma = std::numeric_limits<double>::quiet_NaN();
  }
  return pc;
}

Covariance covariance_sigma(const PressureCurve& pc) {
  const std::size_t d = pc.d;
  if (d < 1 || d > 2) throw InvalidInput("covariance_sigma: d must be 1 or 2");
  std::size_t sn = 1;
  for (std::size_t j = 0; j < d; ++j) sn *= 5;
  if (pc.stencil.size() != sn) throw InvalidInput("covariance_sigma: curve has no stencil around 0");
  auto S = [&](int i, int j) {
    std::size_t idx = static_cast<std::size_t>(i + 2);
    if (d == 2) idx += 5 * static_cast<std::size_t>(j + 2);
    return pc.stencil[idx];
  };
  // Second differences at spacing s*h/2, s in {1, 2}.
  auto hess = [&](int s) {
    const double step = s * 0.5 * pc.stencil_h;
    std::vector<double> H(d * d);
    const double p0 = S(0, 0);
    H[0] = (S(s, 0) - 2 * p0 + S(-s, 0)) / (step * step);
    if (d == 2) {
      H[3] = (S(0, s) - 2 * p0 + S(0, -s)) / (step * step);
      H[1] = H[2] = (S(s, s) - S(s, -s) - S(-s, s) + S(-s, -s)) / (4 * step * step);
    }
    return H;
  };
  const auto coarse = hess(2), fine = hess(1);
  Covariance out;
  out.matrix.resize(d * d);
  for (std::size_t k = 0; k < d * d; ++k) out.matrix[k] = (4.0 * fine[k] - coarse[k]) / 3.0;
  const double det = d == 1 ? out.matrix[0] : out.matrix[0] * out.matrix[3] - out.matrix[1] * out.matrix[2];
  const double scale = std::max(1.0, std::abs(out.matrix[0]));
  if (!(out.matrix[0] > 1e-8 * scale) || !(det > 1e-8 * scale * scale)) {
    std::ostringstream msg;
    msg << "covariance_sigma: Hessian at 0 is not positive definite (H00 = " << out.matrix[0] << ", det = " << det
        << ")";
    throw NumericError(msg.str());
  }
  out.sigma = std::pow(std::abs(det), 1.0 / static_cast<double>(d));
  return out;
}

double legendre_H(const PressureCurve& pc, std::span<const double> x) {
  if (x.size() != pc.d) throw InvalidInput("legendre_H: x has wrong dimension");
  const std::size_t n = pc.axis.size();
  const std::size_t total = pc.grid_size();
  auto objective = [&](std::size_t flat) {
    const auto u = pc.point(flat);
    double v = pc.values[flat];
    for (std::size_t j = 0; j < pc.d; ++j) v -= u[j] * x[j];
    return v;
  };
  std::size_t best = 0;
  double best_val = objective(0);
  for (std::size_t i = 1; i < total; ++i) {
    const double v = objective(i);
    if (v < best_val) best_val = v, best = i;
  }
  std::vector<std::size_t> idx(pc.d);
  std::size_t r = best;
  for (std::size_t j = 0; j < pc.d; ++j) {
    idx[j] = r % n;
    r /= n;
    if (idx[j] == 0 || idx[j] + 1 == n) {
      throw DomainError("legendre_H: x lies outside the gradient range of the sampled pressure");
    }
  }
  auto at_offset = [&](int di, int dj) {
    std::size_t flat = idx[0] + static_cast<std::size_t>(di);
    if (pc.d == 2) flat += n * (idx[1] + static_cast<std::size_t>(dj));
    return objective(flat);
  };
  if (pc.d == 1) {
    const double h = pc.axis[idx[0] + 1] - pc.axis[idx[0]];
    const double fm = at_offset(-1, 0), f0 = best_val, fp = at_offset(1, 0);
    const double curv = fp - 2 * f0 + fm;
    (void)h;
    if (!(curv > 0.0)) return f0;
    return f0 - (fp - fm) * (fp - fm) / (8.0 * curv);
  }
  const double h0 = pc.axis[idx[0] + 1] - pc.axis[idx[0]];
  const double h1 = pc.axis[idx[1] + 1] - pc.axis[idx[1]];
  const double f0 = best_val;
  const double g0 = (at_offset(1, 0) - at_offset(-1, 0)) / (2 * h0);
  const double g1 = (at_offset(0, 1) - at_offset(0, -1)) / (2 * h1);
  const double a = (at_offset(1, 0) - 2 * f0 + at_offset(-1, 0)) / (h0 * h0);
  const double c = (at_offset(0, 1) - 2 * f0 + at_offset(0, -1)) / (h1 * h1);
  const double b = (at_offset(1, 1) - at_offset(1, -1) - at_offset(-1, 1) + at_offset(-1, -1)) / (4 * h0 * h1);
  const double det = a * c - b * b;
  if (!(a > 0.0) || !(det > 0.0)) return f0;
  // min of f0 + g.delta + delta^T H delta / 2 is f0 - g^T H^{-1} g / 2.
  const double q = (c * g0 * g0 - 2 * b * g0 * g1 + a * g1 * g1) / det;
  return f0 - 0.5 * q;
}

Suspension::Suspension(const ShiftModel& m, const RpfData& rpf) : m_(&m) {
  const std::size_t N = m.size();
  if (rpf.psi.size() != N || rpf.nu.size() != N) throw InvalidInput("Suspension: eigendata does not match the model");
  pi_.resize(N);
  double total = 0.0;
  for (std::size_t c = 0; c < N; ++c) total += pi_[c] = rpf.psi[c] * rpf.nu[c];
  for (double& p : pi_) p /= total;
  auto cumulate = [](std::vector<double> w) {
    double s = 0.0;
    for (double& v : w) v = s += v;
    for (double& v : w) v /= s;
    return w;
  };
  pi_cdf_ = cumulate(pi_);
  std::vector<double> roofed(N);
  for (std::size_t c = 0; c < N; ++c) {
    roofed[c] = pi_[c] * m.tau[c];
    mean_roof_ += roofed[c];
  }
  haar_cdf_ = cumulate(roofed);
  // Forward transition y -> x = (y_1..y_{k-1}, b) has probability proportional to nu(x).
  next_cdf_.resize(N);
  for (std::size_t y = 0; y < N; ++y) {
    std::vector<double> w;
    for (std::size_t x : m.space.successors(y)) w.push_back(rpf.nu[x]);
    next_cdf_[y] = cumulate(std::move(w));
  }
}

namespace {

std::size_t draw(const std::vector<double>& cdf, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

} // namespace

std::size_t Suspension::draw_stationary(std::mt19937_64& rng) const { return draw(pi_cdf_, rng); }
std::size_t Suspension::draw_haar(std::mt19937_64& rng) const { return draw(haar_cdf_, rng); }
std::size_t Suspension::step(std::size_t c, std::mt19937_64& rng) const {
  return m_->space.successors(c)[draw(next_cdf_[c], rng)];
}

double Suspension::haar_mass(const std::function<bool(std::span<const int>)>& pred) const {
  double s = 0.0;
  for (std::size_t c = 0; c < pi_.size(); ++c)
    if (pred(m_->space.word(c))) s += pi_[c] * m_->tau[c];
  return s / mean_roof_;
}

SuspensionSample suspension_sample(const Suspension& s, double T, std::mt19937_64& rng) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw InvalidInput("suspension_sample: T must be finite and >= 0");
  const ShiftModel& m = s.model();
  SuspensionSample out;
  out.xi = ZVec(m.d);
  std::size_t c = s.draw_stationary(rng);
  const auto w0 = m.space.word(c);
  out.word.assign(w0.begin(), w0.end());
  double acc = 0.0;
  const double slack = 1e-12 * std::max(1.0, T);
  while (acc + m.tau[c] <= T + slack) {
    out.xi += m.f[c];
    acc += m.tau[c];
    c = s.step(c, rng);
    out.word.push_back(m.space.word(c).back());
    ++out.shifts;
  }
  out.leftover = std::max(0.0, T - acc);
  return out;
}

const ZVec& SuspensionPath::xi_at(double t) const {
  const auto j = std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
  return j == 0 ? zero : xi_after[static_cast<std::size_t>(j - 1)];
}

SuspensionPath suspension_path(const Suspension& s, double tmax, std::mt19937_64& rng) {
  const ShiftModel& m = s.model();
  SuspensionPath p;
  p.zero = ZVec(m.d);
  std::size_t c = s.draw_haar(rng);
  p.start_cylinder = c;
  const double phase = std::uniform_real_distribution<double>(0.0, 1.0)(rng) * m.tau[c];
  double t = m.tau[c] - phase;
  ZVec xi(m.d);
  while (t <= tmax) {
    xi += m.f[c];
    p.jump_times.push_back(t);
    p.xi_after.push_back(xi);
    c = s.step(c, rng);
    t += m.tau[c];
  }
  return p;
}

std::vector<SuspensionSample> suspension_ensemble(const Suspension& s, double T, std::size_t samples,
                                                  std::uint64_t seed, Exec exec) {
  return map_indices<SuspensionSample>(
      samples,
      [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(seed, i));
        return suspension_sample(s, T, rng);
      },
      exec);
}

double local_stable_length(double s, double psi_val) {
  if (!(psi_val > 0.0)) throw InvalidInput("local_stable_length: psi must be positive");
  return std::exp(-s) * psi_val;
}

namespace {

ShiftModel assemble(std::string name, std::vector<std::vector<int>> A, int depth, std::size_t d,
                    const std::function<double(std::span<const int>)>& tau,
                    const std::function<ZVec(int, int)>& edge_f) {
  if (depth < 2) throw InvalidInput("shift model: depth must be at least 2 (f reads two symbols)");
  if (!is_primitive(A)) throw InvalidInput("shift model: transition matrix is not irreducible and aperiodic");
  ShiftModel m;
  m.name = std::move(name);
  m.space = CylinderSpace(std::move(A), depth);
  m.d = d;
  m.tau_raw = tabulate(m.space, tau);
  for (double t : m.tau_raw)
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("shift model: roof must be positive and finite");
  m.tau = m.tau_raw;
  m.f.resize(m.size());
  for (std::size_t c = 0; c < m.size(); ++c) {
    const auto w = m.space.word(c);
    m.f[c] = edge_f(w[0], w[1]);
    if (m.f[c].size() != d) throw InvalidInput("shift model: jump has wrong dimension");
  }
  return m;
}

} // namespace

std::vector<std::string> builtin_model_names() { return {"full2-cosh", "golden-mean", "product2d"}; }

ShiftModel builtin_model(const std::string& name, int depth) {
  const double ln2 = std::numbers::ln2;
  if (name == "full2-cosh") {
    return normalize_roof(assemble(name, {{1, 1}, {1, 1}}, depth, 1, [ln2](std::span<const int>) { return ln2; },
                                   [](int a, int) { return ZVec{a == 1 ? 1L : -1L}; }));
  }
  if (name == "golden-mean") {
    auto tau = [](std::span<const int> w) {
      double s = 1.0, c = 0.4;
      for (int x : w) {
        s += c * x;
        c *= -0.125;
      }
      return s;
    };
    auto f = [](int a, int b) {
      if (a == 0 && b == 0) return ZVec{1};
      if (a == 0 && b == 1) return ZVec{-1};
      return ZVec{0};
    };
    return normalize_roof(assemble(name, {{1, 1}, {1, 0}}, depth, 1, tau, f));
  }
  if (name == "product2d") {
    // Two decoupled full2-cosh walks: state s = 2a + b.
    return normalize_roof(assemble(
        name, std::vector<std::vector<int>>(4, std::vector<int>(4, 1)), depth, 2,
        [ln2](std::span<const int>) { return 2 * ln2; },
        [](int s, int) { return ZVec{(s >> 1) ? 1L : -1L, (s & 1) ? 1L : -1L}; }));
  }
  throw ConfigError("unknown shift model '" + name + "'");
}

namespace {

std::vector<int> parse_symbols(const std::string& key, int n) {
  std::vector<int> out;
  if (key.find(',') != std::string::npos || key.find(' ') != std::string::npos) {
    std::string tok;
    std::istringstream in(key);
    while (std::getline(in, tok, ',')) {
      std::istringstream t(tok);
      int v;
      if (t >> v) out.push_back(v);
    }
  } else {
    for (char ch : key) {
      if (ch < '0' || ch > '9') throw ConfigError("shift spec: bad cylinder key '" + key + "'");
      out.push_back(ch - '0');
    }
  }
  for (int v : out)
    if (v < 0 || v >= n) throw ConfigError("shift spec: symbol out of range in '" + key + "'");
  return out;
}

} // namespace

ShiftModel model_from_json(const json& j) {
  try {
    int n = j.at("states").is_number() ? j.at("states").get<int>() : static_cast<int>(j.at("states").size());
    auto A = j.at("transitions").get<std::vector<std::vector<int>>>();
    if (static_cast<int>(A.size()) != n) throw ConfigError("shift spec: transitions do not match states");
    const int depth = j.value("depth", 6);

    std::function<double(std::span<const int>)> tau;
    const auto& jt = j.at("tau");
    if (jt.is_number()) {
      const double v = jt.get<double>();
      tau = [v](std::span<const int>) { return v; };
    } else if (jt.contains("constant")) {
      const double v = jt.at("constant").get<double>();
      tau = [v](std::span<const int>) { return v; };
    } else {
      std::vector<std::pair<std::vector<int>, double>> table;
      for (const auto& [key, val] : jt.items()) table.emplace_back(parse_symbols(key, n), val.get<double>());
      tau = [table](std::span<const int> w) {
        std::size_t best_len = 0;
        double best = NAN;
        for (const auto& [prefix, v] : table) {
          if (prefix.size() > w.size() || prefix.size() < best_len) continue;
          if (std::equal(prefix.begin(), prefix.end(), w.begin())) best_len = prefix.size(), best = v;
        }
        if (std::isnan(best)) throw ConfigError("shift spec: tau undefined on some cylinder");
        return best;
      };
    }

    std::size_t d = 1;
    std::map<std::pair<int, int>, ZVec> edges;
    if (j.contains("f")) {
      bool first = true;
      for (const auto& [key, val] : j.at("f").items()) {
        auto sym = parse_symbols(key, n);
        if (sym.size() != 2) throw ConfigError("shift spec: f keys must name an edge");
        std::vector<long> v = val.is_array() ? val.get<std::vector<long>>() : std::vector<long>{val.get<long>()};
        if (first) d = v.size(), first = false;
        if (v.size() != d) throw ConfigError("shift spec: inconsistent f dimensions");
        ZVec z(d);
        for (std::size_t k = 0; k < d; ++k) z[k] = v[k];
        edges[{sym[0], sym[1]}] = z;
      }
    }
    auto f = [edges, d](int a, int b) {
      auto it = edges.find({a, b});
      return it == edges.end() ? ZVec(d) : it->second;
    };
    return normalize_roof(assemble(j.value("name", std::string("custom")), std::move(A), depth, d, tau, f));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("shift spec: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("shift spec: ") + e.what());
  }
}

} // namespace horolab::thermo
