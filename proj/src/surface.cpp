#include "horolab/surface.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "horolab/error.hpp"

namespace horolab {

std::ostream& operator<<(std::ostream& os, const ZVec& v) {
  os << "(";
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  return os << ")";
}

} // namespace horolab

namespace horolab::surface {

using psl2::Complex;
using psl2::FlowKind;
using nlohmann::json;

ZVec Character::apply(const ZVec& ab) const {
  ZVec out(d);
  for (std::size_t j = 0; j < d; ++j) {
    long s = 0;
    for (std::size_t p = 0; p < ab.size(); ++p) s += values[j][p] * ab[p];
    out[j] = s;
  }
  return out;
}

GroupElement FuchsianSpec::evaluate(const std::vector<int>& word) const {
  GroupElement g;
  for (int k : word) g = g * generators.at(static_cast<std::size_t>(k));
  return g;
}

ZVec FuchsianSpec::generator_ab(int g) const {
  ZVec v(num_pairs());
  v[static_cast<std::size_t>(pair_of[g])] = pair_sign[g];
  return v;
}

ZVec FuchsianSpec::abelianize(const std::vector<int>& word) const {
  ZVec v(num_pairs());
  for (int k : word) {
    if (k < 0 || static_cast<std::size_t>(k) >= num_generators()) {
      throw InvalidInput("word: generator index out of range");
    }
    v[static_cast<std::size_t>(pair_of[k])] += pair_sign[k];
  }
  return v;
}

int FuchsianSpec::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<int> FuchsianSpec::parse_word(std::string_view text) const {
  std::vector<int> word;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    bool invert = false;
    if (tok.size() > 3 && tok.ends_with("^-1")) {
      invert = true;
      tok.resize(tok.size() - 3);
    }
    int k = index_of(tok);
    if (k < 0) throw InvalidInput("unknown generator '" + tok + "'");
    word.push_back(invert ? inverse_of[static_cast<std::size_t>(k)] : k);
  }
  return word;
}

const Character& FuchsianSpec::character(const std::string& name) const {
  auto it = characters.find(name);
  if (it == characters.end()) throw ConfigError("unknown character '" + name + "'");
  return it->second;
}

namespace {

long gcd_all(const std::vector<long>& xs) {
  long g = 0;
  for (long x : xs) g = std::gcd(g, x);
  return g;
}

void check_spanning(const Character& phi) {
  // The image spans Z^d iff the gcd of the maximal minors is 1.
  const std::size_t pairs = phi.values.empty() ? 0 : phi.values[0].size();
  std::vector<long> minors;
  if (phi.d == 1) {
    minors = phi.values[0];
  } else if (phi.d == 2) {
    for (std::size_t p = 0; p < pairs; ++p)
      for (std::size_t q = p + 1; q < pairs; ++q)
        minors.push_back(phi.values[0][p] * phi.values[1][q] - phi.values[0][q] * phi.values[1][p]);
  } else {
    throw InvalidInput("character: cover rank must be 1 or 2");
  }
  if (std::abs(gcd_all(minors)) != 1) {
    throw InvalidInput("character: image of the generators does not span Z^d");
  }
}

} // namespace

Character make_character(const FuchsianSpec& spec, std::size_t d,
                         const std::map<std::string, std::vector<long>>& by_name) {
  Character phi;
  phi.d = d;
  phi.values.assign(d, std::vector<long>(spec.num_pairs(), 0));
  for (const auto& [name, vec] : by_name) {
    int k = spec.index_of(name);
    if (k < 0) {
      // numeric index
      try {
        std::size_t used = 0;
        k = std::stoi(name, &used);
        if (used != name.size()) k = -1;
      } catch (const std::exception&) {
        k = -1;
      }
    }
    if (k < 0 || static_cast<std::size_t>(k) >= spec.num_generators()) {
      throw ConfigError("character: unknown generator '" + name + "'");
    }
    if (vec.size() != d) throw ConfigError("character: value for '" + name + "' has wrong dimension");
    const auto p = static_cast<std::size_t>(spec.pair_of[k]);
    for (std::size_t j = 0; j < d; ++j) phi.values[j][p] = spec.pair_sign[k] * vec[j];
  }
  bool zero = true;
  for (const auto& row : phi.values)
    for (long v : row) zero = zero && v == 0;
  // The all-zero character (kernel = whole lattice) is allowed as a degenerate cover.
  if (!zero) check_spanning(phi);
  return phi;
}

Character default_character(const FuchsianSpec& spec, std::size_t d) {
  if (d == 1) return make_character(spec, 1, {{"a1", {1}}});
  if (d == 2) return make_character(spec, 2, {{"a1", {1, 0}}, {"a2", {0, 1}}});
  throw InvalidInput("default_character: d must be 1 or 2");
}

double relation_residual(const FuchsianSpec& spec) { return psl2::dist_id(spec.evaluate(spec.relation)); }

FuchsianSpec build_octagon_group() {
  FuchsianSpec spec;
  const double pi = std::numbers::pi;
  const double cot8 = 1.0 / std::tan(pi / 8);
  // Inradius rho of the regular octagon with interior angle pi/4:
  // cosh(rho) = cos(pi/8) / sin(pi/8). Side pairings translate by 2 rho.
  spec.inradius = std::acosh(cot8);
  spec.circumradius = std::acosh(cot8 * cot8);
  const GroupElement translate = psl2::make_flow(FlowKind::A, 2 * spec.inradius);
  for (int k = 0; k < 8; ++k) {
    const GroupElement r = psl2::rotation(k * pi / 4);
    spec.generators.push_back(r * translate * r.inverse());
  }
  spec.names = {"a1", "b1", "a2", "b2", "A1", "B1", "A2", "B2"};
  for (int k = 0; k < 8; ++k) {
    spec.inverse_of.push_back((k + 4) % 8);
    spec.pair_of.push_back(k % 4);
    spec.pair_sign.push_back(k < 4 ? 1 : -1);
  }
  // Opposite-side pairing of the octagon.
  spec.relation = {0, 3, 6, 1, 4, 7, 2, 5};
  spec.characters["phi"] = default_character(spec, 1);
  spec.characters["phi2"] = default_character(spec, 2);
  spec.characters["psi_b1"] = make_character(spec, 1, {{"b1", {1}}});
  spec.characters["trivial"] = Character{1, std::vector<std::vector<long>>(1, std::vector<long>(4, 0))};
  return spec;
}

Reduction reduce_ab(const GroupElement& g, const FuchsianSpec& spec, long max_steps) {
  Reduction out{g, ZVec(spec.num_pairs()), 0};
  double a = g.a(), b = g.b(), c = g.c(), d = g.d();
  double current = a * a + b * b + c * c + d * d;
  const std::size_t n = spec.num_generators();
  while (true) {
    int best = -1;
    double best_val = current;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& h = spec.generators[k].entries();
      const double na = h[0] * a + h[1] * c, nb = h[0] * b + h[1] * d;
      const double nc = h[2] * a + h[3] * c, nd = h[2] * b + h[3] * d;
      const double val = na * na + nb * nb + nc * nc + nd * nd;
      if (val < best_val) {
        best_val = val;
        best = static_cast<int>(k);
      }
    }
    // Frobenius norm^2 is 2 cosh(dist); require a decrease beyond 1e-12 relative.
    if (best < 0 || current - best_val <= 1e-12 * current) break;
    if (++out.steps > max_steps) {
      throw NumericError("reduce: no convergence after " + std::to_string(max_steps) +
                         " steps (cosh dist " + std::to_string(current / 2) + ")");
    }
    const auto& h = spec.generators[static_cast<std::size_t>(best)].entries();
    const double na = h[0] * a + h[1] * c, nb = h[0] * b + h[1] * d;
    const double nc = h[2] * a + h[3] * c, nd = h[2] * b + h[3] * d;
    a = na, b = nb, c = nc, d = nd;
    current = best_val;
    // g = gamma * rep and rep <- h * rep, so gamma <- gamma * h^{-1}.
    out.ab[static_cast<std::size_t>(spec.pair_of[best])] -= spec.pair_sign[best];
  }
  out.rep = GroupElement::from_entries(a, b, c, d);
  return out;
}

CoverPoint reduce(const GroupElement& g, const FuchsianSpec& spec, const Character& phi) {
  Reduction r = reduce_ab(g, spec);
  return {r.rep, phi.apply(r.ab)};
}

ZVec character_value(const std::vector<int>& word, const FuchsianSpec& spec, const Character& phi) {
  return phi.apply(spec.abelianize(word));
}

bool in_domain(const GroupElement& rep, const FuchsianSpec& spec, double tol) {
  const double here = psl2::cosh_dist_to_i(rep);
  for (const auto& h : spec.generators) {
    if (psl2::cosh_dist_to_i(h * rep) < here - tol) return false;
  }
  return true;
}

double hyperbolic_dist_to_center(const GroupElement& rep) {
  return std::acosh(std::max(1.0, psl2::cosh_dist_to_i(rep)));
}

GroupElement sample_domain(const FuchsianSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2 * std::numbers::pi;
  const double span = std::cosh(spec.circumradius) - 1.0;
  // K A K coordinates: Haar = sinh(r) dr dtheta1 dtheta2.
  for (int attempt = 0; attempt < 100000; ++attempt) {
    const double r = std::acosh(1.0 + unit(rng) * span);
    const double t1 = two_pi * unit(rng);
    const double t2 = two_pi * unit(rng);
    GroupElement g = psl2::rotation(t1) * psl2::make_flow(FlowKind::A, r) * psl2::rotation(t2);
    if (in_domain(g, spec, 0.0)) return g;
  }
  throw NumericError("sample_domain: rejection sampling failed");
}

FrameCoords frame_coords(const GroupElement& rep) {
  const Complex i(0.0, 1.0);
  const Complex w = psl2::mobius_act(rep, i);
  const Complex zeta = (w - i) / (w + i);
  const Complex dg = 1.0 / ((rep.c() * i + rep.d()) * (rep.c() * i + rep.d()));
  const Complex dc = 2.0 * i / ((w + i) * (w + i));
  const double two_pi = 2 * std::numbers::pi;
  auto wrap = [two_pi](double x) { return x < 0 ? x + two_pi : x; };
  return {wrap(std::arg(zeta)), hyperbolic_dist_to_center(rep), wrap(std::arg(dc * dg * i))};
}

namespace {

GroupElement element_from_json(const json& e) {
  if (!e.is_array() || e.size() != 4) throw ConfigError("group spec: generator must be [a,b,c,d]");
  const double a = e[0], b = e[1], c = e[2], d = e[3];
  if (std::abs(a * d - b * c - 1.0) > 1e-9) throw ConfigError("group spec: generator determinant != 1");
  return GroupElement::from_entries(a, b, c, d);
}

double estimate_circumradius(const FuchsianSpec& spec) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double reach = 0.0;
  for (const auto& h : spec.generators) reach = std::max(reach, hyperbolic_dist_to_center(h));
  double best = 0.0;
  for (int s = 0; s < 20000; ++s) {
    const double r = 2 * reach * unit(rng);
    GroupElement g = psl2::rotation(2 * std::numbers::pi * unit(rng)) * psl2::make_flow(FlowKind::A, r);
    best = std::max(best, hyperbolic_dist_to_center(reduce_ab(g, spec).rep));
  }
  return 1.05 * best;
}

} // namespace

FuchsianSpec spec_from_json(const json& j) {
  FuchsianSpec spec;
  try {
    std::vector<GroupElement> listed;
    for (const auto& e : j.at("generators")) listed.push_back(element_from_json(e));
    std::vector<std::string> listed_names;
    if (j.contains("names")) listed_names = j.at("names").get<std::vector<std::string>>();
    // Pair up inverses present in the list; append missing ones.
    const std::size_t n = listed.size();
    std::vector<int> partner(n, -1);
    for (std::size_t p = 0; p < n; ++p) {
      if (partner[p] >= 0) continue;
      for (std::size_t q = p + 1; q < n; ++q) {
        if (partner[q] < 0 && psl2::approx_equal(listed[p].inverse(), listed[q], 1e-9)) {
          partner[p] = static_cast<int>(q);
          partner[q] = static_cast<int>(p);
          break;
        }
      }
    }
    std::vector<int> index_map(n, -1);
    int pair = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (index_map[p] >= 0) continue;
      const std::string base = p < listed_names.size() ? listed_names[p] : "x" + std::to_string(pair);
      index_map[p] = static_cast<int>(spec.generators.size());
      spec.generators.push_back(listed[p]);
      spec.names.push_back(base);
      spec.pair_of.push_back(pair);
      spec.pair_sign.push_back(1);
      const int inv = static_cast<int>(spec.generators.size());
      if (partner[p] >= 0) {
        const auto q = static_cast<std::size_t>(partner[p]);
        index_map[q] = inv;
        spec.names.push_back(q < listed_names.size() ? listed_names[q] : base + "^-1");
      } else {
        spec.names.push_back(base + "^-1");
      }
      spec.generators.push_back(listed[p].inverse());
      spec.pair_of.push_back(pair);
      spec.pair_sign.push_back(-1);
      spec.inverse_of.push_back(inv);
      spec.inverse_of.push_back(inv - 1);
      ++pair;
    }
    for (int k : j.at("relation").get<std::vector<int>>()) {
      if (k < 0 || static_cast<std::size_t>(k) >= n) throw ConfigError("group spec: relation index out of range");
      spec.relation.push_back(index_map[static_cast<std::size_t>(k)]);
    }
    if (relation_residual(spec) > 1e-9) throw ConfigError("group spec: relation does not evaluate to the identity");
    if (j.contains("characters")) {
      for (const auto& [name, vals] : j.at("characters").items()) {
        std::map<std::string, std::vector<long>> by_name;
        std::size_t d = 0;
        for (const auto& [gen, v] : vals.items()) {
          std::vector<long> vec = v.is_array() ? v.get<std::vector<long>>() : std::vector<long>{v.get<long>()};
          d = vec.size();
          // Indices in the file refer to the listed generator order.
          std::string key = gen;
          if (spec.index_of(gen) < 0) {
            try {
              std::size_t used = 0;
              const int k = std::stoi(gen, &used);
              if (used == gen.size() && k >= 0 && static_cast<std::size_t>(k) < n) {
                key = spec.names[static_cast<std::size_t>(index_map[static_cast<std::size_t>(k)])];
              }
            } catch (const std::exception&) {
            }
          }
          by_name[key] = vec;
        }
        spec.characters[name] = make_character(spec, d == 0 ? 1 : d, by_name);
      }
    }
    for (std::size_t k = 0; k < spec.num_generators(); ++k) {
      const double half = 0.5 * hyperbolic_dist_to_center(spec.generators[k]);
      spec.inradius = k == 0 ? half : std::min(spec.inradius, half);
    }
    spec.circumradius = j.contains("circumradius") ? j.at("circumradius").get<double>() : estimate_circumradius(spec);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("group spec: ") + e.what());
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("group spec: ") + e.what());
  }
  return spec;
}

json spec_to_json(const FuchsianSpec& spec) {
  json j;
  j["generators"] = json::array();
  for (const auto& g : spec.generators) j["generators"].push_back({g.a(), g.b(), g.c(), g.d()});
  j["names"] = spec.names;
  j["relation"] = spec.relation;
  j["circumradius"] = spec.circumradius;
  json chars = json::object();
  for (const auto& [name, phi] : spec.characters) {
    json c = json::object();
    for (std::size_t k = 0; k < spec.num_generators(); ++k) {
      if (spec.pair_sign[k] < 0) continue;
      std::vector<long> v(phi.d);
      for (std::size_t jj = 0; jj < phi.d; ++jj) v[jj] = phi.values[jj][static_cast<std::size_t>(spec.pair_of[k])];
      c[spec.names[k]] = v;
    }
    chars[name] = c;
  }
  j["characters"] = chars;
  return j;
}

} // namespace horolab::surface
