#pragma once

#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "horolab/psl2.hpp"
#include "horolab/zvec.hpp"

namespace horolab::surface {

using psl2::GroupElement;

// Homomorphism from the lattice to Z^d, stored on the abelianization:
// values[j][p] is component j of the image of the p-th generator pair.
struct Character {
  std::size_t d = 1;
  std::vector<std::vector<long>> values;

  ZVec apply(const ZVec& ab) const;
};

// Cocompact lattice given by side pairings of a Dirichlet domain centred at i.
// Generators come in inverse pairs; pair p has a positive and a negative
// member, and the abelianization is Z^{pairs}.
struct FuchsianSpec {
  std::vector<GroupElement> generators;
  std::vector<std::string> names;
  std::vector<int> inverse_of;
  std::vector<int> pair_of;
  std::vector<int> pair_sign;
  std::vector<int> relation;
  double circumradius = 0.0;  // hyperbolic distance from i to the farthest domain point
  double inradius = 0.0;
  std::map<std::string, Character> characters;

  std::size_t num_generators() const { return generators.size(); }
  std::size_t num_pairs() const { return generators.size() / 2; }

  GroupElement evaluate(const std::vector<int>& word) const;
  ZVec abelianize(const std::vector<int>& word) const;
  ZVec generator_ab(int g) const;
  int index_of(std::string_view name) const;  // -1 when unknown

  // Parses "a1 b1 A2" or "a1 b1^-1"; an empty string is the identity.
  std::vector<int> parse_word(std::string_view text) const;

  const Character& character(const std::string& name) const;
};

struct CoverPoint {
  GroupElement rep;  // rep.i lies in the Dirichlet domain
  ZVec xi;           // deck coordinate
};

struct Reduction {
  GroupElement rep;  // g = gamma * rep
  ZVec ab;           // abelianization of gamma
  long steps = 0;
};

// Genus-2 group of the regular octagon with angle sum 2*pi; generator k is the
// rotation by k*pi/4 of a fixed translation along the imaginary axis.
FuchsianSpec build_octagon_group();

// Default characters of the octagon group: phi (d=1, a1 -> 1) and
// phi2 (d=2, a1 -> (1,0), a2 -> (0,1)).
Character default_character(const FuchsianSpec& spec, std::size_t d);

Character make_character(const FuchsianSpec& spec, std::size_t d,
                         const std::map<std::string, std::vector<long>>& by_name);

// Greedy descent: repeatedly apply the generator that most decreases the
// distance from rep.i to i. Ties go to the lowest generator index.
Reduction reduce_ab(const GroupElement& g, const FuchsianSpec& spec, long max_steps = 100000);
CoverPoint reduce(const GroupElement& g, const FuchsianSpec& spec, const Character& phi);

ZVec character_value(const std::vector<int>& word, const FuchsianSpec& spec, const Character& phi);

double relation_residual(const FuchsianSpec& spec);
bool in_domain(const GroupElement& rep, const FuchsianSpec& spec, double tol = 1e-9);
double hyperbolic_dist_to_center(const GroupElement& rep);

// Haar-uniform point of the unit tangent bundle over the Dirichlet domain.
GroupElement sample_domain(const FuchsianSpec& spec, std::mt19937_64& rng);

// Coordinates used by the cell partitions: polar angle of the base point in
// the Poincare disk, hyperbolic radius, and the angle of the frame vector.
struct FrameCoords {
  double polar_angle;
  double radius;
  double frame_angle;
};
FrameCoords frame_coords(const GroupElement& rep);

// JSON group spec: {generators: [[a,b,c,d],...], relation: [...],
// characters: {name: {gen: vector}}, optional names, circumradius}.
FuchsianSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const FuchsianSpec& spec);

} // namespace horolab::surface
