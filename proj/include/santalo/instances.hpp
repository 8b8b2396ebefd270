#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "santalo/bodies.hpp"
#include "santalo/functionals.hpp"
#include "santalo/grid.hpp"

namespace santalo {

// Generator spec. Potential families:
//   gaussian             k copies of c_i |x|^2/2 scaled so prod c_i = 1 (equality family)
//   gaussian-triple      |x|^2 / (2 sigma_i^2), sigma = (0.8, 1.0, 1.25)
//   gaussian-pair        sigma = (1, 2)
//   quartic              |x|^2/2 + 0.1 sum x_j^4
//   unconditional-mixed  sum a_j |x_j|^{p_j} + x'Dx, D diagonal
//   even-mixed           the same with a full PSD D (even, not unconditional when n > 1)
//   even-rotated         x'Ax/2 + q (x'Ax)^2, A a rotated ellipsoid with det A = 1 (even, near equality)
//   shifted-gaussian     |x - m_i|^2 / (2 sigma_i^2), m_i random
//   mixture              log of a two-bump Gaussian mixture (not log-concave), n = 1
//   balls, lp-bodies     convex bodies, n in {2, 3}
struct FamilySpec {
  std::string potential = "unconditional-mixed";
  int k = 3;
  int n = 1;
  double half_width = 8.0;
  int points_per_axis = 161;
  RhoProfile rho = RhoProfile::exponential(0.5);
  std::vector<double> lambda;  // empty: uniform
  double radius = 1.0;         // balls
  int resolution = 256;        // bodies
};

void to_json(nlohmann::json& j, const FamilySpec& f);

struct Instance {
  std::string family;
  std::uint64_t seed = 0;
  int k = 0;
  int n = 0;
  Grid grid;
  std::vector<GridFunction> potentials;  // V_i; empty for bodies
  std::vector<ConvexBodyRadial> bodies;
  std::vector<double> lambda;
  RhoProfile rho;
  nlohmann::json params;  // generator draws
  std::string hash;
};

bool is_body_family(const std::string& potential);
const std::vector<std::string>& known_families();

struct FamilyProblem {
  std::string field;  // relative to the family spec, e.g. "grid.points_per_axis"
  std::string what;
};

std::optional<FamilyProblem> family_problem(const FamilySpec& spec);
// Throws InvalidFamily on bad parameters.
void validate_family(const FamilySpec& spec);

Instance generate_instance(const FamilySpec& spec, std::uint64_t seed);

// Seed of instance `index` in a corpus.
std::uint64_t corpus_seed(std::uint64_t seed, std::size_t index);

}  // namespace santalo
