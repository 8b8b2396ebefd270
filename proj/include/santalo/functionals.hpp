#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "santalo/convexity.hpp"
#include "santalo/grid.hpp"

namespace santalo {

// Positive non-increasing profile on [0, inf).
struct RhoProfile {
  enum class Family { Exponential, PowerExp, Tabulated };
  Family family = Family::Exponential;
  double c = 1.0;
  double beta = 1.0;
  std::vector<std::pair<double, double>> knots;  // (t, rho(t)), t ascending
  int k_context = 0;

  static RhoProfile exponential(double c);
  static RhoProfile power_exp(double c, double beta);
  static RhoProfile tabulated(std::vector<std::pair<double, double>> knots);

  double log_value(double t) const;
  double operator()(double t) const;
};

void to_json(nlohmann::json& j, const RhoProfile& r);
void from_json(const nlohmann::json& j, RhoProfile& r);

struct FunctionalReport {
  std::string name;
  double value = 0.0;
  Grid grid;
  std::vector<std::string> warnings;
};

// prod_i int e^{-V_i}
double s_functional(const std::vector<GridFunction>& tuple);

struct BsOptions {
  ConjugateOptions conjugate;
};

// int e^{-V} * int e^{-V*}
double bs_pair_functional(const GridFunction& V, const BsOptions& opt = {});
FunctionalReport bs_pair_report(const GridFunction& V, const BsOptions& opt = {});

// as_lambda(V) = int e^{(2 lambda - 1)V - lambda <x, grad V>} (det D^2 V)^lambda, skipping +inf nodes.
double affine_surface_area_fn(const GridFunction& V, double lambda);

// int rho log rho dgamma for a density rho relative to the standard Gaussian.
double relative_entropy_gaussian(const GridFunction& rho);
// Gaussian density values on the grid's nodes.
GridFunction gaussian_density(const Grid& g);

// (int rho^{1/k}(k(k-1)|u|^2/2) du)^k on the grid.
double rho_rhs_bound(const RhoProfile& rho, int k, int n, const Grid& grid);
inline constexpr double kTailRatio = 1e-12;

enum class Certification { Exhaustive, Sampled, NotApplicable };
const char* certification_name(Certification c);

struct TupleSearchOptions {
  double budget = 1e6;
  std::size_t samples = 100000;
  std::size_t polish_starts = 100;
  std::uint64_t seed = 0x5a17a105eedULL;
  int min_coarse = 8;
};

struct TupleSearchResult {
  double value = 0.0;
  Certification certification = Certification::Exhaustive;
  std::size_t count = 0;  // tuples evaluated (exhaustive or sampled)
  int stride = 1;         // >1 when exhaustive on a coarsened sub-grid
  std::vector<int> argmin;
};

// Minimizes objective over the product of index ranges [0, sizes[c]).
TupleSearchResult minimize_over_tuples(const std::vector<int>& sizes,
                                       const std::function<double(const int*)>& objective,
                                       const TupleSearchOptions& opt = {});

struct MarginResult {
  double margin = 0.0;
  Certification certification = Certification::Exhaustive;
  std::size_t count = 0;
  int stride = 1;
  std::vector<std::vector<double>> worst_tuple;
};

// min over node tuples of rho(sum_{i<j}<x_i,x_j>) - prod f_i(x_i); f_i are density values.
MarginResult constraint_margin(const std::vector<GridFunction>& f, const RhoProfile& rho, bool orthant_only,
                               const TupleSearchOptions& opt = {});

// max over node tuples of sum log f_i(x_i) - log rho(sum_{i<j}<x_i,x_j>) (the scale that makes
// the hypothesis tight); f_i given as potentials V_i = -log f_i.
TupleSearchResult max_log_ratio(const std::vector<GridFunction>& V, const RhoProfile& rho, bool orthant_only,
                                const TupleSearchOptions& opt = {});

}  // namespace santalo
