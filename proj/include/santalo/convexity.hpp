#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "santalo/grid.hpp"

namespace santalo {

struct ConjugateOptions {
  std::optional<Grid> dual_grid;  // defaults to the primal grid
  // Dual nodes whose sup is attained on the primal box boundary become +inf
  // (indicator semantics); off keeps the truncated discrete sup.
  bool saturate_boundary = true;
  // Throw "unbounded conjugate" when more than 5% of dual nodes hit the boundary.
  bool strict = false;
  // Parabolic sub-node refinement of each 1D argmax. Exact for quadratics; off by default
  // because it can overshoot the discrete sup for non-quadratic data.
  bool refine = false;
};

struct ConjugatePair {
  GridFunction primal;
  GridFunction dual;
  Grid dual_grid;
  std::vector<std::uint8_t> boundary_flag;  // per dual node
  double boundary_fraction = 0.0;
};

inline constexpr double kUnboundedFraction = 0.05;

// V*(y) = max over primal nodes of <x,y> - V(x), by separable per-axis hull sweeps.
ConjugatePair legendre_conjugate(const GridFunction& V, const ConjugateOptions& opt = {});

// Convex envelope V** (double discrete conjugation on the primal grid).
GridFunction convexify(const GridFunction& V);

// Smallest second difference along axes and face diagonals over finite triples.
double min_second_difference(const GridFunction& V);
bool is_discretely_convex(const GridFunction& V, double tol = 1e-9);

// V~(x) = max over node tuples (x_i)_{i != index} of C*sum_{i<j}<x_i,x_j> - sum_{i != index} V_i(x_i),
// x in slot `index`. Brute force; throws "instance too large" past `budget` evaluations.
GridFunction c_transform_multimarginal(const std::vector<GridFunction>& tuple, int index, double C,
                                       double budget = 2e8);

struct GradientField {
  int dim = 1;
  std::vector<double> values;  // dim per node
  std::vector<std::uint8_t> valid;
  const double* at(std::size_t i) const { return values.data() + i * dim; }
};

struct HessianField {
  int dim = 1;
  std::vector<double> values;  // dim*dim per node, row-major, symmetric
  std::vector<std::uint8_t> valid;
  const double* at(std::size_t i) const { return values.data() + i * dim * dim; }
};

// Central differences in the interior, one-sided at the box edge. Nodes whose stencil
// touches +inf are marked invalid ("infinite stencil").
GradientField finite_diff_gradient(const GridFunction& V);
HessianField finite_diff_hessian(const GridFunction& V);

double determinant(const double* m, int n);

}  // namespace santalo
