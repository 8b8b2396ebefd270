#pragma once

#include <array>
#include <functional>
#include <vector>

#include "json.hpp"

namespace santalo {

// Star body given by radial samples on a uniform angle grid.
//   dim 2: theta_j = 2 pi j / n_theta, j < n_theta.
//   dim 3: polar midpoints theta_a = pi (a + 1/2) / n_theta, azimuth phi_b = 2 pi b / n_phi;
//          samples are theta-major (a * n_phi + b).
struct ConvexBodyRadial {
  int dim = 2;
  int n_theta = 0;
  int n_phi = 0;
  std::vector<double> radial;
  bool unconditional = false;

  static ConvexBodyRadial from_function(int dim, int n_theta, int n_phi,
                                        const std::function<double(const double* u)>& r);

  void validate() const;
  // Radial function at a unit direction (linear/bilinear interpolation in angles).
  double radius(const double* u) const;
  // |x| / r(x / |x|)
  double gauge(const double* x) const;
  double volume() const;
  // True when samples are invariant under every coordinate reflection (to tol).
  bool octant_symmetric(double tol = 1e-12) const;
};

double ball_volume(int n);

// Named families; q = +inf gives the box with the given half-axes.
ConvexBodyRadial ball_body(int dim, double r = 1.0, int resolution = 256);
ConvexBodyRadial lp_body(int dim, std::array<double, 3> axes, double q, int resolution = 256);

// L_p affine surface area of a smooth planar body:
// integral over the boundary of kappa^{p/(n+p)} <x, N>^{n(1-p)/(n+p)}.
double affine_surface_area_body(const ConvexBodyRadial& K, double p);

void to_json(nlohmann::json& j, const ConvexBodyRadial& b);
ConvexBodyRadial body_from_json(const nlohmann::json& j);

}  // namespace santalo
