#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "santalo/barycenter.hpp"
#include "santalo/bodies.hpp"
#include "santalo/functionals.hpp"
#include "santalo/transport.hpp"

namespace santalo {

// tol(h) = (c0 h + c1 h^2) * max(1, |rhs|) + floor
struct Tolerance {
  double c0 = 0.0;
  double c1 = 0.0;
  double floor = 1e-10;
  double at(double h, double scale) const;
};

// Frozen per-inequality defaults (see calibrate_tolerance in the tests).
Tolerance default_tolerance(const std::string& inequality_id);

struct InequalityReport {
  std::string inequality_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double hypothesis_margin = 0.0;
  Certification certification = Certification::Exhaustive;
  std::size_t count = 0;
  bool pass = false;
  double tol = 0.0;
  double margin_tol = 0.0;
  std::string instance_hash;
  std::string reason;  // "", "slack" or "hypothesis"
  bool conjecture = false;
  nlohmann::json extra = nlohmann::json::object();

  // Sets slack and pass from the other fields.
  void finalize();
  // A failed conclusion with the hypothesis satisfied.
  bool theorem_failure() const { return !pass && reason == "slack"; }
};

void to_json(nlohmann::json& j, const InequalityReport& r);

enum class SupConvMode {
  Snap,         // node tuples with sum lambda_i y_i within h/2 of x
  Interpolate,  // heaviest slot solved exactly, log f interpolated there
};

struct VerifyOptions {
  std::optional<Tolerance> tol;
  double margin_tol = 1e-9;
  TupleSearchOptions search;
  MultiOptions multi;
  bool symmetrize = true;   // otherwise non-unconditional input is rejected
  bool conjecture = false;  // even inputs, hypothesis over all of R^n
  SupConvMode supconv = SupConvMode::Interpolate;
  bool parallel = true;
  double p_floor = 1e-9;    // barycenter node masses below this are ignored
  // Hat half-width for barycenter densities; < 0 picks sqrt(h) (at least h).
  double bandwidth = -1.0;
};

// ---- functional Blaschke-Santalo ------------------------------------------------

// f: density values on a common grid.
InequalityReport verify_bsunc(const std::vector<GridFunction>& f, const RhoProfile& rho, const VerifyOptions& opt = {});

struct EqualityDiagnostics {
  std::vector<double> c;
  std::vector<double> residual;  // L_inf of f_i - c_i g relative to max f_i
  double product_deviation = 0.0;
  double rho_condition_margin = 0.0;
  bool equality_family = false;
};

EqualityDiagnostics equality_diagnostics(const std::vector<GridFunction>& f, const RhoProfile& rho,
                                         std::size_t samples = 20000);
void to_json(nlohmann::json& j, const EqualityDiagnostics& d);

// min over sampled positive-orthant tuples of rho(sum_{i<j}<x_i,x_j>) - prod rho^{1/k}(k(k-1)|x_i|^2/2).
double rho_product_condition(const RhoProfile& rho, int k, int n, std::size_t samples = 20000,
                             std::uint64_t seed = 0x5eed, double radius = 4.0);

// ---- Prekopa-Leindler ------------------------------------------------------------

struct SupConvValue {
  double value = 0.0;
  Certification certification = Certification::Exhaustive;
  std::size_t count = 0;
};

// sup of prod f_i^{lambda_i}(y_i) over sum lambda_i y_i = x.
SupConvValue sup_convolution(const std::vector<GridFunction>& f, const std::vector<double>& lambda, const double* x,
                             const VerifyOptions& opt = {});
// The same at every node of f[0]'s grid; certification is the weakest over nodes.
GridFunction sup_convolution_grid(const std::vector<GridFunction>& f, const std::vector<double>& lambda,
                                  const VerifyOptions& opt = {}, Certification* cert = nullptr);

// h == nullopt means the optimal h (the sup-convolution).
InequalityReport verify_prekopa_leindler(const std::vector<GridFunction>& f, const std::vector<double>& lambda,
                                         const std::optional<GridFunction>& h, const VerifyOptions& opt = {});

InequalityReport verify_pointwise_pl(const std::vector<GridFunction>& f, const std::vector<double>& lambda,
                                     const VerifyOptions& opt = {});

// ---- entropy and barycenters (rho_i are densities w.r.t. the standard Gaussian) ---

InequalityReport verify_displacement_convexity(const std::vector<GridFunction>& rho, const std::vector<double>& lambda,
                                               const VerifyOptions& opt = {});
InequalityReport verify_talagrand_barycenter(const std::vector<GridFunction>& rho, const VerifyOptions& opt = {});
InequalityReport verify_pointwise_entropy_bound(const std::vector<GridFunction>& rho, const VerifyOptions& opt = {});

// Mass of a measure spread onto grid nodes by multilinear (cloud-in-cell) weights.
std::vector<double> bin_to_grid(const DiscreteMeasure& mu, const Grid& g);
// Mass-conserving separable hat smoothing over +-s nodes per axis.
std::vector<double> smooth_masses(const std::vector<double>& masses, const Grid& g, int s);
// Density of mu at the nodes relative to the base node masses (quadrature weights, or
// weights times the Gaussian density): S(bin(mu)) / S(base).
std::vector<double> node_density(const DiscreteMeasure& mu, const Grid& g, const std::vector<double>& base,
                                 double bandwidth);
// sum M log(M / (w phi)) for node masses M.
double gaussian_entropy_of_masses(const std::vector<double>& masses, const Grid& g);
// sum w phi p log p for a density p relative to the Gaussian.
double gaussian_entropy_of_density(const std::vector<double>& p, const Grid& g);

// ---- sets -------------------------------------------------------------------------

struct BodyGridOptions {
  double half_width = -1.0;  // < 0: 8 * max radius
  int points_per_axis = 0;  // 0: 81 in 2D, 41 in 3D
};

InequalityReport verify_bs_bodies(const std::vector<ConvexBodyRadial>& bodies, const RhoProfile& rho,
                                  const VerifyOptions& opt = {}, const BodyGridOptions& grid = {});
InequalityReport verify_radial_bs(const std::vector<ConvexBodyRadial>& bodies, const VerifyOptions& opt = {},
                                  int angle_samples = 33);

// Functions mode: V_i potentials, lambda in [0, 1].
InequalityReport verify_affine_isoperimetric(const std::vector<GridFunction>& V, double lambda, const RhoProfile& rho,
                                             const VerifyOptions& opt = {});
// Bodies mode: planar smooth bodies, p in [0, n].
InequalityReport verify_affine_isoperimetric(const std::vector<ConvexBodyRadial>& bodies, double p,
                                             const RhoProfile& rho, const VerifyOptions& opt = {},
                                             const BodyGridOptions& grid = {});

// Hash of a serialized instance.
std::string instance_hash(const nlohmann::json& instance);

}  // namespace santalo
