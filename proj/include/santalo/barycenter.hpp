#pragma once

#include <vector>

#include "json.hpp"
#include "santalo/grid.hpp"
#include "santalo/transport.hpp"

namespace santalo {

struct BarycenterOptions {
  MultiOptions multi;
  // Pushforward points in the same cell of this size are merged; < 0 picks h/2 from
  // the first marginal's grid (0 without a grid: only exact duplicates merge).
  double merge_radius = -1.0;
  bool parallel = true;
};

struct BarycenterResult {
  DiscreteMeasure measure;
  std::vector<double> lambda;
  std::vector<double> per_marginal_w2;  // W2^2(mu, mu_i)
  double functional_value = 0.0;        // 1/2 sum lambda_i W2^2(mu, mu_i)
  double identity_residual = 0.0;
  // sum lambda_i int |x_i - T(x)|^2 dpi, against sum lambda_i W2^2(mu_i, mu).
  double coupling_cost = 0.0;
  double identity_relative_error = 0.0;
  MultiPlan source_plan;
  std::vector<TransportPlan> plans;  // mu -> mu_i
};

BarycenterResult barycenter_via_multimarginal(const std::vector<DiscreteMeasure>& measures,
                                              const std::vector<double>& lambda, const BarycenterOptions& opt = {});

inline constexpr int kQuantileNodes = 512;

// Lambda-average of quantile functions on u_j = (j + 1/2)/N, as a uniform-mass cloud.
DiscreteMeasure barycenter_1d_quantile(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& lambda,
                                       int nodes = kQuantileNodes);

// 1/2 sum lambda_i W2^2(mu_i, nu).
double barycenter_functional(const DiscreteMeasure& nu, const std::vector<DiscreteMeasure>& measures,
                             const std::vector<double>& lambda);

// mu-weighted L2 norm of sum lambda_i T_i(x) - x with T_i the row-average map of plan i.
double barycenter_identity_residual(const DiscreteMeasure& mu, const std::vector<DiscreteMeasure>& measures,
                                    const std::vector<double>& lambda, const std::vector<TransportPlan>& plans);
double barycenter_identity_residual(BarycenterResult& result, const std::vector<DiscreteMeasure>& measures);

// Merges points sharing a cell of the given size (mass-weighted mean position).
DiscreteMeasure merge_points(int dim, const std::vector<double>& points, const std::vector<double>& weights,
                             double radius);

void to_json(nlohmann::json& j, const DiscreteMeasure& m);
void to_json(nlohmann::json& j, const BarycenterResult& r);

}  // namespace santalo
