#include "santalo/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>

#include "santalo/error.hpp"

namespace santalo {

DiscreteMeasure merge_points(int dim, const std::vector<double>& points, const std::vector<double>& weights,
                             double radius) {
  struct Cell {
    double mass = 0.0;
    std::array<double, kMaxDim> moment{};
  };
  std::map<std::array<double, kMaxDim>, Cell> cells;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    std::array<double, kMaxDim> key{};
    for (int d = 0; d < dim; ++d) {
      const double x = points[i * dim + d];
      key[d] = radius > 0.0 ? std::round(x / radius) : x;
    }
    Cell& c = cells[key];
    c.mass += weights[i];
    for (int d = 0; d < dim; ++d) c.moment[d] += weights[i] * points[i * dim + d];
  }
  std::vector<double> pts, w;
  for (const auto& [key, c] : cells) {
    for (int d = 0; d < dim; ++d) pts.push_back(radius > 0.0 ? c.moment[d] / c.mass : key[d]);
    w.push_back(c.mass);
  }
  return DiscreteMeasure::make(dim, std::move(pts), std::move(w));
}

namespace {

std::vector<TransportPlan> plans_to(const DiscreteMeasure& mu, const std::vector<DiscreteMeasure>& measures,
                                    bool parallel) {
  std::vector<TransportPlan> plans(measures.size());
  if (!parallel) {
    for (std::size_t i = 0; i < measures.size(); ++i) plans[i] = w2_plan(mu, measures[i]);
    return plans;
  }
  std::vector<std::future<TransportPlan>> jobs;
  for (const auto& m : measures) jobs.push_back(std::async(std::launch::async, [&mu, &m] { return w2_plan(mu, m); }));
  for (std::size_t i = 0; i < jobs.size(); ++i) plans[i] = jobs[i].get();
  return plans;
}

}  // namespace

BarycenterResult barycenter_via_multimarginal(const std::vector<DiscreteMeasure>& measures,
                                              const std::vector<double>& lambda, const BarycenterOptions& opt) {
  BarycenterResult r;
  r.lambda = lambda;
  r.source_plan = solve_multimarginal(measures, lambda, 1.0, opt.multi);
  const MultiPlan& P = r.source_plan;
  const int k = static_cast<int>(measures.size());
  const int n = measures.front().dim;

  std::vector<double> pts(P.size() * n, 0.0);
  double coupling = 0.0;
  for (std::size_t e = 0; e < P.size(); ++e) {
    const int* t = P.tuple(e);
    double* T = &pts[e * n];
    for (int i = 0; i < k; ++i)
      for (int d = 0; d < n; ++d) T[d] += lambda[i] * measures[i].point(t[i])[d];
    for (int i = 0; i < k; ++i)
      for (int d = 0; d < n; ++d) {
        const double z = measures[i].point(t[i])[d] - T[d];
        coupling += P.masses[e] * lambda[i] * z * z;
      }
  }
  double radius = opt.merge_radius;
  if (radius < 0.0) radius = measures.front().grid ? 0.5 * measures.front().grid->spacing() : 0.0;
  r.measure = merge_points(n, pts, P.masses, radius);

  r.plans = plans_to(r.measure, measures, opt.parallel);
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    r.per_marginal_w2.push_back(r.plans[i].cost_value);
    total += lambda[i] * r.plans[i].cost_value;
  }
  r.functional_value = 0.5 * total;
  r.coupling_cost = coupling;
  r.identity_relative_error = std::abs(total - coupling) / std::max(std::abs(coupling), 1e-300);
  if (total == coupling) r.identity_relative_error = 0.0;
  barycenter_identity_residual(r, measures);
  return r;
}

DiscreteMeasure barycenter_1d_quantile(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& lambda,
                                       int nodes) {
  if (nodes < 1) throw Error(Errc::InvalidArgument, "quantile grid needs at least one node");
  std::vector<double> x(nodes, 0.0);
  for (std::size_t i = 0; i < measures.size(); ++i) {
    const auto& mu = measures[i];
    if (mu.dim != 1) throw Error(Errc::DimensionUnsupported, "quantile barycenter is one-dimensional");
    std::vector<int> ord(mu.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return mu.points[a] < mu.points[b]; });
    std::vector<double> cdf(mu.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < ord.size(); ++s) cdf[s] = (acc += mu.weights[ord[s]]);
    for (int j = 0; j < nodes; ++j) {
      const double u = (j + 0.5) / nodes;
      std::size_t s = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
      s = std::min(s, ord.size() - 1);
      x[j] += lambda[i] * mu.points[ord[s]];
    }
  }
  return merge_points(1, x, std::vector<double>(nodes, 1.0 / nodes), 0.0);
}

double barycenter_functional(const DiscreteMeasure& nu, const std::vector<DiscreteMeasure>& measures,
                             const std::vector<double>& lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < measures.size(); ++i) total += lambda[i] * w2_squared(measures[i], nu);
  return 0.5 * total;
}

double barycenter_identity_residual(const DiscreteMeasure& mu, const std::vector<DiscreteMeasure>& measures,
                                    const std::vector<double>& lambda, const std::vector<TransportPlan>& plans) {
  const int n = mu.dim;
  std::vector<double> image(mu.size() * n, 0.0);
  std::vector<char> skip(mu.size(), 0);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    std::vector<double> row(mu.size(), 0.0), acc(mu.size() * n, 0.0);
    for (const auto& e : plans[i].entries) {
      row[e.i] += e.mass;
      for (int d = 0; d < n; ++d) acc[e.i * n + d] += e.mass * measures[i].point(e.j)[d];
    }
    for (std::size_t x = 0; x < mu.size(); ++x) {
      if (!(row[x] > 0.0)) {
        // the plan drops entries at rounding level, so a tiny point may lose its row
        if (mu.weights[x] > 1e-12) throw Error(Errc::EmptyRow, "barycenter support point carries no plan mass");
        skip[x] = 1;
        continue;
      }
      for (int d = 0; d < n; ++d) image[x * n + d] += lambda[i] * acc[x * n + d] / row[x];
    }
  }
  double s = 0.0;
  for (std::size_t x = 0; x < mu.size(); ++x)
    for (int d = 0; d < n && !skip[x]; ++d) {
      const double z = image[x * n + d] - mu.point(x)[d];
      s += mu.weights[x] * z * z;
    }
  return std::sqrt(s);
}

double barycenter_identity_residual(BarycenterResult& result, const std::vector<DiscreteMeasure>& measures) {
  result.identity_residual = barycenter_identity_residual(result.measure, measures, result.lambda, result.plans);
  return result.identity_residual;
}

void to_json(nlohmann::json& j, const DiscreteMeasure& m) {
  j = {{"dim", m.dim}, {"points", m.points}, {"weights", m.weights}};
}

void to_json(nlohmann::json& j, const BarycenterResult& r) {
  j = {{"measure", r.measure},
       {"lambda", r.lambda},
       {"per_marginal_w2", r.per_marginal_w2},
       {"functional_value", r.functional_value},
       {"identity_residual", r.identity_residual},
       {"coupling_cost", r.coupling_cost},
       {"identity_relative_error", r.identity_relative_error},
       {"method", ot_method_name(r.source_plan.method)},
       {"epsilon", r.source_plan.epsilon},
       {"gap", r.source_plan.gap}};
}

}  // namespace santalo
