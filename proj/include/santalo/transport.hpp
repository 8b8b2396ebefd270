#pragma once

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "santalo/grid.hpp"

namespace santalo {

enum class OtMethod { ExactLP, Sinkhorn };
const char* ot_method_name(OtMethod m);

struct PlanEntry {
  int i = 0;
  int j = 0;
  double mass = 0.0;
};

// Two-marginal coupling for the squared-distance cost (minimization form).
struct TransportPlan {
  OtMethod method = OtMethod::ExactLP;
  double epsilon = 0.0;
  std::vector<PlanEntry> entries;  // nonzero masses only
  double cost_value = 0.0;         // sum P |x - y|^2
  double dual_value = 0.0;         // sum phi mu + sum psi nu
  std::vector<double> phi, psi;    // phi_i + psi_j <= |x_i - y_j|^2 everywhere
  double gap = 0.0;
  double marginals_err = 0.0;      // L1, rows plus columns
  std::size_t pivots = 0;
};

// Multimarginal coupling for the maximization of C * sum_{i<j} lambda_i lambda_j <x_i, x_j>.
struct MultiPlan {
  int k = 0;
  OtMethod method = OtMethod::ExactLP;
  double epsilon = 0.0;
  std::vector<int> tuples;  // k indices per entry
  std::vector<double> masses;
  std::vector<double> lambda;
  double coupling_scale = 1.0;
  std::vector<std::vector<double>> duals;  // sum_i v_i(x_i) >= cost on every tuple
  double objective = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double marginals_err = 0.0;
  double slackness = 0.0;  // max |sum v - cost| over support tuples
  std::size_t pivots = 0;

  std::size_t size() const { return masses.size(); }
  const int* tuple(std::size_t e) const { return tuples.data() + e * k; }
};

inline constexpr double kW2EntryBudget = 1e6;
inline constexpr double kMultiEntryBudget = 1e7;

double w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu, TransportPlan* plan = nullptr);
TransportPlan w2_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu);

struct SinkhornOptions {
  double epsilon = 1e-2;
  std::size_t max_iters = 1000000;  // per annealing stage
  bool anneal = true;
  double epsilon0 = 1.0;
  double tol = 1e-9;
};

// Entropic plan; cost_value is the unregularized cost of the returned plan.
TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SinkhornOptions& opt);
TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon,
                       std::size_t max_iters);

struct MultiOptions {
  OtMethod method = OtMethod::ExactLP;
  SinkhornOptions sinkhorn;
  double entry_budget = kMultiEntryBudget;
};

MultiPlan solve_multimarginal(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& lambda,
                              double coupling_scale, const MultiOptions& opt = {});

// C * sum_{i<j} lambda_i lambda_j <x_i, x_j> for one index tuple.
double multimarginal_cost(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& lambda,
                          double coupling_scale, const int* tuple);

double dual_gap(const TransportPlan& plan);
double dual_gap(const MultiPlan& plan);

// Recomputes cost, dual value, gap and marginal error from the plan's own entries and duals.
void rescore(TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu);

void to_json(nlohmann::json& j, const TransportPlan& p);
void to_json(nlohmann::json& j, const MultiPlan& p);

namespace detail {

// Shared exact solver: maximize C * sum_{i<j} a_i a_j <x_i, x_j> over couplings.
MultiPlan simplex_multimarginal(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& a,
                                double coupling_scale);

// Max over all tuples of cost - sum v (the dual feasibility violation).
double max_dual_violation(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& a,
                          double coupling_scale, const std::vector<std::vector<double>>& v);

}  // namespace detail

}  // namespace santalo
