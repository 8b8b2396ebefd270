#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "santalo/convexity.hpp"
#include "santalo/functionals.hpp"
#include "santalo/transport.hpp"
#include "santalo/verifiers.hpp"

namespace santalo {

struct IterationTrace {
  int step_index = 0;
  std::vector<GridFunction> potential;  // Psi_l, or the tuple U_i
  double bs_value = 0.0;                // pair: int e^-Psi int e^-Psi*; tuple: prod (int e^-U_i)^lambda_i
  double j_value = 0.0;                 // as_{1/2}(Psi_l); 0 for tuples
  double delta_to_quadratic = 0.0;
  double boundary_fraction = 0.0;       // saturated nodes of the conjugate
};

void to_json(nlohmann::json& j, const IterationTrace& t);

struct PairIterationOptions {
  ConjugateOptions conjugate;
  bool early_stop = true;
  double delta_stop = 1e-3;
  double bs_stop = 1e-6;  // distance to 2 pi
};

// Psi_{l+1}' = G^{-1} o F, the monotone map from e^{-Psi_l} onto e^{-Psi_l*}, Psi_{l+1}(0) = 0.
// Entry 0 is convexify(V0).
std::vector<IterationTrace> bs_iterate_pair(const GridFunction& V0, int steps, const PairIterationOptions& opt = {});

// One step of the pair iteration.
GridFunction pair_step(const GridFunction& psi, const ConjugateOptions& conj, double* boundary_fraction = nullptr);

// L_inf distance of Psi - min Psi to its least-squares fit c|x|^2/2 + a, on {Psi - min Psi <= level}.
double delta_to_quadratic(const GridFunction& psi, double level = 8.0);

struct TraceCheck {
  bool monotone = true;
  bool sandwich = true;
  bool below_ceiling = true;
  double worst_monotone = 0.0;  // min of bs[l+1] - bs[l]
  double worst_sandwich = 0.0;  // min of both sandwich gaps
  bool delta_decreasing = true;
};

inline constexpr double kTolMono = 1e-6;

// The pair-trace invariants: monotone bs, BS(Psi_l) <= J^2(Psi_{l+1}) + 1e-4 <= BS(Psi_{l+1}) + 2e-4,
// bs <= (2 pi)^n (1 + 1e-3). Tuple traces only get the monotone check.
TraceCheck check_trace(const std::vector<IterationTrace>& trace, bool pair = true);

// step,bs,j_sq,delta_quad
std::string trace_csv(const std::vector<IterationTrace>& trace);

struct MultiStepOptions {
  MultiOptions multi;
  TupleSearchOptions search;
  double margin_tol = 1e-8;
  double slack_tol = 1e-6;
  double budget = 2e8;  // c-transform evaluations per slot
};

struct MultiStepResult {
  std::vector<GridFunction> U;
  InequalityReport report;
};

// lambda_i U_i are the dual potentials of the multimarginal problem with marginals e^{-V_i}/Z_i,
// extended off the support by c-transforms.
MultiStepResult multimarginal_monotone_step(const std::vector<GridFunction>& V, const std::vector<double>& lambda,
                                            double C, const MultiStepOptions& opt = {});

// min over node tuples of e^{-C sum_{i<j} lambda_i lambda_j <x_i,x_j>} - e^{-sum lambda_i V_i(x_i)}.
TupleSearchResult multimarginal_hypothesis_margin(const std::vector<GridFunction>& V, const std::vector<double>& lambda,
                                                  double C, const TupleSearchOptions& opt = {});

std::vector<IterationTrace> iterate_multimarginal(const std::vector<GridFunction>& V, const std::vector<double>& lambda,
                                                  double C, int steps, const MultiStepOptions& opt = {});

// Lebesgue density of the barycenter of the normalized e^{-U_i} at the grid nodes.
GridFunction barycenter_density(const std::vector<GridFunction>& U, const std::vector<double>& lambda,
                                double bandwidth = -1.0);

struct KeResidual {
  double residual = 0.0;
  std::vector<double> per_slot;
  std::size_t nodes = 0;
  std::size_t off_grid = 0;
};

// max_i of the relative L_inf residual of
// e^{-U_i} / int e^{-U_i} = rho(grad U_i / C + lambda_i x) det(D^2 U_i / C + lambda_i I)
// over interior nodes carrying mass.
KeResidual ke_residual(const std::vector<GridFunction>& U, const std::vector<double>& lambda, double C,
                       const GridFunction& rho);

// The pair form e^{-Psi}/int e^{-Psi} = e^{-Psi*(grad Psi)} det D^2 Psi / int e^{-Psi*}.
KeResidual pair_ke_residual(const GridFunction& psi, const ConjugateOptions& conj = {});

}  // namespace santalo
