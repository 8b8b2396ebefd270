#include "santalo/monotone_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "santalo/barycenter.hpp"
#include "santalo/error.hpp"
#include "santalo/util.hpp"

namespace santalo {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log of the normalized mass right of each node (trapezoid cells between finite nodes).
std::vector<double> log_survival(const GridFunction& f) {
  const Grid& g = f.grid();
  const int m = g.points_per_axis;
  double fmin = kInf;
  for (int j = 0; j < m; ++j)
    if (!f.is_inf(j)) fmin = std::min(fmin, f[j]);
  std::vector<double> ls(m, -kInf);
  if (fmin == kInf) return ls;
  const double lh = std::log(0.5 * g.spacing());
  for (int j = m - 2; j >= 0; --j) {
    double cell = -kInf;
    if (!f.is_inf(j) && !f.is_inf(j + 1)) cell = lh + log_add(-(f[j] - fmin), -(f[j + 1] - fmin));
    ls[j] = log_add(ls[j + 1], cell);
  }
  const double total = ls[0];
  if (total == -kInf) return ls;
  for (double& v : ls) v -= total;
  return ls;
}

// y >= 0 on the dual grid with normalized survival exp(t).
double invert_survival(const std::vector<double>& ls, const Grid& g, double t) {
  const int m = g.points_per_axis;
  const int c = m / 2;
  const double h = g.spacing();
  int end = m - 1;  // first node with no mass to its right
  for (int q = c; q < m; ++q)
    if (ls[q] == -kInf) {
      end = q;
      break;
    }
  if (t == -kInf) return g.coord(end);
  // largest q in [c, end) with ls[q] >= t
  int lo = c, hi = end - 1;
  if (t > ls[c]) return 0.0;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (ls[mid] >= t) lo = mid;
    else hi = mid - 1;
  }
  const int q = lo;
  if (ls[q + 1] == -kInf) {
    const double sq = std::exp(ls[q]), s = std::exp(t);
    return g.coord(q) + h * (sq - s) / sq;
  }
  return g.coord(q) + h * (ls[q] - t) / (ls[q] - ls[q + 1]);
}

GridFunction step_from(const GridFunction& psi, const GridFunction& dual) {
  const Grid& g = psi.grid();
  const Grid& gd = dual.grid();
  const int m = g.points_per_axis, c = m / 2;
  const std::vector<double> lmu = log_survival(psi), lnu = log_survival(dual);
  if (lnu[0] == -kInf) throw Error(Errc::UnboundedConjugate, "conjugate unbounded: e^{-V*} has no mass");
  std::vector<double> T(m, 0.0);
  for (int j = c + 1; j < m; ++j) {
    if (psi.is_inf(j)) break;
    T[j] = invert_survival(lnu, gd, lmu[j]);
    if (T[j] < T[j - 1] - 1e-12 * gd.half_width)
      throw Error(Errc::MapNotMonotone, "map not monotone at x = " + fmt_double(g.coord(j)));
  }
  GridFunction out(g, 0.0);
  const double h = g.spacing();
  double acc = 0.0;
  for (int j = c + 1; j < m; ++j) {
    if (psi.is_inf(j)) {
      for (int q = j; q < m; ++q) {
        out.set(q, kInf);
        out.set(m - 1 - q, kInf);
      }
      break;
    }
    acc += 0.5 * h * (T[j - 1] + T[j]);
    out.set(j, acc);
    out.set(m - 1 - j, acc);
  }
  return out;
}

double log_integral(const GridFunction& f) {
  const double z = integrate_exp(f);
  if (!(z > 0.0) || !std::isfinite(z)) throw Error(Errc::ZeroMass, "int e^{-V} is not finite and positive");
  return std::log(z);
}

double sq_norm(const double* x, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += x[d] * x[d];
  return s;
}

}  // namespace

void to_json(nlohmann::json& j, const IterationTrace& t) {
  j = {{"step", t.step_index},
       {"bs", t.bs_value},
       {"j", t.j_value},
       {"j_sq", t.j_value * t.j_value},
       {"delta_quad", t.delta_to_quadratic},
       {"boundary_fraction", t.boundary_fraction}};
}

GridFunction pair_step(const GridFunction& psi, const ConjugateOptions& conj, double* boundary_fraction) {
  const Grid& g = psi.grid();
  if (g.dim != 1) throw Error(Errc::DimensionUnsupported, "pair iteration is one-dimensional");
  if (g.points_per_axis % 2 == 0) throw Error(Errc::InvalidArgument, "pair iteration needs a node at 0");
  const ConjugatePair cp = legendre_conjugate(psi, conj);
  if (cp.dual_grid.points_per_axis % 2 == 0) throw Error(Errc::InvalidArgument, "dual grid needs a node at 0");
  if (boundary_fraction) *boundary_fraction = cp.boundary_fraction;
  return step_from(psi, cp.dual);
}

double delta_to_quadratic(const GridFunction& psi, double level) {
  const Grid& g = psi.grid();
  double fmin = kInf;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!psi.is_inf(i)) fmin = std::min(fmin, psi[i]);
  if (fmin == kInf) return 0.0;
  // least squares for (c, a) on q = |x|^2/2
  double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
  std::vector<std::size_t> region;
  std::vector<double> x(g.dim);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (psi.is_inf(i) || psi[i] - fmin > level) continue;
    g.point(i, x.data());
    const double q = 0.5 * sq_norm(x.data(), g.dim), v = psi[i] - fmin;
    s00 += q * q;
    s01 += q;
    s11 += 1.0;
    b0 += q * v;
    b1 += v;
    region.push_back(i);
  }
  const double det = s00 * s11 - s01 * s01;
  if (region.size() < 2 || det <= 0.0) return 0.0;
  const double c = (b0 * s11 - s01 * b1) / det, a = (s00 * b1 - s01 * b0) / det;
  double worst = 0.0;
  for (std::size_t i : region) {
    g.point(i, x.data());
    worst = std::max(worst, std::abs(psi[i] - fmin - c * 0.5 * sq_norm(x.data(), g.dim) - a));
  }
  return worst;
}

std::vector<IterationTrace> bs_iterate_pair(const GridFunction& V0, int steps, const PairIterationOptions& opt) {
  const Grid& g = V0.grid();
  if (g.dim != 1) throw Error(Errc::DimensionUnsupported, "pair iteration is one-dimensional");
  if (g.points_per_axis % 2 == 0) throw Error(Errc::InvalidArgument, "pair iteration needs a node at 0");
  if (!is_unconditional(V0, 1e-12)) throw Error(Errc::HypothesisViolated, "V0 must be even");
  if (steps < 0) throw Error(Errc::InvalidArgument, "negative step count");
  GridFunction psi = convexify(V0);
  std::vector<IterationTrace> trace;
  for (int l = 0;; ++l) {
    const ConjugatePair cp = legendre_conjugate(psi, opt.conjugate);
    const double zs = integrate_exp(cp.dual);
    if (!(zs > 0.0) || !std::isfinite(zs)) throw Error(Errc::UnboundedConjugate, "conjugate unbounded");
    IterationTrace t;
    t.step_index = l;
    t.potential = {psi};
    t.bs_value = integrate_exp(psi) * zs;
    t.j_value = affine_surface_area_fn(psi, 0.5);
    t.delta_to_quadratic = delta_to_quadratic(psi);
    t.boundary_fraction = cp.boundary_fraction;
    trace.push_back(t);
    if (l == steps) break;
    if (opt.early_stop && l >= 1 &&
        (t.delta_to_quadratic < opt.delta_stop || std::abs(t.bs_value - kTwoPi) <= opt.bs_stop))
      break;
    psi = step_from(psi, cp.dual);
  }
  return trace;
}

TraceCheck check_trace(const std::vector<IterationTrace>& trace, bool pair) {
  TraceCheck c;
  c.worst_monotone = kInf;
  c.worst_sandwich = kInf;
  for (std::size_t l = 0; l < trace.size(); ++l) {
    const int n = trace[l].potential.empty() ? 1 : trace[l].potential[0].grid().dim;
    if (pair && trace[l].bs_value > std::pow(kTwoPi, n) * (1 + 1e-3)) c.below_ceiling = false;
    if (l == 0) continue;
    const double d = trace[l].bs_value - trace[l - 1].bs_value;
    c.worst_monotone = std::min(c.worst_monotone, d);
    if (d < -kTolMono) c.monotone = false;
    if (trace[l].delta_to_quadratic >= trace[l - 1].delta_to_quadratic) c.delta_decreasing = false;
    if (!pair) continue;
    const double j2 = trace[l].j_value * trace[l].j_value;
    const double lo = j2 + 1e-4 - trace[l - 1].bs_value, hi = trace[l].bs_value + 2e-4 - (j2 + 1e-4);
    c.worst_sandwich = std::min({c.worst_sandwich, lo, hi});
    if (lo < 0 || hi < 0) c.sandwich = false;
  }
  if (c.worst_monotone == kInf) c.worst_monotone = 0.0;
  if (c.worst_sandwich == kInf) c.worst_sandwich = 0.0;
  return c;
}

std::string trace_csv(const std::vector<IterationTrace>& trace) {
  std::ostringstream os;
  os << "step,bs,j_sq,delta_quad\n";
  for (const auto& t : trace)
    os << t.step_index << ',' << fmt_double(t.bs_value) << ',' << fmt_double(t.j_value * t.j_value) << ','
       << fmt_double(t.delta_to_quadratic) << '\n';
  return os.str();
}

// ---- multimarginal -----------------------------------------------------------------

namespace {

void check_tuple(const std::vector<GridFunction>& V, const std::vector<double>& lambda) {
  if (V.size() < 2) throw Error(Errc::InvalidArgument, "need k >= 2 potentials");
  if (lambda.size() != V.size()) throw Error(Errc::DimensionMismatch, "lambda size does not match k");
  double s = 0.0;
  for (double l : lambda) {
    if (!(l > 0.0)) throw Error(Errc::InvalidArgument, "degenerate weights");
    s += l;
  }
  if (std::abs(s - 1.0) > 1e-9) throw Error(Errc::InvalidArgument, "weights must sum to 1");
  for (const auto& v : V)
    if (v.grid() != V[0].grid()) throw Error(Errc::DimensionMismatch, "potentials live on different grids");
}

double pair_cost(const std::vector<const double*>& x, const std::vector<double>& lambda, double C, int n) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      double d = 0.0;
      for (int a = 0; a < n; ++a) d += x[i][a] * x[j][a];
      s += lambda[i] * lambda[j] * d;
    }
  return C * s;
}

// Averages the tuple over coordinate sign flips that fix every V_i (applied to all slots at
// once) and over slot permutations when all (V_i, lambda_i) coincide.
void symmetrize_duals(const std::vector<GridFunction>& V, const std::vector<double>& lambda,
                      std::vector<std::vector<double>>& v) {
  const Grid& g = V[0].grid();
  const int n = g.dim, m = g.points_per_axis;
  const std::size_t k = V.size();
  auto reflect = [&](std::size_t i, int mask) {
    Index idx = g.index(i);
    for (int d = 0; d < n; ++d)
      if ((mask >> d) & 1) idx[d] = m - 1 - idx[d];
    return g.flat(idx);
  };
  std::vector<int> group;
  for (int mask = 0; mask < (1 << n); ++mask) {
    bool fixes = true;
    for (std::size_t s = 0; s < k && fixes; ++s)
      for (std::size_t i = 0; i < g.size() && fixes; ++i) {
        const std::size_t j = reflect(i, mask);
        if (V[s].is_inf(i) != V[s].is_inf(j) || (!V[s].is_inf(i) && V[s][i] != V[s][j])) fixes = false;
      }
    if (fixes) group.push_back(mask);
  }
  if (group.size() > 1)
    for (auto& vs : v) {
      std::vector<double> avg(vs.size(), 0.0);
      for (std::size_t i = 0; i < vs.size(); ++i) {
        for (int mask : group) avg[i] += vs[reflect(i, mask)];
        avg[i] /= static_cast<double>(group.size());
      }
      vs = std::move(avg);
    }
  bool same = true;
  for (std::size_t s = 1; s < k && same; ++s) {
    if (lambda[s] != lambda[0]) same = false;
    for (std::size_t i = 0; i < g.size() && same; ++i)
      if (V[s].is_inf(i) != V[0].is_inf(i) || (!V[s].is_inf(i) && V[s][i] != V[0][i])) same = false;
  }
  if (!same) return;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = 0.0;
    for (std::size_t s = 0; s < k; ++s) a += v[s][i];
    a /= static_cast<double>(k);
    for (std::size_t s = 0; s < k; ++s) v[s][i] = a;
  }
}

}  // namespace

TupleSearchResult multimarginal_hypothesis_margin(const std::vector<GridFunction>& V, const std::vector<double>& lambda,
                                                  double C, const TupleSearchOptions& opt) {
  check_tuple(V, lambda);
  const Grid& g = V[0].grid();
  const int k = static_cast<int>(V.size()), n = g.dim;
  std::vector<double> pts(g.size() * n);
  for (std::size_t i = 0; i < g.size(); ++i) g.point(i, pts.data() + i * n);
  std::vector<int> sizes(k, static_cast<int>(g.size()));
  auto obj = [&](const int* t) {
    double pot = 0.0;
    std::vector<const double*> x(k);
    for (int i = 0; i < k; ++i) {
      if (V[i].is_inf(t[i])) return kInf;  // e^{-inf} = 0, never the min
      pot += lambda[i] * V[i][t[i]];
      x[i] = pts.data() + static_cast<std::size_t>(t[i]) * n;
    }
    return std::exp(-pair_cost(x, lambda, C, n)) - std::exp(-pot);
  };
  return minimize_over_tuples(sizes, obj, opt);
}

MultiStepResult multimarginal_monotone_step(const std::vector<GridFunction>& V, const std::vector<double>& lambda,
                                            double C, const MultiStepOptions& opt) {
  check_tuple(V, lambda);
  const Grid& g = V[0].grid();
  const int k = static_cast<int>(V.size()), n = g.dim;
  const TupleSearchResult margin = multimarginal_hypothesis_margin(V, lambda, C, opt.search);
  if (margin.value < -opt.margin_tol)
    throw Error(Errc::HypothesisViolated, "hypothesis violated: margin " + fmt_double(margin.value));

  std::vector<DiscreteMeasure> mu;
  for (const auto& v : V) mu.push_back(sample_density(v));
  const MultiPlan plan = solve_multimarginal(mu, lambda, C, opt.multi);

  // Sequential c-transforms: slot i ranges over the full grid for slots before it and over
  // the supports after it, so the last transform makes the tuple feasible on every grid tuple.
  std::vector<double> nodes(g.size() * n);
  for (std::size_t i = 0; i < g.size(); ++i) g.point(i, nodes.data() + i * n);
  std::vector<std::vector<double>> v_full(k);
  for (int i = 0; i < k; ++i) {
    std::vector<int> sizes;
    double evals = static_cast<double>(g.size());
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      sizes.push_back(j < i ? static_cast<int>(g.size()) : static_cast<int>(mu[j].size()));
      evals *= sizes.back();
    }
    if (evals > opt.budget) throw Error(Errc::InstanceTooLarge, "instance too large for the c-transform extension");
    auto position = [&](int j, int a) {
      return j < i ? nodes.data() + static_cast<std::size_t>(a) * n : mu[j].point(a);
    };
    auto potential = [&](int j, int a) { return j < i ? v_full[j][a] : plan.duals[j][a]; };
    std::vector<double> out(g.size(), -kInf);
    std::vector<int> idx(k - 1, 0);
    std::vector<const double*> x(k);
    for (std::size_t node = 0; node < g.size(); ++node) {
      x[i] = nodes.data() + node * n;
      std::fill(idx.begin(), idx.end(), 0);
      double best = -kInf;
      while (true) {
        double others = 0.0;
        for (int j = 0, s = 0; j < k; ++j) {
          if (j == i) continue;
          x[j] = position(j, idx[s]);
          others += potential(j, idx[s]);
          ++s;
        }
        best = std::max(best, pair_cost(x, lambda, C, n) - others);
        int s = k - 2;
        while (s >= 0 && ++idx[s] == sizes[s]) idx[s--] = 0;
        if (s < 0) break;
      }
      out[node] = best;
    }
    v_full[i] = std::move(out);
  }

  // Discrete duals are not unique: the lattice leaves room for tilts of size h. Averaging over
  // the symmetries of the tuple keeps feasibility and optimality and removes them.
  symmetrize_duals(V, lambda, v_full);

  // lambda_i U_i = v_i; constants moved so U_i(0) = V_i(0) for i < k (sum of v-shifts is 0)
  std::size_t center = 0;
  {
    double best = kInf;
    for (std::size_t a = 0; a < g.size(); ++a) {
      const double r = sq_norm(nodes.data() + a * n, n);
      if (r < best) {
        best = r;
        center = a;
      }
    }
  }
  std::vector<GridFunction> U;
  double shift_sum = 0.0;
  for (int i = 0; i < k; ++i) {
    GridFunction u(g, 0.0);
    double shift = 0.0;
    if (i < k - 1) {
      if (!V[i].is_inf(center)) shift = V[i][center] - v_full[i][center] / lambda[i];
      shift_sum += lambda[i] * shift;
    } else {
      shift = -shift_sum / lambda[i];
    }
    for (std::size_t a = 0; a < g.size(); ++a) u.set(a, v_full[i][a] / lambda[i] + shift);
    U.push_back(std::move(u));
  }

  double log_lhs = 0.0, log_rhs = 0.0;
  std::vector<double> zv, zu;
  for (int i = 0; i < k; ++i) {
    zv.push_back(log_integral(V[i]));
    zu.push_back(log_integral(U[i]));
    log_lhs += lambda[i] * zv.back();
    log_rhs += lambda[i] * zu.back();
  }
  MultiStepResult res;
  res.U = U;
  InequalityReport& r = res.report;
  r.inequality_id = "multimarginal_step";
  r.lhs = std::exp(log_lhs);
  r.rhs = std::exp(log_rhs);
  r.hypothesis_margin = margin.value;
  r.certification = margin.certification;
  r.count = margin.count;
  r.tol = opt.slack_tol;
  r.margin_tol = opt.margin_tol;
  nlohmann::json inst = {{"lambda", lambda}, {"C", C}};
  for (const auto& v : V) inst["V"].push_back(v);
  r.instance_hash = instance_hash(inst);
  double delta = 0.0;
  for (const auto& u : U) delta = std::max(delta, delta_to_quadratic(u));
  r.extra = {{"log_integrals_V", zv},
             {"log_integrals_U", zu},
             {"lp_objective", plan.objective},
             {"dual_gap", plan.gap},
             {"delta_to_quadratic", delta}};
  r.finalize();
  return res;
}

std::vector<IterationTrace> iterate_multimarginal(const std::vector<GridFunction>& V, const std::vector<double>& lambda,
                                                  double C, int steps, const MultiStepOptions& opt) {
  check_tuple(V, lambda);
  std::vector<GridFunction> cur = V;
  std::vector<IterationTrace> trace;
  for (int l = 0;; ++l) {
    IterationTrace t;
    t.step_index = l;
    t.potential = cur;
    double lp = 0.0, delta = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      lp += lambda[i] * log_integral(cur[i]);
      delta = std::max(delta, delta_to_quadratic(cur[i]));
    }
    t.bs_value = std::exp(lp);
    t.delta_to_quadratic = delta;
    trace.push_back(t);
    if (l == steps) break;
    cur = multimarginal_monotone_step(cur, lambda, C, opt).U;
  }
  return trace;
}

GridFunction barycenter_density(const std::vector<GridFunction>& U, const std::vector<double>& lambda,
                                double bandwidth) {
  check_tuple(U, lambda);
  const Grid& g = U[0].grid();
  std::vector<DiscreteMeasure> mu;
  for (const auto& u : U) mu.push_back(sample_density(u));
  const BarycenterResult B = barycenter_via_multimarginal(mu, lambda);
  return GridFunction(g, node_density(B.measure, g, quadrature_weights(g), bandwidth));
}

namespace {

bool inside(const Grid& g, const double* z) {
  for (int d = 0; d < g.dim; ++d)
    if (std::abs(z[d]) > g.half_width * (1 + 1e-12)) return false;
  return true;
}

struct SlotResidual {
  double worst = 0.0;
  std::size_t nodes = 0, off = 0;
};

// |e^{-U}/Z - target(x, grad, hess)| over interior nodes with mass, relative to max e^{-U}/Z.
template <class Target>
SlotResidual slot_residual(const GridFunction& u, Target target) {
  const Grid& g = u.grid();
  const int n = g.dim;
  const GradientField grad = finite_diff_gradient(u);
  const HessianField hess = finite_diff_hessian(u);
  const double lz = log_integral(u);
  double umin = kInf;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!u.is_inf(i)) umin = std::min(umin, u[i]);
  const double lmax = std::exp(-umin - lz);
  SlotResidual s;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (u.is_inf(i) || g.on_boundary(i) || !grad.valid[i] || !hess.valid[i]) continue;
    const double lhs = std::exp(-u[i] - lz);
    if (lhs < 1e-10 * lmax) continue;
    ++s.nodes;
    g.point(i, x.data());
    double rhs = 0.0;
    if (!target(x.data(), grad.at(i), hess.at(i), &rhs)) {
      ++s.off;
      continue;
    }
    s.worst = std::max(s.worst, std::abs(lhs - rhs));
  }
  if (s.off > 0.05 * static_cast<double>(s.nodes))
    throw Error(Errc::MappedPointOffGrid, "mapped point off-grid at " + std::to_string(s.off) + " nodes");
  s.worst /= lmax;
  return s;
}

}  // namespace

KeResidual ke_residual(const std::vector<GridFunction>& U, const std::vector<double>& lambda, double C,
                       const GridFunction& rho) {
  check_tuple(U, lambda);
  const Grid& g = U[0].grid();
  const Grid& gr = rho.grid();
  if (gr.dim != g.dim) throw Error(Errc::DimensionMismatch, "rho and U live in different dimensions");
  const int n = g.dim;
  KeResidual out;
  for (std::size_t i = 0; i < U.size(); ++i) {
    const double li = lambda[i];
    auto target = [&](const double* x, const double* gr_u, const double* h, double* rhs) {
      double z[3], M[9];
      for (int a = 0; a < n; ++a) z[a] = gr_u[a] / C + li * x[a];
      if (!inside(gr, z)) return false;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) M[a * n + b] = h[a * n + b] / C + (a == b ? li : 0.0);
      const double r = rho.interpolate(z);
      if (!std::isfinite(r)) return false;
      *rhs = r * determinant(M, n);
      return true;
    };
    const SlotResidual s = slot_residual(U[i], target);
    out.per_slot.push_back(s.worst);
    out.residual = std::max(out.residual, s.worst);
    out.nodes += s.nodes;
    out.off_grid += s.off;
  }
  return out;
}

KeResidual pair_ke_residual(const GridFunction& psi, const ConjugateOptions& conj) {
  const ConjugatePair cp = legendre_conjugate(psi, conj);
  const GridFunction& dual = cp.dual;
  const double lzs = log_integral(dual);
  const int n = psi.grid().dim;
  auto target = [&](const double*, const double* gr_u, const double* h, double* rhs) {
    if (!inside(dual.grid(), gr_u)) return false;
    const double v = dual.interpolate(gr_u);
    if (!std::isfinite(v)) return false;
    *rhs = std::exp(-v - lzs) * determinant(h, n);
    return true;
  };
  const SlotResidual s = slot_residual(psi, target);
  KeResidual out;
  out.residual = s.worst;
  out.per_slot = {s.worst};
  out.nodes = s.nodes;
  out.off_grid = s.off;
  return out;
}

}  // namespace santalo
