#include "santalo/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "santalo/error.hpp"
#include "santalo/util.hpp"

namespace santalo {

const char* ot_method_name(OtMethod m) { return m == OtMethod::ExactLP ? "exact_lp" : "sinkhorn"; }

namespace {

void check_measures(const std::vector<DiscreteMeasure>& ms) {
  if (ms.size() < 2) throw Error(Errc::InvalidArgument, "need at least two marginals");
  for (const auto& m : ms) {
    if (m.size() == 0) throw Error(Errc::ZeroMass, "empty marginal");
    if (m.dim != ms.front().dim) throw Error(Errc::DimensionMismatch, "marginals live in different dimensions");
  }
}

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += a[d] * b[d];
  return s;
}

double sqnorm(const double* a, int n) { return dot(a, a, n); }

double sqdist(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Turns a maximization plan for <x, y> into the squared-distance plan.
TransportPlan from_inner_product(const MultiPlan& mp, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  TransportPlan tp;
  tp.method = mp.method;
  tp.epsilon = mp.epsilon;
  tp.pivots = mp.pivots;
  tp.entries.reserve(mp.size());
  for (std::size_t e = 0; e < mp.size(); ++e) tp.entries.push_back({mp.tuple(e)[0], mp.tuple(e)[1], mp.masses[e]});
  tp.phi.resize(mu.size());
  tp.psi.resize(nu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) tp.phi[i] = sqnorm(mu.point(i), mu.dim) - 2.0 * mp.duals[0][i];
  for (std::size_t j = 0; j < nu.size(); ++j) tp.psi[j] = sqnorm(nu.point(j), nu.dim) - 2.0 * mp.duals[1][j];
  rescore(tp, mu, nu);
  return tp;
}

// Log-domain multimarginal scaling on the full cost tensor (maximization of the cost).
class SinkhornEngine {
 public:
  SinkhornEngine(const std::vector<DiscreteMeasure>& ms, const std::vector<double>& a, double C)
      : ms_(ms), k_(static_cast<int>(ms.size())), n_(ms.front().dim) {
    N_ = 1;
    for (const auto& m : ms) {
      for (double w : m.weights)
        if (!(w > 0.0)) throw Error(Errc::InvalidArgument, "sinkhorn needs strictly positive weights");
      m_.push_back(static_cast<int>(m.size()));
      N_ *= static_cast<std::int64_t>(m.size());
    }
    if (N_ > 20000000) throw Error(Errc::InstanceTooLarge, "sinkhorn tensor exceeds 2e7 entries");
    cost_.resize(N_);
    std::vector<int> idx(k_);
    for (std::int64_t t = 0; t < N_; ++t) {
      decode(t, idx.data());
      cost_[t] = multimarginal_cost(ms, a, C, idx.data());
    }
    logmu_.resize(k_);
    v_.resize(k_);
    for (int i = 0; i < k_; ++i) {
      for (double w : ms[i].weights) logmu_[i].push_back(std::log(w));
      v_[i].assign(m_[i], 0.0);
    }
    // Feasible start: v_0 = max cost so every exponent is <= 0.
    const double cmax = *std::max_element(cost_.begin(), cost_.end());
    for (double& z : v_[0]) z = cmax;
  }

  // Runs to tol at the given epsilon; returns the final marginal L1 error.
  double solve(double eps, std::size_t max_iters, double tol) {
    double err = kInf;
    for (std::size_t it = 0; it < max_iters; ++it) {
      for (int i = 0; i < k_; ++i) update(i, eps);
      err = marginal_error(eps);
      if (err < tol) return err;
    }
    return err;
  }

  MultiPlan plan(double eps, const std::vector<double>& a, double C) const {
    MultiPlan out;
    out.k = k_;
    out.method = OtMethod::Sinkhorn;
    out.epsilon = eps;
    out.lambda = a;
    out.coupling_scale = C;
    std::vector<std::vector<double>> v = v_;
    std::vector<int> idx(k_);
    double viol = -kInf;
    std::vector<std::vector<double>> marg(k_);
    for (int i = 0; i < k_; ++i) marg[i].assign(m_[i], 0.0);
    double obj = 0.0, slack = 0.0;
    for (std::int64_t t = 0; t < N_; ++t) {
      decode(t, idx.data());
      double sv = 0.0, lm = 0.0;
      for (int i = 0; i < k_; ++i) {
        sv += v[i][idx[i]];
        lm += logmu_[i][idx[i]];
      }
      viol = std::max(viol, cost_[t] - sv);
      const double mass = std::exp((cost_[t] - sv) / eps + lm);
      if (!(mass > 0.0)) continue;
      for (int i = 0; i < k_; ++i) {
        out.tuples.push_back(idx[i]);
        marg[i][idx[i]] += mass;
      }
      out.masses.push_back(mass);
      obj += mass * cost_[t];
      slack = std::max(slack, std::abs(sv - cost_[t]));
    }
    for (double& z : v[0]) z += std::max(viol, 0.0);
    const double s = v[0][0];
    for (double& z : v[0]) z -= s;
    for (double& z : v[1]) z += s;
    double dual = 0.0, err = 0.0;
    for (int i = 0; i < k_; ++i)
      for (int q = 0; q < m_[i]; ++q) {
        dual += v[i][q] * ms_[i].weights[q];
        err += std::abs(marg[i][q] - ms_[i].weights[q]);
      }
    out.duals = std::move(v);
    out.objective = obj;
    out.dual_value = dual;
    out.gap = dual - obj;
    out.marginals_err = err;
    out.slackness = slack;
    return out;
  }

 private:
  void decode(std::int64_t t, int* idx) const {
    for (int i = k_ - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(t % m_[i]);
      t /= m_[i];
    }
  }

  void update(int slot, double eps) {
    std::vector<double> mx(m_[slot], -kInf), sum(m_[slot], 0.0);
    std::vector<int> idx(k_);
    for (std::int64_t t = 0; t < N_; ++t) {
      decode(t, idx.data());
      double g = cost_[t];
      double lm = 0.0;
      for (int j = 0; j < k_; ++j) {
        if (j == slot) continue;
        g -= v_[j][idx[j]];
        lm += logmu_[j][idx[j]];
      }
      g = g / eps + lm;
      const int a = idx[slot];
      if (g > mx[a]) {
        sum[a] = sum[a] * std::exp(mx[a] - g) + 1.0;
        mx[a] = g;
      } else {
        sum[a] += std::exp(g - mx[a]);
      }
    }
    for (int a = 0; a < m_[slot]; ++a) v_[slot][a] = eps * (mx[a] + std::log(sum[a]));
  }

  double marginal_error(double eps) const {
    std::vector<std::vector<double>> marg(k_);
    for (int i = 0; i < k_; ++i) marg[i].assign(m_[i], 0.0);
    std::vector<int> idx(k_);
    for (std::int64_t t = 0; t < N_; ++t) {
      decode(t, idx.data());
      double g = cost_[t], lm = 0.0;
      for (int j = 0; j < k_; ++j) {
        g -= v_[j][idx[j]];
        lm += logmu_[j][idx[j]];
      }
      const double mass = std::exp(g / eps + lm);
      for (int j = 0; j < k_; ++j) marg[j][idx[j]] += mass;
    }
    double err = 0.0;
    for (int i = 0; i < k_; ++i)
      for (int q = 0; q < m_[i]; ++q) err += std::abs(marg[i][q] - ms_[i].weights[q]);
    return err;
  }

  const std::vector<DiscreteMeasure>& ms_;
  int k_, n_;
  std::vector<int> m_;
  std::int64_t N_ = 0;
  std::vector<double> cost_;
  std::vector<std::vector<double>> logmu_, v_;
};

MultiPlan run_sinkhorn(const std::vector<DiscreteMeasure>& ms, const std::vector<double>& a, double C,
                       const SinkhornOptions& opt, double eps_target) {
  if (!(eps_target > 0.0)) throw Error(Errc::InvalidArgument, "epsilon must be positive");
  SinkhornEngine engine(ms, a, C);
  std::vector<double> schedule;
  if (opt.anneal) {
    for (double e = std::max(opt.epsilon0, eps_target); e > eps_target; e *= 0.5) schedule.push_back(e);
  }
  schedule.push_back(eps_target);
  for (std::size_t s = 0; s + 1 < schedule.size(); ++s) engine.solve(schedule[s], opt.max_iters, std::max(opt.tol, 1e-6));
  const double err = engine.solve(eps_target, opt.max_iters, opt.tol);
  if (!(err < opt.tol)) throw Error(Errc::NotConverged, "sinkhorn marginal error " + fmt_double(err));
  return engine.plan(eps_target, a, C);
}

}  // namespace

double multimarginal_cost(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& lambda,
                          double coupling_scale, const int* tuple) {
  const int k = static_cast<int>(measures.size());
  const int n = measures.front().dim;
  double c = 0.0;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      c += lambda[i] * lambda[j] * dot(measures[i].point(tuple[i]), measures[j].point(tuple[j]), n);
  return coupling_scale * c;
}

TransportPlan w2_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  std::vector<DiscreteMeasure> ms{mu, nu};
  check_measures(ms);
  if (static_cast<double>(mu.size()) * static_cast<double>(nu.size()) > kW2EntryBudget)
    throw Error(Errc::InstanceTooLarge, "instance too large - use sinkhorn");
  MultiPlan mp = detail::simplex_multimarginal(ms, {1.0, 1.0}, 1.0);
  return from_inner_product(mp, mu, nu);
}

double w2_squared(const DiscreteMeasure& mu, const DiscreteMeasure& nu, TransportPlan* plan) {
  TransportPlan p = w2_plan(mu, nu);
  const double v = p.cost_value;
  if (plan) *plan = std::move(p);
  return v;
}

TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const SinkhornOptions& opt) {
  std::vector<DiscreteMeasure> ms{mu, nu};
  check_measures(ms);
  // exp(-|x-y|^2/eps) equals exp(2<x,y>/eps) up to marginal factors.
  MultiPlan mp = run_sinkhorn(ms, {1.0, 1.0}, 1.0, opt, 0.5 * opt.epsilon);
  TransportPlan tp = from_inner_product(mp, mu, nu);
  tp.epsilon = opt.epsilon;
  return tp;
}

TransportPlan sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon, std::size_t max_iters) {
  SinkhornOptions opt;
  opt.epsilon = epsilon;
  opt.max_iters = max_iters;
  return sinkhorn(mu, nu, opt);
}

MultiPlan solve_multimarginal(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& lambda,
                              double coupling_scale, const MultiOptions& opt) {
  check_measures(measures);
  if (lambda.size() != measures.size()) throw Error(Errc::DimensionMismatch, "one weight per marginal");
  double total = 0.0;
  for (double l : lambda) {
    if (!(l > 0.0)) throw Error(Errc::InvalidArgument, "weights must be positive");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(Errc::InvalidArgument, "weights must sum to 1");
  if (opt.method == OtMethod::ExactLP) {
    double n = 1.0;
    for (const auto& m : measures) n *= static_cast<double>(m.size());
    if (n > opt.entry_budget) throw Error(Errc::InstanceTooLarge, "instance too large");
    MultiPlan p = detail::simplex_multimarginal(measures, lambda, coupling_scale);
    p.lambda = lambda;
    return p;
  }
  return run_sinkhorn(measures, lambda, coupling_scale, opt.sinkhorn, opt.sinkhorn.epsilon);
}

double dual_gap(const TransportPlan& plan) { return plan.cost_value - plan.dual_value; }
double dual_gap(const MultiPlan& plan) { return plan.dual_value - plan.objective; }

void rescore(TransportPlan& plan, const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const int n = mu.dim;
  std::vector<double> rows(mu.size(), 0.0), cols(nu.size(), 0.0);
  double cost = 0.0;
  for (const auto& e : plan.entries) {
    cost += e.mass * sqdist(mu.point(e.i), nu.point(e.j), n);
    rows[e.i] += e.mass;
    cols[e.j] += e.mass;
  }
  double dual = 0.0, err = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    dual += plan.phi[i] * mu.weights[i];
    err += std::abs(rows[i] - mu.weights[i]);
  }
  for (std::size_t j = 0; j < nu.size(); ++j) {
    dual += plan.psi[j] * nu.weights[j];
    err += std::abs(cols[j] - nu.weights[j]);
  }
  plan.cost_value = cost;
  plan.dual_value = dual;
  plan.gap = cost - dual;
  plan.marginals_err = err;
}

void to_json(nlohmann::json& j, const TransportPlan& p) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : p.entries) entries.push_back({{"idx", {e.i, e.j}}, {"mass", e.mass}});
  j = {{"method", ot_method_name(p.method)},
       {"epsilon", p.epsilon},
       {"objective", p.cost_value},
       {"gap", p.gap},
       {"marginals_err", p.marginals_err},
       {"entries", entries},
       {"duals", {p.phi, p.psi}}};
}

void to_json(nlohmann::json& j, const MultiPlan& p) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t e = 0; e < p.size(); ++e)
    entries.push_back({{"idx", std::vector<int>(p.tuple(e), p.tuple(e) + p.k)}, {"mass", p.masses[e]}});
  j = {{"method", ot_method_name(p.method)},
       {"epsilon", p.epsilon},
       {"objective", p.objective},
       {"gap", p.gap},
       {"marginals_err", p.marginals_err},
       {"coupling_scale", p.coupling_scale},
       {"entries", entries},
       {"duals", p.duals}};
}

}  // namespace santalo
