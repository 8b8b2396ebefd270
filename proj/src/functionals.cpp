#include "santalo/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>

#include "santalo/error.hpp"

namespace santalo {

RhoProfile RhoProfile::exponential(double c) {
  if (!(c > 0.0)) throw Error(Errc::InvalidFamily, "exponential rho needs c > 0");
  RhoProfile r;
  r.family = Family::Exponential;
  r.c = c;
  return r;
}

RhoProfile RhoProfile::power_exp(double c, double beta) {
  if (!(c > 0.0) || !(beta > 0.0)) throw Error(Errc::InvalidFamily, "powexp rho needs c, beta > 0");
  RhoProfile r;
  r.family = Family::PowerExp;
  r.c = c;
  r.beta = beta;
  return r;
}

RhoProfile RhoProfile::tabulated(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw Error(Errc::InvalidFamily, "tabulated rho needs >= 2 knots");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!(knots[i].second > 0.0)) throw Error(Errc::InvalidFamily, "tabulated rho must be positive");
    if (i > 0 && !(knots[i].first > knots[i - 1].first))
      throw Error(Errc::InvalidFamily, "tabulated knots must be strictly ascending in t");
    if (i > 0 && knots[i].second > knots[i - 1].second)
      throw Error(Errc::InvalidFamily, "tabulated rho must be non-increasing");
  }
  RhoProfile r;
  r.family = Family::Tabulated;
  r.knots = std::move(knots);
  return r;
}

double RhoProfile::log_value(double t) const {
  switch (family) {
    case Family::Exponential: return -c * t;
    case Family::PowerExp: return -c * std::copysign(std::pow(std::abs(t), beta), t);
    case Family::Tabulated: {
      if (t <= knots.front().first) return std::log(knots.front().second);
      // log-linear between knots, last segment extended
      auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                 [](double v, const std::pair<double, double>& k) { return v < k.first; });
      std::size_t hi = std::min<std::size_t>(it - knots.begin(), knots.size() - 1);
      std::size_t lo = hi - 1;
      const double t0 = knots[lo].first, t1 = knots[hi].first;
      const double l0 = std::log(knots[lo].second), l1 = std::log(knots[hi].second);
      return l0 + (l1 - l0) * (t - t0) / (t1 - t0);
    }
  }
  return 0.0;
}

double RhoProfile::operator()(double t) const { return std::exp(log_value(t)); }

void to_json(nlohmann::json& j, const RhoProfile& r) {
  switch (r.family) {
    case RhoProfile::Family::Exponential:
      j = {{"family", "exp"}, {"params", {{"c", r.c}}}};
      break;
    case RhoProfile::Family::PowerExp:
      j = {{"family", "powexp"}, {"params", {{"c", r.c}, {"beta", r.beta}}}};
      break;
    case RhoProfile::Family::Tabulated: {
      nlohmann::json ks = nlohmann::json::array();
      for (auto& [t, v] : r.knots) ks.push_back({t, v});
      j = {{"family", "tab"}, {"params", {{"knots", ks}}}};
      break;
    }
  }
  if (r.k_context) j["k"] = r.k_context;
}

void from_json(const nlohmann::json& j, RhoProfile& r) {
  const std::string fam = j.at("family").get<std::string>();
  const nlohmann::json p = j.value("params", nlohmann::json::object());
  if (fam == "exp") {
    r = RhoProfile::exponential(p.value("c", 1.0));
  } else if (fam == "powexp") {
    r = RhoProfile::power_exp(p.value("c", 1.0), p.value("beta", 1.0));
  } else if (fam == "tab") {
    std::vector<std::pair<double, double>> ks;
    for (auto& k : p.at("knots")) ks.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
    r = RhoProfile::tabulated(std::move(ks));
  } else {
    throw Error(Errc::InvalidFamily, "unknown rho family '" + fam + "'");
  }
  r.k_context = j.value("k", 0);
}

// ---------------------------------------------------------------------------

double s_functional(const std::vector<GridFunction>& tuple) {
  double s = 1.0;
  for (const auto& v : tuple) s *= integrate_exp(v);
  return s;
}

FunctionalReport bs_pair_report(const GridFunction& V, const BsOptions& opt) {
  ConjugatePair cp = legendre_conjugate(V, opt.conjugate);
  QuadratureResult a = quadrature_integrate(V), b = quadrature_integrate(cp.dual);
  FunctionalReport r{"bs_pair", a.value * b.value, V.grid(), {}};
  if (a.mass_leak) r.warnings.push_back("mass leak in e^{-V}");
  if (b.mass_leak) r.warnings.push_back("mass leak in e^{-V*}");
  if (cp.boundary_fraction > kUnboundedFraction)
    r.warnings.push_back("conjugate boundary fraction " + std::to_string(cp.boundary_fraction));
  return r;
}

double bs_pair_functional(const GridFunction& V, const BsOptions& opt) { return bs_pair_report(V, opt).value; }

double affine_surface_area_fn(const GridFunction& V, double lambda) {
  if (lambda == 0.0) return integrate_exp(V);
  const Grid& g = V.grid();
  const int n = g.dim;
  const GradientField G = finite_diff_gradient(V);
  const HessianField H = finite_diff_hessian(V);
  GridFunction mask(g);
  std::vector<double> integrand(g.size(), 0.0);
  double x[kMaxDim];
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (V.is_inf(i) || !G.valid[i] || !H.valid[i]) {
      mask.set(i, kInf);
      continue;
    }
    double det = determinant(H.at(i), n);
    if (det < -1e-9)
      throw Error(Errc::NegativeHessianDeterminant, "det D^2 V = " + std::to_string(det));
    det = std::max(det, 0.0);
    g.point(i, x);
    double xg = 0.0;
    for (int d = 0; d < n; ++d) xg += x[d] * G.at(i)[d];
    const double expo = (2.0 * lambda - 1.0) * V[i] - lambda * xg;
    integrand[i] = det == 0.0 ? 0.0 : std::exp(expo + lambda * std::log(det));
  }
  const std::vector<double> w = quadrature_weights(mask);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += w[i] * integrand[i];
  return s;
}

GridFunction gaussian_density(const Grid& g) {
  const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * g.dim);
  return GridFunction::sample(g, [&](const double* x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim; ++d) r2 += x[d] * x[d];
    return norm * std::exp(-0.5 * r2);
  });
}

double relative_entropy_gaussian(const GridFunction& rho) {
  const Grid& g = rho.grid();
  const GridFunction phi = gaussian_density(g);
  const std::vector<double> w = quadrature_weights(g);
  double z = 0.0, ent = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = rho[i];
    if (!(r >= 0.0) || !std::isfinite(r)) throw Error(Errc::NotProbabilityDensity, "density must be finite and >= 0");
    const double wp = w[i] * phi[i];
    z += wp * r;
    if (r > 0.0) ent += wp * r * std::log(r);
  }
  if (std::abs(z - 1.0) > 1e-6)
    throw Error(Errc::NotProbabilityDensity, "int rho dgamma = " + std::to_string(z));
  return ent;
}

double rho_rhs_bound(const RhoProfile& rho, int k, int n, const Grid& grid) {
  if (k < 2) throw Error(Errc::InvalidArgument, "rho bound needs k >= 2");
  if (grid.dim != n) throw Error(Errc::DimensionMismatch, "grid dim != n");
  const double kk = k * (k - 1) / 2.0;
  const double L = grid.half_width;
  const double tail = (rho.log_value(kk * L * L) - rho.log_value(0.0)) / k;
  if (tail > std::log(kTailRatio))
    throw Error(Errc::TailNotResolved,
                "rho^{1/k} decays only to " + std::to_string(std::exp(tail)) + " of its peak at the grid edge");
  GridFunction pot = GridFunction::sample(grid, [&](const double* u) {
    double r2 = 0.0;
    for (int d = 0; d < n; ++d) r2 += u[d] * u[d];
    return -rho.log_value(kk * r2) / k;
  });
  return std::pow(integrate_exp(pot), k);
}

// ---------------------------------------------------------------------------

const char* certification_name(Certification c) {
  switch (c) {
    case Certification::Exhaustive: return "exhaustive";
    case Certification::Sampled: return "sampled";
    case Certification::NotApplicable: return "not_applicable";
  }
  return "?";
}

namespace {

struct Candidate {
  double value;
  std::vector<int> idx;
  bool operator<(const Candidate& o) const { return value < o.value; }
};

}  // namespace

TupleSearchResult minimize_over_tuples(const std::vector<int>& sizes,
                                       const std::function<double(const int*)>& objective,
                                       const TupleSearchOptions& opt) {
  const int D = static_cast<int>(sizes.size());
  TupleSearchResult res;
  if (D == 0) throw Error(Errc::InvalidArgument, "empty tuple space");
  double total = 1.0;
  int max_size = 1;
  for (int s : sizes) {
    if (s < 1) throw Error(Errc::InvalidArgument, "empty coordinate range");
    total *= s;
    max_size = std::max(max_size, s);
  }

  // Keep the worst candidates (smallest objective) for polishing.
  std::priority_queue<Candidate> worst;
  auto consider = [&](double v, const std::vector<int>& idx) {
    if (worst.size() < opt.polish_starts) worst.push({v, idx});
    else if (v < worst.top().value) {
      worst.pop();
      worst.push({v, idx});
    }
  };

  std::vector<int> idx(D, 0);
  res.value = kInf;
  auto record = [&](double v) {
    if (v < res.value || res.argmin.empty()) {
      res.value = v;
      res.argmin = idx;
    }
    consider(v, idx);
  };

  const double per_axis = std::floor(std::pow(opt.budget, 1.0 / D) + 1e-9);
  int poll_step = 1;
  if (total <= opt.budget || per_axis >= opt.min_coarse) {
    // exhaustive, possibly on a coarsened sub-grid that keeps both endpoints
    std::vector<std::vector<int>> lists(D);
    for (int c = 0; c < D; ++c) {
      const int mc = sizes[c];
      const int keep = total <= opt.budget ? mc : std::min<int>(mc, static_cast<int>(per_axis));
      if (keep >= mc) {
        for (int j = 0; j < mc; ++j) lists[c].push_back(j);
      } else {
        for (int r = 0; r < keep; ++r) {
          const int j = static_cast<int>(std::lround(static_cast<double>(r) * (mc - 1) / (keep - 1)));
          if (lists[c].empty() || lists[c].back() != j) lists[c].push_back(j);
        }
        res.stride = std::max(res.stride, static_cast<int>(std::ceil(static_cast<double>(mc - 1) / (keep - 1))));
      }
    }
    res.certification = Certification::Exhaustive;
    std::vector<std::size_t> pos(D, 0);
    for (int c = 0; c < D; ++c) idx[c] = lists[c][0];
    while (true) {
      record(objective(idx.data()));
      ++res.count;
      int c = D - 1;
      for (; c >= 0; --c) {
        if (++pos[c] < lists[c].size()) {
          idx[c] = lists[c][pos[c]];
          break;
        }
        pos[c] = 0;
        idx[c] = lists[c][0];
      }
      if (c < 0) break;
    }
    poll_step = res.stride;
  } else {
    // Latin hypercube over index space
    res.certification = Certification::Sampled;
    const std::size_t N = opt.samples;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<std::uint32_t>> perm(D, std::vector<std::uint32_t>(N));
    for (int c = 0; c < D; ++c) {
      for (std::size_t s = 0; s < N; ++s) perm[c][s] = static_cast<std::uint32_t>(s);
      std::shuffle(perm[c].begin(), perm[c].end(), rng);
    }
    for (std::size_t s = 0; s < N; ++s) {
      for (int c = 0; c < D; ++c) {
        const double u = (perm[c][s] + unif(rng)) / static_cast<double>(N);
        idx[c] = std::min(sizes[c] - 1, static_cast<int>(u * sizes[c]));
      }
      record(objective(idx.data()));
      ++res.count;
    }
    poll_step = std::max(1, max_size / 16);
  }

  // Coordinate descent from the worst candidates at full resolution.
  if (poll_step > 1 || res.certification == Certification::Sampled) {
    std::vector<Candidate> starts;
    while (!worst.empty()) {
      starts.push_back(worst.top());
      worst.pop();
    }
    for (Candidate& cand : starts) {
      std::vector<int> cur = cand.idx;
      double val = cand.value;
      for (int round = 0; round < 200; ++round) {
        bool improved = false;
        for (int c = 0; c < D; ++c) {
          for (int step = poll_step; step >= 1; step /= 2) {
            for (int dir : {-1, 1}) {
              const int old = cur[c];
              const int nv = old + dir * step;
              if (nv < 0 || nv >= sizes[c]) continue;
              cur[c] = nv;
              const double v = objective(cur.data());
              if (v < val) {
                val = v;
                improved = true;
              } else {
                cur[c] = old;
              }
            }
          }
        }
        if (!improved) break;
      }
      if (val < res.value) {
        res.value = val;
        res.argmin = cur;
      }
    }
  }
  return res;
}

namespace {

struct SlotAxes {
  std::vector<std::vector<int>> axis_nodes;  // per slot: candidate per-axis node indices
};

SlotAxes candidate_axes(const std::vector<GridFunction>& f, bool orthant_only) {
  SlotAxes s;
  for (const auto& fi : f) {
    const Grid& g = fi.grid();
    std::vector<int> nodes;
    for (int j = 0; j < g.points_per_axis; ++j)
      if (!orthant_only || g.coord(j) >= 0.0) nodes.push_back(j);
    s.axis_nodes.push_back(std::move(nodes));
  }
  return s;
}

// Evaluates (t = sum_{i<j}<x_i,x_j>, flat node per slot) for a tuple of coordinate indices.
struct TupleDecoder {
  const std::vector<GridFunction>& f;
  const SlotAxes& axes;
  int k, n;
  mutable std::vector<std::size_t> flat;

  double pair_sum(const int* ci) const {
    double S[kMaxDim] = {0, 0, 0};
    double sq = 0.0;
    for (int i = 0; i < k; ++i) {
      const Grid& g = f[i].grid();
      Index idx{0, 0, 0};
      for (int d = 0; d < n; ++d) {
        const int j = axes.axis_nodes[i][ci[i * n + d]];
        idx[d] = j;
        const double x = g.coord(j);
        S[d] += x;
        sq += x * x;
      }
      flat[i] = g.flat(idx);
    }
    double s2 = 0.0;
    for (int d = 0; d < n; ++d) s2 += S[d] * S[d];
    return 0.5 * (s2 - sq);
  }
};

std::vector<int> tuple_sizes(const SlotAxes& axes, int n) {
  std::vector<int> sizes;
  for (const auto& a : axes.axis_nodes)
    for (int d = 0; d < n; ++d) sizes.push_back(static_cast<int>(a.size()));
  return sizes;
}

void check_tuple(const std::vector<GridFunction>& f) {
  if (f.size() < 2) throw Error(Errc::InvalidArgument, "tuple needs k >= 2");
  for (const auto& fi : f)
    if (fi.grid().dim != f[0].grid().dim) throw Error(Errc::DimensionMismatch, "tuple dims differ");
}

}  // namespace

MarginResult constraint_margin(const std::vector<GridFunction>& f, const RhoProfile& rho, bool orthant_only,
                               const TupleSearchOptions& opt) {
  check_tuple(f);
  const int k = static_cast<int>(f.size()), n = f[0].grid().dim;
  const SlotAxes axes = candidate_axes(f, orthant_only);
  TupleDecoder dec{f, axes, k, n, std::vector<std::size_t>(k)};
  auto objective = [&](const int* ci) {
    const double t = dec.pair_sum(ci);
    double prod = 1.0;
    for (int i = 0; i < k; ++i) prod *= f[i][dec.flat[i]];
    return rho(t) - prod;
  };
  TupleSearchResult r = minimize_over_tuples(tuple_sizes(axes, n), objective, opt);
  MarginResult m;
  m.margin = r.value;
  m.certification = r.certification;
  m.count = r.count;
  m.stride = r.stride;
  for (int i = 0; i < k; ++i) {
    std::vector<double> x(n);
    for (int d = 0; d < n; ++d) x[d] = f[i].grid().coord(axes.axis_nodes[i][r.argmin[i * n + d]]);
    m.worst_tuple.push_back(std::move(x));
  }
  return m;
}

TupleSearchResult max_log_ratio(const std::vector<GridFunction>& V, const RhoProfile& rho, bool orthant_only,
                                const TupleSearchOptions& opt) {
  check_tuple(V);
  const int k = static_cast<int>(V.size()), n = V[0].grid().dim;
  const SlotAxes axes = candidate_axes(V, orthant_only);
  TupleDecoder dec{V, axes, k, n, std::vector<std::size_t>(k)};
  auto objective = [&](const int* ci) {
    const double t = dec.pair_sum(ci);
    double pot = 0.0;
    for (int i = 0; i < k; ++i) pot += V[i][dec.flat[i]];
    return pot + rho.log_value(t);
  };
  TupleSearchResult r = minimize_over_tuples(tuple_sizes(axes, n), objective, opt);
  r.value = -r.value;
  return r;
}

}  // namespace santalo
