#include "santalo/verifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "santalo/convexity.hpp"
#include "santalo/error.hpp"
#include "santalo/util.hpp"

namespace santalo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_common_grid(const std::vector<GridFunction>& f, std::size_t min_k = 2) {
  if (f.size() < min_k) throw Error(Errc::InvalidArgument, "need at least " + std::to_string(min_k) + " functions");
  for (const auto& fi : f)
    if (!(fi.grid() == f[0].grid())) throw Error(Errc::DimensionMismatch, "functions must share one grid");
}

void check_lambda(const std::vector<double>& lambda, std::size_t k) {
  if (lambda.size() != k) throw Error(Errc::DimensionMismatch, "one weight per function");
  double s = 0.0;
  for (double l : lambda) {
    if (!(l > 0.0)) throw Error(Errc::InvalidArgument, "degenerate weights: every lambda_i must be > 0");
    s += l;
  }
  if (std::abs(s - 1.0) > 1e-9) throw Error(Errc::InvalidArgument, "weights must sum to 1");
}

bool is_even(const GridFunction& f) {
  const Grid& g = f.grid();
  const int m = g.points_per_axis;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Index idx = g.index(i);
    for (int d = 0; d < g.dim; ++d) idx[d] = m - 1 - idx[d];
    const std::size_t j = g.flat(idx);
    if (f.is_inf(i) != f.is_inf(j)) return false;
    if (!f.is_inf(i) && f[i] != f[j]) return false;
  }
  return true;
}

GridFunction exp_neg(const GridFunction& V) {
  GridFunction f(V.grid());
  for (std::size_t i = 0; i < V.size(); ++i) f.set(i, V.is_inf(i) ? 0.0 : std::exp(-V[i]));
  return f;
}

nlohmann::json values_json(const std::vector<GridFunction>& f) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& fi : f) a.push_back(fi);
  return a;
}

Tolerance pick_tol(const VerifyOptions& opt, const std::string& id) {
  return opt.tol ? *opt.tol : default_tolerance(id);
}

std::vector<DiscreteMeasure> gaussian_measures(const std::vector<GridFunction>& rho) {
  std::vector<DiscreteMeasure> out;
  const GridFunction phi = gaussian_density(rho[0].grid());
  for (const auto& r : rho) {
    GridFunction v(r.grid());
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double x = r[i];
      if (!(x >= 0.0) || !std::isfinite(x)) throw Error(Errc::NotProbabilityDensity, "density must be finite and >= 0");
      v.set(i, x * phi[i]);
    }
    out.push_back(sample_values(v));
  }
  return out;
}

BarycenterOptions bary_options(const VerifyOptions& opt) {
  BarycenterOptions b;
  b.multi = opt.multi;
  b.parallel = opt.parallel;
  return b;
}

// Linear interpolation of nonnegative values, 0 outside the box.
double interp_values(const GridFunction& f, const double* x) {
  const Grid& g = f.grid();
  const double h = g.spacing(), L = g.half_width;
  const int m = g.points_per_axis;
  int j0[kMaxDim];
  double t[kMaxDim];
  for (int d = 0; d < g.dim; ++d) {
    const double s = (x[d] + L) / h;
    if (s < -1e-9 || s > m - 1 + 1e-9) return 0.0;
    j0[d] = std::clamp(static_cast<int>(std::floor(s)), 0, m - 2);
    t[d] = std::clamp(s - j0[d], 0.0, 1.0);
  }
  double v = 0.0;
  for (int c = 0; c < (1 << g.dim); ++c) {
    double w = 1.0;
    Index idx{0, 0, 0};
    for (int d = 0; d < g.dim; ++d) {
      const int bit = (c >> d) & 1;
      w *= bit ? t[d] : 1.0 - t[d];
      idx[d] = j0[d] + bit;
    }
    if (w > 0.0) v += w * f[g.flat(idx)];
  }
  return v;
}

template <class Fn>
void parallel_for(std::size_t n, bool parallel, Fn&& fn) {
  unsigned T = parallel ? std::max(1u, std::thread::hardware_concurrency()) : 1u;
  T = static_cast<unsigned>(std::min<std::size_t>(T, std::max<std::size_t>(1, n / 16)));
  if (T <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += T) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

// ---------------------------------------------------------------------------

double Tolerance::at(double h, double scale) const {
  return (c0 * h + c1 * h * h) * std::max(1.0, std::abs(scale)) + floor;
}

Tolerance default_tolerance(const std::string& id) {
  if (id == "bsunc" || id == "bs_even_conjecture") return {0.0, 1e-3, 1e-10};
  if (id == "prekopa_leindler") return {0.0, 2e-2, 1e-10};
  if (id == "pointwise_pl") return {5e-2, 0.0, 1e-10};
  if (id == "displacement_convexity") return {0.0, 5e-2, 1e-6};
  if (id == "talagrand_barycenter") return {0.0, 5e-2, 1e-6};
  // equality cases (rho = 1, shifted pairs) sit at about h^2 above 1
  if (id == "pointwise_entropy_bound") return {0.0, 1.5, 1e-10};
  if (id == "bs_bodies" || id == "radial_bs" || id == "affine_isoperimetric_bodies") return {0.0, 0.0, 1e-6};
  if (id == "affine_isoperimetric_functions") return {0.0, 1e-3, 1e-10};
  return {0.0, 0.0, 1e-10};
}

void InequalityReport::finalize() {
  slack = rhs - lhs;
  const bool slack_ok = slack >= -tol;
  const bool hyp_ok = hypothesis_margin >= -margin_tol;
  pass = slack_ok && hyp_ok;
  reason = !hyp_ok ? "hypothesis" : (!slack_ok ? "slack" : "");
}

void to_json(nlohmann::json& j, const InequalityReport& r) {
  j = {{"inequality_id", r.inequality_id},
       {"lhs", r.lhs},
       {"rhs", r.rhs},
       {"slack", r.slack},
       {"hypothesis_margin", r.hypothesis_margin},
       {"certification", certification_name(r.certification)},
       {"count", r.count},
       {"pass", r.pass},
       {"tol", r.tol},
       {"margin_tol", r.margin_tol},
       {"instance_hash", r.instance_hash},
       {"reason", r.reason},
       {"conjecture", r.conjecture},
       {"extra", r.extra}};
}

std::string instance_hash(const nlohmann::json& instance) { return hex64(fnv1a64(instance.dump())); }

// ---------------------------------------------------------------------------

InequalityReport verify_bsunc(const std::vector<GridFunction>& f_in, const RhoProfile& rho, const VerifyOptions& opt) {
  check_common_grid(f_in);
  const int k = static_cast<int>(f_in.size());
  const Grid& g = f_in[0].grid();
  std::vector<GridFunction> f = f_in;
  bool symmetrized = false;
  for (auto& fi : f) {
    if (opt.conjecture) {
      if (!is_even(fi)) throw Error(Errc::HypothesisViolated, "conjecture mode needs even functions");
    } else if (!is_unconditional(fi)) {
      if (!opt.symmetrize) throw Error(Errc::HypothesisViolated, "input is not unconditional");
      fi = symmetrize_unconditional(fi);
      symmetrized = true;
    }
  }
  InequalityReport r;
  r.inequality_id = opt.conjecture ? "bs_even_conjecture" : "bsunc";
  r.conjecture = opt.conjecture;
  r.lhs = 1.0;
  for (const auto& fi : f) r.lhs *= integrate(fi);
  r.rhs = rho_rhs_bound(rho, k, g.dim, g);
  const MarginResult m = constraint_margin(f, rho, !opt.conjecture, opt.search);
  r.hypothesis_margin = m.margin;
  r.certification = m.certification;
  r.count = m.count;
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"f", values_json(f_in)}, {"rho", rho}});
  r.extra = {{"symmetrized", symmetrized}, {"stride", m.stride}, {"worst_tuple", m.worst_tuple}, {"k", k}, {"n", g.dim}};
  r.finalize();
  return r;
}

EqualityDiagnostics equality_diagnostics(const std::vector<GridFunction>& f, const RhoProfile& rho,
                                         std::size_t samples) {
  check_common_grid(f);
  const int k = static_cast<int>(f.size());
  const Grid& g = f[0].grid();
  const double kk = k * (k - 1) / 2.0;
  const GridFunction tmpl = GridFunction::sample(g, [&](const double* x) {
    double r2 = 0.0;
    for (int d = 0; d < g.dim; ++d) r2 += x[d] * x[d];
    return std::exp(rho.log_value(kk * r2) / k);
  });
  const std::vector<double> w = quadrature_weights(g);
  EqualityDiagnostics out;
  double prod = 1.0;
  for (const auto& fi : f) {
    double num = 0.0, den = 0.0, fmax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      num += w[i] * fi[i] * tmpl[i];
      den += w[i] * tmpl[i] * tmpl[i];
      fmax = std::max(fmax, std::abs(fi[i]));
    }
    const double c = num / den;
    double res = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) res = std::max(res, std::abs(fi[i] - c * tmpl[i]));
    out.c.push_back(c);
    out.residual.push_back(fmax > 0.0 ? res / fmax : res);
    prod *= c;
  }
  out.product_deviation = std::abs(prod - 1.0);
  out.rho_condition_margin = rho_product_condition(rho, k, g.dim, samples);
  out.equality_family = out.product_deviation <= 1e-3 && out.rho_condition_margin >= -1e-10 &&
                        *std::max_element(out.residual.begin(), out.residual.end()) <= 1e-3;
  return out;
}

void to_json(nlohmann::json& j, const EqualityDiagnostics& d) {
  j = {{"c", d.c},
       {"residual", d.residual},
       {"product_deviation", d.product_deviation},
       {"rho_condition_margin", d.rho_condition_margin},
       {"equality_family", d.equality_family}};
}

double rho_product_condition(const RhoProfile& rho, int k, int n, std::size_t samples, std::uint64_t seed,
                             double radius) {
  const double kk = k * (k - 1) / 2.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, radius);
  std::vector<double> x(static_cast<std::size_t>(k) * n);
  auto margin = [&](bool diagonal) {
    double pair = 0.0, logp = 0.0;
    for (int i = 0; i < k; ++i) {
      double r2 = 0.0;
      for (int d = 0; d < n; ++d) {
        const double v = diagonal ? x[d] : x[i * n + d];
        r2 += v * v;
      }
      logp += rho.log_value(kk * r2);
    }
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        for (int d = 0; d < n; ++d) pair += (diagonal ? x[d] * x[d] : x[i * n + d] * x[j * n + d]);
    return rho(pair) - std::exp(logp / k);
  };
  double best = 0.0;  // x = 0 gives exactly 0
  for (std::size_t s = 0; s < samples; ++s) {
    for (double& v : x) v = u(rng);
    best = std::min(best, margin(s % 8 == 0));
  }
  return best;
}

// ---- sup-convolution -------------------------------------------------------------

namespace {

struct SupConv {
  const std::vector<GridFunction>& f;
  const std::vector<double>& lambda;
  const VerifyOptions& opt;
  int k, n, heavy;
  std::vector<int> free_slots;
  std::vector<std::vector<double>> logf;

  SupConv(const std::vector<GridFunction>& f_, const std::vector<double>& l_, const VerifyOptions& o)
      : f(f_), lambda(l_), opt(o) {
    check_common_grid(f);
    check_lambda(lambda, f.size());
    k = static_cast<int>(f.size());
    n = f[0].grid().dim;
    heavy = static_cast<int>(std::max_element(lambda.begin(), lambda.end()) - lambda.begin());
    for (int i = 0; i < k; ++i)
      if (i != heavy) free_slots.push_back(i);
    for (const auto& fi : f) {
      std::vector<double> lf(fi.size());
      for (std::size_t i = 0; i < fi.size(); ++i) {
        const double v = fi[i];
        if (v < 0.0 || std::isnan(v)) throw Error(Errc::InvalidArgument, "functions must be nonnegative");
        lf[i] = v > 0.0 ? std::log(v) : -kInf;
      }
      logf.push_back(std::move(lf));
    }
  }

  const Grid& grid() const { return f[0].grid(); }

  double log_interp(int slot, const double* y) const {
    const Grid& g = grid();
    const double h = g.spacing(), L = g.half_width;
    const int m = g.points_per_axis;
    int j0[kMaxDim];
    double t[kMaxDim];
    for (int d = 0; d < n; ++d) {
      const double s = (y[d] + L) / h;
      if (s < -1e-9 || s > m - 1 + 1e-9) return -kInf;
      j0[d] = std::clamp(static_cast<int>(std::floor(s)), 0, m - 2);
      t[d] = std::clamp(s - j0[d], 0.0, 1.0);
    }
    double v = 0.0;
    for (int c = 0; c < (1 << n); ++c) {
      double w = 1.0;
      Index idx{0, 0, 0};
      for (int d = 0; d < n; ++d) {
        const int bit = (c >> d) & 1;
        w *= bit ? t[d] : 1.0 - t[d];
        idx[d] = j0[d] + bit;
      }
      if (w == 0.0) continue;
      const double lv = logf[slot][g.flat(idx)];
      if (lv == -kInf) return -kInf;
      v += w * lv;
    }
    return v;
  }

  // max log f_heavy over nodes y with |lambda_h (y - t)|_inf <= h/2
  double log_snap(const double* t) const {
    const Grid& g = grid();
    const double h = g.spacing(), L = g.half_width, r = 0.5 * h / lambda[heavy] * (1 + 1e-12);
    const int m = g.points_per_axis;
    int lo[kMaxDim], hi[kMaxDim];
    for (int d = 0; d < n; ++d) {
      lo[d] = std::max(0, static_cast<int>(std::ceil((t[d] - r + L) / h)));
      hi[d] = std::min(m - 1, static_cast<int>(std::floor((t[d] + r + L) / h)));
      if (lo[d] > hi[d]) return -kInf;
    }
    double best = -kInf;
    Index idx{0, 0, 0};
    for (int d = 0; d < n; ++d) idx[d] = lo[d];
    while (true) {
      best = std::max(best, logf[heavy][g.flat(idx)]);
      int d = 0;
      for (; d < n; ++d) {
        if (++idx[d] <= hi[d]) break;
        idx[d] = lo[d];
      }
      if (d == n) break;
    }
    return best;
  }

  SupConvValue eval(const double* x) const {
    const Grid& g = grid();
    const int D = static_cast<int>(free_slots.size()) * n;
    std::vector<int> sizes(D, g.points_per_axis);
    auto objective = [&](const int* ci) {
      double s = 0.0;
      double t[kMaxDim];
      for (int d = 0; d < n; ++d) t[d] = x[d];
      for (std::size_t a = 0; a < free_slots.size(); ++a) {
        const int i = free_slots[a];
        Index idx{0, 0, 0};
        for (int d = 0; d < n; ++d) {
          idx[d] = ci[a * n + d];
          t[d] -= lambda[i] * g.coord(idx[d]);
        }
        const double lv = logf[i][g.flat(idx)];
        if (lv == -kInf) return kInf;
        s += lambda[i] * lv;
      }
      for (int d = 0; d < n; ++d) t[d] /= lambda[heavy];
      const double lh = opt.supconv == SupConvMode::Snap ? log_snap(t) : log_interp(heavy, t);
      if (lh == -kInf) return kInf;
      return -(s + lambda[heavy] * lh);
    };
    const TupleSearchResult r = minimize_over_tuples(sizes, objective, opt.search);
    SupConvValue v;
    v.value = r.value == kInf ? 0.0 : std::exp(-r.value);
    v.certification = r.certification;
    v.count = r.count;
    return v;
  }
};

}  // namespace

SupConvValue sup_convolution(const std::vector<GridFunction>& f, const std::vector<double>& lambda, const double* x,
                             const VerifyOptions& opt) {
  SupConv sc(f, lambda, opt);
  return sc.eval(x);
}

GridFunction sup_convolution_grid(const std::vector<GridFunction>& f, const std::vector<double>& lambda,
                                  const VerifyOptions& opt, Certification* cert) {
  SupConv sc(f, lambda, opt);
  const Grid& g = sc.grid();
  std::vector<double> out(g.size());
  std::vector<std::uint8_t> sampled(g.size(), 0);
  parallel_for(g.size(), opt.parallel, [&](std::size_t i) {
    double x[kMaxDim];
    g.point(i, x);
    const SupConvValue v = sc.eval(x);
    out[i] = v.value;
    sampled[i] = v.certification == Certification::Sampled;
  });
  if (cert)
    *cert = std::any_of(sampled.begin(), sampled.end(), [](std::uint8_t s) { return s != 0; })
                ? Certification::Sampled
                : Certification::Exhaustive;
  GridFunction h(g, std::move(out));
  h.set_inf_outside(false);
  return h;
}

InequalityReport verify_prekopa_leindler(const std::vector<GridFunction>& f, const std::vector<double>& lambda,
                                         const std::optional<GridFunction>& h, const VerifyOptions& opt) {
  check_common_grid(f);
  check_lambda(lambda, f.size());
  const Grid& g = f[0].grid();
  const int n = g.dim;
  InequalityReport r;
  r.inequality_id = "prekopa_leindler";
  Certification cert = Certification::Exhaustive;
  const GridFunction best = sup_convolution_grid(f, lambda, opt, &cert);
  if (h) {
    if (!(h->grid() == g)) throw Error(Errc::DimensionMismatch, "h must live on the grid of the f_i");
    std::size_t worst = 0;
    double gap = kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double d = (*h)[i] - best[i] * (1.0 - 1e-9);
      if (d < gap) {
        gap = d;
        worst = i;
      }
    }
    if (gap < -1e-14) {
      std::ostringstream os;
      os << "h does not dominate at node (";
      const auto x = g.point(worst);
      for (int d = 0; d < n; ++d) os << (d ? ", " : "") << x[d];
      os << "): h = " << (*h)[worst] << ", sup-convolution = " << best[worst];
      throw Error(Errc::HDoesNotDominate, os.str());
    }
    r.rhs = integrate(*h);
  } else {
    r.rhs = integrate(best);
  }
  std::vector<double> mass(f.size()), mean(f.size() * n, 0.0);
  const std::vector<double> w = quadrature_weights(g);
  r.lhs = 1.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double x[kMaxDim];
    for (std::size_t a = 0; a < g.size(); ++a) {
      g.point(a, x);
      mass[i] += w[a] * f[i][a];
      for (int d = 0; d < n; ++d) mean[i * n + d] += w[a] * f[i][a] * x[d];
    }
    if (!(mass[i] > 0.0)) throw Error(Errc::ZeroMass, "f_i has zero integral");
    for (int d = 0; d < n; ++d) mean[i * n + d] /= mass[i];
    r.lhs *= std::pow(mass[i], lambda[i]);
  }
  // Equality template: the normalized f_i should be translates of one profile.
  double tres = 0.0, fmax = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    double x[kMaxDim], y[kMaxDim];
    g.point(a, x);
    for (int d = 0; d < n; ++d) y[d] = x[d] + mean[d];
    const double base = interp_values(f[0], y) / mass[0];
    fmax = std::max(fmax, base);
    for (std::size_t i = 1; i < f.size(); ++i) {
      for (int d = 0; d < n; ++d) y[d] = x[d] + mean[i * n + d];
      tres = std::max(tres, std::abs(interp_values(f[i], y) / mass[i] - base));
    }
  }
  r.hypothesis_margin = 0.0;
  r.certification = cert;
  r.count = g.size();
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  nlohmann::json inst = {{"f", values_json(f)}, {"lambda", lambda}};
  if (h) inst["h"] = *h;
  r.instance_hash = instance_hash(inst);
  r.extra = {{"template_residual", fmax > 0.0 ? tres / fmax : tres},
             {"optimal_h", !h.has_value()},
             {"supconv_mode", opt.supconv == SupConvMode::Snap ? "snap" : "interpolate"}};
  r.finalize();
  return r;
}

std::vector<double> bin_to_grid(const DiscreteMeasure& mu, const Grid& g) {
  if (mu.dim != g.dim) throw Error(Errc::DimensionMismatch, "measure and grid dims differ");
  const int n = g.dim, m = g.points_per_axis;
  const double h = g.spacing(), L = g.half_width;
  std::vector<double> out(g.size(), 0.0);
  for (std::size_t e = 0; e < mu.size(); ++e) {
    int j0[kMaxDim];
    double t[kMaxDim];
    for (int d = 0; d < n; ++d) {
      const double s = std::clamp((mu.point(e)[d] + L) / h, 0.0, static_cast<double>(m - 1));
      j0[d] = std::min(static_cast<int>(std::floor(s)), m - 2);
      t[d] = s - j0[d];
    }
    for (int c = 0; c < (1 << n); ++c) {
      double w = mu.weights[e];
      Index idx{0, 0, 0};
      for (int d = 0; d < n; ++d) {
        const int bit = (c >> d) & 1;
        w *= bit ? t[d] : 1.0 - t[d];
        idx[d] = j0[d] + bit;
      }
      if (w > 0.0) out[g.flat(idx)] += w;
    }
  }
  return out;
}

namespace {

int smoothing_radius(const Grid& g, double bandwidth) {
  const double h = g.spacing();
  const double a = bandwidth < 0.0 ? std::max(h, std::sqrt(h)) : bandwidth;
  return static_cast<int>(std::lround(a / h));
}

}  // namespace

std::vector<double> smooth_masses(const std::vector<double>& masses, const Grid& g, int s) {
  if (s <= 0) return masses;
  const int m = g.points_per_axis;
  std::vector<double> kern(2 * s + 1);
  for (int j = -s; j <= s; ++j) kern[j + s] = s + 1 - std::abs(j);
  std::vector<double> cur = masses, next(masses.size());
  for (int axis = 0; axis < g.dim; ++axis) {
    std::fill(next.begin(), next.end(), 0.0);
    const std::size_t st = g.stride(axis);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (cur[i] == 0.0) continue;
      const int j = g.index(i)[axis];
      const int lo = std::max(0, j - s), hi = std::min(m - 1, j + s);
      double norm = 0.0;
      for (int q = lo; q <= hi; ++q) norm += kern[q - j + s];
      for (int q = lo; q <= hi; ++q)
        next[i + (static_cast<std::ptrdiff_t>(q) - j) * static_cast<std::ptrdiff_t>(st)] += cur[i] * kern[q - j + s] / norm;
    }
    std::swap(cur, next);
  }
  return cur;
}

std::vector<double> node_density(const DiscreteMeasure& mu, const Grid& g, const std::vector<double>& base,
                                 double bandwidth) {
  const int s = smoothing_radius(g, bandwidth);
  const std::vector<double> num = smooth_masses(bin_to_grid(mu, g), g, s);
  const std::vector<double> den = smooth_masses(base, g, s);
  std::vector<double> p(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (den[i] > 0.0) p[i] = num[i] / den[i];
  return p;
}

double gaussian_entropy_of_density(const std::vector<double>& p, const Grid& g) {
  const std::vector<double> w = quadrature_weights(g);
  const GridFunction phi = gaussian_density(g);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (p[i] > 0.0) s += w[i] * phi[i] * p[i] * std::log(p[i]);
  return s;
}

double gaussian_entropy_of_masses(const std::vector<double>& masses, const Grid& g) {
  const std::vector<double> w = quadrature_weights(g);
  const GridFunction phi = gaussian_density(g);
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (masses[i] > 0.0) s += masses[i] * std::log(masses[i] / (w[i] * phi[i]));
  return s;
}

InequalityReport verify_pointwise_pl(const std::vector<GridFunction>& f, const std::vector<double>& lambda,
                                     const VerifyOptions& opt) {
  check_common_grid(f);
  check_lambda(lambda, f.size());
  const Grid& g = f[0].grid();
  const int n = g.dim;
  std::vector<DiscreteMeasure> mu;
  double A = 1.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double I = integrate(f[i]);
    if (!(I > 0.0)) throw Error(Errc::ZeroMass, "f_i has zero integral");
    A *= std::pow(I, lambda[i]);
    mu.push_back(sample_values(f[i]));
  }
  const BarycenterResult B = barycenter_via_multimarginal(mu, lambda, bary_options(opt));
  const std::vector<double> w = quadrature_weights(g);
  const std::vector<double> M = bin_to_grid(B.measure, g);
  const std::vector<double> p = node_density(B.measure, g, w, opt.bandwidth);
  Certification cert = Certification::Exhaustive;
  const GridFunction h_opt = sup_convolution_grid(f, lambda, opt, &cert);
  // the same smoothing on both sides keeps the pointwise inequality intact
  std::vector<double> hs(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) hs[i] = h_opt[i] * w[i];
  const int rad = smoothing_radius(g, opt.bandwidth);
  hs = smooth_masses(hs, g, rad);
  const std::vector<double> sw = smooth_masses(w, g, rad);
  for (std::size_t i = 0; i < g.size(); ++i) hs[i] = sw[i] > 0.0 ? hs[i] / sw[i] : 0.0;

  InequalityReport r;
  r.inequality_id = "pointwise_pl";
  double worst = kInf, integral = 0.0;
  std::size_t at = 0, checked = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    integral += w[i] * A * p[i];
    // only nodes the barycenter actually reaches
    if (M[i] < opt.p_floor) continue;
    ++checked;
    const double s = hs[i] - A * p[i];
    if (s < worst) {
      worst = s;
      at = i;
    }
  }
  if (checked == 0) throw Error(Errc::ZeroMass, "barycenter has no node above the mass floor");
  r.lhs = A * p[at];
  r.rhs = hs[at];
  r.hypothesis_margin = 0.0;
  r.certification = cert;
  r.count = checked;
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"f", values_json(f)}, {"lambda", lambda}});
  r.extra = {{"worst_x", g.point(at)},
             {"normalization_error", std::abs(integral - A) / A},
             {"prod_integrals", A},
             {"identity_residual", B.identity_residual},
             {"barycenter_support", B.measure.size()},
             {"epsilon_grid", r.tol},
             {"h", g.spacing()}};
  (void)n;
  r.finalize();
  return r;
}

InequalityReport verify_displacement_convexity(const std::vector<GridFunction>& rho, const std::vector<double>& lambda,
                                               const VerifyOptions& opt) {
  check_common_grid(rho, 1);
  check_lambda(lambda, rho.size());
  const Grid& g = rho[0].grid();
  const auto mu = gaussian_measures(rho);
  const BarycenterResult B = barycenter_via_multimarginal(mu, lambda, bary_options(opt));
  std::vector<double> ent;
  double avg = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    ent.push_back(gaussian_entropy_of_masses(bin_to_grid(mu[i], g), g));
    avg += lambda[i] * ent.back();
  }
  std::vector<double> base = quadrature_weights(g);
  const GridFunction phi = gaussian_density(g);
  for (std::size_t i = 0; i < g.size(); ++i) base[i] *= phi[i];
  // barycenter support is lumpy at the h scale, so its density is smoothed
  const double ent_bar = gaussian_entropy_of_density(node_density(B.measure, g, base, opt.bandwidth), g);
  InequalityReport r;
  r.inequality_id = "displacement_convexity";
  r.lhs = ent_bar + B.functional_value;
  r.rhs = avg;
  r.hypothesis_margin = 0.0;
  r.certification = Certification::NotApplicable;
  r.count = B.measure.size();
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"rho", values_json(rho)}, {"lambda", lambda}});
  r.extra = {{"entropies", ent},
             {"barycenter_entropy", ent_bar},
             {"functional", B.functional_value},
             {"per_marginal_w2", B.per_marginal_w2},
             {"weak_lhs", B.functional_value},
             {"weak_rhs", avg},
             {"weak_slack", avg - B.functional_value}};
  r.finalize();
  return r;
}

InequalityReport verify_talagrand_barycenter(const std::vector<GridFunction>& rho_in, const VerifyOptions& opt) {
  check_common_grid(rho_in);
  const int k = static_cast<int>(rho_in.size());
  const Grid& g = rho_in[0].grid();
  std::vector<GridFunction> rho = rho_in;
  bool symmetrized = false;
  for (auto& r : rho)
    if (!is_unconditional(r)) {
      if (!opt.symmetrize) throw Error(Errc::HypothesisViolated, "densities must be unconditional");
      r = symmetrize_unconditional(r);
      symmetrized = true;
    }
  const std::vector<double> lambda(k, 1.0 / k);
  const auto mu = gaussian_measures(rho);
  const BarycenterResult B = barycenter_via_multimarginal(mu, lambda, bary_options(opt));
  std::vector<double> ent;
  double sum = 0.0;
  for (const auto& m : mu) {
    ent.push_back(gaussian_entropy_of_masses(bin_to_grid(m, g), g));
    sum += ent.back();
  }
  InequalityReport r;
  r.inequality_id = "talagrand_barycenter";
  r.lhs = B.functional_value;
  r.rhs = (k - 1.0) / (static_cast<double>(k) * k) * sum;
  r.hypothesis_margin = 0.0;
  r.certification = Certification::NotApplicable;
  r.count = B.measure.size();
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"rho", values_json(rho_in)}});
  r.extra = {{"entropies", ent},
             {"symmetrized", symmetrized},
             {"per_marginal_w2", B.per_marginal_w2},
             {"identity_relative_error", B.identity_relative_error}};
  if (k == 2) {
    // F = 1/2 (1/2 W^2(mu_1, m) + 1/2 W^2(mu_2, m)) with m the midpoint, = W^2(mu_1, mu_2) / 8
    const double w12 = w2_squared(mu[0], mu[1]);
    r.extra["fathi_w2_over_8"] = w12 / 8.0;
    r.extra["fathi_relative_error"] = w12 > 0.0 ? std::abs(B.functional_value - w12 / 8.0) / (w12 / 8.0) : 0.0;
  }
  r.finalize();
  return r;
}

InequalityReport verify_pointwise_entropy_bound(const std::vector<GridFunction>& rho, const VerifyOptions& opt) {
  check_common_grid(rho);
  const int k = static_cast<int>(rho.size());
  const Grid& g = rho[0].grid();
  const int n = g.dim;
  const std::vector<double> lambda(k, 1.0 / k);
  const auto mu = gaussian_measures(rho);
  // One solve gives both the barycenter of the mu_i and the dual potentials: the cost
  // (1/k) sum_{i<j}<x_i,x_j> is k times the barycenter coupling, so its duals are k v_i.
  const BarycenterResult B = barycenter_via_multimarginal(mu, lambda, bary_options(opt));
  const MultiPlan& P = B.source_plan;
  const GridFunction phi = gaussian_density(g);
  const std::vector<double> w = quadrature_weights(g);
  std::vector<DiscreteMeasure> nu;
  std::vector<double> ent;
  double ent_term = 0.0;
  for (int i = 0; i < k; ++i) {
    const DiscreteMeasure& m = mu[i];
    std::vector<double> fi(m.size());
    double fmax = -kInf;
    for (std::size_t a = 0; a < m.size(); ++a) {
      double r2 = 0.0;
      for (int d = 0; d < n; ++d) r2 += m.point(a)[d] * m.point(a)[d];
      fi[a] = (k - 1.0) / (2.0 * k) * r2 - k * P.duals[i][a];
      fmax = std::max(fmax, fi[a]);
    }
    std::vector<double> wt(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) {
      const std::size_t node = static_cast<std::size_t>(m.node_index[a]);
      wt[a] = std::exp(fi[a] - fmax) * phi[node] * w[node];
    }
    nu.push_back(DiscreteMeasure::make(n, m.points, wt));
    nu.back().grid = g;
    nu.back().node_index = m.node_index;
    ent.push_back(gaussian_entropy_of_masses(bin_to_grid(m, g), g));
    ent_term += (ent.back() - 0.5 * B.per_marginal_w2[i]) / k;
  }
  const BarycenterResult Bn = barycenter_via_multimarginal(nu, lambda, bary_options(opt));
  std::vector<double> base = w;
  for (std::size_t i = 0; i < g.size(); ++i) base[i] *= phi[i];
  const std::vector<double> M = bin_to_grid(Bn.measure, g);
  const std::vector<double> dens = node_density(Bn.measure, g, base, opt.bandwidth);
  double pmax = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (M[i] < opt.p_floor || !(w[i] > 0.0)) continue;
    if (dens[i] > pmax) {
      pmax = dens[i];
      at = i;
    }
  }
  double alt = 0.0;
  for (int i = 0; i < k; ++i) alt += (ent[i] - 0.5 * w2_squared(Bn.measure, mu[i])) / k;
  InequalityReport r;
  r.inequality_id = "pointwise_entropy_bound";
  r.lhs = pmax;
  r.rhs = std::exp(ent_term);
  r.hypothesis_margin = 0.0;
  r.certification = Certification::NotApplicable;
  r.count = Bn.measure.size();
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"rho", values_json(rho)}});
  r.extra = {{"argmax_x", g.point(at)},
             {"entropies", ent},
             {"per_marginal_w2", B.per_marginal_w2},
             {"rhs_with_nu_barycenter", std::exp(alt)}};
  r.finalize();
  return r;
}

// ---- sets -------------------------------------------------------------------------

namespace {

void check_bodies(const std::vector<ConvexBodyRadial>& bodies, bool need_unconditional) {
  if (bodies.size() < 2) throw Error(Errc::InvalidArgument, "need at least two bodies");
  for (const auto& b : bodies) {
    b.validate();
    if (b.dim != bodies[0].dim) throw Error(Errc::DimensionMismatch, "bodies must share a dimension");
    if (need_unconditional && !b.octant_symmetric(1e-12))
      throw Error(Errc::HypothesisViolated, "bodies must be unconditional");
  }
}

Grid body_grid(const std::vector<ConvexBodyRadial>& bodies, const BodyGridOptions& opt) {
  double rmax = 0.0;
  for (const auto& b : bodies) rmax = std::max(rmax, *std::max_element(b.radial.begin(), b.radial.end()));
  const int n = bodies[0].dim;
  const int m = opt.points_per_axis > 0 ? opt.points_per_axis : (n == 2 ? 81 : 41);
  return build_grid(n, opt.half_width > 0.0 ? opt.half_width : 8.0 * rmax, m);
}

std::vector<GridFunction> gauge_gaussians(const std::vector<ConvexBodyRadial>& bodies, const Grid& g) {
  std::vector<GridFunction> f;
  for (const auto& b : bodies)
    f.push_back(GridFunction::sample(g, [&](const double* x) {
      const double q = b.gauge(x);
      return std::exp(-0.5 * q * q);
    }));
  return f;
}

nlohmann::json bodies_json(const std::vector<ConvexBodyRadial>& bodies) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& b : bodies) a.push_back(b);
  return a;
}

}  // namespace

InequalityReport verify_bs_bodies(const std::vector<ConvexBodyRadial>& bodies, const RhoProfile& rho,
                                  const VerifyOptions& opt, const BodyGridOptions& gopt) {
  check_bodies(bodies, true);
  const int k = static_cast<int>(bodies.size()), n = bodies[0].dim;
  const Grid g = body_grid(bodies, gopt);
  const auto f = gauge_gaussians(bodies, g);
  InequalityReport r;
  r.inequality_id = "bs_bodies";
  std::vector<double> vols;
  double gauss_side = 1.0;
  const double c = ball_volume(n) / std::pow(kTwoPi, 0.5 * n);
  r.lhs = 1.0;
  for (int i = 0; i < k; ++i) {
    vols.push_back(bodies[i].volume());
    r.lhs *= vols.back();
    gauss_side *= c * integrate(f[i]);
  }
  r.rhs = std::pow(c, k) * rho_rhs_bound(rho, k, n, g);
  const MarginResult m = constraint_margin(f, rho, true, opt.search);
  r.hypothesis_margin = m.margin;
  r.certification = m.certification;
  r.count = m.count;
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"bodies", bodies_json(bodies)}, {"rho", rho}});
  r.extra = {{"volumes", vols}, {"lhs_by_gaussian_integral", gauss_side}, {"worst_tuple", m.worst_tuple},
             {"stride", m.stride}};
  r.finalize();
  return r;
}

InequalityReport verify_radial_bs(const std::vector<ConvexBodyRadial>& bodies, const VerifyOptions& opt,
                                  int angle_samples) {
  check_bodies(bodies, true);
  if (angle_samples < 2) throw Error(Errc::InvalidArgument, "need at least two angle samples");
  const int k = static_cast<int>(bodies.size()), n = bodies[0].dim;
  const int per = n == 2 ? 1 : 2;
  const double step = 0.5 * std::numbers::pi / (angle_samples - 1);
  std::vector<int> sizes(static_cast<std::size_t>(k) * per, angle_samples);
  auto unit = [&](const int* a, double* u) {
    if (n == 2) {
      u[0] = std::cos(a[0] * step);
      u[1] = std::sin(a[0] * step);
    } else {
      const double t = a[0] * step, p = a[1] * step;
      u[0] = std::sin(t) * std::cos(p);
      u[1] = std::sin(t) * std::sin(p);
      u[2] = std::cos(t);
    }
  };
  auto objective = [&](const int* ci) {
    std::vector<std::array<double, 3>> u(k);
    double prod_r = 1.0;
    for (int i = 0; i < k; ++i) {
      unit(ci + i * per, u[i].data());
      prod_r *= bodies[i].radius(u[i].data());
    }
    double denom = 0.0;
    for (int d = 0; d < n; ++d) {
      double term = 1.0;
      for (int i = 0; i < k; ++i) term *= std::pow(std::abs(u[i][d]), 2.0 / k);
      denom += term;
    }
    const double bound = denom > 0.0 ? std::pow(denom, -0.5 * k) : kInf;
    return bound - prod_r;
  };
  const TupleSearchResult s = minimize_over_tuples(sizes, objective, opt.search);
  InequalityReport r;
  r.inequality_id = "radial_bs";
  r.lhs = 1.0;
  std::vector<double> vols;
  for (const auto& b : bodies) {
    vols.push_back(b.volume());
    r.lhs *= vols.back();
  }
  r.rhs = std::pow(ball_volume(n), k);
  r.hypothesis_margin = s.value;
  r.certification = s.certification;
  r.count = s.count;
  r.tol = pick_tol(opt, r.inequality_id).at(step, r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"bodies", bodies_json(bodies)}, {"angle_samples", angle_samples}});
  r.extra = {{"volumes", vols}, {"worst_angles", s.argmin}};
  r.finalize();
  return r;
}

InequalityReport verify_affine_isoperimetric(const std::vector<GridFunction>& V_in, double lambda,
                                             const RhoProfile& rho, const VerifyOptions& opt) {
  check_common_grid(V_in);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::InvalidArgument, "lambda must lie in [0, 1]");
  const int k = static_cast<int>(V_in.size());
  const Grid& g = V_in[0].grid();
  const int n = g.dim;
  std::vector<GridFunction> V = V_in;
  bool symmetrized = false;
  if (lambda != 0.5)
    for (auto& v : V)
      if (!is_unconditional(v)) {
        if (!opt.symmetrize) throw Error(Errc::HypothesisViolated, "potentials must be unconditional");
        v = symmetrize_unconditional(v);
        symmetrized = true;
      }
  InequalityReport r;
  r.inequality_id = "affine_isoperimetric_functions";
  r.lhs = 1.0;
  std::vector<double> as;
  for (const auto& v : V) {
    as.push_back(affine_surface_area_fn(v, lambda));
    r.lhs *= as.back();
  }
  const double kn = static_cast<double>(k) * n;
  if (lambda == 0.5) {
    r.rhs = std::pow(kTwoPi, 0.5 * kn);
    r.hypothesis_margin = 0.0;
    r.certification = Certification::NotApplicable;
  } else {
    const double R = rho_rhs_bound(rho, k, n, g);
    std::vector<GridFunction> f;
    if (lambda < 0.5) {
      r.rhs = std::pow(kTwoPi, kn * lambda) * std::pow(R, 1.0 - 2.0 * lambda);
      for (const auto& v : V) f.push_back(exp_neg(v));
    } else {
      r.rhs = std::pow(kTwoPi, kn * (1.0 - lambda)) * std::pow(R, 2.0 * lambda - 1.0);
      for (const auto& v : V) f.push_back(exp_neg(legendre_conjugate(v).dual));
    }
    const MarginResult m = constraint_margin(f, rho, true, opt.search);
    r.hypothesis_margin = m.margin;
    r.certification = m.certification;
    r.count = m.count;
    r.extra["worst_tuple"] = m.worst_tuple;
  }
  // Equality fit V_i = c |x|^2 / 2 + a_i with one shared c.
  {
    const std::vector<double> w = quadrature_weights(g);
    double sxx = 0.0, sx = 0.0, sw = 0.0, sxv = 0.0, sv = 0.0;
    std::vector<double> q(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto x = g.point(i);
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      q[i] = 0.5 * r2;
    }
    // profile out a_i: c = sum_i cov_w(q, V_i) / sum_i var_w(q)
    double num = 0.0, den = 0.0;
    std::vector<double> a(k);
    std::vector<double> vbar(k);
    for (int j = 0; j < k; ++j) {
      sxx = sx = sw = sxv = sv = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (V[j].is_inf(i)) continue;
        sw += w[i];
        sx += w[i] * q[i];
        sxx += w[i] * q[i] * q[i];
        sv += w[i] * V[j][i];
        sxv += w[i] * q[i] * V[j][i];
      }
      num += sxv - sx * sv / sw;
      den += sxx - sx * sx / sw;
      vbar[j] = sv / sw;
      a[j] = sx / sw;  // mean of q, fixed below
    }
    const double c = num / den;
    double res = 0.0;
    for (int j = 0; j < k; ++j) {
      a[j] = vbar[j] - c * a[j];
      for (std::size_t i = 0; i < g.size(); ++i)
        if (!V[j].is_inf(i)) res = std::max(res, std::abs(V[j][i] - c * q[i] - a[j]));
    }
    r.extra["quadratic_fit"] = {{"c", c}, {"a", a}, {"residual", res}};
  }
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"V", values_json(V_in)}, {"lambda", lambda}, {"rho", rho}});
  r.extra["as"] = as;
  r.extra["symmetrized"] = symmetrized;
  r.extra["lambda"] = lambda;
  r.finalize();
  return r;
}

InequalityReport verify_affine_isoperimetric(const std::vector<ConvexBodyRadial>& bodies, double p,
                                             const RhoProfile& rho, const VerifyOptions& opt,
                                             const BodyGridOptions& gopt) {
  check_bodies(bodies, true);
  const int k = static_cast<int>(bodies.size()), n = bodies[0].dim;
  if (n != 2) throw Error(Errc::DimensionUnsupported, "affine surface area of bodies is planar only");
  if (!(p >= 0.0 && p <= n)) throw Error(Errc::InvalidArgument, "p must lie in [0, n]");
  const Grid g = body_grid(bodies, gopt);
  const auto f = gauge_gaussians(bodies, g);
  InequalityReport r;
  r.inequality_id = "affine_isoperimetric_bodies";
  r.lhs = 1.0;
  std::vector<double> as;
  for (const auto& b : bodies) {
    as.push_back(affine_surface_area_body(b, p));
    r.lhs *= as.back();
  }
  const double asb = n * ball_volume(n);
  const double R = rho_rhs_bound(rho, k, n, g);
  r.rhs = std::pow(asb, k) * std::pow(R / std::pow(kTwoPi, 0.5 * k * n), (n - p) / (n + p));
  const MarginResult m = constraint_margin(f, rho, true, opt.search);
  r.hypothesis_margin = m.margin;
  r.certification = m.certification;
  r.count = m.count;
  r.tol = pick_tol(opt, r.inequality_id).at(g.spacing(), r.rhs);
  r.margin_tol = opt.margin_tol;
  r.instance_hash = instance_hash({{"bodies", bodies_json(bodies)}, {"p", p}, {"rho", rho}});
  r.extra = {{"as_p", as}, {"p", p}, {"worst_tuple", m.worst_tuple}};
  r.finalize();
  return r;
}

}  // namespace santalo
