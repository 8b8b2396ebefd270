#include "santalo/instances.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "santalo/error.hpp"
#include "santalo/verifiers.hpp"

namespace santalo {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double sq_norm(const double* x, int n, const double* c = nullptr) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) {
    const double t = c ? x[d] - c[d] : x[d];
    s += t * t;
  }
  return s;
}

struct Monomials {
  std::vector<double> a, p, D;  // D is n x n
};

Monomials draw_monomials(std::mt19937_64& rng, int n, bool full_d) {
  std::uniform_real_distribution<double> ua(0.2, 2.0), ud(0.0, 0.5);
  std::uniform_int_distribution<int> pick(0, 2);
  std::normal_distribution<double> z(0.0, 1.0);
  const double pw[3] = {1.0, 2.0, 4.0};
  Monomials m;
  m.D.assign(static_cast<std::size_t>(n * n), 0.0);
  for (int d = 0; d < n; ++d) {
    m.a.push_back(ua(rng));
    m.p.push_back(pw[pick(rng)]);
  }
  if (!full_d) {
    for (int d = 0; d < n; ++d) m.D[d * n + d] = ud(rng);
  } else {
    // D = 0.3 A A^T
    std::vector<double> A(static_cast<std::size_t>(n * n));
    for (auto& v : A) v = z(rng);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        double s = 0.0;
        for (int t = 0; t < n; ++t) s += A[r * n + t] * A[c * n + t];
        m.D[r * n + c] = 0.3 * s;
      }
  }
  return m;
}

// Q diag(e^{s}) Q' with sum s = 0 and Q from Gram-Schmidt on a Gaussian matrix.
std::vector<double> rotated_form(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> us(-0.5, 0.5);
  std::vector<double> Q(static_cast<std::size_t>(n * n)), s(n);
  for (auto& v : Q) v = z(rng);
  for (int c = 0; c < n; ++c) {
    for (int p = 0; p < c; ++p) {
      double dot = 0.0;
      for (int r = 0; r < n; ++r) dot += Q[r * n + c] * Q[r * n + p];
      for (int r = 0; r < n; ++r) Q[r * n + c] -= dot * Q[r * n + p];
    }
    double nr = 0.0;
    for (int r = 0; r < n; ++r) nr += Q[r * n + c] * Q[r * n + c];
    nr = std::sqrt(nr);
    for (int r = 0; r < n; ++r) Q[r * n + c] /= nr;
  }
  double mean = 0.0;
  for (auto& v : s) mean += (v = us(rng)) / n;
  std::vector<double> A(static_cast<std::size_t>(n * n), 0.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      for (int t = 0; t < n; ++t) A[r * n + c] += Q[r * n + t] * std::exp(s[t] - mean) * Q[c * n + t];
  return A;
}

nlohmann::json monomials_json(const Monomials& m) { return {{"a", m.a}, {"p", m.p}, {"D", m.D}}; }

GridFunction monomial_potential(const Grid& g, const Monomials& m) {
  const int n = g.dim;
  return GridFunction::sample(g, [&m, n](const double* x) {
    double v = 0.0;
    for (int d = 0; d < n; ++d) {
      const double ax = std::abs(x[d]);
      // exact powers keep the sign-flip symmetry bit-exact
      const double pw = m.p[d] == 1.0 ? ax : m.p[d] == 2.0 ? ax * ax : ax * ax * ax * ax;
      v += m.a[d] * pw;
    }
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) v += x[r] * m.D[r * n + c] * x[c];
    return v;
  });
}

}  // namespace

const std::vector<std::string>& known_families() {
  static const std::vector<std::string> f{"gaussian",     "gaussian-triple",  "gaussian-pair", "quartic",
                                          "unconditional-mixed", "even-mixed", "even-rotated", "shifted-gaussian",
                                          "mixture",      "balls",            "lp-bodies"};
  return f;
}

bool is_body_family(const std::string& potential) { return potential == "balls" || potential == "lp-bodies"; }

void to_json(nlohmann::json& j, const FamilySpec& f) {
  j = {{"potential", f.potential},
       {"k", f.k},
       {"n", f.n},
       {"half_width", f.half_width},
       {"points_per_axis", f.points_per_axis},
       {"rho", f.rho},
       {"lambda", f.lambda}};
  if (f.potential == "balls") j["radius"] = f.radius;
  if (is_body_family(f.potential)) j["resolution"] = f.resolution;
}

std::optional<FamilyProblem> family_problem(const FamilySpec& s) {
  const auto& fams = known_families();
  if (std::find(fams.begin(), fams.end(), s.potential) == fams.end()) return FamilyProblem{"potential", "unknown potential family '" + s.potential + "'"};
  if (s.k < 2 || s.k > 8) return FamilyProblem{"k", "must be in [2, 8]"};
  if (s.n < 1 || s.n > 3) return FamilyProblem{"n", "must be in {1, 2, 3}"};
  if (!(s.half_width > 0) || !std::isfinite(s.half_width)) return FamilyProblem{"grid.half_width", "must be positive"};
  if (s.points_per_axis < 2) return FamilyProblem{"grid.points_per_axis", "must be at least 2"};
  if (!s.lambda.empty()) {
    const int k = s.potential == "gaussian-triple" ? 3 : s.potential == "gaussian-pair" ? 2 : s.k;
    if (static_cast<int>(s.lambda.size()) != k) return FamilyProblem{"lambda", "needs k entries"};
    double sum = 0.0;
    for (double l : s.lambda) {
      if (!(l > 0)) return FamilyProblem{"lambda", "entries must be positive"};
      sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-12) return FamilyProblem{"lambda", "must sum to 1"};
  }
  if (s.potential == "mixture" && s.n != 1) return FamilyProblem{"n", "mixture is one-dimensional"};
  if (is_body_family(s.potential)) {
    if (s.n < 2) return FamilyProblem{"n", "bodies need n in {2, 3}"};
    if (!(s.radius > 0)) return FamilyProblem{"radius", "must be positive"};
    if (s.resolution < 8) return FamilyProblem{"resolution", "must be at least 8"};
  }
  return std::nullopt;
}

void validate_family(const FamilySpec& s) {
  if (const auto p = family_problem(s)) throw Error(Errc::InvalidFamily, p->field + ": " + p->what);
}

std::uint64_t corpus_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
}

Instance generate_instance(const FamilySpec& spec, std::uint64_t seed) {
  validate_family(spec);
  Instance in;
  in.family = spec.potential;
  in.seed = seed;
  in.n = spec.n;
  in.k = spec.potential == "gaussian-triple" ? 3 : spec.potential == "gaussian-pair" ? 2 : spec.k;
  in.rho = spec.rho;
  in.rho.k_context = in.k;
  in.lambda = spec.lambda.empty() ? std::vector<double>(in.k, 1.0 / in.k) : spec.lambda;
  in.params = nlohmann::json::object();
  std::mt19937_64 rng(seed);
  const int n = spec.n;
  const std::string& fam = spec.potential;

  if (is_body_family(fam)) {
    if (fam == "balls") {
      in.bodies.assign(in.k, ball_body(n, spec.radius, spec.resolution));
    } else {
      std::uniform_real_distribution<double> ax(0.7, 1.3);
      std::uniform_int_distribution<int> pick(0, 3);
      const double qs[4] = {1.5, 2.0, 3.0, 4.0};
      nlohmann::json draws = nlohmann::json::array();
      for (int i = 0; i < in.k; ++i) {
        std::array<double, 3> a{ax(rng), ax(rng), n == 3 ? ax(rng) : 1.0};
        const double q = qs[pick(rng)];
        in.bodies.push_back(lp_body(n, a, q, spec.resolution));
        draws.push_back({{"axes", a}, {"q", q}});
      }
      in.params["bodies"] = draws;
    }
  } else {
    in.grid = build_grid(n, spec.half_width, spec.points_per_axis);
    const Grid& g = in.grid;
    if (fam == "gaussian") {
      std::uniform_real_distribution<double> lc(std::log(0.5), std::log(2.0));
      std::vector<double> logc(in.k, 0.0);
      for (int i = 0; i + 1 < in.k; ++i) {
        logc[i] = lc(rng);
        logc.back() -= logc[i];
      }
      for (double l : logc)
        in.potentials.push_back(GridFunction::sample(g, [n, l](const double* x) { return 0.5 * sq_norm(x, n) - l; }));
      in.params["log_c"] = logc;
    } else if (fam == "gaussian-triple" || fam == "gaussian-pair") {
      const std::vector<double> sig = fam == "gaussian-triple" ? std::vector<double>{0.8, 1.0, 1.25}
                                                               : std::vector<double>{1.0, 2.0};
      for (double s : sig)
        in.potentials.push_back(
            GridFunction::sample(g, [n, s](const double* x) { return 0.5 * sq_norm(x, n) / (s * s); }));
      in.params["sigma"] = sig;
    } else if (fam == "quartic") {
      const GridFunction q = GridFunction::sample(g, [n](const double* x) {
        double v = 0.0;
        for (int d = 0; d < n; ++d) v += 0.5 * x[d] * x[d] + 0.1 * x[d] * x[d] * x[d] * x[d];
        return v;
      });
      in.potentials.assign(in.k, q);
    } else if (fam == "unconditional-mixed" || fam == "even-mixed") {
      nlohmann::json draws = nlohmann::json::array();
      for (int i = 0; i < in.k; ++i) {
        const Monomials m = draw_monomials(rng, n, fam == "even-mixed");
        in.potentials.push_back(monomial_potential(g, m));
        draws.push_back(monomials_json(m));
      }
      in.params["slots"] = draws;
    } else if (fam == "even-rotated") {
      std::uniform_real_distribution<double> uq(0.0, 0.05);
      nlohmann::json draws = nlohmann::json::array();
      for (int i = 0; i < in.k; ++i) {
        const std::vector<double> A = rotated_form(rng, n);
        const double q = uq(rng);
        in.potentials.push_back(GridFunction::sample(g, [n, A, q](const double* x) {
          double v = 0.0;
          for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) v += x[r] * A[r * n + c] * x[c];
          return 0.5 * v + q * v * v;
        }));
        draws.push_back({{"A", A}, {"quartic", q}});
      }
      in.params["slots"] = draws;
    } else if (fam == "shifted-gaussian") {
      std::uniform_real_distribution<double> um(-1.0, 1.0), us(0.7, 1.4);
      nlohmann::json draws = nlohmann::json::array();
      for (int i = 0; i < in.k; ++i) {
        std::vector<double> c(n);
        for (auto& v : c) v = um(rng);
        const double s = us(rng);
        in.potentials.push_back(
            GridFunction::sample(g, [n, c, s](const double* x) { return 0.5 * sq_norm(x, n, c.data()) / (s * s); }));
        draws.push_back({{"mean", c}, {"sigma", s}});
      }
      in.params["slots"] = draws;
    } else if (fam == "mixture") {
      std::uniform_real_distribution<double> uc(-2.0, 2.0), us(0.5, 1.5);
      nlohmann::json draws = nlohmann::json::array();
      for (int i = 0; i < in.k; ++i) {
        const double c1 = uc(rng), c2 = uc(rng), s1 = us(rng), s2 = us(rng);
        in.potentials.push_back(GridFunction::sample(g, [=](const double* x) {
          const double a = -0.5 * std::pow((x[0] - c1) / s1, 2), b = -0.5 * std::pow((x[0] - c2) / s2, 2);
          // -log(e^a + e^b / 2)
          const double top = std::max(a, b + std::log(0.5));
          return -(top + std::log(std::exp(a - top) + 0.5 * std::exp(b - top)));
        }));
        draws.push_back({{"centers", {c1, c2}}, {"sigmas", {s1, s2}}});
      }
      in.params["slots"] = draws;
    }
  }

  nlohmann::json fj = spec;
  fj["k"] = in.k;
  in.hash = instance_hash({{"family", fj}, {"seed", seed}, {"params", in.params}});
  return in;
}

}  // namespace santalo
