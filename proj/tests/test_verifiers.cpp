#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "santalo/error.hpp"
#include "santalo/verifiers.hpp"

using namespace santalo;

namespace {

constexpr double kPi = std::numbers::pi;

double r2_of(const double* x, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += x[d] * x[d];
  return s;
}

GridFunction gauss_values(const Grid& g, double c = 1.0, double sigma = 1.0, double shift = 0.0) {
  return GridFunction::sample(g, [=](const double* x) {
    double s = 0.0;
    for (int d = 0; d < g.dim; ++d) s += (x[d] - shift) * (x[d] - shift);
    return c * std::exp(-0.5 * s / (sigma * sigma));
  });
}

// Density of N(mean, sigma^2) with respect to the standard Gaussian (1D).
GridFunction gauss_rel(const Grid& g, double sigma, double mean = 0.0) {
  return GridFunction::sample(g, [=](const double* x) {
    const double z = (x[0] - mean) / sigma;
    return std::exp(-0.5 * z * z + 0.5 * x[0] * x[0]) / sigma;
  });
}

// Renormalizes rho so that int rho dgamma = 1 on the grid.
GridFunction normalize_rel(const GridFunction& rho) {
  const auto w = quadrature_weights(rho.grid());
  const GridFunction phi = gaussian_density(rho.grid());
  double z = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) z += w[i] * phi[i] * rho[i];
  return rho.map([z](double v) { return v / z; });
}

double ent_gauss(double s) { return 0.5 * (s * s - 1.0 - std::log(s * s)); }

// Random unconditional potential sum a_j |x_j|^{p_j} + d_j x_j^2.
GridFunction random_potential(std::mt19937_64& rng, const Grid& g) {
  std::uniform_real_distribution<double> a(0.2, 2.0), dd(0.0, 0.5);
  std::uniform_int_distribution<int> pick(0, 2);
  const int pw[3] = {1, 2, 4};
  double A[3], P[3], D[3];
  for (int d = 0; d < g.dim; ++d) {
    A[d] = a(rng);
    P[d] = pw[pick(rng)];
    D[d] = dd(rng);
  }
  return GridFunction::sample(g, [=](const double* x) {
    double v = 0.0;
    for (int d = 0; d < g.dim; ++d) v += A[d] * std::pow(std::abs(x[d]), P[d]) + D[d] * x[d] * x[d];
    return v;
  });
}

}  // namespace

TEST_CASE("bsunc equality family") {
  const std::vector<std::vector<double>> cs{{2.0, 0.5, 1.0}, {2.0, 0.5, 4.0, 0.25}};
  for (int n : {1, 2})
    for (const auto& c : cs) {
      const int k = static_cast<int>(c.size());
      const Grid g = build_grid(n, 8.0, n == 1 ? 161 : 41);
      std::vector<GridFunction> f;
      for (double ci : c) f.push_back(gauss_values(g, ci));
      const RhoProfile rho = RhoProfile::exponential(1.0 / (k - 1));
      const auto r = verify_bsunc(f, rho);
      const double oracle = std::pow(2 * kPi, 0.5 * n * k);
      CHECK(std::abs(r.slack) / r.rhs <= 1e-3);
      CHECK(r.lhs == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(r.pass);
      CHECK(r.hypothesis_margin >= -1e-12);
      CHECK(r.slack == r.rhs - r.lhs);
      const auto diag = equality_diagnostics(f, rho);
      for (int i = 0; i < k; ++i) {
        CHECK(std::abs(diag.c[i] - c[i]) <= 1e-4);
        CHECK(diag.residual[i] <= 1e-6);
      }
      CHECK(diag.product_deviation <= 1e-8);
      CHECK(diag.equality_family);
    }
}

TEST_CASE("bsunc shrinking and scaling") {
  const Grid g = build_grid(1, 8.0, 161);
  const RhoProfile rho = RhoProfile::exponential(0.5);
  std::vector<GridFunction> f(3, gauss_values(g, 0.5));
  const auto r = verify_bsunc(f, rho);
  CHECK(r.slack == doctest::Approx((1 - 1.0 / 8) * std::pow(2 * kPi, 1.5)).epsilon(1e-9));
  CHECK(r.pass);

  // lhs scales like t^k; rhs does not move
  std::mt19937_64 rng(7);
  std::vector<GridFunction> q;
  for (int i = 0; i < 3; ++i) q.push_back(random_potential(rng, g).map([](double v) { return std::exp(-v); }));
  const double t = 0.7;
  std::vector<GridFunction> qt;
  for (const auto& fi : q) qt.push_back(fi.map([t](double v) { return t * v; }));
  const auto a = verify_bsunc(q, rho), b = verify_bsunc(qt, rho);
  CHECK(std::abs(b.lhs / a.lhs - t * t * t) <= 1e-10);
  CHECK(a.rhs == b.rhs);
  CHECK(a.instance_hash != b.instance_hash);
}

TEST_CASE("bsunc with k = 2 on a conjugate pair reproduces the pair functional") {
  for (int n : {1, 2}) {
    const Grid g = build_grid(n, 8.0, n == 1 ? 161 : 41);
    const GridFunction V = GridFunction::sample(g, [n](const double* x) {
      double v = 0.0;
      for (int d = 0; d < n; ++d) v += 0.5 * x[d] * x[d] + 0.1 * std::pow(x[d], 4);
      return v;
    });
    const auto cp = legendre_conjugate(V);
    std::vector<GridFunction> f(2, GridFunction(g));
    for (std::size_t i = 0; i < g.size(); ++i) {
      f[0].set(i, std::exp(-V[i]));
      f[1].set(i, cp.dual.is_inf(i) ? 0.0 : std::exp(-cp.dual[i]));
    }
    const auto r = verify_bsunc(f, RhoProfile::exponential(1.0));
    CHECK(r.lhs == doctest::Approx(bs_pair_functional(V)).epsilon(1e-12));
    CHECK(r.lhs <= std::pow(2 * kPi, n) * (1 + 1e-4));
    CHECK(r.rhs == doctest::Approx(std::pow(2 * kPi, n)).epsilon(1e-4));
    CHECK(r.hypothesis_margin >= -1e-12);
  }
}

TEST_CASE("bsunc on random unconditional instances") {
  std::mt19937_64 rng(1234);
  const Grid g = build_grid(1, 8.0, 161);
  const RhoProfile rho = RhoProfile::power_exp(1.0, 1.5);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<GridFunction> V;
    for (int i = 0; i < 3; ++i) V.push_back(random_potential(rng, g));
    // scale so that the hypothesis is tight on the grid
    const double M = max_log_ratio(V, rho, true).value;
    std::vector<GridFunction> f;
    for (const auto& v : V) f.push_back(v.map([M](double x) { return std::exp(-x - M / 3); }));
    const auto r = verify_bsunc(f, rho);
    CHECK(r.hypothesis_margin >= -1e-12);
    CHECK(r.slack >= -1e-8);
    CHECK(r.pass);
  }
}

TEST_CASE("bsunc symmetrize or reject") {
  const Grid g = build_grid(1, 8.0, 161);
  std::vector<GridFunction> f(3, gauss_values(g, 1.0, 1.0, 0.3));
  VerifyOptions strict;
  strict.symmetrize = false;
  CHECK_THROWS_AS(verify_bsunc(f, RhoProfile::exponential(0.5), strict), Error);
  const auto r = verify_bsunc(f, RhoProfile::exponential(0.5));
  CHECK(r.extra.at("symmetrized") == true);
  VerifyOptions conj;
  conj.conjecture = true;
  CHECK_THROWS_AS(verify_bsunc(f, RhoProfile::exponential(0.5), conj), Error);
  const auto e = verify_bsunc(std::vector<GridFunction>(3, gauss_values(g)), RhoProfile::exponential(0.5), conj);
  CHECK(e.conjecture);
  CHECK(e.inequality_id == "bs_even_conjecture");
}

TEST_CASE("equality diagnostics flag a perturbed family") {
  const Grid g = build_grid(1, 8.0, 161);
  const RhoProfile rho = RhoProfile::exponential(0.5);
  std::vector<GridFunction> f;
  for (int i = 0; i < 3; ++i)
    f.push_back(GridFunction::sample(g, [](const double* x) { return std::exp(-0.5 * x[0] * x[0]) * (1 + 0.1 * std::sin(x[0])); }));
  const auto d = equality_diagnostics(f, rho);
  for (double res : d.residual) {
    CHECK(res > 0.02);
    CHECK(res < 0.2);
  }
  CHECK_FALSE(d.equality_family);
  nlohmann::json j = d;
  CHECK(j.contains("rho_condition_margin"));
}

TEST_CASE("rho product condition") {
  CHECK(rho_product_condition(RhoProfile::exponential(1.0), 3, 1) >= -1e-10);
  CHECK(rho_product_condition(RhoProfile::exponential(0.5), 4, 2) >= -1e-10);
  CHECK(rho_product_condition(RhoProfile::power_exp(1.0, 2.0), 3, 2) >= -1e-10);
  const double concave = rho_product_condition(RhoProfile::power_exp(1.0, 0.5), 3, 1);
  MESSAGE("PowerExp(1, 0.5) margin: " << concave);
  CHECK(std::isfinite(concave));
}

TEST_CASE("sup-convolution") {
  const Grid g = build_grid(1, 8.0, 161);
  const GridFunction f = gauss_values(g);
  const std::vector<double> half{0.5, 0.5};
  for (double x : {0.0, 1.0, -2.5}) CHECK(sup_convolution({f, f}, half, &x).value >= f.interpolate(&x) * (1 - 1e-12));

  // Gaussian closed form: sup is exp(-x^2 / (2 sum lambda_i sigma_i^2))
  const std::vector<double> s{0.8, 1.5}, l{0.3, 0.7};
  const double v = l[0] * s[0] * s[0] + l[1] * s[1] * s[1];
  std::vector<GridFunction> fs{gauss_values(g, 1.0, s[0]), gauss_values(g, 1.0, s[1])};
  for (auto mode : {SupConvMode::Interpolate, SupConvMode::Snap}) {
    VerifyOptions opt;
    opt.supconv = mode;
    for (double x : {0.0, 0.55, 1.3, -2.0}) {
      const auto r = sup_convolution(fs, l, &x, opt);
      // snapping the constraint to the lattice costs O(h) in the argument
      const double bound = mode == SupConvMode::Interpolate ? 5e-3 : 2 * g.spacing();
      CHECK(std::abs(r.value - std::exp(-x * x / (2 * v))) <= bound);
      CHECK(r.certification == Certification::Exhaustive);
    }
  }
  // f2 concentrated at the origin forces y1 = x / lambda_1
  GridFunction delta(g, 0.0);
  delta.set(*g.origin(), 1.0);
  for (double x : {0.0, 0.5, -1.0}) {
    const double y = x / 0.5;
    const double want = std::pow(f.interpolate(&y), 0.5);
    CHECK(sup_convolution({f, delta}, half, &x).value == doctest::Approx(want).epsilon(1e-9));
  }
  CHECK_THROWS_AS(sup_convolution({f, f}, {1.0, 0.0}, &s[0]), Error);
}

TEST_CASE("Prekopa-Leindler") {
  const Grid g = build_grid(1, 10.0, 201);
  const double h = g.spacing();
  // shifted copies of one log-concave profile: equality
  auto bump = [&](double c) {
    return GridFunction::sample(g, [=](const double* x) { return std::exp(-std::pow(x[0] - c, 2) / 2 - 0.1 * std::pow(x[0] - c, 4)); });
  };
  const auto eq = verify_prekopa_leindler({bump(-10 * h), bump(20 * h)}, {0.5, 0.5}, std::nullopt);
  MESSAGE("shifted copies slack " << eq.slack << " template " << eq.extra.at("template_residual"));
  CHECK(std::abs(eq.slack) <= 1e-3 * eq.rhs);
  CHECK(eq.extra.at("template_residual").get<double>() <= 1e-3);
  CHECK(eq.pass);

  const GridFunction gauss = gauss_values(g);
  const GridFunction laplace = GridFunction::sample(g, [](const double* x) { return std::exp(-std::abs(x[0])); });
  const auto gl = verify_prekopa_leindler({gauss, laplace}, {0.5, 0.5}, std::nullopt);
  MESSAGE("Gaussian/Laplace slack " << gl.slack);
  CHECK(gl.slack > 1e-2);
  CHECK(gl.extra.at("template_residual").get<double>() > 1e-2);

  CHECK_THROWS_AS(verify_prekopa_leindler({gauss, laplace}, {1.0, 0.0}, std::nullopt), Error);
  try {
    verify_prekopa_leindler({gauss, gauss}, {0.5, 0.5}, gauss.map([](double v) { return 0.5 * v; }));
    FAIL("non-dominating h accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::HDoesNotDominate);
  }
  const auto big = verify_prekopa_leindler({gauss, gauss}, {0.5, 0.5}, GridFunction(g, 1.0));
  CHECK(big.rhs == doctest::Approx(20.0));
  CHECK(big.slack > 0);
}

TEST_CASE("pointwise Prekopa-Leindler") {
  const std::vector<double> half{0.5, 0.5};
  {
    const Grid g = build_grid(1, 8.0, 81);
    const GridFunction f = gauss_values(g);
    const auto r = verify_pointwise_pl({f, f}, half);
    CHECK(std::abs(r.slack) <= 1e-12);
    CHECK(r.extra.at("normalization_error").get<double>() <= 1e-12);
  }
  // sigma = (1, 2): lhs = (sqrt(2) / 1.5) e^{-x^2/4.5}, rhs = e^{-x^2/5}
  double prev = kInf;
  for (int m : {81, 161, 321}) {
    const Grid g = build_grid(1, 10.0, m);
    const auto r = verify_pointwise_pl({gauss_values(g, 1.0, 1.0), gauss_values(g, 1.0, 2.0)}, half);
    const double x = r.extra.at("worst_x")[0];
    MESSAGE("m=" << m << " slack " << r.slack << " at x=" << x << " tol " << r.tol);
    CHECK(r.pass);
    CHECK(r.slack >= -r.tol);
    CHECK(r.extra.at("normalization_error").get<double>() <= 1e-6);
    CHECK(r.tol < prev);
    if (prev < kInf) CHECK(r.tol <= 0.5 * prev + 1e-10);
    prev = r.tol;
  }
  {
    const Grid g = build_grid(1, 10.0, 161);
    const double x0 = 0.0;
    const double lhs = std::sqrt(2.0) / 1.5 * std::exp(-x0 * x0 / 4.5), rhs = std::exp(-x0 * x0 / 5);
    CHECK(rhs - lhs > 0.05);
    (void)g;
  }
  // random mixtures
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> c(-2, 2), s(0.5, 1.5);
  const Grid g = build_grid(1, 8.0, 81);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<GridFunction> f;
    for (int i = 0; i < 2; ++i) {
      const double c1 = c(rng), c2 = c(rng), s1 = s(rng), s2 = s(rng);
      f.push_back(GridFunction::sample(g, [=](const double* x) {
        return std::exp(-0.5 * std::pow((x[0] - c1) / s1, 2)) + 0.5 * std::exp(-0.5 * std::pow((x[0] - c2) / s2, 2));
      }));
    }
    const auto r = verify_pointwise_pl(f, half);
    CHECK(r.slack >= -r.tol);
  }
  // coarse grid with a starved search budget is recorded as sampled
  VerifyOptions opt;
  opt.search.budget = 10;
  opt.search.samples = 200;
  opt.search.min_coarse = 100;
  const Grid coarse = build_grid(1, 8.0, 21);
  const auto r = verify_pointwise_pl({gauss_values(coarse), gauss_values(coarse, 1, 1.5)}, half, opt);
  CHECK(r.certification == Certification::Sampled);
  CHECK(r.tol > verify_pointwise_pl({gauss_values(g), gauss_values(g, 1, 1.5)}, half).tol);
}

TEST_CASE("displacement convexity") {
  const Grid g = build_grid(1, 6.0, 121);
  const std::vector<double> third(3, 1.0 / 3);
  {
    const auto r = verify_displacement_convexity(std::vector<GridFunction>(3, GridFunction(g, 1.0)), third);
    CHECK(std::abs(r.slack) <= 1e-6);
    CHECK(std::abs(r.lhs) <= 1e-6);
  }
  const std::vector<double> sig{0.8, 1.0, 1.25};
  std::vector<GridFunction> rho;
  for (double s : sig) rho.push_back(normalize_rel(gauss_rel(g, s)));
  const auto r = verify_displacement_convexity(rho, third);
  const double sbar = (sig[0] + sig[1] + sig[2]) / 3;
  double F = 0.0, E = 0.0;
  for (double s : sig) {
    F += (s - sbar) * (s - sbar) / 6;
    E += ent_gauss(s) / 3;
  }
  const double weak = r.extra.at("weak_slack");
  MESSAGE("weak slack " << weak << " oracle " << E - F << "; strong slack " << r.slack << " oracle "
                        << E - F - ent_gauss(sbar));
  CHECK(std::abs(weak - (E - F)) <= 1e-3);
  CHECK(std::abs(r.slack - (E - F - ent_gauss(sbar))) <= 1e-3);
  CHECK(r.pass);

  // not even: N(-a, 1) and N(a, 1)
  const Grid wide = build_grid(1, 7.0, 141);
  for (double a : {0.5, 1.0}) {
    const auto s = verify_displacement_convexity({normalize_rel(gauss_rel(wide, 1.0, -a)), normalize_rel(gauss_rel(wide, 1.0, a))},
                                                 {0.5, 0.5});
    // barycenter is gamma and F = a^2/2 = Ent(N(a,1)): equality
    CHECK(s.slack >= -1e-6);
    CHECK(std::abs(s.slack) <= 1e-4);
    CHECK(std::abs(s.extra.at("weak_slack").get<double>()) <= 1e-4);
  }
}

TEST_CASE("Talagrand-type barycenter bound") {
  const Grid g = build_grid(1, 6.0, 121);
  {
    const auto r = verify_talagrand_barycenter(std::vector<GridFunction>(3, GridFunction(g, 1.0)));
    CHECK(std::abs(r.slack) <= 1e-6);
  }
  const std::vector<double> sig{0.8, 1.0, 1.25};
  std::vector<GridFunction> rho;
  for (double s : sig) rho.push_back(normalize_rel(gauss_rel(g, s)));
  const auto r = verify_talagrand_barycenter(rho);
  const double sbar = (sig[0] + sig[1] + sig[2]) / 3;
  double F = 0.0, E = 0.0;
  for (double s : sig) {
    F += (s - sbar) * (s - sbar) / 6;
    E += ent_gauss(s);
  }
  const double rhs = 2.0 / 9.0 * E;
  MESSAGE("lhs " << r.lhs << " (oracle " << F << "), rhs " << r.rhs << " (oracle " << rhs << ")");
  CHECK(std::abs(F - 0.0169) <= 1e-4);
  CHECK(std::abs(rhs - 0.0225) <= 1e-4);
  CHECK(std::abs(r.lhs - F) <= 1.5e-3);
  CHECK(std::abs(r.rhs - rhs) <= 1.5e-3);
  CHECK(r.slack > 0);
  CHECK(r.pass);

  // sigma_1 sigma_2 = 1: the k = 2 bound is an equality, error O(h^2)
  const auto two = verify_talagrand_barycenter({rho[0], rho[2]});
  CHECK(two.extra.at("fathi_relative_error").get<double>() <= 2e-2);
  CHECK(std::abs(two.slack) <= 0.05 * g.spacing() * g.spacing());
  CHECK(two.pass);
}

TEST_CASE("pointwise entropy bound") {
  const Grid g = build_grid(1, 8.0, 81);
  {
    const auto r = verify_pointwise_entropy_bound({GridFunction(g, 1.0), GridFunction(g, 1.0)});
    CHECK(std::abs(r.lhs - 1.0) <= 1.5 * g.spacing() * g.spacing());
    CHECK(r.rhs == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.pass);
  }
  const Grid fine = build_grid(1, 8.0, 161);
  const auto r = verify_pointwise_entropy_bound({normalize_rel(gauss_rel(fine, 1.0)), normalize_rel(gauss_rel(fine, 2.0))});
  MESSAGE("Gaussian pair: p_max " << r.lhs << " rhs " << r.rhs);
  CHECK(r.slack > 0.1);
  CHECK(r.pass);
}

TEST_CASE("Blaschke-Santalo for bodies") {
  for (double rad : {1.0, 1.3}) {
    std::vector<ConvexBodyRadial> K(3, ball_body(2, rad));
    const auto r = verify_bs_bodies(K, RhoProfile::exponential(1.0 / (2 * rad * rad)));
    MESSAGE("r=" << rad << " lhs " << r.lhs << " rhs " << r.rhs << " margin " << r.hypothesis_margin);
    CHECK(r.lhs == doctest::Approx(std::pow(kPi * rad * rad, 3)).epsilon(1e-9));
    CHECK(std::abs(r.slack) / r.rhs <= 1e-3);
    CHECK(r.hypothesis_margin >= -1e-9);
    CHECK(r.pass);
  }
  std::vector<ConvexBodyRadial> sq(3, lp_body(2, {1, 1, 1}, INFINITY));
  const auto s = verify_bs_bodies(sq, RhoProfile::exponential(0.5));
  MESSAGE("squares: margin " << s.hypothesis_margin << " slack " << s.slack);
  CHECK((s.hypothesis_margin < 0 || s.slack > 0));
  CHECK_THROWS_AS(verify_bs_bodies({ball_body(2), ConvexBodyRadial::from_function(2, 64, 0, [](const double* u) {
                                      return 1.0 + 0.2 * u[0];
                                    })},
                                   RhoProfile::exponential(1.0)),
                  Error);
}

TEST_CASE("radial Blaschke-Santalo") {
  for (int n : {2, 3}) {
    const auto r = verify_radial_bs(std::vector<ConvexBodyRadial>(3, ball_body(n)));
    CHECK(std::abs(r.slack) <= 1e-3 * r.rhs);
    CHECK(std::abs(r.hypothesis_margin) <= 1e-9);
    CHECK(r.pass);
    const auto small = verify_radial_bs(std::vector<ConvexBodyRadial>(3, ball_body(n, 0.9)));
    CHECK(small.slack == doctest::Approx((1 - std::pow(0.9, 3 * n)) * std::pow(ball_volume(n), 3)).epsilon(1e-3));
    CHECK(small.hypothesis_margin > 0);
  }
  const auto e = verify_radial_bs({lp_body(2, {1.5, 0.8, 1}, 2.0), ball_body(2), ball_body(2)});
  CHECK(e.hypothesis_margin < 0);
  CHECK_FALSE(e.pass);
  CHECK(e.reason == "hypothesis");
}

TEST_CASE("affine isoperimetric inequalities") {
  const Grid g = build_grid(1, 8.0, 161);
  const GridFunction q = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
  const RhoProfile rho = RhoProfile::exponential(0.5);
  for (double lam : {0.0, 0.25, 0.5, 0.75}) {
    const auto r = verify_affine_isoperimetric(std::vector<GridFunction>(3, q), lam, rho);
    CHECK(std::abs(r.slack) / r.rhs <= 1e-3);
    CHECK(r.pass);
    CHECK(r.extra.at("quadratic_fit").at("residual").get<double>() <= 1e-9);
    if (lam == 0.5) CHECK(r.certification == Certification::NotApplicable);
  }
  // lambda = 1/2 does not look at rho
  const GridFunction w = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0] + 0.05 * std::pow(x[0], 4); });
  const auto a = verify_affine_isoperimetric(std::vector<GridFunction>(3, w), 0.5, rho);
  const auto b = verify_affine_isoperimetric(std::vector<GridFunction>(3, w), 0.5, RhoProfile::exponential(3.0));
  CHECK(a.rhs == b.rhs);
  CHECK(a.rhs == doctest::Approx(std::pow(2 * kPi, 1.5)));
  CHECK(a.slack > 0);

  std::vector<ConvexBodyRadial> B(3, ball_body(2, 1.0, 512));
  for (double p : {0.0, 1.0, 2.0}) {
    const auto r = verify_affine_isoperimetric(B, p, RhoProfile::exponential(0.5));
    CHECK(std::abs(r.slack) <= 1e-3 * r.rhs);
    CHECK(r.pass);
  }
  CHECK_THROWS_AS(verify_affine_isoperimetric(std::vector<ConvexBodyRadial>(3, lp_body(2, {1, 1, 1}, INFINITY, 512)), 1.0,
                                              RhoProfile::exponential(0.5)),
                  Error);
}

TEST_CASE("report arithmetic and serialization") {
  InequalityReport r;
  r.lhs = 1.0;
  r.rhs = 0.9;
  r.tol = 0.05;
  r.finalize();
  CHECK(r.slack == 0.9 - 1.0);
  CHECK_FALSE(r.pass);
  CHECK(r.reason == "slack");
  CHECK(r.theorem_failure());
  r.tol = 0.2;
  r.hypothesis_margin = -1.0;
  r.finalize();
  CHECK(r.reason == "hypothesis");
  CHECK_FALSE(r.theorem_failure());
  nlohmann::json j = r;
  CHECK(j.at("slack") == r.slack);
  CHECK(default_tolerance("pointwise_pl").at(0.1, 1.0) > default_tolerance("pointwise_pl").at(0.05, 1.0));
}
