#include <cmath>
#include <random>

#include "doctest.h"
#include "santalo/convexity.hpp"
#include "santalo/error.hpp"

using namespace santalo;

namespace {

// Oracle: per-node maximum over every primal node.
GridFunction brute_conjugate(const GridFunction& V, const Grid& dual) {
  const Grid& g = V.grid();
  GridFunction out(dual);
  for (std::size_t j = 0; j < dual.size(); ++j) {
    auto y = dual.point(j);
    double best = -kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (V.is_inf(i)) continue;
      auto x = g.point(i);
      double dot = 0.0;
      for (int d = 0; d < g.dim; ++d) dot += x[d] * y[d];
      best = std::max(best, dot - V[i]);
    }
    out.set(j, best);
  }
  return out;
}

ConjugateOptions raw() {
  ConjugateOptions o;
  o.saturate_boundary = false;
  return o;
}

}  // namespace

TEST_CASE("conjugate of the quadratic is self-dual at nodes") {
  Grid g = build_grid(1, 4.0, 81);
  auto V = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
  auto c = legendre_conjugate(V);
  for (std::size_t j = 1; j + 1 < g.size(); ++j) {
    auto y = g.point(j);
    CHECK(c.dual[j] == doctest::Approx(0.5 * y[0] * y[0]).epsilon(1e-14));
    CHECK_FALSE(c.boundary_flag[j]);
  }
  CHECK(c.boundary_flag[0]);
  CHECK(c.dual.is_inf(0));
}

TEST_CASE("conjugate of |x| is the indicator of [-1,1]") {
  Grid g = build_grid(1, 4.0, 81);
  auto V = GridFunction::sample(g, [](const double* x) { return std::abs(x[0]); });
  auto c = legendre_conjugate(V);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double y = g.point(j)[0];
    if (std::abs(y) <= 1.0 + 1e-12) {
      CHECK(c.dual[j] == doctest::Approx(0.0).epsilon(1e-15));
      CHECK_FALSE(c.boundary_flag[j]);
    } else {
      CHECK(c.boundary_flag[j]);
      CHECK(c.dual.is_inf(j));
    }
  }
  CHECK(c.boundary_fraction > kUnboundedFraction);
  ConjugateOptions strict;
  strict.strict = true;
  CHECK_THROWS_AS(legendre_conjugate(V, strict), Error);
}

TEST_CASE("conjugate of x^4/4") {
  Grid g = build_grid(1, 3.0, 301);
  auto V = GridFunction::sample(g, [](const double* x) { return std::pow(x[0], 4) / 4; });
  auto c = legendre_conjugate(V);
  auto oracle = brute_conjugate(V, g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double y = g.point(j)[0];
    if (std::abs(y) > 2.0) continue;
    CHECK(c.dual[j] == doctest::Approx(oracle[j]).epsilon(1e-13));
    CHECK(std::abs(c.dual[j] - 0.75 * std::pow(std::abs(y), 4.0 / 3.0)) <= 5e-3);
  }
}

TEST_CASE("sweep equals brute force on small grids") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Case {
    int dim, m;
  };
  for (Case cs : {Case{1, 57}, Case{2, 23}, Case{3, 11}}) {
    Grid g = build_grid(cs.dim, 2.0, cs.m);
    Grid dual = build_grid(cs.dim, 3.0, cs.m + 4);
    for (int rep = 0; rep < 3; ++rep) {
      GridFunction V(g);
      for (std::size_t i = 0; i < g.size(); ++i) {
        auto x = g.point(i);
        double r2 = 0.0;
        for (double xi : x) r2 += xi * xi;
        V.set(i, (rep == 2 && u(rng) > 0.8) ? kInf : 0.4 * r2 + 0.6 * u(rng));
      }
      ConjugateOptions o = raw();
      o.dual_grid = dual;
      auto c = legendre_conjugate(V, o);
      auto oracle = brute_conjugate(V, dual);
      double worst = 0.0;
      for (std::size_t j = 0; j < dual.size(); ++j) worst = std::max(worst, std::abs(c.dual[j] - oracle[j]));
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("Fenchel-Young and order reversal") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Grid g = build_grid(2, 2.0, 15);
  GridFunction V(g), W(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    V.set(i, x[0] * x[0] + 0.3 * std::abs(x[1]) + u(rng));
    W.set(i, V[i] + u(rng));  // V <= W
  }
  auto Vs = legendre_conjugate(V, raw()).dual;
  auto Ws = legendre_conjugate(W, raw()).dual;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    CHECK(Vs[i] >= Ws[i]);
    for (std::size_t j = 0; j < g.size(); ++j) {
      auto y = g.point(j);
      CHECK(V[i] + Vs[j] - (x[0] * y[0] + x[1] * y[1]) >= -1e-12);
    }
  }
}

TEST_CASE("convexify") {
  Grid g = build_grid(1, 2.0, 81);
  SUBCASE("convex quadratic is unchanged") {
    auto V = GridFunction::sample(g, [](const double* x) { return 0.4 * x[0] * x[0] + 0.2 * x[0]; });
    auto env = convexify(V);
    const double h = g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(env[i] - V[i]) <= 0.4 * h * h);
  }
  SUBCASE("double well gets a flat bottom") {
    auto V = GridFunction::sample(g, [](const double* x) { return (x[0] * x[0] - 1) * (x[0] * x[0] - 1); });
    auto env = convexify(V);
    // oracle: brute-force conjugate twice
    auto vs = brute_conjugate(V, g);
    auto vss = brute_conjugate(vs, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.point(i)[0];
      CHECK(env[i] <= V[i]);
      if (std::abs(x) > 1.05 && std::abs(x) < 1.9) CHECK(env[i] == doctest::Approx(vss[i]).epsilon(1e-12));
      if (std::abs(x) <= 1.0 + 1e-12) CHECK(std::abs(env[i]) <= 1e-12);
    }
    CHECK(is_discretely_convex(env));
    CHECK_FALSE(is_discretely_convex(V));
    auto env2 = convexify(env);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(env2[i] - env[i]) <= 1e-10);
  }
  SUBCASE("2D saddle is caught by the diagonal test") {
    Grid g2 = build_grid(2, 1.0, 11);
    auto S = GridFunction::sample(g2, [](const double* x) { return 3 * x[0] * x[1] + x[0] * x[0] + x[1] * x[1]; });
    CHECK(min_second_difference(S) < 0.0);
    auto env = convexify(S);
    CHECK(is_discretely_convex(env));
    for (std::size_t i = 0; i < g2.size(); ++i) CHECK(env[i] <= S[i]);
  }
}

TEST_CASE("biconjugate below V for random potentials") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Grid g = build_grid(2, 1.5, 13);
  GridFunction V(g);
  for (std::size_t i = 0; i < g.size(); ++i) V.set(i, u(rng));
  auto env = convexify(V);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(env[i] <= V[i]);
  auto env2 = convexify(env);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(env2[i] - env[i]) <= 1e-10);
}

TEST_CASE("c-transform") {
  Grid g = build_grid(1, 2.0, 21);
  SUBCASE("k=2 is Fenchel conjugation") {
    auto V = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
    auto W = GridFunction::sample(g, [](const double* x) { return std::cosh(x[0]); });
    auto ct = c_transform_multimarginal({V, W}, 0, 1.0);
    auto ws = brute_conjugate(W, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(ct[i] == doctest::Approx(ws[i]).epsilon(1e-13));
  }
  SUBCASE("Gaussian tuple at C=1/(k-1) is a fixed point") {
    auto V = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
    for (int idx = 0; idx < 3; ++idx) {
      auto ct = c_transform_multimarginal({V, V, V}, idx, 0.5);
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(ct[i] - V[i]) <= 1e-6);
    }
  }
  SUBCASE("indicator triple: slot 0 collapses to the origin") {
    auto V = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
    auto ct = c_transform_multimarginal({V, V, V}, 0, 1.0);
    CHECK(std::abs(ct[10]) <= 1e-12);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.point(i)[0];
      if (x != 0.0) CHECK(ct[i] >= 2.0 * std::abs(x) * 1.9 - 1e-9);
    }
  }
  SUBCASE("tightening never shrinks the integral") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 0.5);
    Grid gc = build_grid(1, 2.0, 15);
    std::vector<GridFunction> t;
    for (int i = 0; i < 3; ++i) {
      const double a = 0.6 + u(rng);
      t.push_back(GridFunction::sample(gc, [&](const double* x) { return a * x[0] * x[0] + u(rng); }));
    }
    // enforce the constraint sum V_i >= C sum <x_i,x_j> with C = 1/2 (a_i >= 1/2 suffices)
    auto ct = c_transform_multimarginal(t, 1, 0.5);
    for (std::size_t i = 0; i < gc.size(); ++i) CHECK(ct[i] <= t[1][i] + 1e-12);
    CHECK(integrate_exp(ct) >= integrate_exp(t[1]));
  }
  SUBCASE("budget") {
    auto V = GridFunction(g, 0.0);
    CHECK_THROWS_AS(c_transform_multimarginal({V, V, V}, 0, 1.0, 100.0), Error);
  }
}

TEST_CASE("finite differences") {
  Grid g = build_grid(1, 2.0, 81);
  auto V = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
  auto G = finite_diff_gradient(V);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(G.at(i)[0] == doctest::Approx(g.point(i)[0]).epsilon(1e-12));

  auto Q = GridFunction::sample(g, [](const double* x) { return std::pow(x[0], 4); });
  auto H = finite_diff_hessian(Q);
  // x = 0.5 is node 50; analytic 12x^2 = 3
  CHECK(g.point(50)[0] == 0.5);
  CHECK(std::abs(H.at(50)[0] - 3.0) <= 2.5 * g.spacing() * g.spacing());

  Grid g2 = build_grid(2, 1.0, 21);
  auto P = GridFunction::sample(g2, [](const double* x) { return x[0] * x[0] + 3 * x[0] * x[1] + 2 * x[1] * x[1]; });
  auto H2 = finite_diff_hessian(P);
  for (std::size_t i = 0; i < g2.size(); ++i) {
    REQUIRE(H2.valid[i]);
    const double* h = H2.at(i);
    CHECK(h[1] == h[2]);
    CHECK(h[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(h[3] == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(h[1] == doctest::Approx(3.0).epsilon(1e-9));
  }

  auto I = GridFunction::sample(g, [](const double* x) { return std::abs(x[0]) < 1.0 ? 0.0 : kInf; });
  auto GI = finite_diff_gradient(I);
  CHECK_FALSE(GI.valid[0]);
  CHECK_FALSE(GI.valid[60]);  // x = 1 is +inf
  CHECK_FALSE(GI.valid[59]);  // neighbor of +inf
  CHECK(GI.valid[40]);
}
