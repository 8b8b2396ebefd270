#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "santalo/error.hpp"
#include "santalo/grid.hpp"

using namespace santalo;

TEST_CASE("grid nodes follow the node formula") {
  Grid g = build_grid(1, 1.0, 3);
  CHECK(g.coord(0) == -1.0);
  CHECK(g.coord(1) == 0.0);
  CHECK(g.coord(2) == 1.0);

  Grid g2 = build_grid(2, 2.0, 5);
  CHECK(g2.size() == 25);
  CHECK(g2.spacing() == 1.0);

  Grid g3 = build_grid(1, 6.0, 241);
  CHECK(g3.spacing() == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(g3.coord(120) == 0.0);
  CHECK(g3.origin().value() == 120);

  CHECK(build_grid(2, 3.0, 7) == build_grid(2, 3.0, 7));
  CHECK(build_grid(2, 3.0, 7) != build_grid(2, 3.0, 9));
}

TEST_CASE("grid coordinates are symmetric bit-exactly") {
  for (int m : {2, 3, 10, 121, 401}) {
    Grid g = build_grid(1, 6.3, m);
    for (int j = 0; j < m; ++j) CHECK(g.coord(j) == -g.coord(m - 1 - j));
    CHECK(g.coord(0) == -6.3);
    CHECK(g.coord(m - 1) == 6.3);
  }
}

TEST_CASE("unsupported dimensions are rejected") {
  CHECK_THROWS_AS(build_grid(4, 1.0, 3), Error);
  CHECK_THROWS_AS(build_grid(0, 1.0, 3), Error);
  try {
    build_grid(4, 1.0, 3);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionUnsupported);
  }
  CHECK_THROWS_AS(build_grid(1, 1.0, 1), Error);
}

TEST_CASE("flat index round trip") {
  Grid g = build_grid(3, 1.0, 5);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g.flat(g.index(i)) == i);
  // axis 0 is slowest
  CHECK(g.index(1)[2] == 1);
  CHECK(g.index(25)[0] == 1);
}

TEST_CASE("symmetrize_unconditional") {
  Grid g = build_grid(1, 2.0, 9);
  auto odd = GridFunction::sample(g, [](const double* x) { return x[0]; });
  auto s = symmetrize_unconditional(odd);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(s[i] == 0.0);

  auto absf = GridFunction::sample(g, [](const double* x) { return std::abs(x[0]); });
  auto sa = symmetrize_unconditional(absf);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(sa[i] == absf[i]);

  // oracle: enumerate the 4 sign flips of x + y^2
  Grid g2 = build_grid(2, 1.5, 7);
  auto f2 = GridFunction::sample(g2, [](const double* x) { return x[0] + x[1] * x[1]; });
  auto s2 = symmetrize_unconditional(f2);
  for (std::size_t i = 0; i < g2.size(); ++i) {
    auto p = g2.point(i);
    double acc = 0.0;
    for (double e0 : {-1.0, 1.0})
      for (double e1 : {-1.0, 1.0}) acc += e0 * p[0] + (e1 * p[1]) * (e1 * p[1]);
    CHECK(s2[i] == doctest::Approx(acc / 4).epsilon(1e-14));
    CHECK(s2[i] == doctest::Approx(p[1] * p[1]).epsilon(1e-14));
  }
  CHECK(is_unconditional(s2));
  CHECK_FALSE(is_unconditional(f2));
}

TEST_CASE("symmetrization is idempotent bit-exactly") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int dim = 1; dim <= 3; ++dim) {
    Grid g = build_grid(dim, 1.0, dim == 3 ? 6 : 9);
    GridFunction f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f.set(i, u(rng));
    auto s1 = symmetrize_unconditional(f);
    auto s2 = symmetrize_unconditional(s1);
    CHECK(is_unconditional(s1));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(s1[i] == s2[i]);
  }
}

TEST_CASE("quadrature of Gaussians") {
  Grid g = build_grid(1, 6.0, 241);
  auto v = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
  CHECK(integrate_exp(v) == doctest::Approx(std::sqrt(2 * std::numbers::pi)).epsilon(1e-6));

  Grid g2 = build_grid(2, 6.0, 121);
  auto v2 = GridFunction::sample(g2, [](const double* x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); });
  // oracle: product of 1D trapezoid sums
  Grid g1 = build_grid(1, 6.0, 121);
  auto v1 = GridFunction::sample(g1, [](const double* x) { return 0.5 * x[0] * x[0]; });
  const double i1 = integrate_exp(v1);
  CHECK(integrate_exp(v2) == doctest::Approx(i1 * i1).epsilon(1e-13));
  CHECK(std::abs(integrate_exp(v2) - 2 * std::numbers::pi) < 1e-4);
}

TEST_CASE("quadrature treats +inf as an indicator boundary") {
  Grid g = build_grid(1, 4.0, 81);
  auto ind = GridFunction::sample(g, [](const double* x) { return std::abs(x[0]) <= 1.0 + 1e-12 ? 0.0 : kInf; });
  CHECK(integrate_exp(ind) == doctest::Approx(2.0).epsilon(1e-14));
  // single finite node has zero length
  auto pt = GridFunction::sample(g, [](const double* x) { return x[0] == 0.0 ? 0.0 : kInf; });
  CHECK(integrate_exp(pt) == 0.0);
}

TEST_CASE("mass leak warning") {
  Grid g = build_grid(1, 2.0, 41);
  auto v = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
  CHECK(quadrature_integrate(v).mass_leak);
  Grid g8 = build_grid(1, 8.0, 161);
  auto v8 = GridFunction::sample(g8, [](const double* x) { return 0.5 * x[0] * x[0]; });
  CHECK_FALSE(quadrature_integrate(v8).mass_leak);
}

TEST_CASE("quadrature is linear in direct mode") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Grid g = build_grid(2, 1.0, 17);
  GridFunction f(g), h(g), c(g);
  const double a = 1.7, b = -0.3;
  for (std::size_t i = 0; i < g.size(); ++i) {
    f.set(i, u(rng));
    h.set(i, u(rng));
    c.set(i, a * f[i] + b * h[i]);
  }
  const double lhs = integrate(c), rhs = a * integrate(f) + b * integrate(h);
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
}

TEST_CASE("sample_density") {
  Grid g = build_grid(1, 1.0, 3);
  auto v = GridFunction::sample(g, [](const double* x) { return 0.5 * x[0] * x[0]; });
  auto m = sample_density(v);
  const double e = std::exp(-0.5) / 2, z = 2 * e + 1.0;
  REQUIRE(m.size() == 3);
  CHECK(m.weights[0] == doctest::Approx(e / z).epsilon(1e-15));
  CHECK(m.weights[1] == doctest::Approx(1.0 / z).epsilon(1e-15));
  CHECK(m.node_index[2] == 2);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  Grid g2 = build_grid(2, 3.0, 13);
  GridFunction r(g2);
  for (std::size_t i = 0; i < g2.size(); ++i) r.set(i, u(rng));
  auto mr = sample_density(r);
  double s = 0.0;
  for (double w : mr.weights) {
    CHECK(w >= 0.0);
    s += w;
  }
  CHECK(std::abs(s - 1.0) <= 1e-12);

  GridFunction allinf(g, kInf);
  CHECK_THROWS_AS(sample_density(allinf), Error);
}

TEST_CASE("grid function json round trip") {
  Grid g = build_grid(2, 1.0, 3);
  auto f = GridFunction::sample(g, [](const double* x) { return x[0] > 0.5 ? kInf : x[0] + x[1]; });
  nlohmann::json j = f;
  auto back = grid_function_from_json(j);
  CHECK(back.grid() == g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(back.is_inf(i) == f.is_inf(i));
    if (!f.is_inf(i)) CHECK(back[i] == f[i]);
  }
  CHECK(j["inf_mask"].size() == 9);
}

TEST_CASE("grid functions reject NaN and -inf") {
  Grid g = build_grid(1, 1.0, 3);
  CHECK_THROWS_AS(GridFunction(g, std::vector<double>{0.0, std::nan(""), 1.0}), Error);
  CHECK_THROWS_AS(GridFunction(g, std::vector<double>{0.0, -kInf, 1.0}), Error);
}

TEST_CASE("interpolation") {
  Grid g = build_grid(2, 1.0, 5);
  auto f = GridFunction::sample(g, [](const double* x) { return 2 * x[0] - x[1] + 0.25; });
  double p[2] = {0.1234, -0.77};
  CHECK(f.interpolate(p) == doctest::Approx(2 * 0.1234 + 0.77 + 0.25).epsilon(1e-14));
  double out[2] = {1.5, 0.0};
  CHECK(f.interpolate(out) == kInf);
}

TEST_CASE("discrete measures validate their support") {
  CHECK_THROWS_AS(DiscreteMeasure::make(1, {0.0, 0.0}, {0.5, 0.5}), Error);
  auto m = DiscreteMeasure::make(1, {-1.0, 1.0}, {1.0, 3.0});
  CHECK(m.weights[1] == 0.75);
  CHECK(m.second_moment() == doctest::Approx(1.0));
}
