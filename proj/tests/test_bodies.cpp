#include <cmath>
#include <numbers>

#include "doctest.h"
#include "santalo/bodies.hpp"
#include "santalo/error.hpp"

using namespace santalo;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("ball volumes") {
  CHECK(ball_volume(2) == doctest::Approx(kPi));
  CHECK(ball_volume(3) == doctest::Approx(4 * kPi / 3));
  CHECK(std::abs(ball_body(2).volume() - kPi) <= 1e-3);
  CHECK(std::abs(ball_body(3).volume() - 4 * kPi / 3) <= 1e-3 * 4 * kPi / 3);
  CHECK(std::abs(ball_body(2, 1.3).volume() - kPi * 1.69) <= 1e-3);
}

TEST_CASE("ellipse and ellipsoid volumes") {
  CHECK(std::abs(lp_body(2, {2.0, 0.5, 1.0}, 2.0, 512).volume() - kPi) <= 1e-3);
  CHECK(std::abs(lp_body(3, {1.5, 1.0, 0.7}, 2.0).volume() - 4 * kPi / 3 * 1.05) <= 5e-3);
  // box: piecewise r^2 is integrated exactly only in the limit
  CHECK(std::abs(lp_body(2, {1.0, 1.0, 1.0}, INFINITY, 1024).volume() - 4.0) <= 1e-2);
}

TEST_CASE("radius and gauge") {
  auto b = lp_body(2, {2.0, 1.0, 1.0}, 2.0, 512);
  const double x[2] = {2.0, 0.0}, y[2] = {0.0, 0.5};
  CHECK(b.gauge(x) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(b.gauge(y) == doctest::Approx(0.5).epsilon(1e-6));
  auto s = ball_body(3, 2.0);
  const double z[3] = {0.3, -0.4, 1.2};
  CHECK(s.gauge(z) == doctest::Approx(std::sqrt(0.09 + 0.16 + 1.44) / 2).epsilon(1e-9));
}

TEST_CASE("affine surface area") {
  auto B = ball_body(2, 1.0, 512);
  for (double p : {0.0, 0.5, 1.0, 2.0}) CHECK(affine_surface_area_body(B, p) == doctest::Approx(2 * kPi).epsilon(1e-4));
  // as_p(A K) = |det A|^{(n-p)/(n+p)} as_p(K)
  auto E = lp_body(2, {2.0, 1.0, 1.0}, 2.0, 1024);
  for (double p : {0.0, 1.0, 2.0})
    CHECK(affine_surface_area_body(E, p) == doctest::Approx(2 * kPi * std::pow(2.0, (2 - p) / (2 + p))).epsilon(1e-3));
  CHECK(affine_surface_area_body(E, 0.0) == doctest::Approx(2 * E.volume()).epsilon(1e-4));
  try {
    affine_surface_area_body(lp_body(2, {1, 1, 1}, INFINITY, 512), 1.0);
    FAIL("square accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::CurvatureUndefined);
  }
}

TEST_CASE("symmetry and validation") {
  CHECK(ball_body(2).unconditional);
  CHECK(lp_body(3, {1.0, 2.0, 0.5}, 3.0).unconditional);
  auto off = ConvexBodyRadial::from_function(2, 64, 0, [](const double* u) { return 1.0 + 0.2 * u[0]; });
  CHECK_FALSE(off.unconditional);
  CHECK_THROWS_AS(ConvexBodyRadial::from_function(2, 64, 0, [](const double* u) { return u[0]; }), Error);
  CHECK_THROWS_AS(lp_body(2, {1.0, -1.0, 1.0}, 2.0), Error);
  nlohmann::json j = ball_body(2, 1.0, 32);
  auto back = body_from_json(j);
  CHECK(back.radial == ball_body(2, 1.0, 32).radial);
  auto fam = body_from_json({{"family", "lp"}, {"dim", 2}, {"axes", {1.0, 2.0}}, {"q", "inf"}, {"resolution", 64}});
  CHECK(fam.unconditional);
}
