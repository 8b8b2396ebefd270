#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "santalo/error.hpp"
#include "santalo/monotone_flow.hpp"

using namespace santalo;

namespace {

constexpr double kPi = std::numbers::pi;

GridFunction sample1(const Grid& g, double (*fn)(double)) {
  return GridFunction::sample(g, [fn](const double* x) { return fn(x[0]); });
}

double quad(double x) { return 0.5 * x * x; }
double quartic(double x) { return 0.5 * x * x + 0.1 * std::pow(x, 4); }
double quartic_mm(double x) { return 0.5 * x * x + 0.2 * std::pow(x, 4); }

}  // namespace

TEST_CASE("pair iteration: Gaussian fixed point") {
  const Grid g = build_grid(1, 10.0, 2001);
  const GridFunction V = sample1(g, quad);
  PairIterationOptions opt;
  opt.early_stop = false;
  const auto tr = bs_iterate_pair(V, 10, opt);
  REQUIRE(tr.size() == 11);
  for (const auto& t : tr) {
    CHECK(std::abs(t.bs_value - 2 * kPi) <= 1e-4);
    CHECK(std::abs(t.j_value * t.j_value - 2 * kPi) <= 1e-4);
    CHECK(t.delta_to_quadratic <= 1e-4);
    CHECK(std::abs(t.bs_value - tr[0].bs_value) <= 1e-4);
  }
  // T = id, so Psi_1 = x^2/2 away from the saturated edge
  double dev = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.coord(static_cast<int>(i))) <= 8.0) dev = std::max(dev, std::abs(tr[1].potential[0][i] - V[i]));
  CHECK(dev <= 1e-9);
  const auto c = check_trace(tr);
  CHECK(c.monotone);
  CHECK(c.sandwich);
  CHECK(c.below_ceiling);
}

TEST_CASE("pair iteration: quartic start") {
  const Grid g = build_grid(1, 10.0, 2001);
  const auto tr = bs_iterate_pair(sample1(g, quartic), 10);
  REQUIRE(tr.size() >= 6);
  const auto c = check_trace(tr);
  CHECK(c.monotone);
  CHECK(c.sandwich);
  CHECK(c.below_ceiling);
  for (std::size_t l = 1; l < 6; ++l) CHECK(tr[l].bs_value > tr[l - 1].bs_value);
  CHECK(tr.back().bs_value <= 2 * kPi * (1 + 1e-3));
  CHECK(tr.back().bs_value > tr[0].bs_value + 0.05);
  std::ostringstream deltas;
  for (const auto& t : tr) deltas << t.delta_to_quadratic << ' ';
  MESSAGE("delta_to_quadratic: " << deltas.str() << std::string(c.delta_decreasing ? "(decreasing)" : "(not decreasing)"));

  // the additive constant of Psi does not move anything
  const GridFunction shifted = sample1(g, quartic).map([](double v) { return v + 3.0; });
  PairIterationOptions three;
  three.early_stop = false;
  const auto a = bs_iterate_pair(sample1(g, quartic), 2, three);
  const auto b = bs_iterate_pair(shifted, 2, three);
  for (std::size_t l = 0; l < a.size(); ++l) CHECK(std::abs(a[l].bs_value - b[l].bs_value) <= 1e-10);

  const std::string csv = trace_csv(tr);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,bs,j_sq,delta_quad");
  double prev = 0.0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto p = line.find(',');
    const double bs = std::stod(line.substr(p + 1, line.find(',', p + 1) - p - 1));
    CHECK(bs >= prev - kTolMono);
    prev = bs;
    ++rows;
  }
  CHECK(rows == tr.size());
}

TEST_CASE("pair iteration: |x| and errors") {
  const Grid g = build_grid(1, 10.0, 2001);
  const auto tr = bs_iterate_pair(GridFunction::sample(g, [](const double* x) { return std::abs(x[0]); }), 6);
  CHECK(tr[0].boundary_fraction > 0.5);  // the conjugate is an indicator
  CHECK(std::abs(tr[0].bs_value - 4.0) <= 1e-3);
  const auto c = check_trace(tr);
  CHECK(c.monotone);
  CHECK(c.sandwich);

  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::Config;
  };
  CHECK(code([&] { bs_iterate_pair(GridFunction::sample(g, [](const double* x) { return quad(x[0] - 1); }), 2); }) ==
        Errc::HypothesisViolated);
  CHECK(code([&] { bs_iterate_pair(GridFunction(g, 0.0), 2); }) == Errc::UnboundedConjugate);
  CHECK(code([&] { bs_iterate_pair(GridFunction(build_grid(2, 4.0, 21), 0.0), 2); }) == Errc::DimensionUnsupported);
}

TEST_CASE("delta to quadratic") {
  const Grid g = build_grid(2, 4.0, 41);
  CHECK(delta_to_quadratic(GridFunction::sample(g, [](const double* x) { return 1.7 * (x[0] * x[0] + x[1] * x[1]) + 5; })) <=
        1e-12);
  // |x| on [-4, 4] against c x^2/2 + a: the fit error is positive
  const Grid l = build_grid(1, 4.0, 401);
  CHECK(delta_to_quadratic(GridFunction::sample(l, [](const double* x) { return std::abs(x[0]); })) > 0.1);
}

TEST_CASE("multimarginal monotone step") {
  const Grid g = build_grid(1, 6.0, 61);
  const int k = 3;
  const std::vector<double> lam(k, 1.0 / k);
  const GridFunction q = sample1(g, quad);
  // Gaussian fixed point: sum V_i >= (1/(k-1)) sum_{i<j} <x_i,x_j> is C = k/(k-1) in the weighted form
  const double C = k / (k - 1.0);
  const auto fixed = multimarginal_monotone_step({q, q, q}, lam, C);
  CHECK(std::abs(fixed.report.slack) <= 1e-4);
  CHECK(fixed.report.pass);
  for (const auto& u : fixed.U)
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(u[i] - q[i]) <= 1e-9);
  // a loose hypothesis leaves room: the product grows
  const auto loose = multimarginal_monotone_step({q, q, q}, lam, 1.0 / (k - 1));
  CHECK(loose.report.slack > 0.1);

  const GridFunction v = sample1(g, quartic_mm);
  const auto step = multimarginal_monotone_step({v, v, v}, lam, C);
  MESSAGE("quartic step slack " << step.report.slack);
  CHECK(step.report.slack > 0);
  CHECK(step.report.pass);
  CHECK(step.report.hypothesis_margin >= -1e-8);

  const auto tr = iterate_multimarginal({v, v, v}, lam, C, 3);
  CHECK(check_trace(tr, false).monotone);
  MESSAGE("tuple trace delta " << tr[1].delta_to_quadratic << " -> " << tr.back().delta_to_quadratic);

  // non-identical, non-even tuple
  const GridFunction s1 = GridFunction::sample(g, [](const double* x) { return 0.8 * quad(x[0] - 0.5) + 0.1 * std::pow(x[0], 4); });
  const GridFunction s2 = GridFunction::sample(g, [](const double* x) { return quad(x[0] + 0.3) + 0.05 * std::pow(x[0], 4); });
  const GridFunction s3 = sample1(g, quartic_mm);
  const auto mixed = multimarginal_monotone_step({s1, s2, s3}, {0.2, 0.3, 0.5}, 0.5);
  CHECK(mixed.report.slack >= -1e-6);
  CHECK(mixed.report.pass);

  try {
    multimarginal_monotone_step({q, q, q}, lam, 3.0);
    FAIL("violated hypothesis accepted");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::HypothesisViolated);
  }
}

TEST_CASE("multimarginal step, k = 2, matches the c-transform") {
  const Grid g = build_grid(1, 4.0, 81);
  const GridFunction v = sample1(g, quartic_mm);
  const GridFunction w = GridFunction::sample(g, [](const double* x) { return 0.7 * x[0] * x[0] + 0.3 * std::abs(x[0]); });
  const auto r = multimarginal_monotone_step({v, w}, {0.5, 0.5}, 1.0);
  CHECK(r.report.slack > 0);
  // 1/2 U_1 + 1/2 U_2 >= 1/4 <x, y>, so U_2 = sup 1/2 <x, y> - U_1
  const GridFunction ct = c_transform_multimarginal(r.U, 1, 0.5);
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.coord(static_cast<int>(i))) > 2.0) continue;
    const double d = r.U[1][i] - ct[i];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  CHECK(hi - lo <= 5e-3);
}

TEST_CASE("Kaehler-Einstein residual") {
  const Grid g = build_grid(1, 6.0, 121);
  const int k = 3;
  const std::vector<double> lam(k, 1.0 / k);
  const double C = 1.5;
  const GridFunction q = sample1(g, quad);
  // hand oracle: grad U / C + x / 3 = x, det = 2/3 + 1/3 = 1, rho = gamma
  const GridFunction gamma = GridFunction::sample(g, [](const double* x) { return std::exp(-0.5 * x[0] * x[0]) / std::sqrt(2 * kPi); });
  const auto r0 = ke_residual({q, q, q}, lam, C, gamma);
  CHECK(r0.residual <= 5e-2);
  CHECK(r0.off_grid == 0);

  const auto tr = iterate_multimarginal({sample1(g, quartic_mm), sample1(g, quartic_mm), sample1(g, quartic_mm)}, lam, C, 3);
  const auto& U = tr.back().potential;
  const double conv = ke_residual(U, lam, C, barycenter_density(U, lam)).residual;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<GridFunction> P = U;
  for (auto& p : P) {
    const double a = 0.2 * z(rng), b = 0.2 * z(rng);
    p = GridFunction::sample(g, [&](const double* x) {
      const std::size_t i = static_cast<std::size_t>(std::lround((x[0] + 6.0) / g.spacing()));
      return p[i] + (a + b * x[0]) * std::exp(-0.5 * x[0] * x[0]);
    });
  }
  const double pert = ke_residual(P, lam, C, barycenter_density(P, lam)).residual;
  MESSAGE("converged " << conv << " perturbed " << pert);
  CHECK(pert > conv);

  // k = 2: the tuple (Psi, Psi*) with C = 2 against the pair form
  // a box wide enough that Psi' stays inside the finite part of Psi*
  const Grid p = build_grid(1, 10.0, 401);
  PairIterationOptions po;
  po.early_stop = false;
  const auto pt = bs_iterate_pair(sample1(p, quartic), 8, po);
  const GridFunction psi = pt.back().potential[0];
  const GridFunction star = legendre_conjugate(psi).dual;
  const double pair = pair_ke_residual(psi).residual;
  const double two = ke_residual({psi, star}, {0.5, 0.5}, 2.0, barycenter_density({psi, star}, {0.5, 0.5})).per_slot[0];
  MESSAGE("pair form " << pair << " tuple form " << two);
  CHECK(std::abs(pair - two) <= 1e-2);
}
