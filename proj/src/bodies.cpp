#include "santalo/bodies.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "santalo/error.hpp"

namespace santalo {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap(double t) {
  t = std::fmod(t, 2 * kPi);
  return t < 0 ? t + 2 * kPi : t;
}

}  // namespace

ConvexBodyRadial ConvexBodyRadial::from_function(int dim, int n_theta, int n_phi,
                                                 const std::function<double(const double* u)>& r) {
  if (dim != 2 && dim != 3) throw Error(Errc::DimensionUnsupported, "radial bodies live in dimension 2 or 3");
  ConvexBodyRadial b;
  b.dim = dim;
  b.n_theta = n_theta;
  b.n_phi = dim == 3 ? n_phi : 0;
  if (dim == 2) {
    if (n_theta < 8) throw Error(Errc::InvalidArgument, "too few angle samples");
    for (int j = 0; j < n_theta; ++j) {
      const double t = 2 * kPi * j / n_theta;
      const double u[2] = {std::cos(t), std::sin(t)};
      b.radial.push_back(r(u));
    }
  } else {
    if (n_theta < 4 || n_phi < 8) throw Error(Errc::InvalidArgument, "too few angle samples");
    for (int a = 0; a < n_theta; ++a) {
      const double t = kPi * (a + 0.5) / n_theta;
      for (int c = 0; c < n_phi; ++c) {
        const double f = 2 * kPi * c / n_phi;
        const double u[3] = {std::sin(t) * std::cos(f), std::sin(t) * std::sin(f), std::cos(t)};
        b.radial.push_back(r(u));
      }
    }
  }
  b.validate();
  b.unconditional = b.octant_symmetric(1e-12);
  return b;
}

void ConvexBodyRadial::validate() const {
  const std::size_t want = dim == 2 ? static_cast<std::size_t>(n_theta) : static_cast<std::size_t>(n_theta) * n_phi;
  if (radial.size() != want) throw Error(Errc::DimensionMismatch, "radial sample count does not match the angle grid");
  for (double r : radial)
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(Errc::BodyNotStarShaped, "body not star-shaped sampling");
}

double ConvexBodyRadial::radius(const double* u) const {
  if (dim == 2) {
    const double s = wrap(std::atan2(u[1], u[0])) / (2 * kPi) * n_theta;
    const int j = static_cast<int>(std::floor(s)) % n_theta;
    const double w = s - std::floor(s);
    return (1 - w) * radial[j] + w * radial[(j + 1) % n_theta];
  }
  const double nr = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  const double t = std::acos(std::clamp(u[2] / nr, -1.0, 1.0));
  double sa = t / kPi * n_theta - 0.5;
  sa = std::clamp(sa, 0.0, static_cast<double>(n_theta - 1));
  const int a = std::min(static_cast<int>(std::floor(sa)), n_theta - 2);
  const double wa = sa - a;
  const double sp = wrap(std::atan2(u[1], u[0])) / (2 * kPi) * n_phi;
  const int c = static_cast<int>(std::floor(sp)) % n_phi;
  const double wc = sp - std::floor(sp);
  const int c1 = (c + 1) % n_phi;
  auto at = [&](int i, int q) { return radial[static_cast<std::size_t>(i) * n_phi + q]; };
  return (1 - wa) * ((1 - wc) * at(a, c) + wc * at(a, c1)) + wa * ((1 - wc) * at(a + 1, c) + wc * at(a + 1, c1));
}

double ConvexBodyRadial::gauge(const double* x) const {
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) r2 += x[d] * x[d];
  if (r2 == 0.0) return 0.0;
  const double nx = std::sqrt(r2);
  double u[3] = {0, 0, 0};
  for (int d = 0; d < dim; ++d) u[d] = x[d] / nx;
  return nx / radius(u);
}

double ConvexBodyRadial::volume() const {
  double s = 0.0;
  if (dim == 2) {
    for (double r : radial) s += r * r;
    return 0.5 * s * 2 * kPi / n_theta;
  }
  const double df = 2 * kPi / n_phi;
  for (int a = 0; a < n_theta; ++a) {
    // exact band area, so a constant radius gives the exact ball volume
    const double st = std::cos(kPi * a / n_theta) - std::cos(kPi * (a + 1) / n_theta);
    double row = 0.0;
    for (int c = 0; c < n_phi; ++c) row += std::pow(radial[static_cast<std::size_t>(a) * n_phi + c], 3);
    s += st * row;
  }
  return s * df / 3.0;
}

bool ConvexBodyRadial::octant_symmetric(double tol) const {
  const double scale = *std::max_element(radial.begin(), radial.end());
  auto close = [&](double p, double q) { return std::abs(p - q) <= tol * scale; };
  if (dim == 2) {
    if (n_theta % 4 != 0) return false;
    for (int j = 0; j < n_theta; ++j) {
      if (!close(radial[j], radial[(n_theta - j) % n_theta])) return false;                  // y -> -y
      if (!close(radial[j], radial[((n_theta / 2 - j) % n_theta + n_theta) % n_theta])) return false;  // x -> -x
    }
    return true;
  }
  if (n_phi % 4 != 0) return false;
  for (int a = 0; a < n_theta; ++a)
    for (int c = 0; c < n_phi; ++c) {
      const double r = radial[static_cast<std::size_t>(a) * n_phi + c];
      if (!close(r, radial[static_cast<std::size_t>(n_theta - 1 - a) * n_phi + c])) return false;
      if (!close(r, radial[static_cast<std::size_t>(a) * n_phi + (n_phi - c) % n_phi])) return false;
      if (!close(r, radial[static_cast<std::size_t>(a) * n_phi + ((n_phi / 2 - c) % n_phi + n_phi) % n_phi]))
        return false;
    }
  return true;
}

double ball_volume(int n) { return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

ConvexBodyRadial ball_body(int dim, double r, int resolution) {
  return lp_body(dim, {r, r, r}, 2.0, resolution);
}

ConvexBodyRadial lp_body(int dim, std::array<double, 3> axes, double q, int resolution) {
  for (int d = 0; d < dim; ++d)
    if (!(axes[d] > 0.0)) throw Error(Errc::InvalidFamily, "invalid family parameter: axes must be positive");
  if (!(q >= 1.0)) throw Error(Errc::InvalidFamily, "invalid family parameter: q must be >= 1");
  auto r = [dim, axes, q](const double* u) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double z = std::abs(u[d]) / axes[d];
      s = std::isinf(q) ? std::max(s, z) : s + std::pow(z, q);
    }
    return std::isinf(q) ? 1.0 / s : std::pow(s, -1.0 / q);
  };
  if (dim == 2) return ConvexBodyRadial::from_function(2, resolution, 0, r);
  return ConvexBodyRadial::from_function(3, std::max(4, resolution / 4), std::max(8, resolution / 2), r);
}

double affine_surface_area_body(const ConvexBodyRadial& K, double p) {
  if (K.dim != 2) throw Error(Errc::DimensionUnsupported, "affine surface area of bodies is planar only");
  K.validate();
  const int N = K.n_theta;
  const double h = 2 * kPi / N;
  const auto& r = K.radial;
  auto at = [&](int j) { return r[((j % N) + N) % N]; };
  const double rmax = *std::max_element(r.begin(), r.end());
  // A kink makes third differences O(h) instead of O(h^3).
  for (int j = 0; j < N; ++j) {
    const double d3 = at(j + 2) - 3 * at(j + 1) + 3 * at(j) - at(j - 1);
    if (std::abs(d3) > 5 * std::pow(h, 1.5) * rmax)
      throw Error(Errc::CurvatureUndefined, "curvature undefined: radial data is not C^2");
  }
  const double n = 2.0;
  double s = 0.0;
  for (int j = 0; j < N; ++j) {
    const double r0 = at(j), r1 = (at(j + 1) - at(j - 1)) / (2 * h), r2 = (at(j + 1) - 2 * r0 + at(j - 1)) / (h * h);
    const double g = r0 * r0 + r1 * r1;
    const double kappa = (r0 * r0 + 2 * r1 * r1 - r0 * r2) / std::pow(g, 1.5);
    if (kappa < -1e-9) throw Error(Errc::CurvatureUndefined, "curvature undefined: body is not convex");
    const double support = r0 * r0 / std::sqrt(g);
    s += std::pow(std::max(kappa, 0.0), p / (n + p)) * std::pow(support, n * (1 - p) / (n + p)) * std::sqrt(g);
  }
  return s * h;
}

void to_json(nlohmann::json& j, const ConvexBodyRadial& b) {
  j = {{"dim", b.dim}, {"n_theta", b.n_theta}, {"n_phi", b.n_phi}, {"radial", b.radial}, {"unconditional", b.unconditional}};
}

ConvexBodyRadial body_from_json(const nlohmann::json& j) {
  if (j.contains("family")) {
    const std::string fam = j.at("family");
    const int dim = j.value("dim", 2);
    const int res = j.value("resolution", 256);
    if (fam == "ball") return ball_body(dim, j.value("r", 1.0), res);
    if (fam == "lp") {
      std::array<double, 3> axes{1, 1, 1};
      const auto a = j.at("axes").get<std::vector<double>>();
      for (std::size_t d = 0; d < a.size() && d < 3; ++d) axes[d] = a[d];
      const double q = j.at("q").is_string() ? INFINITY : j.at("q").get<double>();
      return lp_body(dim, axes, q, res);
    }
    throw Error(Errc::InvalidFamily, "invalid family parameter: unknown body family " + fam);
  }
  ConvexBodyRadial b;
  b.dim = j.at("dim");
  b.n_theta = j.at("n_theta");
  b.n_phi = j.value("n_phi", 0);
  b.radial = j.at("radial").get<std::vector<double>>();
  b.validate();
  b.unconditional = b.octant_symmetric(1e-12);
  return b;
}

}  // namespace santalo
