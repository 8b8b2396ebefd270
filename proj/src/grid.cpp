#include "santalo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "santalo/error.hpp"

namespace santalo {

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(points_per_axis);
  return n;
}

double Grid::coord(int j) const {
  const int m1 = points_per_axis - 1;
  return half_width * static_cast<double>(2 * j - m1) / static_cast<double>(m1);
}

std::size_t Grid::stride(int axis) const {
  std::size_t s = 1;
  for (int d = dim - 1; d > axis; --d) s *= static_cast<std::size_t>(points_per_axis);
  return s;
}

Index Grid::index(std::size_t flat) const {
  Index idx{0, 0, 0};
  const auto m = static_cast<std::size_t>(points_per_axis);
  for (int d = dim - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % m);
    flat /= m;
  }
  return idx;
}

std::size_t Grid::flat(const Index& idx) const {
  std::size_t f = 0;
  for (int d = 0; d < dim; ++d) f = f * static_cast<std::size_t>(points_per_axis) + idx[d];
  return f;
}

void Grid::point(std::size_t flat_index, double* out) const {
  Index idx = index(flat_index);
  for (int d = 0; d < dim; ++d) out[d] = coord(idx[d]);
}

std::vector<double> Grid::point(std::size_t flat_index) const {
  std::vector<double> p(dim);
  point(flat_index, p.data());
  return p;
}

bool Grid::on_boundary(std::size_t flat_index) const {
  Index idx = index(flat_index);
  for (int d = 0; d < dim; ++d)
    if (idx[d] == 0 || idx[d] == points_per_axis - 1) return true;
  return false;
}

std::optional<std::size_t> Grid::origin() const {
  if (points_per_axis % 2 == 0) return std::nullopt;
  Index c{0, 0, 0};
  for (int d = 0; d < dim; ++d) c[d] = points_per_axis / 2;
  return flat(c);
}

Grid build_grid(int dim, double half_width, int points_per_axis) {
  if (dim < 1 || dim > kMaxDim)
    throw Error(Errc::DimensionUnsupported, "dim=" + std::to_string(dim));
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw Error(Errc::InvalidArgument, "half_width must be positive");
  if (points_per_axis < 2) throw Error(Errc::InvalidArgument, "points_per_axis must be >= 2");
  return Grid{dim, half_width, points_per_axis};
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(const Grid& g, double fill)
    : grid_(g), values_(g.size(), 0.0), inf_(g.size(), 0) {
  for (std::size_t i = 0; i < values_.size(); ++i) set(i, fill);
}

GridFunction::GridFunction(const Grid& g, std::vector<double> values)
    : grid_(g), values_(std::move(values)), inf_(values_.size(), 0) {
  if (values_.size() != g.size()) throw Error(Errc::DimensionMismatch, "values length != grid size");
  for (std::size_t i = 0; i < values_.size(); ++i) set(i, values_[i]);
}

GridFunction::GridFunction(const Grid& g, std::vector<double> values, std::vector<std::uint8_t> mask)
    : grid_(g), values_(std::move(values)), inf_(std::move(mask)) {
  if (values_.size() != g.size() || inf_.size() != g.size())
    throw Error(Errc::DimensionMismatch, "values/inf_mask length != grid size");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (inf_[i]) {
      values_[i] = 0.0;
      inf_[i] = 1;
    } else {
      set(i, values_[i]);
    }
  }
}

void GridFunction::set(std::size_t i, double v) {
  if (std::isnan(v)) throw Error(Errc::InvalidArgument, "NaN grid value");
  if (v == -kInf) throw Error(Errc::InvalidArgument, "-inf grid value");
  if (v == kInf) {
    inf_[i] = 1;
    values_[i] = 0.0;
  } else {
    inf_[i] = 0;
    values_[i] = v;
  }
}

GridFunction GridFunction::sample(const Grid& g, const std::function<double(const double*)>& fn) {
  GridFunction f(g);
  double x[kMaxDim];
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.point(i, x);
    f.set(i, fn(x));
  }
  return f;
}

std::size_t GridFunction::finite_count() const {
  return static_cast<std::size_t>(std::count(inf_.begin(), inf_.end(), std::uint8_t{0}));
}

double GridFunction::interpolate(const double* x) const {
  const Grid& g = grid_;
  const double h = g.spacing();
  const int m = g.points_per_axis;
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int d = 0; d < g.dim; ++d) {
    double t = (x[d] + g.half_width) / h;
    if (t < -1e-9 || t > (m - 1) + 1e-9) {
      if (inf_outside_) return kInf;
      t = std::clamp(t, 0.0, static_cast<double>(m - 1));
    }
    t = std::clamp(t, 0.0, static_cast<double>(m - 1));
    int b = static_cast<int>(std::floor(t));
    if (b >= m - 1) b = m - 2;
    base[d] = b;
    frac[d] = t - b;
  }
  double acc = 0.0;
  const int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    Index idx{0, 0, 0};
    for (int d = 0; d < g.dim; ++d) {
      const bool up = (c >> d) & 1;
      w *= up ? frac[d] : 1.0 - frac[d];
      idx[d] = base[d] + (up ? 1 : 0);
    }
    if (w == 0.0) continue;
    const std::size_t f = g.flat(idx);
    if (inf_[f]) return kInf;
    acc += w * values_[f];
  }
  return acc;
}

GridFunction GridFunction::map(const std::function<double(double)>& fn) const {
  GridFunction out(grid_);
  for (std::size_t i = 0; i < size(); ++i) out.set(i, fn((*this)[i]));
  out.inf_outside_ = inf_outside_;
  return out;
}

// ---------------------------------------------------------------------------

double DiscreteMeasure::second_moment() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    const double* p = point(i);
    double r2 = 0.0;
    for (int d = 0; d < dim; ++d) r2 += p[d] * p[d];
    s += weights[i] * r2;
  }
  return s;
}

std::vector<double> DiscreteMeasure::mean() const {
  std::vector<double> m(dim, 0.0);
  for (std::size_t i = 0; i < size(); ++i)
    for (int d = 0; d < dim; ++d) m[d] += weights[i] * point(i)[d];
  return m;
}

DiscreteMeasure DiscreteMeasure::make(int dim, std::vector<double> points, std::vector<double> weights,
                                      bool normalize) {
  if (dim < 1 || dim > kMaxDim) throw Error(Errc::DimensionUnsupported, "measure dim");
  if (points.size() != weights.size() * static_cast<std::size_t>(dim))
    throw Error(Errc::DimensionMismatch, "points/weights length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(Errc::InvalidArgument, "negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw Error(Errc::ZeroMass, "measure has no mass");
  if (!normalize && std::abs(total - 1.0) > 1e-12)
    throw Error(Errc::InvalidArgument, "weights do not sum to 1");
  for (double& w : weights) w /= total;

  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(points.begin() + a * dim, points.begin() + (a + 1) * dim,
                                        points.begin() + b * dim, points.begin() + (b + 1) * dim);
  });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (std::equal(points.begin() + order[i] * dim, points.begin() + (order[i] + 1) * dim,
                   points.begin() + order[i - 1] * dim))
      throw Error(Errc::InvalidArgument, "duplicate support point");

  DiscreteMeasure m;
  m.dim = dim;
  m.points = std::move(points);
  m.weights = std::move(weights);
  return m;
}

// ---------------------------------------------------------------------------

namespace {

double pairwise_sum(double* v, int n) {
  while (n > 1) {
    for (int i = 0; i < n / 2; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    n /= 2;
  }
  return v[0];
}

}  // namespace

GridFunction symmetrize_unconditional(const GridFunction& f) {
  const Grid& g = f.grid();
  const int m = g.points_per_axis;
  const int orbit = 1 << g.dim;
  GridFunction out(g);
  out.set_inf_outside(f.inf_outside());
  std::vector<std::size_t> members(orbit);
  std::vector<double> vals(orbit);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index idx = g.index(i);
    for (int s = 0; s < orbit; ++s) {
      Index r = idx;
      for (int d = 0; d < g.dim; ++d)
        if ((s >> d) & 1) r[d] = m - 1 - idx[d];
      members[s] = g.flat(r);
    }
    // Canonical order by position makes every orbit member sum identically.
    std::sort(members.begin(), members.end());
    bool inf = false;
    for (int s = 0; s < orbit; ++s) {
      if (f.is_inf(members[s])) inf = true;
      vals[s] = f.raw_values()[members[s]];
    }
    out.set(i, inf ? kInf : pairwise_sum(vals.data(), orbit) / orbit);
  }
  return out;
}

bool is_unconditional(const GridFunction& f, double tol) {
  const Grid& g = f.grid();
  const int m = g.points_per_axis;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Index idx = g.index(i);
    for (int d = 0; d < g.dim; ++d) {
      Index r = idx;
      r[d] = m - 1 - idx[d];
      const std::size_t j = g.flat(r);
      if (f.is_inf(i) != f.is_inf(j)) return false;
      if (!f.is_inf(i) && std::abs(f[i] - f[j]) > tol) return false;
    }
  }
  return true;
}

std::vector<double> quadrature_weights(const GridFunction& f) {
  const Grid& g = f.grid();
  const double half = 0.5 * g.spacing();
  const int m = g.points_per_axis;
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.is_inf(i)) continue;
    const Index idx = g.index(i);
    double wi = 1.0;
    for (int d = 0; d < g.dim && wi > 0.0; ++d) {
      const std::size_t s = g.stride(d);
      double wd = 0.0;
      if (idx[d] > 0 && !f.is_inf(i - s)) wd += half;
      if (idx[d] < m - 1 && !f.is_inf(i + s)) wd += half;
      wi *= wd;
    }
    w[i] = wi;
  }
  return w;
}

std::vector<double> quadrature_weights(const Grid& g) { return quadrature_weights(GridFunction(g)); }

QuadratureResult quadrature_integrate(const GridFunction& f, QuadMode mode) {
  const Grid& g = f.grid();
  const std::vector<double> w = quadrature_weights(f);
  QuadratureResult r;
  double boundary = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double v = mode == QuadMode::Exp ? std::exp(-f[i]) : f[i];
    const double c = w[i] * v;
    r.value += c;
    if (g.on_boundary(i)) boundary += std::abs(c);
  }
  if (mode == QuadMode::Exp) {
    r.boundary_fraction = r.value > 0.0 ? boundary / r.value : 0.0;
    r.mass_leak = r.boundary_fraction > 1e-6;
  }
  return r;
}

double integrate_exp(const GridFunction& f) { return quadrature_integrate(f, QuadMode::Exp).value; }
double integrate(const GridFunction& f) { return quadrature_integrate(f, QuadMode::Direct).value; }

namespace {

DiscreteMeasure measure_from_masses(const Grid& g, const std::vector<double>& mass) {
  double total = 0.0;
  for (double v : mass) total += v;
  if (!(total > 0.0) || !std::isfinite(total)) throw Error(Errc::ZeroMass, "no finite mass on the grid");
  DiscreteMeasure m;
  m.dim = g.dim;
  m.grid = g;
  double x[kMaxDim];
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(mass[i] > kDropRelative * total)) continue;
    g.point(i, x);
    m.points.insert(m.points.end(), x, x + g.dim);
    m.weights.push_back(mass[i]);
    m.node_index.push_back(static_cast<std::int64_t>(i));
  }
  double kept = 0.0;
  for (double v : m.weights) kept += v;
  for (double& v : m.weights) v /= kept;
  return m;
}

}  // namespace

DiscreteMeasure sample_density(const GridFunction& f) {
  const Grid& g = f.grid();
  const std::vector<double> w = quadrature_weights(f);
  double fmin = kInf;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (w[i] > 0.0) fmin = std::min(fmin, f[i]);
  if (fmin == kInf) throw Error(Errc::ZeroMass, "potential is +inf everywhere");
  std::vector<double> mass(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (w[i] > 0.0) mass[i] = w[i] * std::exp(-(f[i] - fmin));
  return measure_from_masses(g, mass);
}

DiscreteMeasure sample_values(const GridFunction& f) {
  const Grid& g = f.grid();
  const std::vector<double> w = quadrature_weights(f);
  std::vector<double> mass(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (w[i] == 0.0) continue;
    if (f[i] < 0.0) throw Error(Errc::InvalidArgument, "negative density value");
    mass[i] = w[i] * f[i];
  }
  return measure_from_masses(g, mass);
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const Grid& g) {
  j = nlohmann::json{{"dim", g.dim}, {"half_width", g.half_width}, {"points_per_axis", g.points_per_axis}};
}

void from_json(const nlohmann::json& j, Grid& g) {
  g = build_grid(j.at("dim").get<int>(), j.at("half_width").get<double>(),
                 j.at("points_per_axis").get<int>());
}

void to_json(nlohmann::json& j, const GridFunction& f) {
  to_json(j, f.grid());
  std::vector<int> mask(f.inf_mask().begin(), f.inf_mask().end());
  j["values"] = f.raw_values();
  j["inf_mask"] = mask;
}

GridFunction grid_function_from_json(const nlohmann::json& j) {
  Grid g = j.get<Grid>();
  auto values = j.at("values").get<std::vector<double>>();
  std::vector<std::uint8_t> mask(values.size(), 0);
  if (j.contains("inf_mask")) {
    auto m = j.at("inf_mask").get<std::vector<int>>();
    if (m.size() != values.size()) throw Error(Errc::DimensionMismatch, "inf_mask length");
    for (std::size_t i = 0; i < m.size(); ++i) mask[i] = m[i] ? 1 : 0;
  }
  return GridFunction(g, std::move(values), std::move(mask));
}

}  // namespace santalo
