#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace santalo {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr int kMaxDim = 3;

using Index = std::array<int, kMaxDim>;

// Regular box grid [-L, L]^dim with m nodes per axis.
struct Grid {
  int dim = 1;
  double half_width = 1.0;
  int points_per_axis = 2;

  double spacing() const { return 2.0 * half_width / (points_per_axis - 1); }
  std::size_t size() const;
  // L*(2j-(m-1))/(m-1): bit-symmetric about 0 and exactly 0 at the center for odd m.
  double coord(int j) const;
  Index index(std::size_t flat) const;
  std::size_t flat(const Index& idx) const;
  void point(std::size_t flat, double* out) const;
  std::vector<double> point(std::size_t flat) const;
  std::size_t stride(int axis) const;
  bool on_boundary(std::size_t flat) const;
  // Center node (exists only for odd m).
  std::optional<std::size_t> origin() const;

  bool operator==(const Grid& o) const {
    return dim == o.dim && half_width == o.half_width && points_per_axis == o.points_per_axis;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

Grid build_grid(int dim, double half_width, int points_per_axis);

// Sampled scalar field. +inf nodes are carried by a mask; stored values there are 0.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(const Grid& g, double fill = 0.0);
  GridFunction(const Grid& g, std::vector<double> values);
  GridFunction(const Grid& g, std::vector<double> values, std::vector<std::uint8_t> inf_mask);

  static GridFunction sample(const Grid& g, const std::function<double(const double*)>& fn);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return inf_[i] ? kInf : values_[i]; }
  bool is_inf(std::size_t i) const { return inf_[i] != 0; }
  void set(std::size_t i, double v);
  const std::vector<double>& raw_values() const { return values_; }
  const std::vector<std::uint8_t>& inf_mask() const { return inf_; }
  std::size_t finite_count() const;

  // Off-grid behavior for interpolation: +inf (indicator-type) or clamp to the boundary value.
  bool inf_outside() const { return inf_outside_; }
  void set_inf_outside(bool v) { inf_outside_ = v; }

  // Multilinear interpolation of the stored values; +inf if any corner is +inf.
  double interpolate(const double* x) const;

  GridFunction map(const std::function<double(double)>& fn) const;

 private:
  Grid grid_;
  std::vector<double> values_;
  std::vector<std::uint8_t> inf_;
  bool inf_outside_ = true;
};

// Probability weights on distinct points; node_index links back to a grid when the
// measure was sampled from one.
struct DiscreteMeasure {
  int dim = 1;
  std::vector<double> points;  // dim * size(), point-major
  std::vector<double> weights;
  std::vector<std::int64_t> node_index;
  std::optional<Grid> grid;

  std::size_t size() const { return weights.size(); }
  const double* point(std::size_t i) const { return points.data() + i * dim; }
  double second_moment() const;
  std::vector<double> mean() const;

  // Validates and renormalizes (sum must already be within 1e-6 of 1 unless normalize=true).
  static DiscreteMeasure make(int dim, std::vector<double> points, std::vector<double> weights,
                              bool normalize = true);
};

GridFunction symmetrize_unconditional(const GridFunction& f);
bool is_unconditional(const GridFunction& f, double tol = 0.0);

// Trapezoid weights that only count the half-cells toward finite neighbors, so
// indicator-type functions integrate to their support length.
std::vector<double> quadrature_weights(const GridFunction& f);
std::vector<double> quadrature_weights(const Grid& g);

enum class QuadMode { Exp, Direct };

struct QuadratureResult {
  double value = 0.0;
  double boundary_fraction = 0.0;
  bool mass_leak = false;
};

// Exp mode integrates e^{-f}; direct mode integrates f over its finite nodes.
QuadratureResult quadrature_integrate(const GridFunction& f, QuadMode mode = QuadMode::Exp);
double integrate_exp(const GridFunction& f);
double integrate(const GridFunction& f);

inline constexpr double kDropRelative = 1e-14;

// Weights proportional to e^{-f} times quadrature weight; drops relative mass below kDropRelative.
DiscreteMeasure sample_density(const GridFunction& f);
// Same, but f holds nonnegative density values instead of a potential.
DiscreteMeasure sample_values(const GridFunction& f);

void to_json(nlohmann::json& j, const Grid& g);
void from_json(const nlohmann::json& j, Grid& g);
void to_json(nlohmann::json& j, const GridFunction& f);
GridFunction grid_function_from_json(const nlohmann::json& j);

}  // namespace santalo
