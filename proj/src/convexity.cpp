#include "santalo/convexity.hpp"

#include <algorithm>
#include <cmath>

#include "santalo/error.hpp"

namespace santalo {

namespace {

constexpr double kNegInf = -kInf;

// out[j] = max_i xs[i]*ys[j] - g[i] over finite g; ys ascending. Ties prefer interior i.
void conjugate_line(const std::vector<double>& xs, const double* g, const std::vector<double>& ys,
                    double* out, int* arg, bool refine) {
  const int m = static_cast<int>(xs.size());
  const int md = static_cast<int>(ys.size());
  std::vector<int> hull;
  hull.reserve(m);
  for (int i = 0; i < m; ++i) {
    if (g[i] == kInf) continue;
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      const double cross = (xs[b] - xs[a]) * (g[i] - g[a]) - (g[b] - g[a]) * (xs[i] - xs[a]);
      if (cross < 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  if (hull.empty()) {
    for (int j = 0; j < md; ++j) {
      out[j] = kNegInf;
      arg[j] = -1;
    }
    return;
  }
  const double h = m > 1 ? xs[1] - xs[0] : 1.0;
  std::size_t cur = 0;
  for (int j = 0; j < md; ++j) {
    const double y = ys[j];
    auto val = [&](std::size_t k) { return xs[hull[k]] * y - g[hull[k]]; };
    while (cur + 1 < hull.size()) {
      const double a = val(cur), b = val(cur + 1);
      const bool cur_edge = hull[cur] == 0 || hull[cur] == m - 1;
      if (b > a || (b == a && cur_edge)) ++cur;
      else break;
    }
    // The pointer only moves right; a tie with a left interior vertex may have been passed.
    std::size_t best = cur;
    if (hull[best] == m - 1 && best > 0 && val(best - 1) == val(best)) --best;
    const int i = hull[best];
    double v = val(best);
    if (refine && i > 0 && i < m - 1 && g[i - 1] != kInf && g[i + 1] != kInf) {
      const double fm = xs[i - 1] * y - g[i - 1], f0 = v, fp = xs[i + 1] * y - g[i + 1];
      const double curv = fm - 2.0 * f0 + fp;
      if (curv < 0.0) {
        const double delta = 0.5 * h * (fm - fp) / curv;
        if (std::abs(delta) <= h) v = std::max(v, f0 - (fm - fp) * (fm - fp) / (8.0 * curv));
      }
    }
    out[j] = v;
    arg[j] = i;
  }
}

std::vector<double> axis_coords(const Grid& g) {
  std::vector<double> c(g.points_per_axis);
  for (int j = 0; j < g.points_per_axis; ++j) c[j] = g.coord(j);
  return c;
}

}  // namespace

ConjugatePair legendre_conjugate(const GridFunction& V, const ConjugateOptions& opt) {
  const Grid& pg = V.grid();
  const Grid dg = opt.dual_grid.value_or(pg);
  if (dg.dim != pg.dim) throw Error(Errc::DimensionMismatch, "dual grid dimension");
  if (V.finite_count() == 0) throw Error(Errc::InvalidArgument, "potential is +inf everywhere");
  const int n = pg.dim;
  const std::vector<double> xs = axis_coords(pg), ys = axis_coords(dg);
  const int mp = pg.points_per_axis, md = dg.points_per_axis;

  // A holds the running maximum of the separable objective; it starts as -V stored as
  // a potential g = V so that each pass is a plain 1D conjugate of g.
  std::vector<int> shape(n, mp);
  std::vector<double> A(V.size());
  for (std::size_t i = 0; i < V.size(); ++i) A[i] = V[i];
  std::vector<std::vector<int>> args(n);
  std::vector<std::vector<int>> arg_shapes(n);

  std::vector<double> line_g(mp), line_out(md);
  std::vector<int> line_arg(md);
  for (int d = n - 1; d >= 0; --d) {
    std::vector<int> new_shape = shape;
    new_shape[d] = md;
    std::size_t new_total = 1, old_stride = 1, new_stride = 1;
    for (int a = 0; a < n; ++a) new_total *= new_shape[a];
    for (int a = n - 1; a > d; --a) {
      old_stride *= shape[a];
      new_stride *= new_shape[a];
    }
    std::vector<double> B(new_total);
    std::vector<int> arg(new_total);
    // lines: outer = product of axes before d, inner = product of axes after d
    std::size_t outer = 1;
    for (int a = 0; a < d; ++a) outer *= shape[a];
    const std::size_t inner = old_stride;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t ob = o * mp * old_stride + in;
        const std::size_t nb = o * md * new_stride + in;
        for (int i = 0; i < mp; ++i) {
          const double a = A[ob + i * old_stride];
          line_g[i] = a;  // potential value (may be +inf)
        }
        conjugate_line(xs, line_g.data(), ys, line_out.data(), line_arg.data(), opt.refine);
        for (int j = 0; j < md; ++j) {
          // Next pass consumes -result as its potential.
          B[nb + j * new_stride] = line_out[j] == kNegInf ? kInf : -line_out[j];
          arg[nb + j * new_stride] = line_arg[j];
        }
      }
    }
    A.swap(B);
    args[d] = std::move(arg);
    arg_shapes[d] = new_shape;
    shape = new_shape;
  }

  ConjugatePair out{V, GridFunction(dg), dg, std::vector<std::uint8_t>(dg.size(), 0), 0.0};
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < dg.size(); ++i) {
    const double val = A[i] == kInf ? kNegInf : -A[i];
    if (val == kNegInf) throw Error(Errc::InvalidArgument, "conjugate is -inf");
    // Reconstruct the argmax tuple: pass d was applied with axes < d primal, axes >= d dual.
    Index yidx = dg.index(i);
    Index xidx{0, 0, 0};
    bool edge = false;
    for (int d = 0; d < n; ++d) {
      std::size_t flat = 0;
      for (int a = 0; a < n; ++a) {
        const int ia = a < d ? xidx[a] : yidx[a];
        flat = flat * arg_shapes[d][a] + ia;
      }
      xidx[d] = args[d][flat];
      if (xidx[d] == 0 || xidx[d] == mp - 1) edge = true;
    }
    if (edge) {
      out.boundary_flag[i] = 1;
      ++flagged;
    }
    double v = val;
    if (!opt.refine) {
      // Re-evaluate at the argmax tuple so the value is one rounding of <x,y> - V(x).
      const std::size_t xf = pg.flat(xidx);
      double dot = 0.0;
      for (int d = 0; d < n; ++d) dot += pg.coord(xidx[d]) * dg.coord(yidx[d]);
      v = dot - V[xf];
    }
    out.dual.set(i, edge && opt.saturate_boundary ? kInf : v);
  }
  out.boundary_fraction = static_cast<double>(flagged) / static_cast<double>(dg.size());
  if (opt.strict && out.boundary_fraction > kUnboundedFraction)
    throw Error(Errc::UnboundedConjugate,
                "sup attained on the boundary for fraction " + std::to_string(out.boundary_fraction));
  return out;
}

GridFunction convexify(const GridFunction& V) {
  // Plain discrete sups both ways: the discrete biconjugate is exactly idempotent,
  // boundary saturation would make it depend on tie-breaking.
  ConjugateOptions opt;
  opt.saturate_boundary = false;
  ConjugatePair first = legendre_conjugate(V, opt);
  opt.dual_grid = V.grid();
  GridFunction env = legendre_conjugate(first.dual, opt).dual;
  // Never exceed V (roundoff in the double sweep) and keep V's +inf nodes.
  for (std::size_t i = 0; i < env.size(); ++i) {
    if (V.is_inf(i)) env.set(i, kInf);
    else if (!env.is_inf(i) && env[i] > V[i]) env.set(i, V[i]);
  }
  return env;
}

double min_second_difference(const GridFunction& V) {
  const Grid& g = V.grid();
  const int n = g.dim, m = g.points_per_axis;
  // directions: axes and 2-face diagonals (+,+) and (+,-)
  std::vector<Index> dirs;
  for (int a = 0; a < n; ++a) {
    Index e{0, 0, 0};
    e[a] = 1;
    dirs.push_back(e);
    for (int b = a + 1; b < n; ++b) {
      Index p{0, 0, 0}, q{0, 0, 0};
      p[a] = 1;
      p[b] = 1;
      q[a] = 1;
      q[b] = -1;
      dirs.push_back(p);
      dirs.push_back(q);
    }
  }
  double worst = kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (V.is_inf(i)) continue;
    const Index c = g.index(i);
    for (const Index& dv : dirs) {
      Index lo = c, hi = c;
      bool ok = true;
      for (int a = 0; a < n; ++a) {
        lo[a] -= dv[a];
        hi[a] += dv[a];
        if (lo[a] < 0 || lo[a] >= m || hi[a] < 0 || hi[a] >= m) ok = false;
      }
      if (!ok) continue;
      const std::size_t l = g.flat(lo), r = g.flat(hi);
      if (V.is_inf(l) || V.is_inf(r)) continue;
      worst = std::min(worst, V[l] - 2.0 * V[i] + V[r]);
    }
  }
  return worst;
}

bool is_discretely_convex(const GridFunction& V, double tol) { return min_second_difference(V) >= -tol; }

GridFunction c_transform_multimarginal(const std::vector<GridFunction>& tuple, int index, double C,
                                       double budget) {
  const int k = static_cast<int>(tuple.size());
  if (k < 2) throw Error(Errc::InvalidArgument, "c-transform needs k >= 2");
  if (index < 0 || index >= k) throw Error(Errc::InvalidArgument, "slot index out of range");
  const int n = tuple[0].grid().dim;
  for (const auto& f : tuple)
    if (f.grid().dim != n) throw Error(Errc::DimensionMismatch, "tuple grids differ in dim");

  // finite nodes of every other slot
  std::vector<std::vector<std::size_t>> nodes(k);
  std::vector<std::vector<double>> pts(k);
  double total = static_cast<double>(tuple[index].grid().size());
  for (int i = 0; i < k; ++i) {
    if (i == index) continue;
    const Grid& g = tuple[i].grid();
    for (std::size_t a = 0; a < g.size(); ++a) {
      if (tuple[i].is_inf(a)) continue;
      nodes[i].push_back(a);
      auto p = g.point(a);
      pts[i].insert(pts[i].end(), p.begin(), p.end());
    }
    total *= static_cast<double>(nodes[i].size());
  }
  if (total > budget)
    throw Error(Errc::InstanceTooLarge, "c-transform enumeration " + std::to_string(total) + " > budget");

  std::vector<int> others;
  for (int i = 0; i < k; ++i)
    if (i != index) others.push_back(i);
  for (int i : others)
    if (nodes[i].empty()) throw Error(Errc::InvalidArgument, "slot is +inf everywhere");

  const Grid& out_grid = tuple[index].grid();
  GridFunction out(out_grid);
  std::vector<std::size_t> pos(others.size());
  std::vector<double> sum(n);
  for (std::size_t xi = 0; xi < out_grid.size(); ++xi) {
    const auto x = out_grid.point(xi);
    double best = -kInf;
    std::fill(pos.begin(), pos.end(), 0);
    while (true) {
      // sum_{i<j}<x_i,x_j> = (|S|^2 - sum|x_i|^2)/2 with S the sum over all slots
      std::fill(sum.begin(), sum.end(), 0.0);
      double sq = 0.0, pot = 0.0;
      for (int d = 0; d < n; ++d) {
        sum[d] = x[d];
        sq += x[d] * x[d];
      }
      for (std::size_t s = 0; s < others.size(); ++s) {
        const int i = others[s];
        const double* p = pts[i].data() + pos[s] * n;
        for (int d = 0; d < n; ++d) {
          sum[d] += p[d];
          sq += p[d] * p[d];
        }
        pot += tuple[i][nodes[i][pos[s]]];
      }
      double s2 = 0.0;
      for (int d = 0; d < n; ++d) s2 += sum[d] * sum[d];
      const double val = C * 0.5 * (s2 - sq) - pot;
      best = std::max(best, val);
      std::size_t s = 0;
      for (; s < others.size(); ++s) {
        if (++pos[s] < nodes[others[s]].size()) break;
        pos[s] = 0;
      }
      if (s == others.size()) break;
    }
    out.set(xi, best);
  }
  return out;
}

// ---------------------------------------------------------------------------

GradientField finite_diff_gradient(const GridFunction& V) {
  const Grid& g = V.grid();
  const int n = g.dim, m = g.points_per_axis;
  const double h = g.spacing();
  GradientField G;
  G.dim = n;
  G.values.assign(g.size() * n, 0.0);
  G.valid.assign(g.size(), 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (V.is_inf(i)) {
      G.valid[i] = 0;
      continue;
    }
    const Index c = g.index(i);
    for (int a = 0; a < n; ++a) {
      const std::size_t s = g.stride(a);
      double d;
      if (c[a] > 0 && c[a] < m - 1) {
        if (V.is_inf(i - s) || V.is_inf(i + s)) {
          G.valid[i] = 0;
          break;
        }
        d = (V[i + s] - V[i - s]) / (2.0 * h);
      } else if (c[a] == 0) {
        if (V.is_inf(i + s)) {
          G.valid[i] = 0;
          break;
        }
        d = (V[i + s] - V[i]) / h;
      } else {
        if (V.is_inf(i - s)) {
          G.valid[i] = 0;
          break;
        }
        d = (V[i] - V[i - s]) / h;
      }
      G.values[i * n + a] = d;
    }
  }
  return G;
}

HessianField finite_diff_hessian(const GridFunction& V) {
  const Grid& g = V.grid();
  const int n = g.dim, m = g.points_per_axis;
  const double h = g.spacing();
  if (m < 3) throw Error(Errc::InvalidArgument, "Hessian needs at least 3 points per axis");
  HessianField H;
  H.dim = n;
  H.values.assign(g.size() * n * n, 0.0);
  H.valid.assign(g.size(), 1);
  const GradientField G = finite_diff_gradient(V);

  for (std::size_t i = 0; i < g.size(); ++i) {
    if (V.is_inf(i)) {
      H.valid[i] = 0;
      continue;
    }
    const Index c = g.index(i);
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) {
      const std::size_t s = g.stride(a);
      // three-point second difference, shifted inward at the edge
      std::size_t center = i;
      if (c[a] == 0) center = i + s;
      else if (c[a] == m - 1) center = i - s;
      if (V.is_inf(center - s) || V.is_inf(center) || V.is_inf(center + s)) {
        ok = false;
        break;
      }
      H.values[i * n * n + a * n + a] = (V[center + s] - 2.0 * V[center] + V[center - s]) / (h * h);
    }
    // mixed partials: average d_a(g_b) and d_b(g_a) so the matrix is symmetric
    for (int a = 0; a < n && ok; ++a) {
      for (int b = a + 1; b < n && ok; ++b) {
        auto diff = [&](int axis, int comp, double& out) {
          const std::size_t s = g.stride(axis);
          std::size_t lo = i, hi = i;
          double span = 2.0 * h;
          if (c[axis] > 0) lo = i - s;
          else span = h;
          if (c[axis] < m - 1) hi = i + s;
          else span = h;
          if (!G.valid[lo] || !G.valid[hi]) return false;
          out = (G.values[hi * n + comp] - G.values[lo * n + comp]) / span;
          return true;
        };
        double dab, dba;
        if (!diff(a, b, dab) || !diff(b, a, dba)) {
          ok = false;
          break;
        }
        const double v = 0.5 * (dab + dba);
        H.values[i * n * n + a * n + b] = v;
        H.values[i * n * n + b * n + a] = v;
      }
    }
    if (!ok) H.valid[i] = 0;
  }
  return H;
}

double determinant(const double* m, int n) {
  switch (n) {
    case 1: return m[0];
    case 2: return m[0] * m[3] - m[1] * m[2];
    case 3:
      return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
             m[2] * (m[3] * m[7] - m[4] * m[6]);
    default: throw Error(Errc::DimensionUnsupported, "determinant");
  }
}

}  // namespace santalo
