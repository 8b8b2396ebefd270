// Dense revised simplex for multimarginal transport LPs.
//
// Variables are index tuples (slot 0 slowest). Rows are the marginal constraints with
// row (i, 0) dropped for i >= 1, which removes the k-1 redundant equalities.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "santalo/error.hpp"
#include "santalo/transport.hpp"

namespace santalo::detail {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr int kBlandAfter = 50;
constexpr double kMassFloor = 1e-15;

struct Problem {
  int k = 0;
  int dim = 1;
  double scale = 1.0;                      // coupling constant C
  std::vector<int> m;                      // support sizes
  std::vector<std::vector<double>> ax;     // a_i * x, sorted order, point-major
  std::vector<std::vector<double>> w;      // weights, sorted order
  std::vector<std::vector<int>> perm;      // sorted position -> original index
  std::vector<int> off;                    // first row of slot i (slot >= 1 starts at a = 1)
  int rows = 0;
  std::int64_t n_tuples = 0;
  std::int64_t n_prefix = 0;  // tuples / m[k-1]

  int row(int i, int a) const {
    if (i == 0) return a;
    return a == 0 ? -1 : off[i] + a - 1;
  }

  void decode(std::int64_t t, int* idx) const {
    for (int i = k - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(t % m[i]);
      t /= m[i];
    }
  }

  double cost(const int* idx) const {
    double c = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) {
        const double* p = &ax[i][idx[i] * dim];
        const double* q = &ax[j][idx[j] * dim];
        for (int d = 0; d < dim; ++d) c += p[d] * q[d];
      }
    return scale * c;
  }
};

Problem setup(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& a, double C) {
  Problem P;
  P.k = static_cast<int>(measures.size());
  P.dim = measures.front().dim;
  P.scale = C;
  P.n_tuples = 1;
  for (int i = 0; i < P.k; ++i) {
    const auto& mu = measures[i];
    const int mi = static_cast<int>(mu.size());
    std::vector<int> order(mi);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int p, int q) {
      return std::lexicographical_compare(mu.point(p), mu.point(p) + mu.dim, mu.point(q), mu.point(q) + mu.dim);
    });
    std::vector<double> ax(static_cast<std::size_t>(mi) * P.dim), w(mi);
    for (int s = 0; s < mi; ++s) {
      for (int d = 0; d < P.dim; ++d) ax[s * P.dim + d] = a[i] * mu.point(order[s])[d];
      w[s] = mu.weights[order[s]];
    }
    P.m.push_back(mi);
    P.ax.push_back(std::move(ax));
    P.w.push_back(std::move(w));
    P.perm.push_back(std::move(order));
    P.n_tuples *= mi;
  }
  P.n_prefix = P.n_tuples / P.m.back();
  P.off.assign(P.k, 0);
  int r = P.m[0];
  for (int i = 1; i < P.k; ++i) {
    P.off[i] = r;
    r += P.m[i] - 1;
  }
  P.rows = r;
  return P;
}

// Walks every tuple in order, feeding (tuple id, cost - sum v) to visit, which returns
// false to stop early. Start at prefix `from`, wrapping around once.
template <class Visit>
void scan(const Problem& P, const std::vector<std::vector<double>>& v, std::int64_t from, Visit&& visit) {
  const int k = P.k, n = P.dim, last = k - 1, ml = P.m[last];
  std::vector<int> idx(k);
  std::vector<double> S(n);
  for (std::int64_t c = 0; c < P.n_prefix; ++c) {
    const std::int64_t p = (from + c) % P.n_prefix;
    std::int64_t t = p;
    for (int i = last - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(t % P.m[i]);
      t /= P.m[i];
    }
    std::fill(S.begin(), S.end(), 0.0);
    double pc = 0.0, Y = 0.0;
    for (int i = 0; i < last; ++i) {
      const double* xi = &P.ax[i][idx[i] * n];
      for (int d = 0; d < n; ++d) {
        pc += S[d] * xi[d];
        S[d] += xi[d];
      }
      Y += v[i][idx[i]];
    }
    pc *= P.scale;
    const double* xl = P.ax[last].data();
    const double* vl = v[last].data();
    const std::int64_t base = p * ml;
    bool go = true;
    for (int a = 0; a < ml && go; ++a) {
      double dot = 0.0;
      for (int d = 0; d < n; ++d) dot += S[d] * xl[a * n + d];
      go = visit(base + a, pc + P.scale * dot - Y - vl[a]);
    }
    if (!go) return;
  }
}

class Simplex {
 public:
  explicit Simplex(const Problem& P) : P_(P), M_(P.rows) {
    b_.resize(M_);
    for (int a = 0; a < P.m[0]; ++a) b_[a] = P.w[0][a];
    for (int i = 1; i < P.k; ++i)
      for (int a = 1; a < P.m[i]; ++a) b_[P.row(i, a)] = P.w[i][a];
    double xmax = 0.0;
    for (int i = 0; i < P.k; ++i)
      for (double q : P.ax[i]) xmax = std::max(xmax, std::abs(q));
    const double cmax = std::abs(P.scale) * xmax * xmax * P.dim * P.k * (P.k - 1) / 2.0;
    tol_ = 1e-11 * std::max(1.0, cmax);
    chunk_ = std::max<std::int64_t>(2048, 4 * static_cast<std::int64_t>(M_));
  }

  void run() {
    staircase();
    refactor();
    const std::size_t max_pivots = static_cast<std::size_t>(std::min<std::int64_t>(P_.n_tuples * 20 + 10000, 50000000));
    const int refactor_every = std::max(100, M_ / 2);
    int since = 0, degenerate = 0;
    std::int64_t cursor = 0;
    std::vector<int> idx(P_.k);
    while (true) {
      const bool bland = degenerate >= kBlandAfter;
      std::int64_t q = -1;
      double dq = tol_;
      load_duals();
      if (bland) {
        scan(P_, v_, 0, [&](std::int64_t t, double d) {
          if (d > tol_) {
            q = t;
            dq = d;
            return false;
          }
          return true;
        });
      } else {
        std::int64_t seen = 0, prefixes = 0;
        const int ml = P_.m.back();
        scan(P_, v_, cursor, [&](std::int64_t t, double d) {
          if (d > dq) {
            dq = d;
            q = t;
          }
          ++seen;
          if (t % ml == ml - 1) {
            ++prefixes;
            if (q >= 0 && seen >= chunk_) return false;
          }
          return true;
        });
        cursor = (cursor + prefixes) % P_.n_prefix;
      }
      if (q < 0) break;
      if (pivots_ >= max_pivots)
        throw Error(Errc::NotConverged, "simplex pivot limit reached after " + std::to_string(pivots_) + " pivots");

      P_.decode(q, idx.data());
      Eigen::VectorXd alpha = Eigen::VectorXd::Zero(M_);
      for (int i = 0; i < P_.k; ++i) {
        const int r = P_.row(i, idx[i]);
        if (r >= 0) alpha += Binv_.col(r);
      }
      double theta = kInf;
      for (int r = 0; r < M_; ++r)
        if (alpha[r] > kPivotTol) theta = std::min(theta, std::max(xB_[r], 0.0) / alpha[r]);
      if (!std::isfinite(theta)) throw Error(Errc::NotConverged, "simplex found an unbounded direction");
      int leave = -1;
      for (int r = 0; r < M_; ++r) {
        if (!(alpha[r] > kPivotTol)) continue;
        if (std::max(xB_[r], 0.0) / alpha[r] > theta + 1e-15) continue;
        if (leave < 0) {
          leave = r;
        } else if (bland ? basic_[r] < basic_[leave] : alpha[r] > alpha[leave]) {
          leave = r;
        }
      }

      xB_ -= theta * alpha;
      xB_[leave] = theta;
      for (int r = 0; r < M_; ++r)
        if (xB_[r] < 0.0) xB_[r] = 0.0;
      Eigen::RowVectorXd pr = Binv_.row(leave) / alpha[leave];
      Binv_.noalias() -= alpha * pr;
      Binv_.row(leave) = pr;
      y_ += dq * pr.transpose();
      basic_[leave] = q;
      ++pivots_;
      degenerate = theta <= 1e-15 ? degenerate + 1 : 0;
      if (++since >= refactor_every) {
        refactor();
        since = 0;
      }
    }
    refactor();
    load_duals();
  }

  MultiPlan extract(const std::vector<double>& a) const {
    const Problem& P = P_;
    MultiPlan out;
    out.k = P.k;
    out.method = OtMethod::ExactLP;
    out.coupling_scale = P.scale;
    out.lambda = a;
    out.pivots = pivots_;

    // Duals in original index order, shifted to exact feasibility.
    std::vector<std::vector<double>> v = v_;
    double viol = 0.0;
    scan(P, v, 0, [&](std::int64_t, double d) {
      viol = std::max(viol, d);
      return true;
    });
    for (double& z : v[0]) z += viol;

    // Basic tuples sorted by id for a stable entry order.
    std::vector<int> order(M_);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int p, int q) { return basic_[p] < basic_[q]; });
    std::vector<int> idx(P.k);
    std::vector<std::vector<double>> marg(P.k);
    for (int i = 0; i < P.k; ++i) marg[i].assign(P.m[i], 0.0);
    double obj = 0.0, slack = 0.0;
    for (int r : order) {
      // Rounding residue on degenerate basic tuples; far below any retained weight.
      const double mass = xB_[r];
      if (!(mass > kMassFloor)) continue;
      P.decode(basic_[r], idx.data());
      const double c = P.cost(idx.data());
      double sv = 0.0;
      for (int i = 0; i < P.k; ++i) {
        out.tuples.push_back(P.perm[i][idx[i]]);
        marg[i][idx[i]] += mass;
        sv += v[i][idx[i]];
      }
      out.masses.push_back(mass);
      obj += c * mass;
      slack = std::max(slack, std::abs(sv - c));
    }
    out.duals.resize(P.k);
    for (int i = 0; i < P.k; ++i) {
      out.duals[i].assign(P.m[i], 0.0);
      for (int s2 = 0; s2 < P.m[i]; ++s2) out.duals[i][P.perm[i][s2]] = v[i][s2];
    }
    // v_1(first support point) = 0; the constant moves to v_2.
    const double shift = out.duals[0][0];
    for (double& z : out.duals[0]) z -= shift;
    for (double& z : out.duals[1]) z += shift;
    double dual = 0.0, err = 0.0;
    for (int i = 0; i < P.k; ++i)
      for (int s2 = 0; s2 < P.m[i]; ++s2) {
        dual += out.duals[i][P.perm[i][s2]] * P.w[i][s2];
        err += std::abs(marg[i][s2] - P.w[i][s2]);
      }
    out.objective = obj;
    out.dual_value = dual;
    out.gap = dual - obj;
    out.marginals_err = err;
    out.slackness = slack;
    return out;
  }

 private:
  void staircase() {
    const int k = P_.k;
    std::vector<int> p(k, 0);
    std::vector<double> rem(k);
    for (int i = 0; i < k; ++i) rem[i] = P_.w[i][0];
    basic_.clear();
    std::vector<double> x;
    while (true) {
      double mass = *std::min_element(rem.begin(), rem.end());
      mass = std::max(mass, 0.0);
      std::int64_t t = 0;
      for (int i = 0; i < k; ++i) t = t * P_.m[i] + p[i];
      basic_.push_back(t);
      x.push_back(mass);
      for (double& r : rem) r -= mass;
      int adv = -1;
      for (int i = 0; i < k; ++i)
        if (p[i] < P_.m[i] - 1 && (adv < 0 || rem[i] < rem[adv])) adv = i;
      if (adv < 0) break;
      ++p[adv];
      rem[adv] += P_.w[adv][p[adv]];
    }
    if (static_cast<int>(basic_.size()) != M_) throw Error(Errc::NotConverged, "staircase basis has wrong size");
  }

  void refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(M_, M_);
    Eigen::VectorXd cB(M_);
    std::vector<int> idx(P_.k);
    for (int c = 0; c < M_; ++c) {
      P_.decode(basic_[c], idx.data());
      for (int i = 0; i < P_.k; ++i) {
        const int r = P_.row(i, idx[i]);
        if (r >= 0) B(r, c) = 1.0;
      }
      cB[c] = P_.cost(idx.data());
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    Binv_ = lu.inverse();
    xB_ = Binv_ * b_;
    for (int r = 0; r < M_; ++r)
      if (xB_[r] < 0.0) xB_[r] = 0.0;
    y_ = Binv_.transpose() * cB;
  }

  void load_duals() {
    v_.assign(P_.k, {});
    for (int i = 0; i < P_.k; ++i) {
      v_[i].assign(P_.m[i], 0.0);
      for (int a = 0; a < P_.m[i]; ++a) {
        const int r = P_.row(i, a);
        if (r >= 0) v_[i][a] = y_[r];
      }
    }
  }

  const Problem& P_;
  int M_;
  Eigen::VectorXd b_, xB_, y_;
  Eigen::MatrixXd Binv_;
  std::vector<std::int64_t> basic_;
  std::vector<std::vector<double>> v_;
  double tol_ = 1e-11;
  std::int64_t chunk_ = 8192;
  std::size_t pivots_ = 0;
};

}  // namespace

MultiPlan simplex_multimarginal(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& a,
                                double coupling_scale) {
  Problem P = setup(measures, a, coupling_scale);
  Simplex s(P);
  s.run();
  return s.extract(a);
}

double max_dual_violation(const std::vector<DiscreteMeasure>& measures, const std::vector<double>& a,
                          double coupling_scale, const std::vector<std::vector<double>>& v) {
  Problem P = setup(measures, a, coupling_scale);
  std::vector<std::vector<double>> vs(P.k);
  for (int i = 0; i < P.k; ++i) {
    vs[i].resize(P.m[i]);
    for (int s = 0; s < P.m[i]; ++s) vs[i][s] = v[i][P.perm[i][s]];
  }
  double viol = -kInf;
  scan(P, vs, 0, [&](std::int64_t, double d) {
    viol = std::max(viol, d);
    return true;
  });
  return viol;
}

}  // namespace santalo::detail
