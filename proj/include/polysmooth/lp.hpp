#pragma once

#include "polysmooth/common.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace polysmooth {

enum class LpStatus { Optimal, Infeasible, Unbounded };

template <class S>
struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  S value = S(0);
  VecX<S> x;
};

namespace detail {

// Dense tableau. Column `cols()-1` is the right-hand side; the last row is the
// reduced-cost row of the current objective (maximization).
template <class S>
class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index vars) : t_(MatX<S>::Zero(rows + 1, vars + 1)), basis_(rows, -1) {}

  MatX<S>& data() { return t_; }
  std::vector<Eigen::Index>& basis() { return basis_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index vars() const { return t_.cols() - 1; }
  S rhs(Eigen::Index r) const { return t_(r, vars()); }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const S f = t_(i, c);
      if (f != S(0)) t_.row(i) -= f * t_.row(r);
    }
    basis_[r] = c;
  }

  // Load objective (maximize c.x over the first c.size() columns) and express
  // it in terms of the current basis.
  void set_objective(const VecX<S>& c) {
    const Eigen::Index z = rows();
    t_.row(z).setZero();
    t_.row(z).head(c.size()) = -c.transpose();
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const S f = t_(z, basis_[r]);
      if (f != S(0)) t_.row(z) -= f * t_.row(r);
    }
  }

  // Bland's rule; columns >= `allowed` never enter.
  bool optimize(Eigen::Index allowed, S eps) {
    const Eigen::Index z = rows();
    for (int iter = 0; iter < 100000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index c = 0; c < allowed; ++c) {
        if (t_(z, c) < -eps) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      S best = std::numeric_limits<S>::infinity();
      for (Eigen::Index r = 0; r < rows(); ++r) {
        if (t_(r, enter) > eps) {
          const S ratio = rhs(r) / t_(r, enter);
          if (ratio < best - eps || (ratio <= best + eps && leave >= 0 && basis_[r] < basis_[leave])) {
            best = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw LpError("simplex iteration limit reached");
  }

 private:
  MatX<S> t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

// maximize c.x subject to A x <= b, x free.
template <class S>
LpResult<S> solve_lp(const VecX<S>& c, const MatX<S>& A, const VecX<S>& b, S eps = S(1e-11)) {
  const Eigen::Index m = A.rows();
  const Eigen::Index d = A.cols();
  if (c.size() != d || b.size() != m) throw LpError("LP dimension mismatch");

  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index r = 0; r < m; ++r)
    if (b[r] < S(0)) art_rows.push_back(r);
  const Eigen::Index n_art = static_cast<Eigen::Index>(art_rows.size());
  const Eigen::Index n_struct = 2 * d + m;

  detail::Tableau<S> tab(m, n_struct + n_art);
  auto& T = tab.data();
  Eigen::Index a = 0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const S sgn = b[r] < S(0) ? S(-1) : S(1);
    T.row(r).segment(0, d) = sgn * A.row(r);
    T.row(r).segment(d, d) = -sgn * A.row(r);
    T(r, 2 * d + r) = sgn;
    T(r, n_struct + n_art) = sgn * b[r];
    if (sgn < S(0)) {
      T(r, n_struct + a) = S(1);
      tab.basis()[r] = n_struct + a;
      ++a;
    } else {
      tab.basis()[r] = 2 * d + r;
    }
  }

  const S feas_tol = S(1e-9);
  if (n_art > 0) {
    VecX<S> phase1 = VecX<S>::Zero(n_struct + n_art);
    phase1.tail(n_art).setConstant(S(-1));
    tab.set_objective(phase1);
    tab.optimize(n_struct + n_art, eps);
    // Phase-one optimum is -(sum of artificials); infeasible when it stays below zero.
    if (T(m, n_struct + n_art) < -feas_tol * std::max<S>(S(1), b.cwiseAbs().maxCoeff())) {
      return {LpStatus::Infeasible, S(0), VecX<S>()};
    }
    // Drive remaining artificial variables out of the basis.
    for (Eigen::Index r = 0; r < m; ++r) {
      if (tab.basis()[r] < n_struct) continue;
      Eigen::Index col = -1;
      for (Eigen::Index cc = 0; cc < n_struct; ++cc) {
        if (std::abs(T(r, cc)) > S(1e-9)) {
          col = cc;
          break;
        }
      }
      if (col >= 0) tab.pivot(r, col);
    }
  }

  VecX<S> obj = VecX<S>::Zero(n_struct + n_art);
  obj.head(d) = c;
  obj.segment(d, d) = -c;
  tab.set_objective(obj);
  const bool bounded = tab.optimize(n_struct, eps);
  if (!bounded) return {LpStatus::Unbounded, S(0), VecX<S>()};

  VecX<S> x = VecX<S>::Zero(d);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index v = tab.basis()[r];
    if (v < d) x[v] += T(r, n_struct + n_art);
    else if (v < 2 * d) x[v - d] -= T(r, n_struct + n_art);
  }
  return {LpStatus::Optimal, c.dot(x), x};
}

template <class S>
struct MinNormResult {
  VecX<S> weights;  // on the unit simplex
  VecX<S> point;    // sum of weights[i] * P.col(i)
  S norm = S(0);
};

// Minimum-norm point of conv{P.col(i)} (Wolfe's algorithm).
template <class S>
MinNormResult<S> min_norm_point(const MatX<S>& P, S tol = S(1e-14)) {
  const Eigen::Index k = P.cols();
  if (k == 0) throw LpError("min_norm_point: empty point set");
  std::vector<Eigen::Index> active;
  std::vector<S> w;
  Eigen::Index start = 0;
  P.colwise().squaredNorm().minCoeff(&start);
  active.push_back(start);
  w.push_back(S(1));
  const S scale = P.colwise().squaredNorm().maxCoeff();

  auto current = [&]() {
    VecX<S> x = VecX<S>::Zero(P.rows());
    for (std::size_t i = 0; i < active.size(); ++i) x += w[i] * P.col(active[i]);
    return x;
  };

  for (int major = 0; major < 1000; ++major) {
    VecX<S> x = current();
    Eigen::Index j = 0;
    (P.transpose() * x).minCoeff(&j);
    if (x.dot(P.col(j)) > x.squaredNorm() - tol * scale) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    w.push_back(S(0));
    for (int minor = 0; minor < 1000; ++minor) {
      const Eigen::Index s = static_cast<Eigen::Index>(active.size());
      MatX<S> K = MatX<S>::Zero(s + 1, s + 1);
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index b = 0; b < s; ++b) K(a, b) = P.col(active[a]).dot(P.col(active[b]));
        K(a, s) = S(1);
        K(s, a) = S(1);
      }
      VecX<S> rhs = VecX<S>::Zero(s + 1);
      rhs[s] = S(1);
      VecX<S> v = K.completeOrthogonalDecomposition().solve(rhs).head(s);
      if (v.minCoeff() > tol) {
        for (Eigen::Index a = 0; a < s; ++a) w[a] = v[a];
        break;
      }
      S theta = S(1);
      for (Eigen::Index a = 0; a < s; ++a) {
        if (v[a] <= tol) theta = std::min(theta, w[a] / (w[a] - v[a]));
      }
      for (Eigen::Index a = 0; a < s; ++a) w[a] = w[a] + theta * (v[a] - w[a]);
      std::vector<Eigen::Index> na;
      std::vector<S> nw;
      for (Eigen::Index a = 0; a < s; ++a) {
        if (w[a] > tol) {
          na.push_back(active[a]);
          nw.push_back(w[a]);
        }
      }
      active = std::move(na);
      w = std::move(nw);
    }
  }

  MinNormResult<S> out;
  out.weights = VecX<S>::Zero(k);
  S total = S(0);
  for (std::size_t i = 0; i < active.size(); ++i) total += w[i];
  for (std::size_t i = 0; i < active.size(); ++i) out.weights[active[i]] = w[i] / total;
  out.point = P * out.weights;
  out.norm = out.point.norm();
  return out;
}

}  // namespace polysmooth
