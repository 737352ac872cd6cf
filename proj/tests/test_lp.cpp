#include "polysmooth/lp.hpp"
#include "polysmooth/sampling.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <limits>
#include <vector>

using namespace polysmooth;

namespace {

// Vertex enumeration: every d-subset of constraints made tight.
double brute_force_lp(const Vec& c, const Mat& A, const Vec& b, bool& feasible) {
  const auto m = A.rows();
  const auto d = A.cols();
  double best = -std::numeric_limits<double>::infinity();
  feasible = false;
  std::vector<int> idx(static_cast<std::size_t>(d));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == d) {
      Mat M(d, d);
      Vec r(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        M.row(i) = A.row(idx[static_cast<std::size_t>(i)]);
        r[i] = b[idx[static_cast<std::size_t>(i)]];
      }
      Eigen::FullPivLU<Mat> lu(M);
      if (lu.rank() < d) return;
      Vec x = lu.solve(r);
      if (((A * x - b).array() <= 1e-9).all()) {
        feasible = true;
        best = std::max(best, c.dot(x));
      }
      return;
    }
    for (int i = start; i < m; ++i) {
      idx[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

// Min-norm point of a convex hull by enumerating supports and solving the
// affine KKT system on each.
double brute_force_min_norm(const Mat& P) {
  const auto k = P.cols();
  double best = std::numeric_limits<double>::infinity();
  for (long mask = 1; mask < (1L << k); ++mask) {
    std::vector<Eigen::Index> s;
    for (Eigen::Index i = 0; i < k; ++i)
      if (mask & (1L << i)) s.push_back(i);
    const auto n = static_cast<Eigen::Index>(s.size());
    Mat K = Mat::Zero(n + 1, n + 1);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) K(a, b) = P.col(s[a]).dot(P.col(s[b]));
      K(a, n) = K(n, a) = 1.0;
    }
    Vec rhs = Vec::Zero(n + 1);
    rhs[n] = 1.0;
    Eigen::FullPivLU<Mat> lu(K);
    if (lu.rank() < n + 1) continue;
    Vec v = lu.solve(rhs).head(n);
    if (v.minCoeff() < -1e-12) continue;
    Vec x = Vec::Zero(P.rows());
    for (Eigen::Index a = 0; a < n; ++a) x += v[a] * P.col(s[a]);
    best = std::min(best, x.norm());
  }
  return best;
}

}  // namespace

TEST(Lp, SmallKnownOptimum) {
  Mat A(3, 2);
  A << 1, 0, 0, 1, 1, 1;
  Vec b(3);
  b << 1, 2, 2.5;
  Vec c(2);
  c << 1, 1;
  auto r = solve_lp<double>(c, A, b);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.value, 2.5, 1e-12);
}

TEST(Lp, DetectsInfeasibility) {
  Mat A(2, 1);
  A << 1, -1;
  Vec b(2);
  b << -1, -1;  // x <= -1 and x >= 1
  auto r = solve_lp<double>(Vec::Ones(1), A, b);
  EXPECT_EQ(r.status, LpStatus::Infeasible);
}

TEST(Lp, DetectsUnboundedness) {
  Mat A(1, 2);
  A << 0, 1;
  Vec b(1);
  b << 1;
  Vec c(2);
  c << 1, 0;
  EXPECT_EQ(solve_lp<double>(c, A, b).status, LpStatus::Unbounded);
}

TEST(Lp, NegativeRightHandSidesNeedPhaseOne) {
  // 2 <= x <= 3, 1 <= y <= 4, maximize x - y -> 3 - 1
  Mat A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec b(4);
  b << 3, -2, 4, -1;
  Vec c(2);
  c << 1, -1;
  auto r = solve_lp<double>(c, A, b);
  ASSERT_EQ(r.status, LpStatus::Optimal);
  EXPECT_NEAR(r.value, 2.0, 1e-12);
  EXPECT_NEAR(r.x[0], 3.0, 1e-12);
  EXPECT_NEAR(r.x[1], 1.0, 1e-12);
}

TEST(Lp, RandomBoundedProgramsMatchVertexEnumeration) {
  for (std::uint64_t trial = 0; trial < 300; ++trial) {
    Rng rng = Rng::stream(7, trial);
    const int d = 2 + static_cast<int>(trial % 2);
    const int extra = 3 + static_cast<int>(rng.index(5));
    // Box rows keep the program bounded; random cuts may make it infeasible.
    Mat A(2 * d + extra, d);
    Vec b(2 * d + extra);
    for (int i = 0; i < d; ++i) {
      A.row(2 * i) = Vec::Unit(d, i).transpose();
      b[2 * i] = 1.0;
      A.row(2 * i + 1) = -Vec::Unit(d, i).transpose();
      b[2 * i + 1] = 1.0;
    }
    for (int r = 0; r < extra; ++r) {
      A.row(2 * d + r) = rng.unit_vector(d).transpose();
      b[2 * d + r] = rng.uniform(-0.8, 0.8);
    }
    const Vec c = rng.normal_vector(d);
    bool feasible = false;
    const double oracle = brute_force_lp(c, A, b, feasible);
    auto res = solve_lp<double>(c, A, b);
    if (!feasible) {
      EXPECT_EQ(res.status, LpStatus::Infeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(res.status, LpStatus::Optimal) << "trial " << trial;
    EXPECT_NEAR(res.value, oracle, 1e-9) << "trial " << trial;
    EXPECT_LE((A * res.x - b).maxCoeff(), 1e-9);
  }
}

TEST(MinNormPoint, MatchesSupportEnumeration) {
  for (std::uint64_t trial = 0; trial < 300; ++trial) {
    Rng rng = Rng::stream(11, trial);
    const int d = 2 + static_cast<int>(rng.index(3));
    const int k = 1 + static_cast<int>(rng.index(7));
    Mat P(d, k);
    for (int i = 0; i < k; ++i) P.col(i) = rng.unit_vector(d) + 0.3 * rng.normal_vector(d);
    const auto r = min_norm_point<double>(P);
    EXPECT_NEAR(r.norm, brute_force_min_norm(P), 1e-10) << "trial " << trial;
    EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
    EXPECT_GE(r.weights.minCoeff(), 0.0);
  }
}

TEST(MinNormPoint, OppositeVectorsReachOrigin) {
  Mat P(3, 2);
  P.col(0) = Vec::Unit(3, 0);
  P.col(1) = -Vec::Unit(3, 0);
  EXPECT_NEAR(min_norm_point<double>(P).norm, 0.0, 1e-14);
}

TEST(MinNormPoint, OrthonormalTripleGivesCentroid) {
  const Mat P = Mat::Identity(3, 3);
  const auto r = min_norm_point<double>(P);
  EXPECT_NEAR(r.norm, 1.0 / std::sqrt(3.0), 1e-14);
  EXPECT_NEAR(r.weights[0], 1.0 / 3.0, 1e-12);
}
