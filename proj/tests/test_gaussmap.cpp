#include "polysmooth/gaussmap.hpp"
#include "polysmooth/shapes.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace polysmooth;
using testsupport::slab_points;

namespace {

MetricField conformal_at(const Vec& c, double eps) {
  ConformalPotential p;
  p.scale = eps;
  p.center = c;
  return MetricField::conformal(static_cast<int>(c.size()), p);
}

MetricField mild_constant() {
  Mat A = Mat::Identity(3, 3);
  A(0, 1) = 0.15;
  A(2, 0) = -0.1;
  return MetricField::constant(A);
}

// Straight transcription of the three-case recursion with an explicit
// inverse metric and acos/atan, sharing nothing with the library beyond the
// smoothed values and gradients.
Vec oracle_nhat(const Polytope& P, const SmoothingSchedule& S, const MetricField& m, const Vec& x) {
  const auto chain = smooth_chain<double>(P, S, x);
  const Mat g = m.g<double>(x);
  const Mat gi = g.inverse();
  auto gn = [&](const Vec& d) { return std::sqrt(d.dot(gi * d)); };
  Vec N = P.face(0).normal;
  for (int k = 1; k <= P.q(); ++k) {
    const double gap = chain[k].gap, inv = 1.0 / S.lambda(k);
    const Vec Nk = P.face(k).normal;
    if (gap > inv) continue;
    if (gap < -inv) {
      N = Nk;
      continue;
    }
    const Vec& d = chain[k - 1].gradient;
    const double a = gn(d), b = gn(Nk);
    const double alpha = 0.5 * std::acos(d.dot(gi * Nk) / (a * b));
    const double theta = std::acos(N.dot(Nk)) / (2 * alpha);
    const double e = EtaKernel::standard().d1(S.lambda(k) * gap);
    const double ratio = ((1 + e) * a - (1 - e) * b) / ((1 + e) * a + (1 - e) * b);
    const double phi = std::atan(ratio * std::tan(alpha));
    N = (std::sin(theta * (alpha + phi)) * N + std::sin(theta * (alpha - phi)) * Nk) / std::sin(2 * theta * alpha);
  }
  return N;
}

}  // namespace

TEST(AnglePhi, BoundaryAndSymmetricCases) {
  EXPECT_DOUBLE_EQ(angle_phi(0.6, 0.0, 1.3, 1.3), 0.0);
  EXPECT_NEAR(angle_phi(0.6, 1.0, 0.7, 1.9), 0.6, 1e-15);
  EXPECT_NEAR(angle_phi(0.6, -1.0, 0.7, 1.9), -0.6, 1e-15);
  for (double e = -1.0; e <= 1.0; e += 0.05) {
    const double p = angle_phi(0.9, e, 0.8, 1.1);
    EXPECT_LE(std::abs(p), 0.9 + 1e-15);
  }
  EXPECT_THROW(angle_phi(0.6, 1.0, 0.0, 1.0), DegeneracyError);
}

TEST(SineRatio, CotangentRatioIsDecreasing) {
  EXPECT_EQ(t_cot_t(0.0), 1.0);
  EXPECT_NEAR(t_cot_t(1e-9), 1.0, 1e-15);
  EXPECT_NEAR(t_cot_t(kPi / 2), 0.0, 1e-15);
  double prev = t_cot_t(0.01);
  for (int i = 2; i <= 313; ++i) {
    const double v = t_cot_t(0.01 * i);
    EXPECT_LT(v, prev) << 0.01 * i;
    prev = v;
  }
  EXPECT_THROW(t_cot_t(kPi), DomainError);
}

TEST(SineRatio, SinRatioGapExamples) {
  EXPECT_NEAR(sin_ratio_gap(0.8, 0.8, 0.7), 0.0, 1e-15);
  EXPECT_NEAR(sin_ratio_gap(0.8, 0.3, 1.0), 0.0, 1e-15);
  const double direct = std::sin(0.8) / std::sin(2.0) - std::sin(0.4) / std::sin(1.0);
  EXPECT_NEAR(sin_ratio_gap(1.0, 0.4, 0.5), direct, 1e-15);
  EXPECT_GT(direct, 0.0);
  EXPECT_THROW(sin_ratio_gap(1.0, 1.2, 0.5), DomainError);
}

TEST(SineRatio, GridInequalities) {
  // alpha on 100 points in (0, pi/2), beta on 100 in [0, alpha], theta on 50
  // in (0, 1) and 50 in [1, pi/(2 alpha)).
  int checked = 0;
  for (int ia = 1; ia <= 100; ++ia) {
    const double alpha = (kPi / 2) * ia / 101.0;
    for (int ib = 0; ib < 100; ++ib) {
      const double beta = std::min(alpha, alpha * ib / 99.0);
      for (int it = 1; it <= 50; ++it) {
        const double th = it / 51.0;
        ASSERT_GE(sin_ratio_gap(alpha, beta, th), -1e-12);
        const double top = kPi / (2 * alpha);
        const double th2 = 1.0 + (top - 1.0) * (it - 1) / 50.0;
        const double bound = 4 * (th2 - 1) * alpha / (std::sin(2 * alpha) * std::sin(2 * th2 * alpha));
        ASSERT_LE(std::abs(sin_ratio_gap(alpha, beta, th2)), bound + 1e-12);
        checked += 2;
      }
    }
  }
  EXPECT_EQ(checked, 100 * 100 * 100);
}

TEST(Wk, MembershipExamples) {
  const Polytope P = unit_cube(3);
  SmoothingSchedule S(0.25, 40.0);
  const MetricField E = MetricField::euclidean(3);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) EXPECT_TRUE(in_Wk(0, rng.normal_vector(3) * 5.0, S, P, E));
  // Far from every face except x1 <= 1 and x1 >= 0 balancing at x1 = 1/2:
  // at level 3 Nhat_2 = N_0 = -N_3 inside the band.
  Vec x(3);
  x << 0.5, -5.0, -5.0;
  EXPECT_TRUE(in_Wk(2, x, S, P, E));
  EXPECT_FALSE(in_Wk(3, x, S, P, E));
  EXPECT_THROW(nhat_eval(3, x, S, P, E), DomainError);
}

TEST(Wk, GuardedSlabIsInsideDomain) {
  for (const Polytope& P : {unit_cube(3), regular_simplex(0.5)}) {
    const auto C = compute_constants(P);
    SmoothingSchedule S(0.25, default_lambda0(C.Xi, 0.25, P.q()));
    const MetricField m = conformal_at(chebyshev_center(P).center, 0.3);
    for (int k = 0; k <= P.q(); ++k)
      for (const Vec& x : slab_points(P, S, k, std::ldexp(1.0, -k) / C.Xi, 300, 7 + k))
        ASSERT_TRUE(in_Wk(k, x, S, P, m));
  }
}

TEST(Nhat, EuclideanMatchesNormalOfSmoothedBoundary) {
  for (const Polytope& P : {unit_cube(3), regular_simplex(0.5)}) {
    SmoothingSchedule S(0.25, 40.0);
    const MetricField E = MetricField::euclidean(3);
    for (const Vec& x : slab_points(P, S, P.q(), 0.0, 2000, 11)) {
      const auto v = nhat_eval(P.q(), x, S, P, E);
      const Vec grad = uhat_jet(P.q(), x, S, P).gradient;
      const double ang = std::acos(std::clamp(v.N.dot(grad.normalized()), -1.0, 1.0));
      ASSERT_LE(ang, 1e-6);
      ASSERT_NEAR(v.N.norm(), 1.0, 1e-10);
    }
  }
}

TEST(Nhat, FaceRegionGivesFaceNormal) {
  const Polytope P = unit_cube(3);
  SmoothingSchedule S(0.25, 40.0);
  const MetricField m = conformal_at(Vec::Constant(3, 0.5), 0.3);
  for (int face = 0; face < 6; ++face) {
    // Face centre on the smoothed boundary: only u_face is near 0.
    const Vec c = Vec::Constant(3, 0.5);
    const Vec x = testsupport::solve_on_ray([&](const Vec& y) { return uhat_value<double>(P, S, y); }, c,
                                            P.face(face).normal, 0.0);
    const auto v = nhat_eval(P.q(), x, S, P, m);
    EXPECT_LE((v.N - P.face(face).normal).norm(), 1e-15) << face;
  }
}

TEST(Nhat, MatchesIndependentRecursionAtEdgeBandPoints) {
  const Polytope P = unit_cube(3);
  SmoothingSchedule S(0.25, 40.0);
  const MetricField conf = conformal_at(Vec::Constant(3, 0.5), 0.4);
  Rng rng(13);
  int band = 0;
  for (const MetricField& m : {conf, mild_constant()}) {
    for (int i = 0; i < 500; ++i) {
      // Near the edge x1 = x2 = 1.
      Vec x(3);
      x << 1.0 - rng.uniform(0.0, 0.01), 1.0 - rng.uniform(0.0, 0.01), rng.uniform(0.2, 0.8);
      const auto v = nhat_eval(P.q(), x, S, P, m);
      ASSERT_LE((v.N - oracle_nhat(P, S, m, x)).norm(), 1e-12);
      if (v.cases[1] != BandCase::Band) continue;
      ++band;
      // Nonnegative decomposition on {N_0, N_1}.
      Mat B(3, 2);
      B << P.face(0).normal, P.face(1).normal;
      const Vec a = B.colPivHouseholderQr().solve(v.N);
      EXPECT_LE((B * a - v.N).norm(), 1e-12);
      EXPECT_GE(a.minCoeff(), -1e-12);
    }
  }
  EXPECT_GT(band, 100);
}

TEST(Nhat, CompanionNormalAgreesWithDirectNormalization) {
  for (const Polytope& P : {unit_cube(3), regular_simplex(0.5)}) {
    const auto C = compute_constants(P);
    SmoothingSchedule S(0.3, default_lambda0(C.Xi, 0.3, P.q()));
    for (const MetricField& m : {conformal_at(chebyshev_center(P).center, 0.3), mild_constant()}) {
      for (int k = 0; k <= P.q(); ++k)
        for (const Vec& x : slab_points(P, S, k, std::ldexp(1.0, -k) / C.Xi, 200, 17 + k)) {
          const auto v = nhat_eval(k, x, S, P, m);
          ASSERT_LE(v.nu_discrepancy, 1e-8);
          ASSERT_NEAR(v.N.norm(), 1.0, 1e-10);
          ASSERT_NEAR(v.nu.dot(m.g<double>(x) * v.nu), 1.0, 1e-10);
          for (const auto& t : v.angles)
            if (t.alpha > 0) {
              ASSERT_LE(std::abs(std::tan(t.phi)), std::tan(t.alpha) * (1 + 1e-12));
              ASSERT_LT(t.alpha, kPi / 2);
              ASSERT_LT(t.theta, kPi / (2 * t.alpha));
            }
        }
    }
  }
}

TEST(Nhat, ConvexRepresentationInGuardedSlab) {
  for (const Polytope& P : {unit_cube(3), regular_simplex(0.5)}) {
    const auto C = compute_constants(P);
    SmoothingSchedule S(0.3, default_lambda0(C.Xi, 0.3, P.q()));
    const MetricField m = mild_constant();
    for (int k = 1; k <= P.q(); ++k)
      for (const Vec& x : slab_points(P, S, k, std::ldexp(1.0, -k) / C.Xi, 200, 23 + k)) {
        const auto v = nhat_eval(k, x, S, P, m);
        const double uk = uhat_value<double>(P, S, x, k);
        std::vector<int> sup;
        for (int i = 0; i <= k; ++i)
          if (P.face(i)(x) >= uk - 2.0 * k / S.lambda(i)) sup.push_back(i);
        Mat B(3, static_cast<Eigen::Index>(sup.size()));
        for (std::size_t c = 0; c < sup.size(); ++c) B.col(static_cast<Eigen::Index>(c)) = P.face(sup[c]).normal;
        ASSERT_LE(testsupport::nnls_residual(B, v.N), 1e-8);
      }
  }
}

TEST(Nhat, TransversalityInSlabs) {
  for (const Polytope& P : {unit_cube(3), regular_simplex(0.5)}) {
    const auto C = compute_constants(P);
    SmoothingSchedule S(0.25, default_lambda0(C.Xi, 0.25, P.q()));
    const MetricField m = mild_constant();
    int hits = 0;
    for (int j = 0; j < P.q(); ++j)
      for (const Vec& x : slab_points(P, S, j, std::ldexp(1.0, -j) / C.Xi, 400, 29 + j)) {
        const auto v = nhat_eval(j, x, S, P, m);
        for (int k = j + 1; k <= P.q(); ++k) {
          const double uk = P.face(k)(x);
          if (uk < -1.0 / C.Xi || uk > 0.0) continue;
          ++hits;
          ASSERT_GE(wedge_norm(v.N, P.face(k).normal), 1.0 / C.Xi - 1e-9);
        }
      }
    EXPECT_GT(hits, 100);
  }
}

TEST(Nhat, JacobianMatchesFiniteDifferences) {
  const Polytope P = unit_cube(3);
  SmoothingSchedule S(0.45, 1.5);
  const MetricField m = mild_constant();
  const double h = 1e-6;
  for (const Vec& x : slab_points(P, S, P.q(), 0.05, 200, 31)) {
    const Mat J = nhat_jacobian(P.q(), x, S, P, m);
    Mat F(3, 3);
    for (int d = 0; d < 3; ++d) {
      const Vec e = Vec::Unit(3, d) * h;
      F.col(d) = (nhat_eval(P.q(), Vec(x + e), S, P, m).N - nhat_eval(P.q(), Vec(x - e), S, P, m).N) / (2 * h);
    }
    ASSERT_LE((F - J).norm(), 1e-5 * std::max(1.0, J.norm()));
    // Tangent to the sphere at Nhat.
    ASSERT_LE((nhat_eval(P.q(), x, S, P, m).N.transpose() * J).norm(), 1e-10 * std::max(1.0, J.norm()));
  }
}

TEST(Nhat, LipschitzConstantIsStableUnderLambdaDoubling) {
  const Polytope P = unit_cube(3);
  const auto C = compute_constants(P);
  const MetricField m = mild_constant();
  double fitted[2];
  for (int r = 0; r < 2; ++r) {
    SmoothingSchedule S(0.3, default_lambda0(C.Xi, 0.3, P.q()) * (r ? 2.0 : 1.0));
    double worst = 0.0;
    for (int k = 1; k <= P.q(); ++k)
      for (const Vec& x : testsupport::band_points(P, S, k, std::ldexp(1.0, -k) / C.Xi, 200, 37 + k)) {
        if (!in_Wk(k, x, S, P, m)) continue;
        const Mat J = nhat_jacobian(k, x, S, P, m);
        worst = std::max(worst, J.norm() / S.lambda(k));
      }
    fitted[r] = worst;
  }
  EXPECT_GT(fitted[0], 0.0);
  const double ratio = fitted[1] / fitted[0];
  EXPECT_GE(ratio, 1.0 / 1.2);
  EXPECT_LE(ratio, 1.2);
}
