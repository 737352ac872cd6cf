#include "polysmooth/metric.hpp"
#include "polysmooth/shapes.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/AutoDiff>

using namespace polysmooth;

namespace {

ConformalPotential quadratic_phi(double eps, const Vec& center) {
  ConformalPotential p;
  p.kind = ConformalPotential::Kind::Quadratic;
  p.scale = eps;
  p.center = center;
  return p;
}

ConformalPotential gaussian_phi(double amp, double width, const Vec& center) {
  ConformalPotential p;
  p.kind = ConformalPotential::Kind::Gaussian;
  p.scale = amp;
  p.width = width;
  p.center = center;
  return p;
}

MetricField sample_pullback() {
  Mat B(3, 3);
  B << 0.2, -0.1, 0.05, 0.0, 0.1, 0.3, -0.2, 0.1, 0.0;
  std::vector<Mat> C(3, Mat::Zero(3, 3));
  C[0] << 0.3, 0.1, 0.0, -0.2, 0.0, 0.1, 0.1, 0.2, -0.1;
  C[1] << 0.0, 0.2, 0.1, 0.1, -0.3, 0.0, 0.0, 0.1, 0.2;
  C[2] << -0.1, 0.0, 0.2, 0.2, 0.1, 0.1, 0.3, -0.1, 0.0;
  return MetricField::pullback(0.3, B, C);
}

std::vector<MetricField> all_families() {
  Mat A(3, 3);
  A << 1.2, 0.3, -0.1, 0.0, 0.9, 0.2, 0.1, -0.2, 1.1;
  Vec c(3);
  c << 0.4, 0.6, 0.5;
  ConformalPotential lin = quadratic_phi(0.3, c);
  lin.linear = Vec::Constant(3, 0.1);
  return {MetricField::euclidean(3), MetricField::constant(A), MetricField::conformal(3, quadratic_phi(0.4, c)),
          MetricField::conformal(3, lin), MetricField::conformal(3, gaussian_phi(0.5, 0.7, c)), sample_pullback()};
}

// Closed-form Christoffel symbols of exp(2 phi) delta.
double conformal_gamma(const Vec& dphi, int k, int i, int j) {
  return (i == k ? dphi[j] : 0.0) + (j == k ? dphi[i] : 0.0) - (i == j ? dphi[k] : 0.0);
}

}  // namespace

TEST(Metric, EuclideanAndConstantHaveNoConnection) {
  Mat A(3, 3);
  A << 2, 1, 0, 0, 1, 0, 0, 0, 3;
  const Vec x = Vec::Constant(3, 0.3);
  for (const MetricField& m : {MetricField::euclidean(3), MetricField::constant(A)}) {
    const MetricJet J = metric_jet(m, x);
    for (const Mat& G : J.gamma) EXPECT_EQ(G.norm(), 0.0);
    EXPECT_LE((J.ginv * J.g - Mat::Identity(3, 3)).norm(), 1e-12);
  }
  EXPECT_EQ((metric_jet(MetricField::euclidean(3), x).g - Mat::Identity(3, 3)).norm(), 0.0);
}

TEST(Metric, ConformalChristoffelMatchesClosedForm) {
  Rng rng(61);
  for (const MetricField& m : all_families()) {
    if (m.family() != MetricFamily::Conformal) continue;
    for (int s = 0; s < 200; ++s) {
      const Vec x = rng.normal_vector(3);
      const MetricJet J = metric_jet(m, x);
      const Vec dphi = m.potential().gradient(x);
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) ASSERT_NEAR(J.gamma[k](i, j), conformal_gamma(dphi, k, i, j), 1e-12);
    }
  }
}

TEST(Metric, PullbackChristoffelIsInverseJacobianTimesSecondDerivative) {
  // For g = psi^* delta, Gamma^k_ij = (J^{-1})_{km} d_i d_j psi_m.
  const MetricField m = sample_pullback();
  Rng rng(67);
  for (int s = 0; s < 200; ++s) {
    const Vec x = 0.5 * rng.normal_vector(3);
    const MetricJet J = metric_jet(m, x);
    const Mat Jinv = m.pullback_jacobian<double>(x).inverse();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        Vec d2psi(3);
        for (int mm = 0; mm < 3; ++mm) d2psi[mm] = 2.0 * m.pullback_eps() * m.pullback_quadratic()[j](mm, i);
        const Vec gk = Jinv * d2psi;
        for (int k = 0; k < 3; ++k) ASSERT_NEAR(J.gamma[k](i, j), gk[k], 1e-12);
      }
  }
}

TEST(Metric, DerivativesMatchFiniteDifferencesAndAutoDiff) {
  using AD = Eigen::AutoDiffScalar<Vec>;
  Rng rng(71);
  for (const MetricField& m : all_families()) {
    for (int s = 0; s < 1000; ++s) {
      const Vec x = rng.uniform(0.0, 1.0) * rng.unit_vector(3) + Vec::Constant(3, 0.5);
      const auto dg = m.dg(x);
      const double h = 1e-5;
      VecX<AD> xa(3);
      for (int d = 0; d < 3; ++d) xa[d] = AD(x[d], 3, d);
      const MatX<AD> ga = m.g<AD>(xa);
      for (int l = 0; l < 3; ++l) {
        const Vec e = Vec::Unit(3, l) * h;
        const Mat fd = (m.g<double>(Vec(x + e)) - m.g<double>(Vec(x - e))) / (2 * h);
        ASSERT_LE((fd - dg[l]).norm(), 1e-6 * std::max(1.0, dg[l].norm())) << to_string(m.family());
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            // Constant entries carry an empty derivative vector.
            const auto& dv = ga(i, j).derivatives();
            const double ad = dv.size() ? dv[l] : 0.0;
            ASSERT_NEAR(ad, dg[l](i, j), 1e-12 * std::max(1.0, dg[l].norm()));
          }
      }
      const MetricJet J = metric_jet(m, x);
      ASSERT_LE((J.g - J.g.transpose()).norm(), 1e-12);
      ASSERT_LE((J.ginv * J.g - Mat::Identity(3, 3)).norm(), 1e-10);
      for (const Mat& G : J.gamma) ASSERT_LE((G - G.transpose()).norm(), 1e-14);
    }
  }
}

TEST(Metric, NonPositiveMetricIsRejectedWithPoint) {
  // psi(x) = x + eps v(x) folds where its Jacobian is singular.
  Mat B = -Mat::Identity(3, 3);
  std::vector<Mat> C(3, Mat::Zero(3, 3));
  const MetricField m = MetricField::pullback(1.0, B, C);
  try {
    metric_jet(m, Vec::Constant(3, 0.25));
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("0.25"), std::string::npos);
  }
}

TEST(Metric, UnitNormalExamples) {
  const Polytope P = unit_cube(3);
  const Vec x = Vec::Constant(3, 0.3);
  const MetricJet E = metric_jet(MetricField::euclidean(3), x);
  for (int k = 0; k < 6; ++k) EXPECT_LE((g_unit_normal(P.face(k).normal, E) - P.face(k).normal).norm(), 1e-15);

  Vec c(3);
  c << 0.1, 0.2, 0.3;
  const MetricField conf = MetricField::conformal(3, quadratic_phi(0.7, c));
  const MetricJet Cj = metric_jet(conf, x);
  const double phi = conf.potential().value<double>(x);
  for (int k = 0; k < 6; ++k) {
    const Vec nu = g_unit_normal(P.face(k).normal, Cj);
    EXPECT_LE((nu - std::exp(-phi) * P.face(k).normal).norm(), 1e-14);
    EXPECT_NEAR(g_inner(nu, nu, Cj), 1.0, 1e-12);
  }

  Mat A(3, 3);
  A << 1.5, 0.4, 0.0, -0.3, 1.0, 0.2, 0.0, 0.5, 0.8;
  const MetricJet Aj = metric_jet(MetricField::constant(A), x);
  for (int k = 0; k < 6; ++k) {
    const Vec N = P.face(k).normal;
    const Vec raw = A.inverse() * A.inverse().transpose() * N;
    const Vec oracle = raw / std::sqrt(raw.dot(A.transpose() * A * raw));
    EXPECT_LE((g_unit_normal(N, Aj) - oracle).norm(), 1e-13);
  }
  EXPECT_THROW(g_unit_normal(Vec::Zero(3), E), VanishingGradientError);
}

TEST(Metric, RoundSphereMeanCurvatureAndSecondFundamentalForm) {
  const double r = 0.7;
  Rng rng(73);
  const MetricJet E = metric_jet(MetricField::euclidean(3), Vec::Zero(3));
  for (int s = 0; s < 50; ++s) {
    const Vec w = rng.unit_vector(3);
    const Vec x = r * w;
    // f = |x| - r
    const Vec df = w;
    const Mat d2f = (Mat::Identity(3, 3) - w * w.transpose()) / r;
    EXPECT_NEAR(level_set_mean_curvature(df, d2f, E), 2.0 / r, 1e-13);
    const auto II = second_fundamental_form(df, d2f, E);
    EXPECT_LE((II.II - Mat::Identity(2, 2) / r).norm(), 1e-13);
    EXPECT_LE((II.frame.transpose() * II.frame - Mat::Identity(2, 2)).norm(), 1e-13);
    EXPECT_LE((II.frame.transpose() * w).norm(), 1e-13);
    (void)x;
  }
}

TEST(Metric, HyperplanesInConstantMetricsAreTotallyGeodesic) {
  Mat A(3, 3);
  A << 1.5, 0.4, 0.0, -0.3, 1.0, 0.2, 0.0, 0.5, 0.8;
  const MetricJet J = metric_jet(MetricField::constant(A), Vec::Zero(3));
  Rng rng(79);
  for (int s = 0; s < 20; ++s) {
    const Vec N = rng.unit_vector(3);
    EXPECT_NEAR(level_set_mean_curvature(N, Mat::Zero(3, 3), J), 0.0, 1e-15);
    EXPECT_LE(second_fundamental_form(N, Mat::Zero(3, 3), J).II.norm(), 1e-15);
  }
}

TEST(Metric, ConformalHyperplaneMatchesTransformationLaw) {
  // For g = exp(2 phi) delta a Euclidean hyperplane is umbilic with
  // II = exp(-phi) d_N phi (induced metric), H = exp(-phi) (n-1) d_N phi.
  Rng rng(83);
  for (const MetricField& m : all_families()) {
    if (m.family() != MetricFamily::Conformal) continue;
    for (int s = 0; s < 200; ++s) {
      const Vec x = rng.normal_vector(3);
      const Vec N = rng.unit_vector(3);
      const MetricJet J = metric_jet(m, x);
      const double e = std::exp(-m.potential().value<double>(x));
      const double dN = m.potential().gradient(x).dot(N);
      ASSERT_NEAR(level_set_mean_curvature(N, Mat::Zero(3, 3), J), e * 2.0 * dN, 1e-12);
      const auto II = second_fundamental_form(N, Mat::Zero(3, 3), J);
      ASSERT_LE((II.II - e * dN * Mat::Identity(2, 2)).norm(), 1e-12);
    }
  }
}

TEST(Metric, MeanCurvatureIsTraceOfSecondFundamentalForm) {
  Rng rng(89);
  for (const MetricField& m : all_families()) {
    for (int s = 0; s < 300; ++s) {
      const Vec x = Vec::Constant(3, 0.5) + 0.5 * rng.normal_vector(3);
      const MetricJet J = metric_jet(m, x);
      const Vec df = rng.normal_vector(3);
      Mat B = rng.normal_vector(9).reshaped(3, 3);
      const Mat d2f = B * B.transpose();
      const double H = level_set_mean_curvature(df, d2f, J);
      const auto II = second_fundamental_form(df, d2f, J);
      ASSERT_NEAR(H, II.trace(), 1e-9 * std::max(1.0, std::abs(H)));
      ASSERT_LE((II.frame.transpose() * J.g * II.frame - Mat::Identity(2, 2)).norm(), 1e-10);
    }
  }
}

TEST(FlatPieces, FaceAndEdgeSamplesLieOnThePiece) {
  const Polytope P = unit_cube(3);
  Rng rng(97);
  const auto face = sample_flat_piece(P, {0}, 500, rng);
  ASSERT_EQ(face.size(), 500u);
  for (const Vec& x : face) {
    EXPECT_NEAR(P.face(0)(x), 0.0, 1e-14);
    EXPECT_TRUE(P.contains(x, 1e-12));
  }
  const auto edge = sample_flat_piece(P, {0, 1}, 200, rng);
  ASSERT_EQ(edge.size(), 200u);
  for (const Vec& x : edge) {
    EXPECT_NEAR(x[0], 1.0, 1e-14);
    EXPECT_NEAR(x[1], 1.0, 1e-14);
  }
  EXPECT_TRUE(sample_flat_piece(P, {0, 3}, 10, rng).empty());  // opposite faces
}

TEST(MetricAssumptions, EuclideanCubeIsExact) {
  const auto rep = check_metric_assumptions(unit_cube(3), MetricField::euclidean(3), 200, 1);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.min_face_mean_curvature, 0.0);
  EXPECT_EQ(rep.max_angle_excess, 0.0);
  EXPECT_EQ(rep.face_samples, 6u * 200u);
  EXPECT_EQ(rep.pair_samples, 12u * 200u);
  EXPECT_TRUE(rep.empty_faces.empty());
}

TEST(MetricAssumptions, CenteredConformalPassesWithInvariantAngles) {
  for (const Polytope& P : {unit_cube(3), regular_simplex(0.5)}) {
    const Vec c = chebyshev_center(P).center;
    const MetricField m = MetricField::conformal(3, quadratic_phi(0.5, c));
    const auto rep = check_metric_assumptions(P, m, 200, 2);
    EXPECT_TRUE(rep.pass);
    EXPECT_GT(rep.min_face_mean_curvature, 0.0);
    EXPECT_LE(std::abs(rep.max_angle_excess), 1e-10);
  }
}

TEST(MetricAssumptions, ShearViolatesAngleComparisonWithWitness) {
  Mat A = Mat::Identity(3, 3);
  A(0, 1) = 0.8;
  const Polytope P = unit_cube(3);
  const auto rep = check_metric_assumptions(P, MetricField::constant(A), 100, 3);
  EXPECT_FALSE(rep.pass);
  EXPECT_FALSE(rep.angle_comparison);
  EXPECT_TRUE(rep.mean_convex);
  ASSERT_GE(rep.max_angle_pair.first, 0);
  const auto [j, k] = rep.max_angle_pair;
  EXPECT_NEAR(P.face(j)(rep.max_angle_witness), 0.0, 1e-12);
  EXPECT_NEAR(P.face(k)(rep.max_angle_witness), 0.0, 1e-12);
  // Oracle: <nu_j, nu_k>_g = N_j^T g^{-1} N_k / (|N_j|_{g^{-1}} |N_k|_{g^{-1}}).
  const Mat gi = (A.transpose() * A).inverse();
  const Vec Nj = P.face(j).normal, Nk = P.face(k).normal;
  const double oracle = Nj.dot(gi * Nk) / std::sqrt(Nj.dot(gi * Nj) * Nk.dot(gi * Nk));
  EXPECT_NEAR(rep.max_angle_excess, oracle - Nj.dot(Nk), 1e-12);
  EXPECT_GT(rep.max_angle_excess, 0.1);
}
