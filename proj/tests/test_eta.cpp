#include "polysmooth/eta.hpp"
#include "polysmooth/sampling.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

using namespace polysmooth;

namespace {

// Independent reference: adaptive Gauss-Kronrod on the unnormalized bump.
double raw_bump(double s) {
  const double v = 1.0 - 4.0 * s * s;
  return v > 0.0 ? std::exp(-1.0 / v) : 0.0;
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-14);
}

double ref_mass() { return integrate(raw_bump, -0.5, 0.5); }

// eta(t) = int |t - s| rho(s) ds, split at the kink s = t.
double ref_eta(double t) {
  const double z = ref_mass();
  const double lo = std::clamp(t, -0.5, 0.5);
  const double left = integrate([&](double s) { return (t - s) * raw_bump(s); }, -0.5, lo);
  const double right = integrate([&](double s) { return (s - t) * raw_bump(s); }, lo, 0.5);
  return (left + right) / z;
}

double ref_eta_prime(double t) {
  const double lo = std::clamp(t, -0.5, 0.5);
  return (integrate(raw_bump, -0.5, lo) - integrate(raw_bump, lo, 0.5)) / ref_mass();
}

}  // namespace

TEST(Eta, DensityIsNormalized) {
  const auto& K = EtaKernel::standard();
  EXPECT_NEAR(K.normalization(), ref_mass(), 1e-14);
  EXPECT_NEAR(K.cdf(0.5), 1.0, 0.0);
  EXPECT_NEAR(K.cdf(0.0), 0.5, 1e-15);
}

TEST(Eta, ExactAbsoluteValueOutsideWindow) {
  const auto& K = EtaKernel::standard();
  const auto j = K.jet(0.5);
  EXPECT_EQ(j.value, 0.5);
  EXPECT_EQ(j.d1, 1.0);
  EXPECT_EQ(j.d2, 0.0);
  const auto m = K.jet(-0.75);
  EXPECT_EQ(m.value, 0.75);
  EXPECT_EQ(m.d1, -1.0);
  EXPECT_EQ(K.value(3.0), 3.0);
}

TEST(Eta, ValueAtZeroIsFirstAbsoluteMoment) {
  const auto& K = EtaKernel::standard();
  const double m1 = 2.0 * integrate([](double s) { return s * raw_bump(s); }, 0.0, 0.5) / ref_mass();
  EXPECT_NEAR(K.value(0.0), m1, 1e-12);
  EXPECT_NEAR(K.first_moment(), m1, 1e-12);
  EXPECT_EQ(K.d1(0.0), 0.0);
  EXPECT_NEAR(K.d2(0.0), 2.0 * raw_bump(0.0) / ref_mass(), 1e-14);
}

TEST(Eta, MatchesDirectConvolution) {
  const auto& K = EtaKernel::standard();
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const double t = rng.uniform(-0.6, 0.6);
    EXPECT_NEAR(K.value(t), ref_eta(t), 1e-11) << "t=" << t;
    EXPECT_NEAR(K.d1(t), ref_eta_prime(t), 1e-11) << "t=" << t;
  }
}

TEST(Eta, ContractOnRandomArguments) {
  const auto& K = EtaKernel::standard();
  Rng rng(5);
  const double h = 1e-5;
  for (int i = 0; i < 100000; ++i) {
    const double t = rng.uniform(-2.0, 2.0);
    const double v = K.value(t);
    ASSERT_EQ(v, K.value(-t));
    ASSERT_EQ(K.d1(t), -K.d1(-t));
    ASSERT_GE(v, std::abs(t));
    ASSERT_LE(v, std::abs(t) + 1.0);
    if (std::abs(t) >= 0.5) ASSERT_EQ(v, std::abs(t));
    ASSERT_GE(K.d2(t), 0.0);
    ASSERT_LE(std::abs(K.d1(t)), 1.0);
    if (t > 0) ASSERT_GE(K.d1(t), 0.0);
    if (t < 0) ASSERT_LE(K.d1(t), 0.0);
    if (i % 10 == 0) {
      const double fd1 = (K.value(t + h) - K.value(t - h)) / (2 * h);
      const double fd2 = (K.d1(t + h) - K.d1(t - h)) / (2 * h);
      ASSERT_NEAR(K.d1(t), fd1, 1e-8) << t;
      ASSERT_NEAR(K.d2(t), fd2, 1e-8 * std::max(1.0, std::abs(K.d2(t)))) << t;
    }
  }
}

TEST(Eta, AutoDiffOverloadsCarryDerivatives) {
  using AD = Eigen::AutoDiffScalar<Eigen::Vector2d>;
  const auto& K = EtaKernel::standard();
  AD t(0.13, 2, 0);
  const AD s = 3.0 * t;
  const AD e = eta(K, s);
  EXPECT_DOUBLE_EQ(e.value(), K.value(0.39));
  EXPECT_DOUBLE_EQ(e.derivatives()[0], 3.0 * K.d1(0.39));
  EXPECT_DOUBLE_EQ(eta_prime(K, s).derivatives()[0], 3.0 * K.d2(0.39));
  const double h = 1e-6;
  EXPECT_NEAR(eta_second(K, s).derivatives()[0], 3.0 * (K.d2(0.39 + h) - K.d2(0.39 - h)) / (2 * h), 1e-5);
}
