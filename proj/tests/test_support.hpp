#pragma once

#include "polysmooth/polytope.hpp"
#include "polysmooth/sampling.hpp"
#include "polysmooth/smoothing.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace testsupport {

using polysmooth::Polytope;
using polysmooth::Rng;
using polysmooth::SmoothingSchedule;
using polysmooth::Vec;

// Point on the ray p0 + t w where f = level, by plain bisection. f must be
// below `level` at p0; returns an empty vector if the ray never reaches it.
inline Vec solve_on_ray(const std::function<double(const Vec&)>& f, const Vec& p0, const Vec& w, double level) {
  double lo = 0.0, hi = 1.0;
  while (f(p0 + hi * w) < level) {
    hi *= 2.0;
    if (hi > 1e6) return Vec();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(p0 + mid * w) < level ? lo : hi) = mid;
  }
  return p0 + 0.5 * (lo + hi) * w;
}

// Random points of Omega with uhat_k in [-depth, 0].
inline std::vector<Vec> slab_points(const Polytope& P, const SmoothingSchedule& S, int k, double depth,
                                    std::size_t count, std::uint64_t seed) {
  const Vec p0 = polysmooth::chebyshev_center(P).center;
  Rng rng(seed);
  std::vector<Vec> out;
  auto f = [&](const Vec& x) { return polysmooth::uhat_value<double>(P, S, x, k); };
  while (out.size() < count) {
    const Vec w = rng.unit_vector(P.dim());
    const Vec x = solve_on_ray(f, p0, w, -depth * rng.uniform());
    if (x.size() && P.contains(x)) out.push_back(x);
  }
  return out;
}

// Points where level k sits inside its transition band: starting from slab
// points of level k-1, move along N_k until the gap between the smoothed level
// k-1 and u_k equals s / lambda_k, for s drawn from [-1, 1].
inline std::vector<Vec> band_points(const Polytope& P, const SmoothingSchedule& S, int k, double depth,
                                    std::size_t count, std::uint64_t seed) {
  const Vec N = P.face(k).normal;
  auto gap = [&](const Vec& x) { return polysmooth::uhat_value<double>(P, S, x, k - 1) - P.face(k)(x); };
  Rng rng(seed ^ 0x5bd1e995ULL);
  std::vector<Vec> out;
  std::size_t tries = 0;
  while (out.size() < count && tries++ < 200 * count) {
    const auto base = slab_points(P, S, k - 1, depth, 1, rng.next());
    const Vec x0 = base.front();
    const double target = rng.uniform(-1.0, 1.0) / S.lambda(k);
    double lo = -1.0, hi = 1.0;  // gap decreases along N_k
    if (!(gap(x0 + lo * N) > target && gap(x0 + hi * N) < target)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (gap(x0 + mid * N) > target ? lo : hi) = mid;
    }
    const Vec x = x0 + 0.5 * (lo + hi) * N;
    if (P.contains(x)) out.push_back(x);
  }
  if (out.size() < count) throw std::runtime_error("band_points: too few band points");
  return out;
}

// Nonnegative least squares by support enumeration (columns of B).
inline double nnls_residual(const polysmooth::Mat& B, const Vec& y) {
  const auto m = B.cols();
  double best = y.norm();
  for (long mask = 1; mask < (1L << m); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1L << i)) idx.push_back(i);
    polysmooth::Mat Bs(B.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) Bs.col(static_cast<Eigen::Index>(c)) = B.col(idx[c]);
    const Vec a = Bs.colPivHouseholderQr().solve(y);
    if (a.minCoeff() < -1e-12) continue;
    best = std::min(best, (Bs * a - y).norm());
  }
  return best;
}

}  // namespace testsupport
