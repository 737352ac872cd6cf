#include "polysmooth/smoothing.hpp"

namespace polysmooth {

SmoothJet<double> uhat_jet(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P, const EtaKernel& K) {
  if (k < 0 || k > P.q()) throw DomainError("uhat_jet: level " + std::to_string(k) + " out of range");
  auto chain = smooth_chain<double>(P, S, x, k, true, K);
  return chain.back();
}

ConvexCoefficients convex_coefficients(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P,
                                       const EtaKernel& K) {
  if (k < 0 || k > P.q()) throw DomainError("convex_coefficients: level out of range");
  const auto chain = smooth_chain<double>(P, S, x, k, false, K);
  Vec a = Vec::Zero(k + 1);
  a[0] = 1.0;
  for (int m = 1; m <= k; ++m) {
    const double inv = 1.0 / S.lambda(m);
    const double gap = chain[static_cast<std::size_t>(m)].gap;
    if (gap > inv) continue;  // uhat_m = uhat_{m-1} nearby
    if (gap < -inv) {
      a.head(m).setZero();
      a[m] = 1.0;
      continue;
    }
    const double e1 = chain[static_cast<std::size_t>(m)].eta1;
    a.head(m) *= 0.5 * (1.0 + e1);
    a[m] = 0.5 * (1.0 - e1);
  }
  ConvexCoefficients out;
  out.a = a;
  out.support.resize(static_cast<std::size_t>(k + 1));
  for (int i = 0; i <= k; ++i) out.support[static_cast<std::size_t>(i)] = a[i] > 0.0;
  return out;
}

bool hat_omega_contains(const Vec& x, const SmoothingSchedule& S, const Polytope& P, const EtaKernel& K) {
  return uhat_value<double>(P, S, x, -1, K) <= 0.0;
}

bool in_inner_region(const Vec& x, const SmoothingSchedule& S, const Polytope& P) {
  return P.max_value(x) <= -1.0 / S.lambda0;
}

}  // namespace polysmooth
