#pragma once

#include "polysmooth/eta.hpp"
#include "polysmooth/polytope.hpp"

#include <vector>

namespace polysmooth {

// Geometric ladder lambda_k = gamma^{-k} lambda0.
struct SmoothingSchedule {
  double gamma = 0.25;
  double lambda0 = 40.0;

  SmoothingSchedule() = default;
  SmoothingSchedule(double g, double l0) : gamma(g), lambda0(l0) { validate(); }

  void validate() const {
    if (!(gamma > 0.0 && gamma < 0.5)) throw ConfigError("gamma must lie in (0, 1/2)");
    if (!(lambda0 > 1.0)) throw ConfigError("lambda0 must exceed 1");
  }
  double lambda(int k) const { return lambda0 * std::pow(gamma, -k); }
  std::vector<double> lambdas(int q) const {
    std::vector<double> l(static_cast<std::size_t>(q + 1));
    for (int k = 0; k <= q; ++k) l[static_cast<std::size_t>(k)] = lambda(k);
    return l;
  }
  // sum_{k=1..q} 1/lambda_k: worst-case lift of the smoothed max over the true max.
  double total_lift(int q) const {
    double s = 0.0;
    for (int k = 1; k <= q; ++k) s += 1.0 / lambda(k);
    return s;
  }
};

// Heuristic threshold for "lambda0 large enough": 8 Xi / gamma^q.
inline double default_lambda0(double Xi, double gamma, int q) { return 8.0 * Xi / std::pow(gamma, q); }

// One level of the smooth-max chain. For k >= 1, `gap` is uhat_{k-1} - u_k and
// eta1/eta2 are eta', eta'' at lambda_k * gap. Level 0 carries gap = 0.
template <class T>
struct ChainLevel {
  T value;
  VecX<T> gradient;
  MatX<T> hessian;  // empty unless requested
  T gap;
  T eta1;
  T eta2;
};

template <class T>
using SmoothJet = ChainLevel<T>;

// Evaluates uhat_0..uhat_upto at x with gradients (and optionally Hessians)
// carried along the recursion. T may be double or an Eigen AutoDiffScalar.
template <class T>
std::vector<ChainLevel<T>> smooth_chain(const Polytope& P, const SmoothingSchedule& S, const VecX<T>& x,
                                        int upto = -1, bool with_hessian = false,
                                        const EtaKernel& K = EtaKernel::standard()) {
  if (upto < 0) upto = P.q();
  if (upto > P.q()) throw DomainError("smooth_chain: level " + std::to_string(upto) + " exceeds q");
  const auto n = x.size();
  std::vector<ChainLevel<T>> out;
  out.reserve(static_cast<std::size_t>(upto + 1));
  {
    ChainLevel<T> l0;
    l0.value = P.face(0)(x);
    l0.gradient = P.face(0).normal.template cast<T>();
    if (with_hessian) l0.hessian = MatX<T>::Zero(n, n);
    l0.gap = T(0);
    l0.eta1 = T(0);
    l0.eta2 = T(0);
    out.push_back(std::move(l0));
  }
  for (int k = 1; k <= upto; ++k) {
    const ChainLevel<T>& prev = out.back();
    const double lam = S.lambda(k);
    const T uk = P.face(k)(x);
    const VecX<T> Nk = P.face(k).normal.template cast<T>();
    ChainLevel<T> cur;
    cur.gap = prev.value - uk;
    const T arg = T(lam) * cur.gap;
    cur.eta1 = eta_prime(K, arg);
    cur.eta2 = eta_second(K, arg);
    cur.value = T(0.5) * (prev.value + uk + eta(K, arg) / T(lam));
    const T wa = T(0.5) * (T(1) + cur.eta1);
    const T wb = T(0.5) * (T(1) - cur.eta1);
    cur.gradient = wa * prev.gradient + wb * Nk;
    if (with_hessian) {
      const VecX<T> d = prev.gradient - Nk;
      cur.hessian = wa * prev.hessian + (T(0.5 * lam) * cur.eta2) * (d * d.transpose());
    }
    out.push_back(std::move(cur));
  }
  return out;
}

template <class T>
T uhat_value(const Polytope& P, const SmoothingSchedule& S, const VecX<T>& x, int k = -1,
             const EtaKernel& K = EtaKernel::standard()) {
  if (k < 0) k = P.q();
  if (k > P.q()) throw DomainError("uhat_value: level out of range");
  T v = P.face(0)(x);
  for (int m = 1; m <= k; ++m) {
    const double lam = S.lambda(m);
    const T um = P.face(m)(x);
    v = T(0.5) * (v + um + eta(K, T(lam) * (v - um)) / T(lam));
  }
  return v;
}

// Value, gradient and Hessian of uhat_k.
SmoothJet<double> uhat_jet(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P,
                           const EtaKernel& K = EtaKernel::standard());

struct ConvexCoefficients {
  Vec a;                      // a_0..a_k
  std::vector<bool> support;  // a_i > 0
};

// Nonnegative weights with sum 1 and grad uhat_k = sum a_i N_i, built by the
// three-case recursion (above the band, below it, inside it).
ConvexCoefficients convex_coefficients(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P,
                                       const EtaKernel& K = EtaKernel::standard());

// uhat_q(x) <= 0.
bool hat_omega_contains(const Vec& x, const SmoothingSchedule& S, const Polytope& P,
                        const EtaKernel& K = EtaKernel::standard());

// Inner set of the inclusion chain: max_m u_m(x) <= -1/lambda0.
bool in_inner_region(const Vec& x, const SmoothingSchedule& S, const Polytope& P);

}  // namespace polysmooth
