#pragma once

#include "polysmooth/metric.hpp"
#include "polysmooth/smoothing.hpp"

#include <string>
#include <vector>

namespace polysmooth {

// Forward-mode scalar for derivatives in up to 8 coordinates without heap use.
using AdDerivatives = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
using AdScalar = Eigen::AutoDiffScalar<AdDerivatives>;
constexpr int kMaxAdDim = 8;

enum class BandCase { Base, Above, Below, Band };
std::string to_string(BandCase c);

struct AngleTriple {
  double alpha = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

constexpr double kWedgeDegeneracy = 1e-12;

inline double value_of(double v) { return v; }
template <class D>
double value_of(const Eigen::AutoDiffScalar<D>& v) {
  return value_of(v.value());
}

template <class T>
Vec value_of_vec(const VecX<T>& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = value_of(v[i]);
  return out;
}

// phi in [-alpha, alpha] with
//   tan(phi) / tan(alpha) = ((1+e) a - (1-e) b) / ((1+e) a + (1-e) b),
// e = eta' at the level's argument, a = |grad uhat_{k-1}|_g, b = |grad u_k|_g.
template <class T>
T angle_phi(const T& alpha, const T& eta1, const T& normA, const T& normB) {
  using std::atan2;
  using std::cos;
  using std::sin;
  const T num = (T(1) + eta1) * normA - (T(1) - eta1) * normB;
  const T den = (T(1) + eta1) * normA + (T(1) - eta1) * normB;
  if (!(value_of(den) > 1e-14)) throw DegeneracyError("wedge degeneracy: angle ratio denominator vanishes");
  return atan2((num / den) * sin(alpha), cos(alpha));
}

// Angle t in [0, pi] with cos t = c, stable near c = +-1.
template <class T>
T angle_from_cos(const T& c) {
  using std::atan2;
  using std::sqrt;
  T s2 = T(1) - c * c;
  if (value_of(s2) < 0.0) s2 = T(0);
  return atan2(sqrt(s2), c);
}

template <class T>
struct NhatState {
  VecX<T> N;                       // Nhat_k, Euclidean unit vector
  VecX<T> nu;                      // g-unit normal of the level set of uhat_k
  VecX<T> nu_recursive;            // the same normal propagated by the angle formula
  std::vector<BandCase> cases;     // per level 0..k
  std::vector<AngleTriple> angles; // per level (zeros outside the band)
  bool in_domain = true;
  std::string domain_failure;      // first failing level when out of the domain
};

// Evaluates the Nhat recursion from level 0 to `upto` at x. Out-of-domain
// points are reported through in_domain; values are then meaningless.
template <class T>
NhatState<T> nhat_chain(const Polytope& P, const SmoothingSchedule& S, const MetricField& metric, const VecX<T>& x,
                        int upto = -1, const EtaKernel& K = EtaKernel::standard()) {
  using std::sin;
  using std::sqrt;
  if (upto < 0) upto = P.q();
  const auto chain = smooth_chain<T>(P, S, x, upto, false, K);
  const MatX<T> g = metric.g<T>(x);
  const auto ldlt = g.ldlt();
  auto raise = [&](const VecX<T>& df) { return VecX<T>(ldlt.solve(df)); };
  auto gnorm = [&](const VecX<T>& df) { return T(sqrt(df.dot(raise(df)))); };

  NhatState<T> st;
  st.N = P.face(0).normal.template cast<T>();
  {
    const VecX<T> d0 = P.face(0).normal.template cast<T>();
    st.nu = raise(d0) / gnorm(d0);
    st.nu_recursive = st.nu;
  }
  st.cases.push_back(BandCase::Base);
  st.angles.push_back({});
  for (int k = 1; k <= upto; ++k) {
    const auto& lvl = chain[static_cast<std::size_t>(k)];
    const auto& prev = chain[static_cast<std::size_t>(k - 1)];
    const double inv = 1.0 / S.lambda(k);
    const double gap = value_of(lvl.gap);
    const VecX<T> Nk = P.face(k).normal.template cast<T>();
    const VecX<T> nuk = raise(Nk) / gnorm(Nk);
    AngleTriple tri;
    if (gap < -inv) {
      st.N = Nk;
      st.nu_recursive = nuk;
      st.in_domain = true;
      st.domain_failure.clear();
      st.cases.push_back(BandCase::Below);
    } else if (gap > inv) {
      st.cases.push_back(BandCase::Above);
    } else {
      st.cases.push_back(BandCase::Band);
      if (st.in_domain) {
        const double w1 = wedge_norm(value_of_vec(prev.gradient), P.face(k).normal);
        const double w2 = wedge_norm(value_of_vec(st.N), P.face(k).normal);
        if (w1 < kWedgeDegeneracy || w2 < kWedgeDegeneracy) {
          st.in_domain = false;
          st.domain_failure = "level " + std::to_string(k) + ": " +
                              (w1 < kWedgeDegeneracy ? "d uhat_{k-1} ^ d u_k = 0" : "Nhat_{k-1} ^ N_k = 0") +
                              " inside the band";
        } else {
          const T a = gnorm(prev.gradient);
          const T b = gnorm(Nk);
          const VecX<T> nuprev = raise(prev.gradient) / a;
          const T alpha = T(0.5) * angle_from_cos(T(nuprev.dot(g * nuk)));
          const T two_theta_alpha = angle_from_cos(T(st.N.dot(Nk)));
          const T theta = two_theta_alpha / (T(2) * alpha);
          const T phi = angle_phi(alpha, lvl.eta1, a, b);
          const VecX<T> Nnew =
              (sin(theta * (alpha + phi)) * st.N + sin(theta * (alpha - phi)) * Nk) / sin(two_theta_alpha);
          st.nu_recursive = (sin(alpha + phi) * st.nu_recursive + sin(alpha - phi) * nuk) / sin(T(2) * alpha);
          st.N = Nnew;
          tri = {value_of(alpha), value_of(theta), value_of(phi)};
        }
      }
    }
    st.angles.push_back(tri);
    st.nu = raise(lvl.gradient) / gnorm(lvl.gradient);
  }
  return st;
}

struct NhatValue {
  Vec N;
  Vec nu;
  BandCase tag = BandCase::Base;  // case at the requested level
  std::vector<BandCase> cases;
  std::vector<AngleTriple> angles;
  double nu_discrepancy = 0.0;  // |nu (angle formula) - nu (direct)|
};

// Nhat_k at x; throws DomainError when x lies outside W_k.
NhatValue nhat_eval(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                    const EtaKernel& K = EtaKernel::standard());

bool in_Wk(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
           const EtaKernel& K = EtaKernel::standard());

// Euclidean Jacobian d Nhat_k (n x n) by forward-mode differentiation.
Mat nhat_jacobian(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                  const EtaKernel& K = EtaKernel::standard());

// sin(2 beta)/sin(2 alpha) - sin(2 theta beta)/sin(2 theta alpha).
double sin_ratio_gap(double alpha, double beta, double theta);

// t cos t / sin t on (0, pi), with value 1 in the limit t -> 0.
double t_cot_t(double t);

}  // namespace polysmooth
