#include "polysmooth/gaussmap.hpp"

namespace polysmooth {

std::string to_string(BandCase c) {
  switch (c) {
    case BandCase::Base: return "base";
    case BandCase::Above: return "above-band";
    case BandCase::Below: return "below-band";
    case BandCase::Band: return "band";
  }
  return "unknown";
}

NhatValue nhat_eval(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                    const EtaKernel& K) {
  if (k < 0 || k > P.q()) throw DomainError("nhat_eval: level out of range");
  const auto st = nhat_chain<double>(P, S, metric, x, k, K);
  if (!st.in_domain) throw DomainError("point " + format_point(x) + " is outside W_" + std::to_string(k) + " (" + st.domain_failure + ")");
  NhatValue v;
  v.N = st.N;
  v.nu = st.nu;
  v.cases = st.cases;
  v.tag = st.cases.back();
  v.angles = st.angles;
  v.nu_discrepancy = (st.nu_recursive - st.nu).norm();
  return v;
}

bool in_Wk(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
           const EtaKernel& K) {
  if (k <= 0) return true;
  return nhat_chain<double>(P, S, metric, x, k, K).in_domain;
}

Mat nhat_jacobian(int k, const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                  const EtaKernel& K) {
  const auto n = x.size();
  if (n > kMaxAdDim) throw ConfigError("forward-mode differentiation supports at most 8 dimensions");
  VecX<AdScalar> xa(n);
  for (Eigen::Index i = 0; i < n; ++i) xa[i] = AdScalar(x[i], n, i);
  const auto st = nhat_chain<AdScalar>(P, S, metric, xa, k, K);
  if (!st.in_domain) throw DomainError("point " + format_point(x) + " is outside W_" + std::to_string(k));
  Mat J = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& d = st.N[i].derivatives();
    if (d.size()) J.row(i) = d.transpose();
  }
  return J;
}

double sin_ratio_gap(double alpha, double beta, double theta) {
  if (!(alpha > 0.0 && alpha < kPi / 2)) throw DomainError("sin_ratio_gap: alpha must lie in (0, pi/2)");
  if (!(beta >= 0.0 && beta <= alpha)) throw DomainError("sin_ratio_gap: beta must lie in [0, alpha]");
  if (!(theta > 0.0 && theta < kPi / (2 * alpha))) throw DomainError("sin_ratio_gap: theta must lie in (0, pi/(2 alpha))");
  return std::sin(2 * beta) / std::sin(2 * alpha) - std::sin(2 * theta * beta) / std::sin(2 * theta * alpha);
}

double t_cot_t(double t) {
  if (t == 0.0) return 1.0;
  if (!(t > 0.0 && t < kPi)) throw DomainError("t_cot_t: argument must lie in (0, pi)");
  if (t < 1e-4) return 1.0 - t * t / 3.0;
  return t * std::cos(t) / std::sin(t);
}

}  // namespace polysmooth
