#pragma once

#include "polysmooth/common.hpp"

#include <unsupported/Eigen/AutoDiff>

#include <vector>

namespace polysmooth {

struct EtaJet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Mollified absolute value eta = |.| * rho with the bump
// rho(s) ~ exp(-1/(1 - 4 s^2)) on |s| < 1/2. Inside the mollification window
// eta is assembled from two tabulated prefix integrals on [0, 1/2]:
//   P(t) = int_0^t rho,   S(t) = int_t^{1/2} s rho(s) ds,
//   eta(t) = 2 t P(t) + 2 S(t),  eta'(t) = 2 P(t),  eta''(t) = 2 rho(t)   (t >= 0),
// extended evenly. Both tables are interpolated by cubic Hermite polynomials
// using their exact derivatives (rho and -t rho).
class EtaKernel {
 public:
  explicit EtaKernel(int cells = 4096);

  double rho(double s) const;
  double rho_prime(double s) const;
  double cdf(double t) const;  // int_{-1/2}^t rho

  double value(double t) const;
  double d1(double t) const;
  double d2(double t) const { return 2.0 * rho(t); }
  double d3(double t) const { return 2.0 * rho_prime(t); }
  EtaJet jet(double t) const;

  double first_moment() const { return 2.0 * s_.front(); }  // int |s| rho(s) ds
  double normalization() const { return z_; }
  int cells() const { return cells_; }

  // Shared default instance.
  static const EtaKernel& standard();

 private:
  double interp(const std::vector<double>& tab, double t, bool moment) const;
  double half_cdf(double a) const;

  int cells_;
  double h_;
  double z_;
  std::vector<double> p_;  // P at nodes
  std::vector<double> s_;  // S at nodes
};

inline double eta(const EtaKernel& K, double t) { return K.value(t); }
inline double eta_prime(const EtaKernel& K, double t) { return K.d1(t); }
inline double eta_second(const EtaKernel& K, double t) { return K.d2(t); }

template <class D>
Eigen::AutoDiffScalar<D> eta(const EtaKernel& K, const Eigen::AutoDiffScalar<D>& t) {
  return Eigen::AutoDiffScalar<D>(K.value(t.value()), K.d1(t.value()) * t.derivatives());
}
template <class D>
Eigen::AutoDiffScalar<D> eta_prime(const EtaKernel& K, const Eigen::AutoDiffScalar<D>& t) {
  return Eigen::AutoDiffScalar<D>(K.d1(t.value()), K.d2(t.value()) * t.derivatives());
}
template <class D>
Eigen::AutoDiffScalar<D> eta_second(const EtaKernel& K, const Eigen::AutoDiffScalar<D>& t) {
  return Eigen::AutoDiffScalar<D>(K.d2(t.value()), K.d3(t.value()) * t.derivatives());
}

}  // namespace polysmooth
