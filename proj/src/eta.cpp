#include "polysmooth/eta.hpp"

#include "polysmooth/quadrature.hpp"

#include <algorithm>

namespace polysmooth {

namespace {

double bump(double s) {
  const double v = 1.0 - 4.0 * s * s;
  return v > 0.0 ? std::exp(-1.0 / v) : 0.0;
}

}  // namespace

EtaKernel::EtaKernel(int cells) : cells_(cells), h_(0.5 / cells) {
  if (cells < 16) throw ConfigError("EtaKernel needs at least 16 cells");
  const GaussRule gl = gauss_legendre(16);
  std::vector<double> mass(static_cast<std::size_t>(cells)), moment(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) {
    const double a = i * h_;
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t g = 0; g < gl.nodes.size(); ++g) {
      const double s = a + 0.5 * h_ * (gl.nodes[g] + 1.0);
      const double w = 0.5 * h_ * gl.weights[g];
      m0 += w * bump(s);
      m1 += w * s * bump(s);
    }
    mass[static_cast<std::size_t>(i)] = m0;
    moment[static_cast<std::size_t>(i)] = m1;
  }
  double half_mass = 0.0;
  for (double m : mass) half_mass += m;
  z_ = 2.0 * half_mass;

  p_.assign(static_cast<std::size_t>(cells + 1), 0.0);
  for (int i = 0; i < cells; ++i) p_[static_cast<std::size_t>(i + 1)] = p_[static_cast<std::size_t>(i)] + mass[static_cast<std::size_t>(i)] / z_;
  p_.back() = 0.5;
  s_.assign(static_cast<std::size_t>(cells + 1), 0.0);
  for (int i = cells - 1; i >= 0; --i) s_[static_cast<std::size_t>(i)] = s_[static_cast<std::size_t>(i + 1)] + moment[static_cast<std::size_t>(i)] / z_;
}

const EtaKernel& EtaKernel::standard() {
  static const EtaKernel k;
  return k;
}

double EtaKernel::rho(double s) const { return bump(s) / z_; }

double EtaKernel::rho_prime(double s) const {
  const double v = 1.0 - 4.0 * s * s;
  if (v <= 0.0) return 0.0;
  return -8.0 * s / (v * v) * rho(s);
}

double EtaKernel::interp(const std::vector<double>& tab, double t, bool moment) const {
  // t in [0, 1/2]
  int i = static_cast<int>(t / h_);
  if (i >= cells_) i = cells_ - 1;
  const double a = i * h_;
  const double u = (t - a) / h_;
  const double ta = a, tb = a + h_;
  const double fa = tab[static_cast<std::size_t>(i)], fb = tab[static_cast<std::size_t>(i + 1)];
  double da = rho(ta), db = rho(tb);
  if (moment) {
    da *= -ta;
    db *= -tb;
  }
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return h00 * fa + h10 * h_ * da + h01 * fb + h11 * h_ * db;
}

// Hermite interpolation may overshoot the end values by an ulp.
double EtaKernel::half_cdf(double a) const { return std::clamp(interp(p_, a, false), 0.0, 0.5); }

double EtaKernel::cdf(double t) const {
  if (t <= -0.5) return 0.0;
  if (t >= 0.5) return 1.0;
  const double p = half_cdf(std::abs(t));
  return t >= 0.0 ? 0.5 + p : 0.5 - p;
}

double EtaKernel::value(double t) const {
  const double a = std::abs(t);
  if (a >= 0.5) return a;
  return 2.0 * a * half_cdf(a) + 2.0 * interp(s_, a, true);
}

double EtaKernel::d1(double t) const {
  if (t >= 0.5) return 1.0;
  if (t <= -0.5) return -1.0;
  const double p = 2.0 * half_cdf(std::abs(t));
  return t >= 0.0 ? p : -p;
}

EtaJet EtaKernel::jet(double t) const { return {value(t), d1(t), d2(t)}; }

}  // namespace polysmooth
