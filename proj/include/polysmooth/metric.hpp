#pragma once

#include "polysmooth/polytope.hpp"
#include "polysmooth/smoothing.hpp"

#include <string>
#include <vector>

namespace polysmooth {

enum class MetricFamily { Euclidean, Constant, Conformal, Pullback };

std::string to_string(MetricFamily f);

// Conformal factor exponent phi for g = exp(2 phi) delta.
//   quadratic: phi = scale |x - center|^2 + <linear, x - center>
//   gaussian:  phi = scale exp(-|x - center|^2 / (2 width^2))
struct ConformalPotential {
  enum class Kind { Quadratic, Gaussian };
  Kind kind = Kind::Quadratic;
  double scale = 0.0;
  double width = 1.0;
  Vec center;
  Vec linear;  // quadratic kind only; empty means zero

  template <class T>
  T value(const VecX<T>& x) const {
    using std::exp;
    const VecX<T> d = x - center.template cast<T>();
    if (kind == Kind::Gaussian) return T(scale) * exp(-d.squaredNorm() / T(2.0 * width * width));
    T v = T(scale) * d.squaredNorm();
    if (linear.size()) v += linear.template cast<T>().dot(d);
    return v;
  }
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
};

// Smooth Riemannian metric on R^n from one of the built-in families, with
// analytic first derivatives.
class MetricField {
 public:
  static MetricField euclidean(int n);
  // g = A^T A.
  static MetricField constant(const Mat& A);
  static MetricField conformal(int n, ConformalPotential phi);
  // Pullback of the Euclidean metric by psi(x) = x + eps v(x) with
  // v_i(x) = sum_j B_ij x_j + sum_{j,l} C_ijl x_j x_l. C[l](i, j) holds C_ijl
  // and is symmetrized in (j, l).
  static MetricField pullback(double eps, const Mat& B, const std::vector<Mat>& C);

  MetricFamily family() const { return family_; }
  int dim() const { return n_; }
  const ConformalPotential& potential() const { return phi_; }
  const Mat& constant_factor() const { return A_; }
  double pullback_eps() const { return eps_; }
  const Mat& pullback_linear() const { return B_; }
  const std::vector<Mat>& pullback_quadratic() const { return C_; }

  template <class T>
  MatX<T> g(const VecX<T>& x) const {
    using std::exp;
    switch (family_) {
      case MetricFamily::Euclidean:
        return MatX<T>::Identity(n_, n_);
      case MetricFamily::Constant:
        return G_.template cast<T>();
      case MetricFamily::Conformal:
        return MatX<T>::Identity(n_, n_) * exp(T(2) * phi_.value(x));
      case MetricFamily::Pullback: {
        const MatX<T> J = pullback_jacobian(x);
        return J.transpose() * J;
      }
    }
    return MatX<T>();
  }

  // dg[l] = partial_l g.
  std::vector<Mat> dg(const Vec& x) const;

  template <class T>
  MatX<T> pullback_jacobian(const VecX<T>& x) const {
    MatX<T> J = MatX<T>::Identity(n_, n_) + T(eps_) * B_.template cast<T>();
    for (int l = 0; l < n_; ++l) J += (T(2.0 * eps_) * x[l]) * C_[static_cast<std::size_t>(l)].template cast<T>();
    return J;
  }

  // Whether the family is flat (scalar curvature identically zero). Scalar
  // curvature itself is never evaluated.
  bool is_flat() const { return family_ != MetricFamily::Conformal; }
  std::string curvature_note() const;

 private:
  MetricFamily family_ = MetricFamily::Euclidean;
  int n_ = 0;
  Mat A_, G_;
  ConformalPotential phi_;
  double eps_ = 0.0;
  Mat B_;
  std::vector<Mat> C_;
};

struct MetricJet {
  Mat g, ginv;
  std::vector<Mat> dg;     // dg[l](i, j) = partial_l g_ij
  std::vector<Mat> gamma;  // gamma[k](i, j) = Gamma^k_ij
};

// Throws DomainError naming the point when g is not positive definite.
MetricJet metric_jet(const MetricField& metric, const Vec& x);

// Riemannian gradient g^{-1} df.
Vec g_gradient(const Vec& df, const MetricJet& mj);
double g_norm_of_differential(const Vec& df, const MetricJet& mj);
// Unit normal grad f / |grad f|_g; throws VanishingGradientError below 1e-12.
Vec g_unit_normal(const Vec& df, const MetricJet& mj);
double g_inner(const Vec& v, const Vec& w, const MetricJet& mj);

// Covariant Hessian D^2 f - Gamma^k df_k.
Mat covariant_hessian(const Vec& df, const Mat& d2f, const MetricJet& mj);

// Mean curvature of the level set of f through x, outward normal towards
// {f > 0}; the Euclidean unit sphere has H = n - 1.
double level_set_mean_curvature(const Vec& df, const Mat& d2f, const MetricJet& mj);
double level_set_mean_curvature(const SmoothJet<double>& jet, const MetricJet& mj);

// g-orthonormal basis (columns) of the g-orthogonal complement of nu.
Mat tangent_frame(const Vec& nu, const MetricJet& mj);

struct SecondFundamentalForm {
  Mat frame;  // n x (n-1), g-orthonormal tangent basis
  Mat II;     // (n-1) x (n-1) in that basis
  double trace() const { return II.trace(); }
};
SecondFundamentalForm second_fundamental_form(const Vec& df, const Mat& d2f, const MetricJet& mj);
SecondFundamentalForm second_fundamental_form(const SmoothJet<double>& jet, const MetricJet& mj);

struct MetricAssumptionReport {
  std::size_t face_samples = 0;
  std::size_t pair_samples = 0;
  std::vector<int> empty_faces;
  std::vector<std::pair<int, int>> empty_pairs;
  double min_face_mean_curvature = 0.0;
  int min_face = -1;
  Vec min_face_witness;
  double max_angle_excess = 0.0;  // max of <nu_j, nu_k>_g - <N_j, N_k>
  std::pair<int, int> max_angle_pair{-1, -1};
  Vec max_angle_witness;
  bool mean_convex = true;
  bool angle_comparison = true;
  bool pass = true;
  std::string curvature_note;
};

constexpr double kMetricAssumptionTol = 1e-9;

// Samples every face Omega ∩ {u_k = 0} and every meeting-pair locus
// Omega ∩ {u_j = u_k = 0} uniformly and checks nonnegative face mean
// curvature and <nu_j, nu_k>_g <= <N_j, N_k>.
MetricAssumptionReport check_metric_assumptions(const Polytope& P, const MetricField& metric,
                                                std::size_t samples_per_face, std::uint64_t seed);

// Uniform samples of the flat piece Omega ∩ {u_i = 0, i in idx}; empty if the
// piece is empty or lower-dimensional than expected.
std::vector<Vec> sample_flat_piece(const Polytope& P, const std::vector<int>& idx, std::size_t count, Rng& rng,
                                   std::size_t max_tries_factor = 200);

}  // namespace polysmooth
