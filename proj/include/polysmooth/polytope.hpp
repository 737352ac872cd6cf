#pragma once

#include "polysmooth/common.hpp"
#include "polysmooth/sampling.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace polysmooth {

// Affine functional u(x) = <normal, x> + offset with a unit normal.
struct LinearFunctional {
  Vec normal;
  double offset = 0.0;

  LinearFunctional() = default;
  LinearFunctional(Vec n, double c);

  template <class T>
  T operator()(const VecX<T>& x) const {
    return normal.template cast<T>().dot(x) + T(offset);
  }
};

class Polytope {
 public:
  Polytope() = default;
  // Normals are rescaled to unit length. Components that move by more than
  // 1e-9 are reported through `warnings` when it is non-null.
  Polytope(int dim, const std::vector<Vec>& normals, const std::vector<double>& offsets,
           std::vector<std::string>* warnings = nullptr);

  int dim() const { return dim_; }
  int face_count() const { return static_cast<int>(faces_.size()); }
  // Highest face index (the recursion runs over u_0..u_q).
  int q() const { return face_count() - 1; }
  const LinearFunctional& face(int k) const { return faces_.at(static_cast<std::size_t>(k)); }
  const std::vector<LinearFunctional>& faces() const { return faces_; }

  const Mat& normal_matrix() const { return normals_; }  // one row per face
  const Vec& offsets() const { return offsets_; }

  template <class T>
  VecX<T> values(const VecX<T>& x) const {
    VecX<T> u(face_count());
    for (int k = 0; k < face_count(); ++k) u[k] = faces_[static_cast<std::size_t>(k)](x);
    return u;
  }
  double max_value(const Vec& x) const { return (normals_ * x + offsets_).maxCoeff(); }
  bool contains(const Vec& x, double tol = 0.0) const { return max_value(x) <= tol; }

  Polytope permuted(const std::vector<int>& order) const;
  Polytope translated(const Vec& shift) const;

 private:
  int dim_ = 0;
  std::vector<LinearFunctional> faces_;
  Mat normals_;
  Vec offsets_;
};

// |v ^ w| = sqrt(|v|^2 |w|^2 - <v,w>^2).
template <class DerivedA, class DerivedB>
auto wedge_norm(const Eigen::MatrixBase<DerivedA>& v, const Eigen::MatrixBase<DerivedB>& w) {
  using std::sqrt;
  using T = typename DerivedA::Scalar;
  const T vv = v.squaredNorm();
  const T ww = w.squaredNorm();
  const T vw = v.dot(w);
  const T d = vv * ww - vw * vw;
  return d > T(0) ? T(sqrt(d)) : T(0);
}

struct ChebyshevCenter {
  Vec center;
  double margin = 0.0;
};

// Largest inscribed ball. Throws EmptyInteriorError when the margin is not
// positive and UnboundedPolytopeError when no finite optimum exists.
ChebyshevCenter chebyshev_center(const Polytope& P);

// Throws UnboundedPolytopeError if some coordinate is unbounded over the polytope.
void check_bounded(const Polytope& P);

struct BoundingBox {
  Vec lo, hi;
};
BoundingBox bounding_box(const Polytope& P);

struct FaceWitness {
  int face = 0;
  bool nonredundant = false;
  double witness_value = 0.0;  // max of u_k over the other constraints (capped at 1)
  Vec witness;
};

struct PairRecord {
  int j = 0, k = 0;
  double threshold = 0.0;  // t* = max over the polytope of min(u_j, u_k)
  double inner = 0.0;      // <N_j, N_k>
  bool coactive = false;   // faces meet inside the polytope
  bool acute = true;       // <N_j, N_k> <= 0 (only meaningful when coactive)
};

struct AssumptionReport {
  std::vector<FaceWitness> faces;
  std::vector<PairRecord> pairs;
  bool nonredundant = true;
  bool acute = true;
  bool pass = true;
};

AssumptionReport check_assumptions(const Polytope& P);

double pairwise_coactivity_threshold(const Polytope& P, int j, int k);

// All pair thresholds and inner products, computed once.
struct PairTable {
  Mat threshold;  // symmetric, diagonal = 0
  Mat inner;
};
PairTable pair_table(const Polytope& P);

constexpr double kDefaultDeltaCap = 1.0;

double delta_for_epsilon(const PairTable& table, double eps, double cap = kDefaultDeltaCap);
double delta_for_epsilon(const Polytope& P, double eps, double cap = kDefaultDeltaCap);

// Smallest eps with delta_for_epsilon(eps) >= delta, i.e. the largest inner
// product among pairs whose separation is not ruled out at slab width delta.
double epsilon_for_delta(const PairTable& table, double delta);

// Index sets S (|S| <= n+1) for which {u_i > -delta, i in S} meets the polytope.
std::vector<std::vector<int>> coactive_sets(const Polytope& P, double delta);

// min over delta-coactive sets of the min-norm point of their normals.
double min_active_norm(const Polytope& P, double delta);

struct LambdaOptions {
  double start = 2.0;
  double bound = 1e8;
};
double compute_lambda_constant(const Polytope& P, const LambdaOptions& opt = {});

double xi_delta(const Polytope& P, double Lambda, double cap = kDefaultDeltaCap);
double compute_xi_constant(const Polytope& P, double Lambda, double cap = kDefaultDeltaCap);

// Distance factor for points in a width-2/lambda slab of two meeting faces
// to their common (n-2)-plane, in units of 1/lambda.
double compute_m_constant(const Polytope& P);

struct PolytopeConstants {
  double Lambda = 0.0;
  double Xi = 0.0;
  double M = 0.0;
  bool xi_sentinel = false;  // q = 0: no pair of faces, transversality is vacuous
  std::vector<std::pair<double, double>> delta_table;  // (eps, delta)
};
PolytopeConstants compute_constants(const Polytope& P, double cap = kDefaultDeltaCap);

struct CertificateReport {
  std::size_t samples = 0;
  std::size_t vacuous = 0;     // configurations with an empty active set
  std::size_t violations = 0;
  double worst_ratio = 0.0;    // max of (sum a) / (C * |...|); <= 1 means valid
};

CertificateReport lambda_certificate(const Polytope& P, double Lambda, std::size_t samples, std::uint64_t seed);
CertificateReport xi_certificate(const Polytope& P, double Xi, std::size_t samples, std::uint64_t seed);

// Random point of the polytope: uniform with probability 1/3, otherwise pushed
// into thin slabs near one or several faces (width `slab`).
Vec sample_near_boundary(const Polytope& P, const BoundingBox& box, double slab, Rng& rng);
Vec sample_uniform(const Polytope& P, const BoundingBox& box, Rng& rng);

}  // namespace polysmooth
