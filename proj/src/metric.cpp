#include "polysmooth/metric.hpp"

#include "polysmooth/lp.hpp"

#include <algorithm>
#include <limits>

namespace polysmooth {

std::string to_string(MetricFamily f) {
  switch (f) {
    case MetricFamily::Euclidean: return "euclidean";
    case MetricFamily::Constant: return "constant";
    case MetricFamily::Conformal: return "conformal";
    case MetricFamily::Pullback: return "pullback";
  }
  return "unknown";
}

Vec ConformalPotential::gradient(const Vec& x) const {
  const Vec d = x - center;
  if (kind == Kind::Gaussian) return -value<double>(x) / (width * width) * d;
  Vec g = 2.0 * scale * d;
  if (linear.size()) g += linear;
  return g;
}

Mat ConformalPotential::hessian(const Vec& x) const {
  const auto n = x.size();
  if (kind == Kind::Gaussian) {
    const Vec d = x - center;
    const double w2 = width * width;
    return value<double>(x) / w2 * (d * d.transpose() / w2 - Mat::Identity(n, n));
  }
  return 2.0 * scale * Mat::Identity(n, n);
}

MetricField MetricField::euclidean(int n) {
  MetricField m;
  m.family_ = MetricFamily::Euclidean;
  m.n_ = n;
  return m;
}

MetricField MetricField::constant(const Mat& A) {
  if (A.rows() != A.cols()) throw ConfigError("constant metric factor must be square");
  MetricField m;
  m.family_ = MetricFamily::Constant;
  m.n_ = static_cast<int>(A.rows());
  m.A_ = A;
  m.G_ = A.transpose() * A;
  if (Eigen::LLT<Mat>(m.G_).info() != Eigen::Success) throw ConfigError("constant metric A^T A is not positive definite");
  return m;
}

MetricField MetricField::conformal(int n, ConformalPotential phi) {
  if (phi.center.size() == 0) phi.center = Vec::Zero(n);
  if (phi.center.size() != n) throw ConfigError("conformal center has wrong dimension");
  if (phi.linear.size() && phi.linear.size() != n) throw ConfigError("conformal linear term has wrong dimension");
  if (phi.kind == ConformalPotential::Kind::Gaussian && !(phi.width > 0.0)) throw ConfigError("gaussian width must be positive");
  MetricField m;
  m.family_ = MetricFamily::Conformal;
  m.n_ = n;
  m.phi_ = std::move(phi);
  return m;
}

MetricField MetricField::pullback(double eps, const Mat& B, const std::vector<Mat>& C) {
  const auto n = B.rows();
  if (B.cols() != n || static_cast<Eigen::Index>(C.size()) != n) throw ConfigError("pullback coefficients have inconsistent sizes");
  MetricField m;
  m.family_ = MetricFamily::Pullback;
  m.n_ = static_cast<int>(n);
  m.eps_ = eps;
  m.B_ = B;
  m.C_.assign(static_cast<std::size_t>(n), Mat::Zero(n, n));
  for (Eigen::Index l = 0; l < n; ++l) {
    if (C[static_cast<std::size_t>(l)].rows() != n || C[static_cast<std::size_t>(l)].cols() != n)
      throw ConfigError("pullback quadratic slice has wrong size");
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        m.C_[static_cast<std::size_t>(l)](i, j) =
            0.5 * (C[static_cast<std::size_t>(l)](i, j) + C[static_cast<std::size_t>(j)](i, l));
  }
  return m;
}

std::vector<Mat> MetricField::dg(const Vec& x) const {
  std::vector<Mat> out(static_cast<std::size_t>(n_), Mat::Zero(n_, n_));
  switch (family_) {
    case MetricFamily::Euclidean:
    case MetricFamily::Constant:
      break;
    case MetricFamily::Conformal: {
      const Vec gp = phi_.gradient(x);
      const double e = std::exp(2.0 * phi_.value<double>(x));
      for (int l = 0; l < n_; ++l) out[static_cast<std::size_t>(l)] = Mat::Identity(n_, n_) * (2.0 * gp[l] * e);
      break;
    }
    case MetricFamily::Pullback: {
      const Mat J = pullback_jacobian<double>(x);
      for (int l = 0; l < n_; ++l) {
        const Mat dJ = 2.0 * eps_ * C_[static_cast<std::size_t>(l)];
        out[static_cast<std::size_t>(l)] = dJ.transpose() * J + J.transpose() * dJ;
      }
      break;
    }
  }
  return out;
}

std::string MetricField::curvature_note() const {
  if (is_flat()) return "flat family: scalar curvature vanishes identically";
  return "conformal family: scalar curvature is not evaluated and may be negative";
}

MetricJet metric_jet(const MetricField& metric, const Vec& x) {
  const auto n = x.size();
  if (n != metric.dim()) throw DomainError("metric_jet: point has wrong dimension");
  if (!x.allFinite()) throw DomainError("metric_jet: non-finite point");
  MetricJet J;
  J.g = metric.g<double>(x);
  Eigen::LLT<Mat> llt(J.g);
  if (llt.info() != Eigen::Success || (J.g - J.g.transpose()).norm() > 1e-12 * std::max(1.0, J.g.norm()))
    throw DomainError("metric is not symmetric positive definite at " + format_point(x));
  J.ginv = llt.solve(Mat::Identity(n, n));
  J.ginv = 0.5 * (J.ginv + J.ginv.transpose());
  J.dg = metric.dg(x);
  J.gamma.assign(static_cast<std::size_t>(n), Mat::Zero(n, n));
  // Gamma^k_ij = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) {
      Vec lower(n);
      for (Eigen::Index l = 0; l < n; ++l)
        lower[l] = 0.5 * (J.dg[static_cast<std::size_t>(i)](j, l) + J.dg[static_cast<std::size_t>(j)](i, l) -
                          J.dg[static_cast<std::size_t>(l)](i, j));
      const Vec up = J.ginv * lower;
      for (Eigen::Index k = 0; k < n; ++k) {
        J.gamma[static_cast<std::size_t>(k)](i, j) = up[k];
        J.gamma[static_cast<std::size_t>(k)](j, i) = up[k];
      }
    }
  return J;
}

Vec g_gradient(const Vec& df, const MetricJet& mj) { return mj.ginv * df; }

double g_norm_of_differential(const Vec& df, const MetricJet& mj) {
  return std::sqrt(std::max(0.0, df.dot(mj.ginv * df)));
}

Vec g_unit_normal(const Vec& df, const MetricJet& mj) {
  const double nrm = g_norm_of_differential(df, mj);
  if (nrm < 1e-12) throw VanishingGradientError("vanishing gradient (|grad f|_g = " + std::to_string(nrm) + ")");
  return g_gradient(df, mj) / nrm;
}

double g_inner(const Vec& v, const Vec& w, const MetricJet& mj) { return v.dot(mj.g * w); }

Mat covariant_hessian(const Vec& df, const Mat& d2f, const MetricJet& mj) {
  Mat H = d2f;
  for (std::size_t k = 0; k < mj.gamma.size(); ++k) H -= df[static_cast<Eigen::Index>(k)] * mj.gamma[k];
  return 0.5 * (H + H.transpose());
}

double level_set_mean_curvature(const Vec& df, const Mat& d2f, const MetricJet& mj) {
  const double nrm = g_norm_of_differential(df, mj);
  if (nrm < 1e-12) throw VanishingGradientError("vanishing gradient in mean curvature");
  const Vec nu = g_gradient(df, mj) / nrm;
  const Mat proj = mj.ginv - nu * nu.transpose();
  return (proj.cwiseProduct(covariant_hessian(df, d2f, mj))).sum() / nrm;
}

double level_set_mean_curvature(const SmoothJet<double>& jet, const MetricJet& mj) {
  return level_set_mean_curvature(jet.gradient, jet.hessian, mj);
}

Mat tangent_frame(const Vec& nu, const MetricJet& mj) {
  const auto n = nu.size();
  // In coordinates y = L^T v (g = L L^T) the g-inner product is Euclidean.
  const Eigen::LLT<Mat> llt(mj.g);
  const Mat Lt = llt.matrixU();
  const Vec y = Lt * nu;
  Eigen::HouseholderQR<Mat> qr(y);
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  const Mat Y = Q.rightCols(n - 1);
  return Lt.triangularView<Eigen::Upper>().solve(Y);
}

SecondFundamentalForm second_fundamental_form(const Vec& df, const Mat& d2f, const MetricJet& mj) {
  const double nrm = g_norm_of_differential(df, mj);
  if (nrm < 1e-12) throw VanishingGradientError("vanishing gradient in second fundamental form");
  const Vec nu = g_gradient(df, mj) / nrm;
  SecondFundamentalForm s;
  s.frame = tangent_frame(nu, mj);
  s.II = s.frame.transpose() * covariant_hessian(df, d2f, mj) * s.frame / nrm;
  s.II = 0.5 * (s.II + s.II.transpose());
  return s;
}

SecondFundamentalForm second_fundamental_form(const SmoothJet<double>& jet, const MetricJet& mj) {
  return second_fundamental_form(jet.gradient, jet.hessian, mj);
}

std::vector<Vec> sample_flat_piece(const Polytope& P, const std::vector<int>& idx, std::size_t count, Rng& rng,
                                   std::size_t max_tries_factor) {
  const int n = P.dim();
  const auto m = static_cast<Eigen::Index>(idx.size());
  Mat Nsub(m, n);
  Vec csub(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    Nsub.row(r) = P.face(idx[static_cast<std::size_t>(r)]).normal.transpose();
    csub[r] = P.face(idx[static_cast<std::size_t>(r)]).offset;
  }
  const Eigen::CompleteOrthogonalDecomposition<Mat> cod(Nsub);
  if (cod.rank() < m) return {};
  const Vec x0 = cod.solve(Vec(-csub));
  // Orthonormal basis of the null space of Nsub.
  Eigen::JacobiSVD<Mat> svd(Nsub, Eigen::ComputeFullV);
  const Mat T = svd.matrixV().rightCols(n - m);
  const Eigen::Index dim = n - m;

  std::vector<int> others;
  for (int k = 0; k < P.face_count(); ++k)
    if (std::find(idx.begin(), idx.end(), k) == idx.end()) others.push_back(k);
  Mat A(static_cast<Eigen::Index>(others.size()), dim);
  Vec b(static_cast<Eigen::Index>(others.size()));
  for (std::size_t r = 0; r < others.size(); ++r) {
    const auto& f = P.face(others[r]);
    A.row(static_cast<Eigen::Index>(r)) = (f.normal.transpose() * T);
    b[static_cast<Eigen::Index>(r)] = -f.offset - f.normal.dot(x0);
  }
  Vec lo(dim), hi(dim);
  for (Eigen::Index d = 0; d < dim; ++d) {
    const auto up = solve_lp<double>(Vec::Unit(dim, d), A, b);
    const auto dn = solve_lp<double>(-Vec::Unit(dim, d), A, b);
    if (up.status != LpStatus::Optimal || dn.status != LpStatus::Optimal) return {};
    hi[d] = up.value;
    lo[d] = -dn.value;
    if (hi[d] - lo[d] < 1e-10) return {};
  }
  std::vector<Vec> out;
  const std::size_t max_tries = count * max_tries_factor;
  for (std::size_t t = 0; t < max_tries && out.size() < count; ++t) {
    Vec y(dim);
    for (Eigen::Index d = 0; d < dim; ++d) y[d] = rng.uniform(lo[d], hi[d]);
    if (((A * y - b).array() <= 1e-12).all()) out.push_back(x0 + T * y);
  }
  return out;
}

MetricAssumptionReport check_metric_assumptions(const Polytope& P, const MetricField& metric,
                                                std::size_t samples_per_face, std::uint64_t seed) {
  MetricAssumptionReport rep;
  rep.curvature_note = metric.curvature_note();
  rep.min_face_mean_curvature = std::numeric_limits<double>::infinity();
  rep.max_angle_excess = -std::numeric_limits<double>::infinity();
  const int n = P.dim();
  const Mat zero = Mat::Zero(n, n);
  for (int k = 0; k < P.face_count(); ++k) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
    const auto pts = sample_flat_piece(P, {k}, samples_per_face, rng);
    if (pts.empty()) rep.empty_faces.push_back(k);
    for (const Vec& x : pts) {
      const MetricJet mj = metric_jet(metric, x);
      const double H = level_set_mean_curvature(P.face(k).normal, zero, mj);
      ++rep.face_samples;
      if (H < rep.min_face_mean_curvature) {
        rep.min_face_mean_curvature = H;
        rep.min_face = k;
        rep.min_face_witness = x;
      }
    }
  }
  const PairTable table = pair_table(P);
  for (int j = 0; j < P.face_count(); ++j)
    for (int k = j + 1; k < P.face_count(); ++k) {
      if (table.threshold(j, k) < -1e-9) continue;
      Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(1000 + j * P.face_count() + k));
      const auto pts = sample_flat_piece(P, {j, k}, samples_per_face, rng);
      if (pts.empty()) rep.empty_pairs.emplace_back(j, k);
      for (const Vec& x : pts) {
        const MetricJet mj = metric_jet(metric, x);
        const Vec nj = g_unit_normal(P.face(j).normal, mj);
        const Vec nk = g_unit_normal(P.face(k).normal, mj);
        const double excess = g_inner(nj, nk, mj) - table.inner(j, k);
        ++rep.pair_samples;
        if (excess > rep.max_angle_excess) {
          rep.max_angle_excess = excess;
          rep.max_angle_pair = {j, k};
          rep.max_angle_witness = x;
        }
      }
    }
  if (rep.face_samples == 0) rep.min_face_mean_curvature = 0.0;
  if (rep.pair_samples == 0) rep.max_angle_excess = 0.0;
  rep.mean_convex = rep.min_face_mean_curvature >= -kMetricAssumptionTol;
  rep.angle_comparison = rep.max_angle_excess <= kMetricAssumptionTol;
  rep.pass = rep.mean_convex && rep.angle_comparison;
  return rep;
}

}  // namespace polysmooth
