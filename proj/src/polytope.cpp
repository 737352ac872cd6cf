#include "polysmooth/polytope.hpp"

#include "polysmooth/lp.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace polysmooth {

namespace {

constexpr double kFeasTol = 1e-9;

// Rows of A x <= b describing the polytope itself (in the first `d` columns).
void fill_polytope_rows(const Polytope& P, Mat& A, Vec& b, Eigen::Index row0) {
  const int m = P.face_count();
  A.block(row0, 0, m, P.dim()) = P.normal_matrix();
  b.segment(row0, m) = -P.offsets();
}

}  // namespace

LinearFunctional::LinearFunctional(Vec n, double c) : normal(std::move(n)), offset(c) {
  const double len = normal.norm();
  if (!(len > 0.0)) throw ConfigError("face normal has zero length");
  normal /= len;
  offset /= len;
}

Polytope::Polytope(int dim, const std::vector<Vec>& normals, const std::vector<double>& offsets,
                   std::vector<std::string>* warnings)
    : dim_(dim) {
  if (dim < 1) throw ConfigError("polytope dimension must be positive");
  if (normals.empty()) throw ConfigError("polytope needs at least one face");
  if (normals.size() != offsets.size()) throw ConfigError("normals/offsets size mismatch");
  for (std::size_t k = 0; k < normals.size(); ++k) {
    if (normals[k].size() != dim) throw ConfigError("face " + std::to_string(k) + " has wrong dimension");
    LinearFunctional f(normals[k], offsets[k]);
    if (warnings && (f.normal - normals[k]).cwiseAbs().maxCoeff() > 1e-9) {
      warnings->push_back("face " + std::to_string(k) + ": normal renormalized (length " +
                          std::to_string(normals[k].norm()) + ")");
    }
    faces_.push_back(std::move(f));
  }
  normals_.resize(face_count(), dim);
  offsets_.resize(face_count());
  for (int k = 0; k < face_count(); ++k) {
    normals_.row(k) = faces_[static_cast<std::size_t>(k)].normal.transpose();
    offsets_[k] = faces_[static_cast<std::size_t>(k)].offset;
  }
}

Polytope Polytope::permuted(const std::vector<int>& order) const {
  std::vector<Vec> n;
  std::vector<double> c;
  for (int k : order) {
    n.push_back(face(k).normal);
    c.push_back(face(k).offset);
  }
  return Polytope(dim_, n, c);
}

Polytope Polytope::translated(const Vec& shift) const {
  std::vector<Vec> n;
  std::vector<double> c;
  for (const auto& f : faces_) {
    n.push_back(f.normal);
    c.push_back(f.offset - f.normal.dot(shift));
  }
  return Polytope(dim_, n, c);
}

ChebyshevCenter chebyshev_center(const Polytope& P) {
  const int d = P.dim();
  const int m = P.face_count();
  Mat A = Mat::Zero(m, d + 1);
  Vec b(m);
  fill_polytope_rows(P, A, b, 0);
  A.col(d).setOnes();
  Vec c = Vec::Zero(d + 1);
  c[d] = 1.0;
  const auto r = solve_lp<double>(c, A, b);
  if (r.status == LpStatus::Unbounded) throw UnboundedPolytopeError("polytope is unbounded (inscribed radius unbounded)");
  if (r.status == LpStatus::Infeasible || r.x[d] <= kFeasTol) {
    throw EmptyInteriorError("polytope has empty interior");
  }
  return {r.x.head(d), r.x[d]};
}

void check_bounded(const Polytope& P) {
  const int d = P.dim();
  Mat A(P.face_count(), d);
  Vec b(P.face_count());
  fill_polytope_rows(P, A, b, 0);
  for (int i = 0; i < d; ++i) {
    for (double s : {1.0, -1.0}) {
      Vec c = Vec::Zero(d);
      c[i] = s;
      const auto r = solve_lp<double>(c, A, b);
      if (r.status == LpStatus::Unbounded) {
        throw UnboundedPolytopeError("polytope is unbounded along coordinate " + std::to_string(i));
      }
      if (r.status == LpStatus::Infeasible) throw EmptyInteriorError("polytope is empty");
    }
  }
}

BoundingBox bounding_box(const Polytope& P) {
  const int d = P.dim();
  Mat A(P.face_count(), d);
  Vec b(P.face_count());
  fill_polytope_rows(P, A, b, 0);
  BoundingBox box{Vec(d), Vec(d)};
  for (int i = 0; i < d; ++i) {
    Vec c = Vec::Zero(d);
    c[i] = 1.0;
    auto hi = solve_lp<double>(c, A, b);
    c[i] = -1.0;
    auto lo = solve_lp<double>(c, A, b);
    if (hi.status != LpStatus::Optimal || lo.status != LpStatus::Optimal) {
      throw UnboundedPolytopeError("bounding box: polytope unbounded or empty");
    }
    box.hi[i] = hi.value;
    box.lo[i] = -lo.value;
  }
  return box;
}

AssumptionReport check_assumptions(const Polytope& P) {
  check_bounded(P);
  chebyshev_center(P);

  AssumptionReport rep;
  const int d = P.dim();
  const int m = P.face_count();
  for (int k = 0; k < m; ++k) {
    Mat A(m, d);
    Vec b(m);
    fill_polytope_rows(P, A, b, 0);
    b[k] = 1.0 - P.face(k).offset;  // u_k <= 1 keeps the LP bounded
    const auto r = solve_lp<double>(P.face(k).normal, A, b);
    FaceWitness w;
    w.face = k;
    if (r.status == LpStatus::Optimal) {
      w.witness = r.x;
      w.witness_value = P.face(k)(r.x);
      w.nonredundant = w.witness_value > kFeasTol;
    }
    rep.nonredundant = rep.nonredundant && w.nonredundant;
    rep.faces.push_back(std::move(w));
  }
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      PairRecord pr;
      pr.j = j;
      pr.k = k;
      pr.threshold = pairwise_coactivity_threshold(P, j, k);
      pr.inner = P.face(j).normal.dot(P.face(k).normal);
      pr.coactive = pr.threshold >= -kFeasTol;
      pr.acute = !pr.coactive || pr.inner <= kFeasTol;
      rep.acute = rep.acute && pr.acute;
      rep.pairs.push_back(pr);
    }
  }
  rep.pass = rep.nonredundant && rep.acute;
  return rep;
}

double pairwise_coactivity_threshold(const Polytope& P, int j, int k) {
  if (j < 0 || k < 0 || j >= P.face_count() || k >= P.face_count() || j == k) {
    throw ConfigError("pairwise_coactivity_threshold: invalid face pair");
  }
  const int d = P.dim();
  const int m = P.face_count();
  Mat A = Mat::Zero(m + 2, d + 1);
  Vec b(m + 2);
  fill_polytope_rows(P, A, b, 0);
  // t - u_j(x) <= 0 and t - u_k(x) <= 0
  A.block(m, 0, 1, d) = -P.face(j).normal.transpose();
  A(m, d) = 1.0;
  b[m] = P.face(j).offset;
  A.block(m + 1, 0, 1, d) = -P.face(k).normal.transpose();
  A(m + 1, d) = 1.0;
  b[m + 1] = P.face(k).offset;
  Vec c = Vec::Zero(d + 1);
  c[d] = 1.0;
  const auto r = solve_lp<double>(c, A, b);
  if (r.status == LpStatus::Infeasible) throw LpError("coactivity LP infeasible (empty polytope)");
  if (r.status == LpStatus::Unbounded) throw LpError("coactivity LP unbounded");
  return std::min(r.value, 0.0);
}

PairTable pair_table(const Polytope& P) {
  const int m = P.face_count();
  PairTable t{Mat::Zero(m, m), Mat::Identity(m, m)};
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      t.threshold(j, k) = t.threshold(k, j) = pairwise_coactivity_threshold(P, j, k);
      t.inner(j, k) = t.inner(k, j) = P.face(j).normal.dot(P.face(k).normal);
    }
  }
  return t;
}

double delta_for_epsilon(const PairTable& table, double eps, double cap) {
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("delta_for_epsilon: eps must lie in (0,1)");
  double best = std::numeric_limits<double>::infinity();
  const auto m = table.inner.rows();
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = j + 1; k < m; ++k) {
      if (table.inner(j, k) > eps) {
        const double sep = -table.threshold(j, k);
        if (sep <= kFeasTol) {
          throw AssumptionError("faces " + std::to_string(j) + " and " + std::to_string(k) +
                                " meet at an obtuse angle");
        }
        best = std::min(best, 0.5 * sep);
      }
    }
  }
  return std::min(best, cap);
}

double delta_for_epsilon(const Polytope& P, double eps, double cap) {
  return delta_for_epsilon(pair_table(P), eps, cap);
}

double epsilon_for_delta(const PairTable& table, double delta) {
  double eps = 0.0;
  const auto m = table.inner.rows();
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index k = j + 1; k < m; ++k) {
      if (0.5 * (-table.threshold(j, k)) < delta) eps = std::max(eps, table.inner(j, k));
    }
  }
  return eps;
}

namespace {

bool slab_feasible(const Polytope& P, const std::vector<int>& S, double delta) {
  const int d = P.dim();
  const int m = P.face_count();
  const auto s = static_cast<Eigen::Index>(S.size());
  Mat A(m + s, d);
  Vec b(m + s);
  fill_polytope_rows(P, A, b, 0);
  // u_i(x) >= -delta + tol, written as -N_i.x <= c_i + delta - tol
  for (Eigen::Index r = 0; r < s; ++r) {
    const auto& f = P.face(S[static_cast<std::size_t>(r)]);
    A.row(m + r) = -f.normal.transpose();
    b[m + r] = f.offset + delta - kFeasTol;
  }
  const auto res = solve_lp<double>(Vec::Zero(d), A, b);
  return res.status != LpStatus::Infeasible;
}

}  // namespace

std::vector<std::vector<int>> coactive_sets(const Polytope& P, double delta) {
  const int m = P.face_count();
  const int max_size = P.dim() + 1;
  std::vector<std::vector<char>> pair_ok(static_cast<std::size_t>(m), std::vector<char>(static_cast<std::size_t>(m), 0));
  std::vector<char> single_ok(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < m; ++i) single_ok[static_cast<std::size_t>(i)] = slab_feasible(P, {i}, delta);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (single_ok[static_cast<std::size_t>(i)] && single_ok[static_cast<std::size_t>(j)])
        pair_ok[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            pair_ok[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = slab_feasible(P, {i, j}, delta);

  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> extend = [&](int from) {
    for (int j = from; j < m; ++j) {
      if (!single_ok[static_cast<std::size_t>(j)]) continue;
      bool ok = true;
      for (int i : cur) ok = ok && pair_ok[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (!ok) continue;
      cur.push_back(j);
      if (cur.size() <= 2 || slab_feasible(P, cur, delta)) {
        out.push_back(cur);
        if (static_cast<int>(cur.size()) < max_size) extend(j + 1);
      }
      cur.pop_back();
    }
  };
  extend(0);
  return out;
}

double min_active_norm(const Polytope& P, double delta) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& S : coactive_sets(P, delta)) {
    Mat pts(P.dim(), static_cast<Eigen::Index>(S.size()));
    for (std::size_t i = 0; i < S.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = P.face(S[i]).normal;
    best = std::min(best, min_norm_point<double>(pts).norm);
  }
  return best;
}

double compute_lambda_constant(const Polytope& P, const LambdaOptions& opt) {
  double Lambda = opt.start;
  if (!(Lambda > 1.0)) throw ConfigError("Lambda start value must exceed 1");
  for (int iter = 0; iter < 200; ++iter) {
    if (Lambda > opt.bound) throw AssumptionError("no valid Lambda below bound");
    const double m = min_active_norm(P, 2.0 / Lambda);
    if (m * Lambda >= 1.0) return Lambda;
    // m(delta) only grows as delta shrinks, so 1/m is already a fixed point.
    if (m > 1e-9) {
      Lambda = std::max(Lambda, 1.0 / m);
      if (Lambda > opt.bound) throw AssumptionError("no valid Lambda below bound");
      return Lambda;
    }
    Lambda *= 2.0;
  }
  throw AssumptionError("no valid Lambda below bound");
}

double xi_delta(const Polytope& P, double Lambda, double cap) {
  return std::min(delta_for_epsilon(P, 0.5 / Lambda, cap), (1.0 - 1e-9) / Lambda);
}

double compute_xi_constant(const Polytope& P, double Lambda, double cap) {
  if (P.q() == 0) return 2.0 * Lambda + 1.0;
  return 2.0 / xi_delta(P, Lambda, cap);
}

double compute_m_constant(const Polytope& P) {
  double M = std::sqrt(8.0);
  const int m = P.face_count();
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      if (pairwise_coactivity_threshold(P, j, k) < -kFeasTol) continue;
      const double c = std::abs(P.face(j).normal.dot(P.face(k).normal));
      if (c >= 1.0 - 1e-12) throw AssumptionError("meeting faces are parallel");
      M = std::max(M, std::sqrt(8.0 / (1.0 - c)));
    }
  }
  return M;
}

PolytopeConstants compute_constants(const Polytope& P, double cap) {
  PolytopeConstants c;
  c.Lambda = compute_lambda_constant(P);
  c.xi_sentinel = P.q() == 0;
  c.Xi = compute_xi_constant(P, c.Lambda, cap);
  c.M = compute_m_constant(P);
  const PairTable table = pair_table(P);
  for (int i = 1; i < 20; ++i) {
    const double eps = 0.05 * i;
    c.delta_table.emplace_back(eps, delta_for_epsilon(table, eps, cap));
  }
  return c;
}

Vec sample_uniform(const Polytope& P, const BoundingBox& box, Rng& rng) {
  const int d = P.dim();
  for (int tries = 0; tries < 1000000; ++tries) {
    Vec x(d);
    for (int i = 0; i < d; ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
    if (P.contains(x)) return x;
  }
  throw InternalError("rejection sampling in polytope failed");
}

Vec sample_near_boundary(const Polytope& P, const BoundingBox& box, double slab, Rng& rng) {
  Vec x = sample_uniform(P, box, rng);
  const double mode = rng.uniform();
  if (mode < 1.0 / 3.0) return x;
  const int pushes = mode < 2.0 / 3.0 ? 1 : 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(P.dim())));
  for (int p = 0; p < pushes; ++p) {
    const int k = static_cast<int>(rng.index(static_cast<std::uint64_t>(P.face_count())));
    const auto& f = P.face(k);
    const Vec y = x - (f(x) + rng.uniform(0.0, slab)) * f.normal;
    if (P.contains(y)) x = y;
  }
  return x;
}

namespace {

// Adversarial weights: either random on the simplex, random on a random subset,
// or the exact minimizer of |sum a_i p_i| over the simplex.
Vec certificate_weights(const Mat& pts, Rng& rng) {
  const Eigen::Index s = pts.cols();
  const double mode = rng.uniform();
  if (mode < 0.25) return min_norm_point<double>(pts).weights;
  Vec a = rng.simplex_weights(s);
  if (mode < 0.6 && s > 1) {
    for (Eigen::Index i = 0; i < s; ++i)
      if (rng.uniform() < 0.5) a[i] = 0.0;
    if (a.sum() <= 0.0) a[static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(s)))] = 1.0;
    a /= a.sum();
  }
  return a;
}

}  // namespace

CertificateReport lambda_certificate(const Polytope& P, double Lambda, std::size_t samples, std::uint64_t seed) {
  CertificateReport rep;
  const BoundingBox box = bounding_box(P);
  const double thr = -2.0 / Lambda;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = Rng::stream(seed, s);
    const Vec x = sample_near_boundary(P, box, 2.0 / Lambda, rng);
    std::vector<int> act;
    for (int i = 0; i < P.face_count(); ++i)
      if (P.face(i)(x) > thr) act.push_back(i);
    ++rep.samples;
    if (act.empty()) {
      ++rep.vacuous;
      continue;
    }
    Mat pts(P.dim(), static_cast<Eigen::Index>(act.size()));
    for (std::size_t i = 0; i < act.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = P.face(act[i]).normal;
    const Vec a = certificate_weights(pts, rng);
    const double lhs = a.sum();
    const double rhs = Lambda * (pts * a).norm();
    const double ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (lhs > rhs * (1.0 + 1e-12)) ++rep.violations;
  }
  return rep;
}

CertificateReport xi_certificate(const Polytope& P, double Xi, std::size_t samples, std::uint64_t seed) {
  CertificateReport rep;
  if (P.q() == 0) {
    rep.samples = samples;
    rep.vacuous = samples;
    return rep;
  }
  const BoundingBox box = bounding_box(P);
  const double width = 2.0 / Xi;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = Rng::stream(seed, s);
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(P.q())));
    const auto& fk = P.face(k);
    Vec x;
    for (int tries = 0; tries < 10000; ++tries) {
      Vec y = sample_near_boundary(P, box, width, rng);
      y -= (fk(y) + rng.uniform(0.0, width)) * fk.normal;
      if (P.contains(y) && fk(y) >= -width) {
        x = y;
        break;
      }
    }
    ++rep.samples;
    if (x.size() == 0) {
      ++rep.vacuous;
      continue;
    }
    std::vector<int> act;
    for (int i = 0; i < k; ++i)
      if (P.face(i)(x) > -width) act.push_back(i);
    if (act.empty()) {
      ++rep.vacuous;
      continue;
    }
    Mat pts(P.dim(), static_cast<Eigen::Index>(act.size()));
    for (std::size_t i = 0; i < act.size(); ++i) pts.col(static_cast<Eigen::Index>(i)) = P.face(act[i]).normal;
    // The adversarial minimizer lives in the complement of N_k.
    Mat proj = pts - fk.normal * (fk.normal.transpose() * pts);
    Vec a = certificate_weights(proj, rng);
    const double lhs = a.sum();
    const double rhs = Xi * wedge_norm(pts * a, fk.normal);
    const double ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (lhs > rhs * (1.0 + 1e-12)) ++rep.violations;
  }
  return rep;
}

}  // namespace polysmooth
