#include "harness_internal.hpp"

#include "polysmooth/gaussmap.hpp"
#include "polysmooth/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace polysmooth::detail {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Largest residual seen, with the place it occurred.
struct Worst {
  double value = 0.0;
  std::string where;
  void update(double v, const std::string& w) {
    if (v > value || !std::isfinite(v)) {
      value = v;
      where = w;
    }
  }
};

CheckRecord finish(CheckRecord r, bool ok, const std::string& failure_note = {}) {
  r.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
  if (!ok && !failure_note.empty()) r.note = r.note.empty() ? failure_note : r.note + "; " + failure_note;
  return r;
}

std::vector<Vec> random_box_points(const Polytope& P, std::size_t n, Rng& rng, double pad) {
  const auto box = bounding_box(P);
  std::vector<Vec> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vec x(P.dim());
    for (int d = 0; d < P.dim(); ++d) x[d] = rng.uniform(box.lo[d] - pad, box.hi[d] + pad);
    pts.push_back(x);
  }
  return pts;
}

// Point of the ray p0 + t w where f = level (f below level at p0); empty when
// the ray does not reach the level.
Vec solve_on_ray(const std::function<double(const Vec&)>& f, const Vec& p0, const Vec& w, double level) {
  double lo = 0.0, hi = 1.0;
  while (f(p0 + hi * w) < level) {
    hi *= 2.0;
    if (hi > 1e6) return Vec();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(p0 + mid * w) < level ? lo : hi) = mid;
  }
  return p0 + 0.5 * (lo + hi) * w;
}

// Points of the polytope with uhat_k in [-depth, 0].
std::vector<Vec> slab_points(const Polytope& P, const SmoothingSchedule& S, int k, double depth, std::size_t count,
                             Rng& rng) {
  const Vec p0 = chebyshev_center(P).center;
  auto f = [&](const Vec& x) { return uhat_value<double>(P, S, x, k); };
  std::vector<Vec> out;
  std::size_t tries = 0;
  while (out.size() < count) {
    if (tries++ > 100 * count + 100) throw InternalError("slab sampler: ray search keeps failing");
    const Vec x = solve_on_ray(f, p0, rng.unit_vector(P.dim()), -depth * rng.uniform());
    if (x.size() && P.contains(x)) out.push_back(x);
  }
  return out;
}

// Points where level k sits inside its band: from slab points of level k-1,
// move along N_k until uhat_{k-1} - u_k equals s / lambda_k, s in [-1, 1].
std::vector<Vec> band_points(const Polytope& P, const SmoothingSchedule& S, int k, double depth, std::size_t count,
                             Rng& rng) {
  const Vec N = P.face(k).normal;
  auto gap = [&](const Vec& x) { return uhat_value<double>(P, S, x, k - 1) - P.face(k)(x); };
  std::vector<Vec> out;
  std::size_t tries = 0;
  while (out.size() < count && tries++ < 200 * count) {
    const Vec x0 = slab_points(P, S, k - 1, depth, 1, rng).front();
    const double target = rng.uniform(-1.0, 1.0) / S.lambda(k);
    double lo = -1.0, hi = 1.0;
    if (!(gap(x0 + lo * N) > target && gap(x0 + hi * N) < target)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (gap(x0 + mid * N) > target ? lo : hi) = mid;
    }
    const Vec x = x0 + 0.5 * (lo + hi) * N;
    if (P.contains(x)) out.push_back(x);
  }
  return out;
}

// Points near the boundary, half of them inside a transition band of a random
// level so that the curved part of the smoothed function is exercised.
std::vector<Vec> boundary_and_band_points(const CheckEnv& e, std::size_t count, double slab, Rng& rng) {
  const BoundingBox box = bounding_box(e.P);
  std::vector<Vec> out;
  out.reserve(count);
  const std::size_t banded = e.P.q() > 0 ? count / 2 : 0;
  while (out.size() < banded) {
    const int k = 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(e.P.q())));
    for (const Vec& x : band_points(e.P, e.S, k, slab, 1, rng)) out.push_back(x);
  }
  while (out.size() < count) out.push_back(sample_near_boundary(e.P, box, slab, rng));
  return out;
}

std::vector<MetricField> representative_metrics(const CheckEnv& e) {
  std::vector<MetricField> out{e.cfg.metric};
  const int n = e.P.dim();
  if (n < 3) return out;
  const Vec c = chebyshev_center(e.P).center;
  out.push_back(MetricField::euclidean(n));
  Mat A = Mat::Identity(n, n);
  A(0, 1) = 0.15;
  A(2, 0) = -0.1;
  out.push_back(MetricField::constant(A));
  ConformalPotential quad;
  quad.scale = 0.3;
  quad.center = c;
  out.push_back(MetricField::conformal(n, quad));
  ConformalPotential gauss;
  gauss.kind = ConformalPotential::Kind::Gaussian;
  gauss.scale = 0.2;
  gauss.width = 0.7;
  gauss.center = c;
  out.push_back(MetricField::conformal(n, gauss));
  Mat B = Mat::Zero(n, n);
  B(0, 1) = 0.5;
  B(1, 2) = -0.3;
  std::vector<Mat> Cq(static_cast<std::size_t>(n), Mat::Zero(n, n));
  Cq[0](1, 0) = 0.2;
  Cq[2](0, 2) = -0.1;
  out.push_back(MetricField::pullback(0.1, B, Cq));
  return out;
}

double excess(const Polytope& P, const MetricJet& mj, int a, int b) {
  const Vec na = g_unit_normal(P.face(a).normal, mj);
  const Vec nb = g_unit_normal(P.face(b).normal, mj);
  return g_inner(na, nb, mj) - P.face(a).normal.dot(P.face(b).normal);
}

std::string region_note(std::size_t count, const char* what) {
  return std::to_string(count) + " " + what + " samples";
}

// ---------------------------------------------------------------- polytope

CheckRecord check_polytope_assumptions(CheckEnv& e) {
  CheckRecord r;
  if (!e.poly_ok && e.poly.faces.empty()) {
    r.status = CheckStatus::AssumptionFailed;
    r.note = e.poly_failure;
    return r;
  }
  const auto& rep = e.poly;
  double worst_inner = -1.0;
  for (const auto& p : rep.pairs)
    if (p.coactive) worst_inner = std::max(worst_inner, p.inner);
  r.worst_residual = std::max(worst_inner, 0.0);
  r.samples = rep.faces.size() + rep.pairs.size();
  // Face-order invariance: reverse and rotate, compare verdicts face by face.
  const int m = e.P.face_count();
  bool invariant = true;
  std::vector<std::vector<int>> orders(2, std::vector<int>(static_cast<std::size_t>(m)));
  for (int i = 0; i < m; ++i) {
    orders[0][static_cast<std::size_t>(i)] = m - 1 - i;
    orders[1][static_cast<std::size_t>(i)] = (i + 1) % m;
  }
  for (const auto& order : orders) {
    const auto pr = check_assumptions(e.P.permuted(order));
    invariant = invariant && pr.pass == rep.pass && pr.acute == rep.acute && pr.nonredundant == rep.nonredundant;
    for (int i = 0; i < m; ++i)
      invariant = invariant && pr.faces[static_cast<std::size_t>(i)].nonredundant ==
                                   rep.faces[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])].nonredundant;
  }
  r.fitted = {{"max_meeting_inner_product", worst_inner}};
  if (!invariant) return finish(r, false, "verdict changes under a permutation of the faces");
  if (!rep.pass) {
    r.status = CheckStatus::AssumptionFailed;
    r.note = e.poly_failure;
    return r;
  }
  r.status = CheckStatus::Pass;
  return r;
}

CheckRecord check_lambda_certificate(CheckEnv& e) {
  CheckRecord r;
  const auto rep = lambda_certificate(e.P, e.C.Lambda, e.cfg.samples.certificates, e.seed_for("lambda"));
  r.samples = rep.samples;
  r.worst_residual = rep.worst_ratio;
  r.tolerance = 1.0;
  r.fitted = {{"Lambda", e.C.Lambda}, {"vacuous", static_cast<double>(rep.vacuous)}};
  r.note = std::to_string(rep.violations) + " violations";
  return finish(r, rep.violations == 0 && rep.vacuous < rep.samples,
                rep.vacuous == rep.samples ? "every configuration was vacuous" : "");
}

CheckRecord check_xi_certificate(CheckEnv& e) {
  CheckRecord r;
  r.fitted = {{"Xi", e.C.Xi}};
  if (e.C.xi_sentinel) {
    r.note = "single face: transversality is vacuous";
    return finish(r, true);
  }
  const auto rep = xi_certificate(e.P, e.C.Xi, e.cfg.samples.certificates, e.seed_for("xi"));
  r.samples = rep.samples;
  r.worst_residual = rep.worst_ratio;
  r.tolerance = 1.0;
  r.fitted.emplace_back("vacuous", static_cast<double>(rep.vacuous));
  r.note = std::to_string(rep.violations) + " violations";
  return finish(r, rep.violations == 0 && rep.vacuous < rep.samples,
                rep.vacuous == rep.samples ? "every configuration was vacuous" : "");
}

CheckRecord check_delta_monotone(CheckEnv& e) {
  CheckRecord r;
  const PairTable table = pair_table(e.P);
  double prev = delta_for_epsilon(table, 0.01);
  double worst = 0.0;
  for (int i = 2; i < 100; ++i) {
    const double d = delta_for_epsilon(table, 0.01 * i);
    worst = std::max(worst, prev - d);
    prev = d;
    ++r.samples;
  }
  r.worst_residual = worst;
  r.fitted = {{"delta_at_half_inverse_Lambda", delta_for_epsilon(table, 0.5 / e.C.Lambda)}};
  return finish(r, worst <= 0.0, "delta decreases as epsilon grows");
}

// ------------------------------------------------------------------- kernel

CheckRecord check_eta(CheckEnv& e) {
  CheckRecord r;
  const auto& K = EtaKernel::standard();
  Rng rng(e.seed_for("eta"));
  const double h = 1e-5;
  r.tolerance = e.tol("eta.contract.fd", 1e-8);
  std::size_t structural = 0;
  Worst w;
  for (std::size_t i = 0; i < e.cfg.samples.eta; ++i) {
    const double t = rng.uniform(-2.0, 2.0);
    const double v = K.value(t);
    const bool ok = v == K.value(-t) && K.d1(t) == -K.d1(-t) && v >= std::abs(t) && v <= std::abs(t) + 1.0 &&
                    (std::abs(t) < 0.5 || v == std::abs(t)) && K.d2(t) >= 0.0 && std::abs(K.d1(t)) <= 1.0 && K.d1(t) * t >= 0.0;
    if (!ok) ++structural;
    if (i % 10 == 0) {
      const double fd1 = (K.value(t + h) - K.value(t - h)) / (2 * h);
      const double fd2 = (K.d1(t + h) - K.d1(t - h)) / (2 * h);
      w.update(std::max(std::abs(K.d1(t) - fd1), std::abs(K.d2(t) - fd2) / std::max(1.0, std::abs(K.d2(t)))),
               "t=" + fmt(t));
    }
    ++r.samples;
  }
  r.worst_residual = w.value;
  r.note = std::to_string(structural) + " structural violations";
  return finish(r, structural == 0 && w.value <= r.tolerance, "worst at " + w.where);
}

// ---------------------------------------------------------------- smoothing

CheckRecord check_sandwich(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("sandwich"));
  r.tolerance = e.tol("smoothing.sandwich.slack", 1e-12);
  Worst w;
  for (const Vec& x : random_box_points(e.P, e.cfg.samples.random_points, rng, 0.2)) {
    const auto c = smooth_chain<double>(e.P, e.S, x);
    const Vec u = e.P.values(x);
    for (int k = 1; k <= e.P.q(); ++k) {
      const double mx = std::max(c[k - 1].value, u[k]);
      w.update(std::max({mx - c[k].value, c[k].value - mx - 1.0 / e.S.lambda(k), c[k - 1].value - c[k].value}),
               "k=" + std::to_string(k) + " at " + format_point(x));
    }
    ++r.samples;
  }
  r.worst_residual = w.value;
  return finish(r, w.value <= r.tolerance, "worst at " + w.where);
}

CheckRecord check_global_bound(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("global"));
  r.tolerance = e.tol("smoothing.global_bound.slack", 1e-12);
  const double lift = e.S.total_lift(e.P.q());
  Worst w;
  std::size_t chain_failures = 0;
  for (const Vec& x : random_box_points(e.P, e.cfg.samples.random_points, rng, 0.2)) {
    const double m = e.P.values(x).maxCoeff();
    const double v = uhat_value<double>(e.P, e.S, x);
    w.update(std::max(m - v, v - m - lift), format_point(x));
    if (in_inner_region(x, e.S, e.P) && !hat_omega_contains(x, e.S, e.P)) ++chain_failures;
    if (hat_omega_contains(x, e.S, e.P) && !e.P.contains(x)) ++chain_failures;
    ++r.samples;
  }
  r.worst_residual = w.value;
  r.note = std::to_string(chain_failures) + " inclusion-chain failures";
  return finish(r, w.value <= r.tolerance && chain_failures == 0, "worst at " + w.where);
}

CheckRecord check_hessian_bound(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("hessian"));
  // Each level adds at most 2 eta''(0) lambda_k; earlier levels sum geometrically.
  const double C = std::max<double>(e.P.q() + 1, 2.0 * EtaKernel::standard().d2(0.0) / (1.0 - e.S.gamma));
  r.tolerance = C;
  double fitted = 0.0;
  Worst w;
  for (const Vec& x : boundary_and_band_points(e, std::max<std::size_t>(1, e.cfg.samples.random_points / 10), 0.2, rng)) {
    const auto c = smooth_chain<double>(e.P, e.S, x, -1, true);
    for (int k = 0; k <= e.P.q(); ++k) {
      const Mat& H = c[static_cast<std::size_t>(k)].hessian;
      const Eigen::SelfAdjointEigenSolver<Mat> es(H);
      const double lam = e.S.lambda(k);
      fitted = std::max(fitted, es.eigenvalues().maxCoeff() / lam);
      const double asym = (H - H.transpose()).norm() / lam;
      const double neg = -es.eigenvalues().minCoeff() / lam;
      const double grad = c[static_cast<std::size_t>(k)].gradient.norm() - 1.0;
      w.update(std::max({asym * 1e12, neg * 1e12, grad * 1e12}), "k=" + std::to_string(k) + " at " + format_point(x));
    }
    ++r.samples;
  }
  r.worst_residual = fitted;
  r.fitted = {{"C_hessian", fitted}};
  const bool shape_ok = w.value <= 1.0;  // asymmetry, negativity, |grad| - 1 all below 1e-12
  return finish(r, fitted <= C && shape_ok,
                shape_ok ? "eigenvalue above C lambda_k" : "symmetry, PSD or gradient bound fails at " + w.where);
}

CheckRecord check_jet_fd(CheckEnv& e) {
  CheckRecord r;
  // Probe schedule with bands much wider than the step.
  const SmoothingSchedule S(e.tol("smoothing.jet_fd.gamma", 0.45), e.tol("smoothing.jet_fd.lambda0", 1.2));
  const Polytope& P = e.P;
  const int n = P.dim();
  const double h = 1e-5;
  r.tolerance = e.tol("smoothing.jet_fd.relative", 1e-6);
  r.fitted = {{"probe_gamma", S.gamma}, {"probe_lambda0", S.lambda0}};
  auto fd_grad = [&](const Vec& x, int k, double step) {
    Vec g(n);
    for (int d = 0; d < n; ++d) {
      const Vec dx = Vec::Unit(n, d) * step;
      g[d] = (uhat_value<double>(P, S, Vec(x + dx), k) - uhat_value<double>(P, S, Vec(x - dx), k)) / (2 * step);
    }
    return g;
  };
  auto fd_hess = [&](const Vec& x, int k, double step) {
    Mat H(n, n);
    for (int d = 0; d < n; ++d) {
      const Vec dx = Vec::Unit(n, d) * step;
      H.col(d) = (smooth_chain<double>(P, S, Vec(x + dx), k).back().gradient -
                  smooth_chain<double>(P, S, Vec(x - dx), k).back().gradient) /
                 (2 * step);
    }
    return H;
  };
  Rng rng(e.seed_for("jetfd"));
  Worst w;
  for (const Vec& x : random_box_points(P, std::max<std::size_t>(1, e.cfg.samples.random_points / 50), rng, 0.0)) {
    const auto c = smooth_chain<double>(P, S, x, -1, true);
    for (int k = 0; k <= P.q(); ++k) {
      const auto& J = c[static_cast<std::size_t>(k)];
      const Vec g = (4.0 * fd_grad(x, k, h / 2) - fd_grad(x, k, h)) / 3.0;
      const Mat H = (4.0 * fd_hess(x, k, h / 2) - fd_hess(x, k, h)) / 3.0;
      w.update(std::max((g - J.gradient).norm() / std::max(1.0, J.gradient.norm()),
                        (H - J.hessian).norm() / std::max(1.0, J.hessian.norm())),
               "k=" + std::to_string(k) + " at " + format_point(x));
    }
    ++r.samples;
  }
  r.worst_residual = w.value;
  return finish(r, w.value <= r.tolerance, "worst at " + w.where);
}

CheckRecord check_gradient_representation(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("gradrep"));
  r.tolerance = e.tol("smoothing.gradient_representation.residual", 1e-10);
  Worst w;
  std::size_t support_failures = 0;
  for (const Vec& x : boundary_and_band_points(e, std::max<std::size_t>(1, e.cfg.samples.random_points / 2), 0.2, rng)) {
    const auto chain = smooth_chain<double>(e.P, e.S, x);
    const Vec u = e.P.values(x);
    for (int k = 0; k <= e.P.q(); ++k) {
      const auto cc = convex_coefficients(k, x, e.S, e.P);
      const Vec rec = e.P.normal_matrix().topRows(k + 1).transpose() * cc.a;
      w.update(std::max({(rec - chain[static_cast<std::size_t>(k)].gradient).norm(), std::abs(cc.a.sum() - 1.0),
                         -cc.a.minCoeff()}),
               "k=" + std::to_string(k) + " at " + format_point(x));
      for (int i = 0; i <= k; ++i)
        if (u[i] < chain[static_cast<std::size_t>(k)].value - 2.0 * k / e.S.lambda(i) && cc.a[i] != 0.0)
          ++support_failures;
    }
    ++r.samples;
  }
  r.worst_residual = w.value;
  r.note = std::to_string(support_failures) + " support-rule violations";
  return finish(r, w.value <= r.tolerance && support_failures == 0, "worst at " + w.where);
}

void heuristic_notice(CheckEnv& e, CheckRecord& r) {
  if (e.lambda0_below_heuristic)
    r.note = "lambda0 below the default threshold 8 Xi / gamma^q; bound is not guaranteed";
}

CheckRecord check_gradient_lower_bound(CheckEnv& e) {
  CheckRecord r;
  heuristic_notice(e, r);
  Rng rng(e.seed_for("gradlow"));
  const double inv = 1.0 / e.C.Lambda;
  r.tolerance = inv;
  double worst = std::numeric_limits<double>::infinity();
  for (const Vec& x : boundary_and_band_points(e, e.cfg.samples.random_points, inv, rng)) {
    const auto chain = smooth_chain<double>(e.P, e.S, x);
    for (int k = 0; k <= e.P.q(); ++k) {
      const double v = chain[static_cast<std::size_t>(k)].value;
      if (v < -inv || v > 0.0) continue;
      ++r.samples;
      worst = std::min(worst, chain[static_cast<std::size_t>(k)].gradient.norm());
    }
  }
  r.worst_residual = r.samples ? worst : 0.0;
  r.fitted = {{"min_gradient_norm", r.worst_residual}};
  return finish(r, r.samples > 0 && worst >= inv, r.samples ? "gradient below 1/Lambda" : "no samples in the slab");
}

CheckRecord check_transversality(CheckEnv& e) {
  CheckRecord r;
  heuristic_notice(e, r);
  Rng rng(e.seed_for("transv"));
  const double inv = 1.0 / e.C.Xi;
  r.tolerance = inv;
  double worst = std::numeric_limits<double>::infinity();
  for (const Vec& x : boundary_and_band_points(e, e.cfg.samples.random_points, inv, rng)) {
    const auto chain = smooth_chain<double>(e.P, e.S, x);
    const Vec u = e.P.values(x);
    for (int k = 1; k <= e.P.q(); ++k) {
      if (u[k] < -inv || u[k] > 0.0) continue;
      for (int j = 0; j < k; ++j) {
        const double v = chain[static_cast<std::size_t>(j)].value;
        if (v < -inv || v > 0.0) continue;
        ++r.samples;
        worst = std::min(worst, wedge_norm(chain[static_cast<std::size_t>(j)].gradient, e.P.face(k).normal));
      }
    }
  }
  r.worst_residual = r.samples ? worst : 0.0;
  r.fitted = {{"min_wedge_norm", r.worst_residual}};
  if (r.samples == 0 && e.P.q() == 0) {
    r.note = "single face: no pairs";
    return finish(r, true);
  }
  return finish(r, r.samples > 0 && worst >= inv, r.samples ? "wedge below 1/Xi" : "no samples in the slabs");
}

// ------------------------------------------------------------------- metric

CheckRecord check_metric_hypotheses(CheckEnv& e) {
  CheckRecord r;
  const auto& rep = e.metric_hypotheses();
  r.samples = rep.face_samples + rep.pair_samples;
  r.worst_residual = std::max({0.0, -rep.min_face_mean_curvature, rep.max_angle_excess});
  r.tolerance = kMetricAssumptionTol;
  r.fitted = {{"min_face_mean_curvature", rep.min_face_mean_curvature}, {"max_angle_excess", rep.max_angle_excess}};
  r.note = rep.curvature_note;
  if (!rep.empty_faces.empty() || !rep.empty_pairs.empty())
    r.note += "; " + std::to_string(rep.empty_faces.size() + rep.empty_pairs.size()) + " empty pieces";
  if (!rep.pass) {
    r.status = CheckStatus::AssumptionFailed;
    r.note = e.metric_failure + "; " + r.note;
    return r;
  }
  r.status = CheckStatus::Pass;
  return r;
}

CheckRecord not_applicable(const std::string& why) {
  CheckRecord r;
  r.status = CheckStatus::Skipped;
  r.note = "not applicable: " + why;
  return r;
}

CheckRecord check_conformal_angles(CheckEnv& e) {
  if (e.cfg.metric.family() != MetricFamily::Conformal) return not_applicable("metric is not conformal");
  CheckRecord r;
  r.tolerance = e.tol("metric.conformal_angles.tolerance", 1e-10);
  Worst w;
  for (const auto& [j, k] : e.meeting_pairs()) {
    Rng rng = Rng::stream(e.seed_for("confangles"), static_cast<std::uint64_t>(j * 1000 + k));
    for (const Vec& x : sample_flat_piece(e.P, {j, k}, e.cfg.samples.face_samples, rng)) {
      const MetricJet mj = metric_jet(e.cfg.metric, x);
      w.update(std::abs(excess(e.P, mj, j, k)), "pair (" + std::to_string(j) + "," + std::to_string(k) + ")");
      ++r.samples;
    }
  }
  r.worst_residual = w.value;
  return finish(r, r.samples > 0 && w.value <= r.tolerance, "worst at " + w.where);
}

CheckRecord check_mean_curvature_trace(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("meancurv"));
  const int n = e.P.dim();
  const Vec c = chebyshev_center(e.P).center;
  r.tolerance = e.tol("metric.mean_curvature_trace.relative", 1e-9);
  Worst w;
  for (const MetricField& m : representative_metrics(e)) {
    for (std::size_t s = 0; s < std::max<std::size_t>(1, e.cfg.samples.metric_points / 3); ++s) {
      const Vec x = c + 0.5 * rng.normal_vector(n);
      const MetricJet J = metric_jet(m, x);
      const Vec df = rng.normal_vector(n);
      const Mat B = rng.normal_vector(n * n).reshaped(n, n);
      const Mat d2f = B * B.transpose();
      const double H = level_set_mean_curvature(df, d2f, J);
      const auto II = second_fundamental_form(df, d2f, J);
      w.update(std::abs(H - II.trace()) / std::max(1.0, std::abs(H)), to_string(m.family()));
      ++r.samples;
    }
  }
  r.worst_residual = w.value;
  return finish(r, w.value <= r.tolerance, "worst for " + w.where);
}

CheckRecord check_euclidean_normal(CheckEnv& e) {
  if (e.cfg.metric.family() != MetricFamily::Euclidean) return not_applicable("metric is not Euclidean");
  CheckRecord r;
  r.tolerance = e.tol("metric.euclidean_normal.tolerance", 1e-8);
  Worst w;
  for (const auto& s : e.mesh().samples) {
    if (s.flagged) continue;
    const auto v = nhat_eval(e.P.q(), s.x, e.S, e.P, e.cfg.metric);
    const Vec grad = smooth_chain<double>(e.P, e.S, s.x).back().gradient;
    w.update(std::max((v.nu - grad.normalized()).norm(), v.nu_discrepancy), format_point(s.x));
    ++r.samples;
  }
  r.worst_residual = w.value;
  return finish(r, w.value <= r.tolerance, "worst at " + w.where);
}

CheckRecord check_metric_derivatives(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("metricfd"));
  const int n = e.P.dim();
  const Vec c = chebyshev_center(e.P).center;
  const double h = 1e-5;
  r.tolerance = e.tol("metric.derivative_fd.relative", 1e-6);
  Worst w;
  for (const MetricField& m : representative_metrics(e)) {
    for (std::size_t s = 0; s < e.cfg.samples.metric_points; ++s) {
      const Vec x = c + rng.uniform(0.0, 1.0) * rng.unit_vector(n);
      const auto dg = m.dg(x);
      for (int l = 0; l < n; ++l) {
        const Vec dx = Vec::Unit(n, l) * h;
        const Mat fd = (m.g<double>(Vec(x + dx)) - m.g<double>(Vec(x - dx))) / (2 * h);
        w.update((fd - dg[static_cast<std::size_t>(l)]).norm() / std::max(1.0, dg[static_cast<std::size_t>(l)].norm()),
                 to_string(m.family()) + " at " + format_point(x));
      }
      ++r.samples;
    }
  }
  r.worst_residual = w.value;
  return finish(r, w.value <= r.tolerance, "worst for " + w.where);
}

// ----------------------------------------------------------------- gaussmap

CheckRecord check_companion_normal(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("companion"));
  r.tolerance = e.tol("gaussmap.companion_normal.tolerance", 1e-8);
  Worst w;
  std::size_t triple_failures = 0;
  for (int k = 0; k <= e.P.q(); ++k)
    for (const Vec& x : slab_points(e.P, e.S, k, std::ldexp(1.0, -k) / e.C.Xi, e.cfg.samples.slab_points, rng)) {
      if (!in_Wk(k, x, e.S, e.P, e.cfg.metric)) {
        w.update(std::numeric_limits<double>::infinity(), "outside the domain at " + format_point(x));
        continue;
      }
      const auto v = nhat_eval(k, x, e.S, e.P, e.cfg.metric);
      w.update(std::max({v.nu_discrepancy, std::abs(v.N.norm() - 1.0) * 100.0,
                         std::abs(v.nu.dot(e.cfg.metric.g<double>(x) * v.nu) - 1.0) * 100.0}),
               "k=" + std::to_string(k) + " at " + format_point(x));
      for (const auto& t : v.angles)
        if (t.alpha > 0 && (std::abs(std::tan(t.phi)) > std::tan(t.alpha) * (1 + 1e-12) || t.alpha >= kPi / 2 ||
                            t.theta >= kPi / (2 * t.alpha)))
          ++triple_failures;
      ++r.samples;
    }
  r.worst_residual = w.value;
  r.note = std::to_string(triple_failures) + " angle-triple range violations";
  return finish(r, w.value <= r.tolerance && triple_failures == 0, "worst at " + w.where);
}

CheckRecord check_convex_representation(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("convexrep"));
  r.tolerance = e.tol("gaussmap.convex_representation.residual", 1e-8);
  Worst w;
  for (int k = 1; k <= e.P.q(); ++k)
    for (const Vec& x : slab_points(e.P, e.S, k, std::ldexp(1.0, -k) / e.C.Xi, e.cfg.samples.slab_points, rng)) {
      const auto v = nhat_eval(k, x, e.S, e.P, e.cfg.metric);
      const double uk = uhat_value<double>(e.P, e.S, x, k);
      std::vector<int> sup;
      for (int i = 0; i <= k; ++i)
        if (e.P.face(i)(x) >= uk - 2.0 * k / e.S.lambda(i)) sup.push_back(i);
      Mat B(e.P.dim(), static_cast<Eigen::Index>(sup.size()));
      for (std::size_t c = 0; c < sup.size(); ++c) B.col(static_cast<Eigen::Index>(c)) = e.P.face(sup[c]).normal;
      w.update(nnls_residual(B, v.N), "k=" + std::to_string(k) + " at " + format_point(x));
      ++r.samples;
    }
  r.worst_residual = w.value;
  return finish(r, w.value <= r.tolerance, "worst at " + w.where);
}

CheckRecord check_nhat_transversality(CheckEnv& e) {
  CheckRecord r;
  Rng rng(e.seed_for("nhattransv"));
  const double inv = 1.0 / e.C.Xi;
  r.tolerance = e.tol("gaussmap.transversality.slack", 1e-9);
  double worst = std::numeric_limits<double>::infinity();
  for (int j = 0; j < e.P.q(); ++j)
    for (const Vec& x : slab_points(e.P, e.S, j, std::ldexp(1.0, -j) * inv, 2 * e.cfg.samples.slab_points, rng)) {
      const auto v = nhat_eval(j, x, e.S, e.P, e.cfg.metric);
      for (int k = j + 1; k <= e.P.q(); ++k) {
        const double uk = e.P.face(k)(x);
        if (uk < -inv || uk > 0.0) continue;
        ++r.samples;
        worst = std::min(worst, wedge_norm(v.N, e.P.face(k).normal));
      }
    }
  r.worst_residual = r.samples ? worst : 0.0;
  r.fitted = {{"min_wedge_norm", r.worst_residual}, {"inverse_Xi", inv}};
  if (e.P.q() == 0) {
    r.note = "single face: no pairs";
    return finish(r, true);
  }
  return finish(r, r.samples > 0 && worst >= inv - r.tolerance, r.samples ? "wedge below 1/Xi" : "no samples");
}

CheckRecord check_lipschitz(CheckEnv& e) {
  CheckRecord r;
  if (e.P.q() == 0) {
    r.note = "single face: the map is constant";
    return finish(r, true);
  }
  const double window = e.tol("gaussmap.lipschitz.ratio", 1.2);
  r.tolerance = window;
  double fitted[2] = {0.0, 0.0};
  for (int d = 0; d < 2; ++d) {
    const SmoothingSchedule S(e.S.gamma, e.S.lambda0 * (d ? 2.0 : 1.0));
    Rng rng(e.seed_for("lipschitz"));
    for (int k = 1; k <= e.P.q(); ++k)
      for (const Vec& x : band_points(e.P, S, k, std::ldexp(1.0, -k) / e.C.Xi, e.cfg.samples.slab_points, rng)) {
        if (!in_Wk(k, x, S, e.P, e.cfg.metric)) continue;
        fitted[d] = std::max(fitted[d], nhat_jacobian(k, x, S, e.P, e.cfg.metric).norm() / S.lambda(k));
        ++r.samples;
      }
  }
  const double ratio = fitted[0] > 0 ? fitted[1] / fitted[0] : 0.0;
  r.worst_residual = ratio;
  r.fitted = {{"C_lambda0", fitted[0]}, {"C_2lambda0", fitted[1]}, {"ratio", ratio}};
  return finish(r, fitted[0] > 0 && ratio >= 1.0 / window && ratio <= window,
                fitted[0] > 0 ? "fitted constant not stable" : "no band samples");
}

CheckRecord check_euclidean_consistency(CheckEnv& e) {
  CheckRecord r;
  const MetricField eu = MetricField::euclidean(e.P.dim());
  const double angle_tol = e.tol("gaussmap.euclidean_consistency.angle", 1e-6);
  const double rel_tol = e.tol("gaussmap.euclidean_consistency.trace_relative", 1e-5);
  const double fraction = e.tol("gaussmap.euclidean_consistency.fraction", 0.999);
  r.tolerance = angle_tol;
  double worst_angle = 0.0;
  std::size_t unflagged = 0, agree = 0, curved = 0;
  std::string where;
  auto visit = [&](const Vec& x, bool flagged, const Vec& N, double tr, double H) {
    ++r.samples;
    const Vec nu = smooth_chain<double>(e.P, e.S, x).back().gradient.normalized();
    const double ang = std::atan2(wedge_norm(N, nu), N.dot(nu));
    if (!(ang <= worst_angle)) {
      worst_angle = ang;
      where = format_point(x);
    }
    if (flagged) return;
    ++unflagged;
    if (H > 0) ++curved;
    if (std::abs(tr - H) <= rel_tol * std::max(std::abs(H), std::abs(tr))) ++agree;
  };
  const SurfaceMesh& mesh = e.euclidean_mesh();
  for (const auto& s : mesh.samples) {
    if (s.flagged && !in_Wk(e.P.q(), s.x, e.S, e.P, eu)) continue;
    const Vec N = s.flagged ? nhat_eval(e.P.q(), s.x, e.S, e.P, eu).N : s.N;
    visit(s.x, s.flagged, N, s.trace_norm, s.H);
  }
  const Vec c = mesh.center;
  for (const Vec& x : e.band_probes(e.S, 1.0)) {
    const SurfaceSample s = evaluate_surface_point(c, (x - c).normalized(), e.S, e.P, eu);
    if (s.flagged && !in_Wk(e.P.q(), s.x, e.S, e.P, eu)) continue;
    visit(s.x, s.flagged, s.flagged ? nhat_eval(e.P.q(), s.x, e.S, e.P, eu).N : s.N, s.trace_norm, s.H);
  }
  r.worst_residual = worst_angle;
  const double frac = unflagged ? static_cast<double>(agree) / static_cast<double>(unflagged) : 0.0;
  r.fitted = {{"trace_equals_H_fraction", frac},
              {"curved_samples", static_cast<double>(curved)},
              {"flagged", static_cast<double>(r.samples - unflagged)}};
  r.note = std::to_string(mesh.samples.size()) + " mesh samples plus band crossings";
  if (!(worst_angle <= angle_tol)) return finish(r, false, "angle above tolerance at " + where);
  return finish(r, frac >= fraction, "trace norm differs from H too often");
}

// Points with uhat_j in [-delta, 0] and u_k in [-delta, 0]: from points of a
// meeting pair (i, k) with i <= j, move along N_i until uhat_j hits a target.
std::vector<Vec> angle_points(const CheckEnv& e, int j, int k, double delta, std::size_t count, Rng& rng) {
  std::vector<Vec> out;
  for (const auto& [a, b] : e.meeting_pairs()) {
    if (b != k || a > j) continue;
    const int i = a;
    const Vec Ni = e.P.face(i).normal;
    for (const Vec& y : sample_flat_piece(e.P, {i, k}, count, rng)) {
      const Vec y0 = y - rng.uniform(0.0, delta) * e.P.face(k).normal;
      const double target = -delta * rng.uniform();
      auto f = [&](double s) { return uhat_value<double>(e.P, e.S, Vec(y0 + s * Ni), j) - target; };
      double lo = -4.0 * delta, hi = 4.0 * delta;
      if (!(f(lo) < 0 && f(hi) > 0)) continue;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0 ? lo : hi) = mid;
      }
      const Vec x = y0 + 0.5 * (lo + hi) * Ni;
      const double uk = e.P.face(k)(x);
      if (uk >= -delta && uk <= 0.0 && e.P.contains(x)) out.push_back(x);
    }
  }
  return out;
}

CheckRecord check_angle_propagation(CheckEnv& e) {
  CheckRecord r;
  const PairTable table = pair_table(e.P);
  const double delta = 2.0 / e.S.lambda0;
  const double eps = epsilon_for_delta(table, delta);
  r.tolerance = e.tol("gaussmap.angle_propagation.tolerance", 1e-6);
  Rng rng(e.seed_for("angleprop"));
  double lower = -std::numeric_limits<double>::infinity(), upper = -std::numeric_limits<double>::infinity();
  double q_fit = 0.0;
  for (int j = 0; j < e.P.q(); ++j)
    for (int k = j + 1; k <= e.P.q(); ++k)
      for (const Vec& x : angle_points(e, j, k, delta, e.cfg.samples.slab_points, rng)) {
        if (!in_Wk(j, x, e.S, e.P, e.cfg.metric)) continue;
        const auto v = nhat_eval(j, x, e.S, e.P, e.cfg.metric);
        const MetricJet mj = metric_jet(e.cfg.metric, x);
        const Vec nuk = g_unit_normal(e.P.face(k).normal, mj);
        const double nn = v.N.dot(e.P.face(k).normal);
        const double lo = g_inner(v.nu, nuk, mj) - nn;  // must be <= eps
        lower = std::max(lower, lo);
        upper = std::max(upper, nn);
        if (eps > 0) q_fit = std::max({q_fit, lo / eps, nn / eps});
        ++r.samples;
      }
  const double viol = std::max({0.0, lower - eps, upper - eps});
  r.worst_residual = viol;
  r.fitted = {{"epsilon", eps}, {"delta", delta}, {"max_lower_gap", lower}, {"max_upper", upper}};
  if (eps > 0) r.fitted.emplace_back("Q", q_fit);
  if (e.P.q() == 0) {
    r.note = "single face: no pairs";
    return finish(r, true);
  }
  return finish(r, r.samples > 0 && viol <= r.tolerance, r.samples ? "two-sided bound violated" : "no samples");
}

CheckRecord check_sine_ratio(CheckEnv& e) {
  CheckRecord r;
  r.tolerance = e.tol("gaussmap.sine_ratio.slack", 1e-12);
  Worst w;
  for (int ia = 1; ia <= 100; ++ia) {
    const double alpha = (kPi / 2) * ia / 101.0;
    for (int ib = 0; ib < 100; ++ib) {
      const double beta = std::min(alpha, alpha * ib / 99.0);
      for (int it = 1; it <= 50; ++it) {
        const double th = it / 51.0;
        w.update(-sin_ratio_gap(alpha, beta, th), "theta<1");
        const double top = kPi / (2 * alpha);
        const double th2 = 1.0 + (top - 1.0) * (it - 1) / 50.0;
        const double bound = 4 * (th2 - 1) * alpha / (std::sin(2 * alpha) * std::sin(2 * th2 * alpha));
        w.update(std::abs(sin_ratio_gap(alpha, beta, th2)) - bound, "theta>=1");
        r.samples += 2;
      }
    }
  }
  r.worst_residual = w.value;
  return finish(r, w.value <= r.tolerance, "violated for " + w.where);
}

CheckRecord check_t_cot_t(CheckEnv& e) {
  CheckRecord r;
  (void)e;
  const int count = 10000;
  double prev = t_cot_t(0.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= count; ++i) {
    const double t = (kPi - 1e-3) * i / count;
    const double v = t_cot_t(t);
    worst = std::max(worst, v - prev);  // must stay negative
    prev = v;
    ++r.samples;
  }
  r.worst_residual = worst;
  return finish(r, worst < 0.0, "not strictly decreasing");
}

// ------------------------------------------------------------------ surface

CheckRecord check_mesh(CheckEnv& e) {
  CheckRecord r;
  const SurfaceMesh& fine = e.mesh();
  MeshOptions o;
  o.band_resolved = false;
  const SurfaceMesh coarse =
      build_mesh(e.P, e.S, e.cfg.metric, default_directions(e.P.dim(), std::max(0, e.cfg.mesh_level - 1)), o);
  r.tolerance = e.tol("surface.mesh.refinement", 0.05);
  double worst_u = 0.0;
  std::size_t bad_weights = 0;
  for (const auto& s : fine.samples) {
    worst_u = std::max(worst_u, std::abs(uhat_value<double>(e.P, e.S, s.x)));
    if (!(s.weight > 0.0) || !(smooth_chain<double>(e.P, e.S, s.x).back().gradient.dot(s.omega) > 0.0)) ++bad_weights;
    ++r.samples;
  }
  const double change = std::abs(fine.euclidean_area / coarse.euclidean_area - 1.0);
  r.worst_residual = change;
  r.fitted = {{"euclidean_area", fine.euclidean_area}, {"g_area", fine.total_area}, {"max_abs_uhat", worst_u}};
  if (worst_u > kSurfaceTol) return finish(r, false, "sample off the surface");
  if (bad_weights) return finish(r, false, std::to_string(bad_weights) + " non-positive weights");
  return finish(r, change <= r.tolerance, "area changes by " + fmt(change) + " under refinement");
}

CheckRecord check_decomposition(CheckEnv& e) {
  CheckRecord r;
  std::size_t failures = 0;
  std::string first;
  std::size_t kinds[3] = {0, 0, 0};
  auto visit = [&](const Vec& x, const RegionLabel* stored) {
    ++r.samples;
    try {
      const RegionLabel L = classify(x, e.S, e.P);
      std::string why;
      const bool ok = label_holds(L, x, e.S, e.P, &why) && (!stored || *stored == L);
      ++kinds[static_cast<int>(L.kind)];
      if (!ok && failures++ == 0) first = to_string(L) + " at " + format_point(x) + ": " + why;
    } catch (const DomainError& err) {
      if (failures++ == 0) first = err.what();
    }
  };
  for (const auto& s : e.mesh().samples) visit(s.x, &s.label);
  for (const Vec& x : e.band_probes(e.S, 2.5)) visit(x, nullptr);
  r.worst_residual = static_cast<double>(failures);
  r.fitted = {{"F", static_cast<double>(kinds[0])}, {"E", static_cast<double>(kinds[1])}, {"G", static_cast<double>(kinds[2])}};
  return finish(r, failures == 0, first);
}

CheckRecord check_face_deficit(CheckEnv& e) {
  CheckRecord r;
  r.tolerance = e.tol("surface.face_deficit.slack", 1e-6);
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  std::size_t flagged = 0;
  auto visit = [&](const SurfaceSample& s) {
    if (s.label.kind != RegionKind::F) return;
    if (s.flagged) {
      ++flagged;
      return;
    }
    ++r.samples;
    if (s.H - s.trace_norm < worst) {
      worst = s.H - s.trace_norm;
      where = format_point(s.x);
    }
  };
  for (const auto& s : e.mesh().samples) visit(s);
  const Vec c = e.mesh().center;
  for (const Vec& x : e.band_probes(e.S, 2.5))
    visit(evaluate_surface_point(c, (x - c).normalized(), e.S, e.P, e.cfg.metric));
  r.worst_residual = r.samples ? std::max(0.0, -worst) : 0.0;
  r.fitted = {{"min_H_minus_trace", r.samples ? worst : 0.0}, {"flagged", static_cast<double>(flagged)}};
  r.note = region_note(r.samples, "face-region");
  return finish(r, r.samples > 0 && worst >= -r.tolerance, r.samples ? "deficit at " + where : "no face samples");
}

// Fitted constants of the edge or vertex deficit bounds at lambda0 and
// 2 lambda0. The general form divides by lambda_k max(angle excess, 0) + 1;
// the hypothesis form divides by gamma lambda_k.
CheckRecord deficit_bound(CheckEnv& e, RegionKind kind, bool hypothesis_form) {
  CheckRecord r;
  const double window = e.tol(kind == RegionKind::E ? "surface.edge_deficit.ratio" : "surface.vertex_deficit.ratio", 1.3);
  r.tolerance = window;
  double fitted[2] = {0.0, 0.0}, hyp[2] = {0.0, 0.0};
  const bool hyp_ok = e.metric_hypotheses().pass;
  const double floor_rel = e.tol("surface.deficit.roundoff", 64.0 * std::numeric_limits<double>::epsilon());
  std::size_t floored = 0;
  const Vec c = chebyshev_center(e.P).center;
  for (int d = 0; d < 2; ++d) {
    const SmoothingSchedule S(e.S.gamma, e.S.lambda0 * (d ? 2.0 : 1.0));
    for (const Vec& x : e.band_probes(S, 1.0)) {
      const SurfaceSample s = evaluate_surface_point(c, (x - c).normalized(), S, e.P, e.cfg.metric);
      if (s.flagged || s.label.kind != kind) continue;
      const double lk = S.lambda(s.label.k);
      // Round-off of H and the trace norm, both of size up to lambda_k.
      const double deficit = s.deficit > floor_rel * std::max(std::abs(s.H), s.trace_norm) ? s.deficit : 0.0;
      if (deficit == 0.0 && s.deficit > 0.0) ++floored;
      const MetricJet mj = metric_jet(e.cfg.metric, s.x);
      double ex = std::max(0.0, excess(e.P, mj, s.label.j, s.label.k));
      if (kind == RegionKind::G)
        ex = std::max({ex, excess(e.P, mj, s.label.i, s.label.j), excess(e.P, mj, s.label.i, s.label.k)});
      fitted[d] = std::max(fitted[d], deficit / (lk * ex + 1.0));
      hyp[d] = std::max(hyp[d], deficit / (S.gamma * lk));
      ++r.samples;
    }
  }
  const double* used = hypothesis_form ? hyp : fitted;
  const double ratio = used[0] > 0 ? used[1] / used[0] : (used[1] > 0 ? std::numeric_limits<double>::infinity() : 1.0);
  r.worst_residual = ratio;
  r.fitted = {{"C_general_lambda0", fitted[0]}, {"C_general_2lambda0", fitted[1]}};
  if (hyp_ok) {
    r.fitted.emplace_back("C_gamma_lambda0", hyp[0]);
    r.fitted.emplace_back("C_gamma_2lambda0", hyp[1]);
  }
  r.fitted.emplace_back("ratio", ratio);
  r.fitted.emplace_back("roundoff_samples", static_cast<double>(floored));
  if (r.samples == 0) return finish(r, false, std::string("no ") + (kind == RegionKind::E ? "edge" : "vertex") + " samples");
  if (used[0] == 0.0 && used[1] == 0.0) {
    r.note = "deficit vanishes at both schedules";
    return finish(r, true);
  }
  if (ratio < 1.0 / window) r.note = "fitted constant shrinks under the doubling: the bound is not attained";
  return finish(r, ratio <= window, "fitted constant grows by " + fmt(ratio));
}

CheckRecord check_edge_deficit(CheckEnv& e) { return deficit_bound(e, RegionKind::E, false); }
CheckRecord check_vertex_deficit(CheckEnv& e) { return deficit_bound(e, RegionKind::G, true); }

CheckRecord check_morrey_decay(CheckEnv& e) {
  CheckRecord r;
  HeatmapGrid heat;
  const DecayTable t = sweep_gamma(e.cfg, e.cfg.sweep_gammas, &heat);
  e.decay = t;
  e.heatmap = heat;
  const double band = e.tol("surface.morrey_decay.noise", 0.10);
  r.tolerance = band;
  double worst = 0.0;
  std::size_t nodes = 0, excluded = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    nodes += t.rows[i].nodes;
    excluded += t.rows[i].excluded;
    if (i && t.rows[i - 1].sup > 0) worst = std::max(worst, t.rows[i].sup / t.rows[i - 1].sup - 1.0);
    else if (i && t.rows[i].sup > 0) worst = std::numeric_limits<double>::infinity();
  }
  r.samples = nodes;
  r.worst_residual = worst;
  r.fitted = {{"slope", t.slope_defined ? t.slope : std::numeric_limits<double>::quiet_NaN()},
              {"predicted_exponent", t.predicted_exponent}};
  for (const auto& row : t.rows) r.fitted.emplace_back("sup_gamma_" + fmt(row.gamma), row.sup);
  const double flagged_fraction = nodes ? static_cast<double>(excluded) / static_cast<double>(nodes) : 0.0;
  r.fitted.emplace_back("flagged_fraction", flagged_fraction);
  if (!t.slope_defined) r.note = "slope degenerate";
  if (flagged_fraction >= 1e-3) return finish(r, false, "too many flagged nodes");
  if (e.cfg.metric.family() == MetricFamily::Euclidean) {
    // The deficit vanishes identically: only the size matters, not the order of round-off.
    double mx = 0.0;
    for (const auto& row : t.rows) mx = std::max(mx, row.sup);
    r.worst_residual = mx;
    r.tolerance = e.tol("surface.morrey_decay.euclidean", 1e-8);
    r.note = "deficit vanishes identically";
    return finish(r, mx <= r.tolerance, "Euclidean deficit does not vanish");
  }
  return finish(r, worst <= band, "Morrey sup increases along the sweep");
}

CheckRecord check_morrey_refinement(CheckEnv& e) {
  CheckRecord r;
  const DirectionSet coarse_dirs = default_directions(e.P.dim(), e.cfg.morrey_level);
  const DirectionSet fine_dirs = default_directions(e.P.dim(), e.cfg.morrey_level + 1);
  const SurfaceMesh a = build_mesh(e.P, e.S, e.cfg.metric, coarse_dirs);
  const SurfaceMesh b = build_mesh(e.P, e.S, e.cfg.metric, fine_dirs);
  const auto centers = default_morrey_centers(a, e.seed_for("morreycenters"));
  const double sa =
      morrey_norm(a, e.cfg.sigma, centers, dyadic_radii(), e.P.q(), e.cfg.sigma_override).sup_value;
  const double sb =
      morrey_norm(b, e.cfg.sigma, centers, dyadic_radii(), e.P.q(), e.cfg.sigma_override).sup_value;
  r.samples = a.deficit_nodes.size() + b.deficit_nodes.size();
  r.tolerance = e.tol("surface.morrey_refinement.relative", 0.10);
  const double change = std::max(sa, sb) > 0 ? std::abs(sb - sa) / std::max(sa, sb) : 0.0;
  r.worst_residual = change;
  r.fitted = {{"sup_coarse", sa}, {"sup_fine", sb}};
  if (e.cfg.metric.family() == MetricFamily::Euclidean) {
    r.note = "deficit vanishes identically";
    return finish(r, std::max(sa, sb) <= 1e-8, "Euclidean deficit does not vanish");
  }
  return finish(r, change <= r.tolerance, "sup changes by " + fmt(change));
}

CheckRecord check_levelset_area(CheckEnv& e) {
  CheckRecord r;
  r.tolerance = e.tol("surface.levelset_area.relative", 0.02);
  AreaParams ap;
  ap.lines = e.cfg.samples.area_lines;
  Worst w;
  for (int m : {2, 3, 4}) {
    const Vec p = Vec::Constant(m, 0.2);
    const Vec nrm = Vec::Ones(m).normalized();
    auto f = [&](const Vec& x) { return nrm.dot(x - p); };
    ap.seed = e.seed_for("area") + static_cast<std::uint64_t>(m);
    const double r0 = 0.7;
    const AreaEstimate est = levelset_area_in_ball(f, p, r0, ap);
    w.update(std::abs(est.estimate / (ball_volume(m - 1) * std::pow(r0, m - 1)) - 1.0), "m=" + std::to_string(m));
    r.samples += est.lines;
  }
  // Cap of the unit sphere within distance r of one of its points: pi r^2.
  const double rr = 0.6;
  auto sphere = [](const Vec& x) { return x.norm() - 1.0; };
  ap.seed = e.seed_for("cap");
  const AreaEstimate cap = levelset_area_in_ball(sphere, Vec::Unit(3, 2), rr, ap);
  r.samples += cap.lines;
  const double cap_z = std::abs(cap.estimate - kPi * rr * rr) / std::max(cap.std_error, 1e-12);
  const bool cap_bound = cap.estimate <= levelset_area_constant(3) * rr * rr;
  bool rejects = false;
  try {
    levelset_area_in_ball([](const Vec& x) { return 1.0 - x.squaredNorm(); }, Vec::Zero(3), 2.0, ap);
  } catch (const NonConvexError&) {
    rejects = true;
  }
  r.worst_residual = w.value;
  r.fitted = {{"cap_estimate", cap.estimate}, {"cap_exact", kPi * rr * rr}, {"cap_z", cap_z},
              {"C3", levelset_area_constant(3)}};
  if (!cap_bound || cap_z > 4.0) return finish(r, false, "sphere cap estimate off");
  if (!rejects) return finish(r, false, "non-convex function not detected");
  return finish(r, w.value <= r.tolerance, "disc measure off for " + w.where);
}

struct BandSite {
  int i = -1, j = -1, k = -1;
  Vec p;
};

std::optional<BandSite> pair_site(const CheckEnv& e) {
  const Vec c = chebyshev_center(e.P).center;
  for (const auto& [j, k] : e.meeting_pairs()) {
    const Vec p = flat_point(e.P, {j, k}, c);
    if (e.P.contains(p, 1e-9)) return BandSite{-1, j, k, p};
  }
  return std::nullopt;
}

std::optional<BandSite> triple_site(const CheckEnv& e) {
  const auto pairs = e.meeting_pairs();
  auto meets = [&](int a, int b) { return std::find(pairs.begin(), pairs.end(), std::make_pair(a, b)) != pairs.end(); };
  const Vec c = chebyshev_center(e.P).center;
  for (int k = 2; k <= e.P.q(); ++k)
    for (int j = 1; j < k; ++j)
      for (int i = 0; i < j; ++i) {
        if (!meets(i, j) || !meets(i, k) || !meets(j, k)) continue;
        const Vec p = flat_point(e.P, {i, j, k}, c);
        if (e.P.contains(p, 1e-9)) return BandSite{i, j, k, p};
      }
  return std::nullopt;
}

CheckRecord check_band_area(CheckEnv& e) {
  CheckRecord r;
  const auto site = pair_site(e);
  if (!site) return not_applicable("no meeting pair");
  const int k = site->k;
  r.tolerance = e.tol("surface.band_area.relative", 0.25);
  AreaParams ap;
  ap.lines = e.cfg.samples.area_lines;
  ap.seed = e.seed_for("bandarea");
  const double g = e.S.gamma;
  const double l0 = std::max(1.01, 40.0 * std::pow(g, k));
  const double rad = 0.25;
  double a[2];
  for (int d = 0; d < 2; ++d) {
    const SmoothingSchedule S(g, l0 * (d ? 2.0 : 1.0));
    const AreaEstimate est = band_area_in_ball(e.P, S, k, site->p, rad, ap);
    a[d] = est.estimate;
    r.samples += est.lines;
  }
  const double ratio = a[0] > 0 ? a[1] / a[0] : 0.0;
  r.worst_residual = std::abs(ratio / 0.5 - 1.0);
  r.fitted = {{"area_lambda", a[0]}, {"area_2lambda", a[1]}, {"ratio", ratio},
              {"C_band", a[0] * SmoothingSchedule(g, l0).lambda(k) / std::pow(rad, e.P.dim() - 2)}};
  return finish(r, a[0] > 0 && r.worst_residual <= r.tolerance, "band area does not halve");
}

CheckRecord check_triple_band_area(CheckEnv& e) {
  CheckRecord r;
  const auto site = triple_site(e);
  if (!site) return not_applicable("no three faces meet");
  const int n = e.P.dim();
  AreaParams ap;
  ap.lines = 2 * e.cfg.samples.area_lines;
  ap.seed = e.seed_for("triplearea");
  const double window = e.tol("surface.triple_band_area.factor", 2.0);
  r.tolerance = window;
  // The ball shrinks with lambda0 so that it always holds the whole region.
  const double l0 = 12.0;
  const double g = e.S.gamma;
  struct Run {
    double gamma, lambda0;
  };
  const Run runs[3] = {{g, l0}, {g, 2 * l0}, {g * std::pow(2.0, -1.0 / site->k), l0}};
  double scaled[3];
  for (int d = 0; d < 3; ++d) {
    const SmoothingSchedule S(runs[d].gamma, runs[d].lambda0);
    const double rad = std::min(1.0, 12.0 / runs[d].lambda0);
    const AreaEstimate est = triple_band_area_in_ball(e.P, S, site->i, site->j, site->k, site->p, rad, ap);
    scaled[d] = est.estimate * S.lambda(site->k) * S.lambda0 / std::pow(rad, n - 3);
    r.samples += est.lines;
  }
  double worst = 1.0;
  for (int d = 1; d < 3; ++d) {
    const double q = scaled[0] > 0 ? scaled[d] / scaled[0] : 0.0;
    worst = std::max({worst, q, q > 0 ? 1.0 / q : std::numeric_limits<double>::infinity()});
  }
  r.worst_residual = worst;
  r.fitted = {{"C_base", scaled[0]}, {"C_double_lambda0", scaled[1]}, {"C_double_lambda_k", scaled[2]}};
  return finish(r, scaled[0] > 0 && worst <= window, "area does not scale with 1/(lambda_k lambda0)");
}

}  // namespace

const std::vector<RegisteredCheck>& registered_checks() {
  static const std::vector<RegisteredCheck> checks = {
      {{"polytope.assumptions", "standing-assumptions", false, true,
        "non-redundant faces and non-obtuse meeting angles, invariant under face order"},
       check_polytope_assumptions},
      {{"polytope.lambda_certificate", "lambda-constant", false, true,
        "sum of active weights bounded by Lambda times the norm of their combination"},
       check_lambda_certificate},
      {{"polytope.xi_certificate", "xi-constant", false, true, "wedge transversality with constant Xi"},
       check_xi_certificate},
      {{"polytope.delta_monotone", "xi-constant", false, true, "delta(eps) nondecreasing in eps"},
       check_delta_monotone},
      {{"eta.contract", "eta-kernel", false, false, "evenness, bounds, exactness outside the window, convexity"},
       check_eta},
      {{"smoothing.sandwich", "sandwich-bounds", false, true, "level-wise sandwich and monotone chain"},
       check_sandwich},
      {{"smoothing.global_bound", "smoothed-domain-inclusion", false, true,
        "global bound of the top level and the inclusion chain"},
       check_global_bound},
      {{"smoothing.hessian_bound", "hessian-bound", false, true, "PSD Hessian with eigenvalues at most C lambda_k"},
       check_hessian_bound},
      {{"smoothing.jet_fd", "smooth-max-recursion", false, true,
        "analytic gradient and Hessian against finite differences"},
       check_jet_fd},
      {{"smoothing.gradient_representation", "gradient-representation", false, true,
        "gradient as a convex combination of face normals with the support rule"},
       check_gradient_representation},
      {{"smoothing.gradient_lower_bound", "gradient-lower-bound", false, true,
        "gradient norm at least 1/Lambda near the level set"},
       check_gradient_lower_bound},
      {{"smoothing.transversality", "transversality", false, true, "wedge of smoothed and face gradients at least 1/Xi"},
       check_transversality},
      {{"metric.hypotheses", "metric-hypotheses", false, true, "mean-convex faces and angle comparison"},
       check_metric_hypotheses},
      {{"metric.conformal_angles", "metric-hypotheses", false, true, "conformal metrics preserve angles"},
       check_conformal_angles},
      {{"metric.mean_curvature_trace", "mean-curvature", false, true, "H equals the trace of II"},
       check_mean_curvature_trace},
      {{"metric.euclidean_normal", "euclidean-consistency", false, true,
        "Euclidean normal of the smoothed boundary from both recursions"},
       check_euclidean_normal},
      {{"metric.derivative_fd", "metric-derivatives", false, true, "analytic metric derivatives against differences"},
       check_metric_derivatives},
      {{"gaussmap.companion_normal", "normal-recursion", false, true,
        "angle recursion of the normal against direct normalization"},
       check_companion_normal},
      {{"gaussmap.convex_representation", "nhat-recursion", false, true,
        "map value in the cone of the supporting face normals"},
       check_convex_representation},
      {{"gaussmap.transversality", "nhat-transversality", false, true, "wedge of the map with later normals"},
       check_nhat_transversality},
      {{"gaussmap.lipschitz", "nhat-lipschitz", false, true, "fitted |dN| / lambda_k stable under lambda0 doubling"},
       check_lipschitz},
      {{"gaussmap.euclidean_consistency", "euclidean-consistency", false, true,
        "Euclidean map equals the unit normal, trace norm equals H"},
       check_euclidean_consistency},
      {{"gaussmap.angle_propagation", "angle-propagation", true, true,
        "two-sided angle bound at points of two slabs"},
       check_angle_propagation},
      {{"gaussmap.sine_ratio", "sine-ratio-bounds", false, false, "sine ratio gap sign and bound on a grid"},
       check_sine_ratio},
      {{"gaussmap.t_cot_t", "t-cot-t", false, false, "t cot t strictly decreasing"}, check_t_cot_t},
      {{"surface.mesh", "smoothed-boundary", false, true, "mesh samples on the level set, positive weights, refinement"},
       check_mesh},
      {{"surface.decomposition", "region-decomposition", false, true,
        "every boundary point gets a label whose inequalities hold"},
       check_decomposition},
      {{"surface.face_deficit", "face-deficit", true, true, "H minus trace norm nonnegative on face regions"},
       check_face_deficit},
      {{"surface.edge_deficit", "edge-deficit", false, true, "fitted edge deficit constant under lambda0 doubling"},
       check_edge_deficit},
      {{"surface.vertex_deficit", "vertex-deficit", true, true,
        "fitted vertex deficit constant under lambda0 doubling"},
       check_vertex_deficit},
      {{"surface.morrey_decay", "morrey-decay", true, true, "Morrey sup nonincreasing along the gamma sweep"},
       check_morrey_decay},
      {{"surface.morrey_refinement", "morrey-decay", true, true, "Morrey sup stable under one mesh refinement"},
       check_morrey_refinement},
      {{"surface.levelset_area", "levelset-area", false, false, "Crofton area of flat and spherical pieces"},
       check_levelset_area},
      {{"surface.band_area", "band-area", false, true, "band area halves when lambda_k doubles"}, check_band_area},
      {{"surface.triple_band_area", "triple-band-area", false, true,
        "triple band area scales as 1/(lambda_k lambda0)"},
       check_triple_band_area},
  };
  return checks;
}

double nnls_residual(const Mat& B, const Vec& y) {
  const auto m = B.cols();
  if (m > 20) throw InternalError("nnls_residual: too many columns for support enumeration");
  double best = y.norm();
  for (long mask = 1; mask < (1L << m); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1L << i)) idx.push_back(i);
    Mat Bs(B.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) Bs.col(static_cast<Eigen::Index>(c)) = B.col(idx[c]);
    const Vec a = Bs.colPivHouseholderQr().solve(y);
    if (a.minCoeff() < -1e-12) continue;
    best = std::min(best, (Bs * a - y).norm());
  }
  return best;
}

Vec flat_point(const Polytope& P, const std::vector<int>& idx, const Vec& c) {
  Mat N(static_cast<Eigen::Index>(idx.size()), P.dim());
  Vec u(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    N.row(static_cast<Eigen::Index>(r)) = P.face(idx[r]).normal.transpose();
    u[static_cast<Eigen::Index>(r)] = P.face(idx[r])(c);
  }
  return c - N.transpose() * (N * N.transpose()).ldlt().solve(u);
}

}  // namespace polysmooth::detail
