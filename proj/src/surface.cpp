#include "polysmooth/surface.hpp"

#include "polysmooth/quadrature.hpp"
#include "polysmooth/sampling.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <boost/random/sobol.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

namespace polysmooth {

namespace {

// Values of the chain at x: uhat_m, u_m, gap_m = uhat_{m-1} - u_m and 1/lambda_m.
struct LevelValues {
  std::vector<double> uhat, u, gap, inv;
};

LevelValues level_values(const Vec& x, const SmoothingSchedule& S, const Polytope& P, int upto, const EtaKernel& K) {
  LevelValues lv;
  const auto m1 = static_cast<std::size_t>(upto + 1);
  lv.uhat.resize(m1);
  lv.u.resize(m1);
  lv.gap.assign(m1, 0.0);
  lv.inv.resize(m1);
  lv.u[0] = P.face(0)(x);
  lv.uhat[0] = lv.u[0];
  lv.inv[0] = 1.0 / S.lambda(0);
  for (int m = 1; m <= upto; ++m) {
    const auto i = static_cast<std::size_t>(m);
    const double lam = S.lambda(m);
    lv.u[i] = P.face(m)(x);
    lv.inv[i] = 1.0 / lam;
    lv.gap[i] = lv.uhat[i - 1] - lv.u[i];
    lv.uhat[i] = 0.5 * (lv.uhat[i - 1] + lv.u[i] + K.value(lam * lv.gap[i]) / lam);
  }
  return lv;
}

// Root of a function increasing through zero on t > 0, given value and slope.
double ray_root(const std::function<std::pair<double, double>(double)>& fs, double t_guess, double tol,
                const std::string& where) {
  auto f = [&](double t) { return fs(t).first; };
  if (!(f(0.0) < 0.0)) throw DomainError(where + ": base point is not inside the level set");
  double lo = 0.0, hi = -1.0;
  if (t_guess > 0.0) {
    const double a = 0.98 * t_guess, b = 1.02 * t_guess;
    if (f(a) < 0.0 && f(b) > 0.0) {
      lo = a;
      hi = b;
    }
  }
  if (hi < 0.0) {
    hi = 1.0;
    int it = 0;
    while (!(f(hi) > 0.0)) {
      lo = hi;
      hi *= 2.0;
      if (++it > 80) throw InternalError(where + ": ray does not leave the level set");
    }
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const auto [v, s] = fs(t);
    if (v == 0.0) return t;
    (v > 0.0 ? hi : lo) = t;
    if (std::abs(v) <= 0.01 * tol || hi - lo <= 4e-16 * hi) break;
    double tn = s > 0.0 ? t - v / s : -1.0;
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    t = tn;
  }
  if (std::abs(fs(t).first) > tol) throw InternalError(where + ": root not resolved to tolerance");
  return t;
}

Vec cross3(const Vec& a, const Vec& b) {
  const Eigen::Vector3d c = Eigen::Vector3d(a).cross(Eigen::Vector3d(b));
  return Vec(c);
}

double spherical_triangle_area(const Vec& a, const Vec& b, const Vec& c) {
  const double num = std::abs(a.dot(cross3(b, c)));
  const double den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
  return 2.0 * std::atan2(num, den);
}

bool in_slab(double v, double lo, double slack) { return v >= lo - slack && v <= slack; }

}  // namespace

Vec interior_center(const Polytope& P) { return chebyshev_center(P).center; }

RadialHit radial_intersect(const Vec& p0, const Vec& w, const SmoothingSchedule& S, const Polytope& P,
                           double t_guess, const EtaKernel& K) {
  auto fs = [&](double t) {
    const Vec x = p0 + t * w;
    const auto chain = smooth_chain<double>(P, S, x, -1, false, K);
    return std::make_pair(chain.back().value, chain.back().gradient.dot(w));
  };
  RadialHit hit;
  hit.t = ray_root(fs, t_guess, 1e-12, "radial_intersect");
  hit.x = p0 + hit.t * w;
  hit.slope = fs(hit.t).second;
  if (!(hit.slope > 0.0)) throw InternalError("radial_intersect: nonpositive slope at the root");
  return hit;
}

DirectionSet icosphere(int level) {
  if (level < 0) throw ConfigError("icosphere: level must be nonnegative");
  const double ph = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec> v;
  auto add = [&](double a, double b, double c) {
    Vec p(3);
    p << a, b, c;
    v.push_back(p.normalized());
  };
  add(-1, ph, 0), add(1, ph, 0), add(-1, -ph, 0), add(1, -ph, 0);
  add(0, -1, ph), add(0, 1, ph), add(0, -1, -ph), add(0, 1, -ph);
  add(ph, 0, -1), add(ph, 0, 1), add(-ph, 0, -1), add(-ph, 0, 1);
  std::vector<std::array<int, 3>> tri = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      const auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(tri.size() * 4);
    for (const auto& t : tri) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    tri = std::move(next);
  }
  DirectionSet d;
  d.weights.assign(v.size(), 0.0);
  for (const auto& t : tri) {
    const double area = spherical_triangle_area(v[static_cast<std::size_t>(t[0])], v[static_cast<std::size_t>(t[1])],
                                                v[static_cast<std::size_t>(t[2])]);
    for (int c : t) d.weights[static_cast<std::size_t>(c)] += area / 3.0;
  }
  d.dirs = std::move(v);
  d.triangles = std::move(tri);
  return d;
}

DirectionSet circle_directions(std::size_t count) {
  if (count < 3) throw ConfigError("circle_directions: need at least 3 directions");
  DirectionSet d;
  for (std::size_t i = 0; i < count; ++i) {
    const double a = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(count);
    Vec p(2);
    p << std::cos(a), std::sin(a);
    d.dirs.push_back(p);
    d.weights.push_back(2.0 * kPi / static_cast<double>(count));
  }
  return d;
}

DirectionSet sobol_directions(int n, std::size_t count) {
  if (n < 2) throw ConfigError("sobol_directions: dimension must be at least 2");
  boost::random::sobol eng(static_cast<std::size_t>(n));
  eng.discard(static_cast<std::uintmax_t>(n));  // skip the origin
  DirectionSet d;
  const double w = sphere_area(n) / static_cast<double>(count);
  while (d.dirs.size() < count) {
    Vec g(n);
    for (int i = 0; i < n; ++i) {
      const double u = (static_cast<double>(eng()) + 0.5) * 0x1.0p-64;
      g[i] = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
    }
    const double nrm = g.norm();
    if (!(nrm > 1e-12)) continue;
    d.dirs.push_back(g / nrm);
    d.weights.push_back(w);
  }
  return d;
}

DirectionSet default_directions(int n, int level) {
  if (n == 2) return circle_directions(static_cast<std::size_t>(8) << level);
  if (n == 3) return icosphere(level);
  return sobol_directions(n, 10 * (static_cast<std::size_t>(1) << (2 * level)) + 2);
}

double sphere_area(int n) { return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n); }
double ball_volume(int m) { return std::pow(kPi, 0.5 * m) / std::tgamma(0.5 * m + 1.0); }

double radial_surface_area(const std::function<double(const Vec&)>& f, const std::function<Vec(const Vec&)>& grad,
                           const Vec& p0, const DirectionSet& dirs) {
  const auto n = p0.size();
  double area = 0.0;
  for (std::size_t i = 0; i < dirs.dirs.size(); ++i) {
    const Vec& w = dirs.dirs[i];
    auto fs = [&](double t) {
      const Vec x = p0 + t * w;
      return std::make_pair(f(x), grad(x).dot(w));
    };
    const double t = ray_root(fs, -1.0, 1e-12, "radial_surface_area");
    const Vec gr = grad(p0 + t * w);
    area += std::pow(t, static_cast<double>(n - 1)) * gr.norm() / gr.dot(w) * dirs.weights[i];
  }
  return area;
}

std::vector<Vec> band_surface_points(const Polytope& P, const SmoothingSchedule& S, const Vec& p0, const Vec& a,
                                     const Vec& b, int k, int count, double spread, const EtaKernel& K) {
  if (k < 1 || k > P.q()) throw DomainError("band_surface_points: level out of range");
  auto point = [&](double s) {
    const Vec w = ((1 - s) * a + s * b).normalized();
    return radial_intersect(p0, w, S, P, -1.0, K).x;
  };
  auto gap = [&](const Vec& x) { return uhat_value<double>(P, S, x, k - 1, K) - P.face(k)(x); };
  const double g0 = gap(point(0.0)), g1 = gap(point(1.0));
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    const double target = spread * (2.0 * (i + 0.5) / count - 1.0) / S.lambda(k);
    if (!(g0 > target && g1 < target)) continue;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (gap(point(mid)) > target ? lo : hi) = mid;
    }
    out.push_back(point(0.5 * (lo + hi)));
  }
  return out;
}

std::string to_string(const RegionLabel& l) {
  switch (l.kind) {
    case RegionKind::F:
      return "F(" + std::to_string(l.k) + ")";
    case RegionKind::E:
      return "E(" + std::to_string(l.j) + "," + std::to_string(l.k) + ")";
    case RegionKind::G:
      return "G(" + std::to_string(l.i) + "," + std::to_string(l.j) + "," + std::to_string(l.k) + ")";
  }
  return "?";
}

bool label_holds(const RegionLabel& L, const Vec& x, const SmoothingSchedule& S, const Polytope& P, std::string* why,
                 const EtaKernel& K) {
  const int q = P.q();
  const LevelValues lv = level_values(x, S, P, q, K);
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  auto at = [](const std::vector<double>& v, int i) { return v[static_cast<std::size_t>(i)]; };
  const double top = at(lv.uhat, q);
  if (std::abs(top) > kSurfaceTol) return fail("point is not on the smoothed boundary");
  // The definitions assume uhat_q(x) = 0 exactly; the residual widens the slack.
  const double slack = kSlabSlack + std::abs(top);
  auto above = [&](int m) { return at(lv.gap, m) > at(lv.inv, m); };
  auto above_range = [&](int a, int b, std::string& bad) {
    for (int m = a; m <= b; ++m)
      if (!above(m)) {
        bad = "level " + std::to_string(m) + " is not above its band";
        return false;
      }
    return true;
  };
  std::string bad;
  const int k = L.k;
  if (k < 0 || k > q) return fail("index out of range");
  if (!above_range(k + 1, q, bad)) return fail(bad);
  if (L.kind == RegionKind::F) {
    if (k >= 1 && !(at(lv.gap, k) < -at(lv.inv, k))) return fail("level k is not below its band");
    return true;
  }
  const int j = L.j;
  if (j < 0 || j >= k) return fail("index out of range");
  const double ik = at(lv.inv, k);
  if (!in_slab(at(lv.uhat, k - 1), -2.0 * ik, slack)) return fail("uhat_{k-1} outside [-2/l_k, 0]");
  if (!in_slab(at(lv.u, k), -2.0 * ik, slack)) return fail("u_k outside [-2/l_k, 0]");
  if (L.kind == RegionKind::E) {
    if (j == 0) {
      if (!above_range(1, k - 1, bad)) return fail(bad);
      if (!in_slab(at(lv.u, 0), -2.0 * ik, slack)) return fail("u_0 outside [-2/l_k, 0]");
      return true;
    }
    if (!above_range(j + 1, k - 1, bad)) return fail(bad);
    if (!in_slab(at(lv.u, j), -2.0 * ik, slack)) return fail("u_j outside [-2/l_k, 0]");
    if (!(at(lv.gap, j) < -at(lv.inv, j))) return fail("level j is not below its band");
    return true;
  }
  const int i = L.i;
  if (i < 0 || i >= j) return fail("index out of range");
  if (!above_range(j + 1, k - 1, bad)) return fail(bad);
  if (!in_slab(at(lv.u, j), -4.0 * at(lv.inv, j), slack)) return fail("u_j outside [-4/l_j, 0]");
  if (!in_slab(at(lv.u, i), -6.0 * at(lv.inv, i), slack)) return fail("u_i outside [-6/l_i, 0]");
  return true;
}

RegionLabel classify(const Vec& x, const SmoothingSchedule& S, const Polytope& P, const EtaKernel& K) {
  const int q = P.q();
  const LevelValues lv = level_values(x, S, P, q, K);
  if (std::abs(lv.uhat.back()) > kSurfaceTol)
    throw DomainError("classify: point " + format_point(x) + " is not on the smoothed boundary");
  auto gap = [&](int m) { return lv.gap[static_cast<std::size_t>(m)]; };
  auto inv = [&](int m) { return lv.inv[static_cast<std::size_t>(m)]; };
  // Largest m in [1, top] whose level is not above its band, or 0.
  auto last_not_above = [&](int top) {
    for (int m = top; m >= 1; --m)
      if (!(gap(m) > inv(m))) return m;
    return 0;
  };
  RegionLabel L;
  const int k = last_not_above(q);
  L.k = k;
  if (k == 0 || gap(k) < -inv(k)) {
    L.kind = RegionKind::F;
  } else {
    const int j = last_not_above(k - 1);
    L.j = j;
    if (j == 0 || gap(j) < -inv(j)) {
      L.kind = RegionKind::E;
    } else {
      L.kind = RegionKind::G;
      L.i = last_not_above(j - 1);
    }
  }
  std::string why;
  if (!label_holds(L, x, S, P, &why, K))
    throw DomainError("classify: label " + to_string(L) + " fails its re-check at " + format_point(x) + ": " + why);
  return L;
}

TraceNorm dnhat_trace_norm(const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                           const EtaKernel& K) {
  TraceNorm r;
  try {
    const auto chain = smooth_chain<double>(P, S, x, -1, false, K);
    const MetricJet mj = metric_jet(metric, x);
    const Mat E = tangent_frame(g_unit_normal(chain.back().gradient, mj), mj);
    const Mat J = nhat_jacobian(P.q(), x, S, P, metric, K);
    r.value = Eigen::JacobiSVD<Mat>(J * E).singularValues().sum();
    r.flagged = !std::isfinite(r.value);
  } catch (const DomainError&) {
    r.flagged = true;
  } catch (const DegeneracyError&) {
    r.flagged = true;
  } catch (const VanishingGradientError&) {
    r.flagged = true;
  }
  return r;
}

TraceNorm dnhat_trace_norm_fd(const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                              double h, const EtaKernel& K) {
  TraceNorm r;
  try {
    const int q = P.q();
    const auto chain = smooth_chain<double>(P, S, x, -1, false, K);
    const MetricJet mj = metric_jet(metric, x);
    const Mat E = tangent_frame(g_unit_normal(chain.back().gradient, mj), mj);
    const Vec N0 = nhat_eval(q, x, S, P, metric, K).N;
    const Mat proj = Mat::Identity(x.size(), x.size()) - N0 * N0.transpose();
    auto diff = [&](double step) {
      Mat D(x.size(), E.cols());
      for (Eigen::Index b = 0; b < E.cols(); ++b) {
        const Vec e = step * E.col(b);
        D.col(b) = (nhat_eval(q, Vec(x + e), S, P, metric, K).N - nhat_eval(q, Vec(x - e), S, P, metric, K).N) /
                   (2.0 * step);
      }
      return Mat(proj * D);
    };
    const Mat D1 = diff(h), D2 = diff(0.5 * h);
    // Relative difference with a unit floor, so flat pieces compare absolutely.
    r.richardson_gap = (D1 - D2).norm() / std::max(1.0, D2.norm());
    r.flagged = r.richardson_gap > 1e-3;
    r.value = Eigen::JacobiSVD<Mat>((4.0 * D2 - D1) / 3.0).singularValues().sum();
    if (!std::isfinite(r.value)) r.flagged = true;
  } catch (const DomainError&) {
    r.flagged = true;
  } catch (const DegeneracyError&) {
    r.flagged = true;
  }
  return r;
}

AreaDensity area_density(const SurfaceSample& s, const SmoothingSchedule& S, const Polytope& P,
                         const MetricField& metric, const EtaKernel& K) {
  const auto n = s.x.size();
  const Vec gr = smooth_chain<double>(P, S, s.x, -1, false, K).back().gradient;
  AreaDensity d;
  d.euclidean = std::pow(s.t, static_cast<double>(n - 1)) * gr.norm() / gr.dot(s.omega);
  const Eigen::HouseholderQR<Mat> qr(gr);
  const Mat F = (qr.householderQ() * Mat::Identity(n, n)).rightCols(n - 1);
  const Mat gram = F.transpose() * metric.g<double>(s.x) * F;
  d.g = d.euclidean * std::sqrt(gram.determinant());
  return d;
}

SurfaceSample evaluate_surface_point(const Vec& p0, const Vec& w, const SmoothingSchedule& S, const Polytope& P,
                                     const MetricField& metric, double t_guess, const EtaKernel& K) {
  const int q = P.q();
  const auto n = p0.size();
  const RadialHit hit = radial_intersect(p0, w, S, P, t_guess, K);
  SurfaceSample s;
  s.omega = w;
  s.t = hit.t;
  s.x = hit.x;
  const LevelValues lv = level_values(s.x, S, P, q, K);
  s.gaps.assign(lv.gap.begin() + 1, lv.gap.end());
  s.label = classify(s.x, S, P, K);
  const SmoothJet<double> jet = uhat_jet(q, s.x, S, P, K);
  const MetricJet mj = metric_jet(metric, s.x);
  s.nu = g_unit_normal(jet.gradient, mj);
  s.H = level_set_mean_curvature(jet, mj);
  s.density = area_density(s, S, P, metric, K);
  const TraceNorm tn = dnhat_trace_norm(s.x, S, P, metric, K);
  s.flagged = tn.flagged;
  s.trace_norm = tn.value;
  if (!s.flagged) {
    s.N = nhat_eval(q, s.x, S, P, metric, K).N;
    s.deficit = std::max(s.trace_norm - s.H, 0.0);
  } else {
    s.N = Vec::Zero(n);
  }
  return s;
}

namespace {

// Integrates the deficit over one direction triangle crossed by a transition
// band. Lines parallel to the edge most transverse to the finest band are
// split at the band edges found by regula falsi, and Gauss rules are applied
// on each piece; the outer parameter is split the same way along the median.
class BandCell {
 public:
  BandCell(const Polytope& P, const SmoothingSchedule& S, const MetricField& metric, const Vec& p0,
           const MeshOptions& opt, const EtaKernel& K)
      : P_(P), S_(S), metric_(metric), p0_(p0), opt_(opt), K_(K),
        outer_(gauss_legendre(opt.outer_points)), inner_(gauss_legendre(opt.inner_points)) {}

  void integrate(const std::array<const SurfaceSample*, 3>& v, std::vector<QuadNode>& out, double& area_g) {
    const int q = P_.q();
    // Pick the apex opposite the edge along which the finest crossing band
    // varies most.
    int apex = 0;
    double best = -1.0;
    for (int a = 0; a < 3; ++a) {
      const SurfaceSample& e1 = *v[static_cast<std::size_t>((a + 1) % 3)];
      const SurfaceSample& e2 = *v[static_cast<std::size_t>((a + 2) % 3)];
      double score = 0.0;
      for (int m = 1; m <= q; ++m) {
        const auto i = static_cast<std::size_t>(m - 1);
        score = std::max(score, S_.lambda(m) * std::abs(e2.gaps[i] - e1.gaps[i]));
      }
      if (score > best) {
        best = score;
        apex = a;
      }
    }
    o_ = v[static_cast<std::size_t>(apex)];
    e1_ = v[static_cast<std::size_t>((apex + 1) % 3)];
    e2_ = v[static_cast<std::size_t>((apex + 2) % 3)];
    const Vec A = o_->omega, B = e1_->omega, C = e2_->omega;
    const Vec cr = cross3(Vec(B - A), Vec(C - A));
    flat_area2_ = cr.norm();
    normal_ = cr / flat_area2_;

    auto median = [&](double u) { return Vec(A + u * (B - A) + 0.5 * u * (C - B)); };
    Probe m0 = probe(median(0.0), o_->t), m1 = probe(median(1.0), 0.5 * (e1_->t + e2_->t));
    const auto ucuts = cuts(median, 0.0, 1.0, m0, m1);
    for (std::size_t s = 0; s + 1 < ucuts.size(); ++s) {
      const double ua = ucuts[s], ub = ucuts[s + 1];
      for (std::size_t g = 0; g < outer_.nodes.size(); ++g) {
        const double u = ua + 0.5 * (ub - ua) * (outer_.nodes[g] + 1.0);
        const double wu = 0.5 * (ub - ua) * outer_.weights[g];
        auto line = [&](double vv) { return Vec(A + u * (B - A) + u * vv * (C - B)); };
        const double tg = o_->t + u * (0.5 * (e1_->t + e2_->t) - o_->t);
        Probe l0 = probe(line(0.0), tg), l1 = probe(line(1.0), tg);
        const auto vcuts = cuts(line, 0.0, 1.0, l0, l1);
        for (std::size_t r = 0; r + 1 < vcuts.size(); ++r) {
          const double va = vcuts[r], vb = vcuts[r + 1];
          for (std::size_t h = 0; h < inner_.nodes.size(); ++h) {
            const double vv = va + 0.5 * (vb - va) * (inner_.nodes[h] + 1.0);
            const double wv = 0.5 * (vb - va) * inner_.weights[h];
            const Vec p = line(vv);
            const double pn = p.norm();
            const double dw = std::abs(p.dot(normal_)) / (pn * pn * pn) * flat_area2_ * u * wu * wv;
            const SurfaceSample s = evaluate_surface_point(p0_, Vec(p / pn), S_, P_, metric_, tg, K_);
            area_g += dw * s.density.g;
            QuadNode node;
            node.x = s.x;
            node.flagged = s.flagged;
            node.deficit = s.deficit;
            node.weight = dw * s.density.g;
            if (node.flagged || node.deficit > 0.0) out.push_back(std::move(node));
          }
        }
      }
    }
  }

 private:
  struct Probe {
    double t = 0.0;
    std::vector<double> gap;
  };

  Probe probe(const Vec& p, double t_guess) {
    const Vec w = p.normalized();
    const RadialHit hit = radial_intersect(p0_, w, S_, P_, t_guess, K_);
    const LevelValues lv = level_values(hit.x, S_, P_, P_.q(), K_);
    return {hit.t, lv.gap};
  }

  // Sorted cut points in [a, b]: a, b and every crossing of a band edge
  // between the two end probes.
  std::vector<double> cuts(const std::function<Vec(double)>& path, double a, double b, const Probe& pa,
                           const Probe& pb) {
    std::vector<double> out = {a, b};
    const int q = P_.q();
    for (int m = 1; m <= q; ++m) {
      const auto i = static_cast<std::size_t>(m);
      const double inv = 1.0 / S_.lambda(m);
      for (double tau : {-inv, inv}) {
        const double fa = pa.gap[i] - tau, fb = pb.gap[i] - tau;
        if (!(fa * fb < 0.0)) continue;
        // Illinois regula falsi on s -> gap_m(s) - tau.
        double sa = a, sb = b, ga = fa, gb = fb, s = a;
        int side = 0;
        for (int it = 0; it < 60; ++it) {
          s = (sa * gb - sb * ga) / (gb - ga);
          const Probe pr = probe(path(s), pa.t + (s - a) / (b - a) * (pb.t - pa.t));
          const double gs = pr.gap[i] - tau;
          if (std::abs(gs) <= 1e-4 * inv || sb - sa <= 1e-15) break;
          if (gs * gb > 0.0) {
            sb = s;
            gb = gs;
            if (side == -1) ga *= 0.5;
            side = -1;
          } else {
            sa = s;
            ga = gs;
            if (side == 1) gb *= 0.5;
            side = 1;
          }
        }
        out.push_back(s);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  const Polytope& P_;
  const SmoothingSchedule& S_;
  const MetricField& metric_;
  const Vec& p0_;
  const MeshOptions& opt_;
  const EtaKernel& K_;
  GaussRule outer_, inner_;
  const SurfaceSample *o_ = nullptr, *e1_ = nullptr, *e2_ = nullptr;
  double flat_area2_ = 0.0;
  Vec normal_;
};

}  // namespace

SurfaceMesh build_mesh(const Polytope& P, const SmoothingSchedule& S, const MetricField& metric,
                       const DirectionSet& dirs, const MeshOptions& opt, const EtaKernel& K) {
  S.validate();
  const int n = P.dim();
  if (dirs.dim() != n) throw ConfigError("build_mesh: direction dimension does not match the polytope");
  if (metric.dim() != n) throw ConfigError("build_mesh: metric dimension does not match the polytope");
  SurfaceMesh mesh;
  mesh.center = interior_center(P);
  if (!(uhat_value<double>(P, S, mesh.center, -1, K) < 0.0))
    throw AssumptionError("build_mesh: interior centre is not inside the smoothed domain");
  mesh.samples.reserve(dirs.dirs.size());
  for (std::size_t i = 0; i < dirs.dirs.size(); ++i) {
    SurfaceSample s = evaluate_surface_point(mesh.center, dirs.dirs[i], S, P, metric, -1.0, K);
    s.euclidean_weight = s.density.euclidean * dirs.weights[i];
    s.weight = s.density.g * dirs.weights[i];
    mesh.total_area += s.weight;
    mesh.euclidean_area += s.euclidean_weight;
    if (s.flagged) ++mesh.flagged;
    mesh.samples.push_back(std::move(s));
  }
  mesh.triangles = dirs.triangles;

  const bool refine = opt.band_resolved && n == 3 && !dirs.triangles.empty() && P.q() >= 1;
  std::vector<double> offband(mesh.samples.size(), 0.0);
  if (!refine) {
    for (std::size_t i = 0; i < mesh.samples.size(); ++i) offband[i] = mesh.samples[i].weight;
  } else {
    BandCell cell(P, S, metric, mesh.center, opt, K);
    for (const auto& t : dirs.triangles) {
      std::array<const SurfaceSample*, 3> v;
      for (int c = 0; c < 3; ++c) v[static_cast<std::size_t>(c)] = &mesh.samples[static_cast<std::size_t>(t[static_cast<std::size_t>(c)])];
      bool cut = false;
      for (int m = 1; m <= P.q() && !cut; ++m) {
        const auto i = static_cast<std::size_t>(m - 1);
        const double inv = 1.0 / S.lambda(m);
        const double lo = std::min({v[0]->gaps[i], v[1]->gaps[i], v[2]->gaps[i]});
        const double hi = std::max({v[0]->gaps[i], v[1]->gaps[i], v[2]->gaps[i]});
        cut = lo <= inv && hi >= -inv;
      }
      if (!cut) {
        const double area = spherical_triangle_area(v[0]->omega, v[1]->omega, v[2]->omega);
        for (int c = 0; c < 3; ++c) {
          const auto id = static_cast<std::size_t>(t[static_cast<std::size_t>(c)]);
          offband[id] += area / 3.0 * mesh.samples[id].density.g;
        }
        continue;
      }
      ++mesh.band_cells;
      cell.integrate(v, mesh.deficit_nodes, mesh.resolved_area);
    }
  }
  for (std::size_t i = 0; i < mesh.samples.size(); ++i) {
    const SurfaceSample& s = mesh.samples[i];
    mesh.resolved_area += offband[i];
    if (offband[i] > 0.0 && (s.flagged || s.deficit > 0.0)) mesh.deficit_nodes.push_back({s.x, s.deficit, offband[i], s.flagged});
  }
  return mesh;
}

bool sigma_admissible(double sigma, int q) {
  if (!(sigma > 1.0)) return false;
  if (q <= 1) return true;
  return sigma < static_cast<double>(q) / static_cast<double>(q - 1);
}

std::vector<double> dyadic_radii(int levels) {
  std::vector<double> r;
  for (int l = 0; l <= levels; ++l) r.push_back(std::ldexp(1.0, -l));
  return r;
}

std::vector<Vec> default_morrey_centers(const SurfaceMesh& mesh, std::uint64_t seed, std::size_t stride,
                                        std::size_t extra) {
  std::vector<Vec> c;
  if (mesh.samples.empty()) return c;
  const auto n = mesh.center.size();
  Vec lo = mesh.samples.front().x, hi = lo;
  for (std::size_t i = 0; i < mesh.samples.size(); ++i) {
    lo = lo.cwiseMin(mesh.samples[i].x);
    hi = hi.cwiseMax(mesh.samples[i].x);
    if (i % stride == 0) c.push_back(mesh.samples[i].x);
  }
  Rng rng(seed);
  for (std::size_t e = 0; e < extra; ++e) {
    Vec p(n);
    for (Eigen::Index d = 0; d < n; ++d) p[d] = rng.uniform(lo[d], hi[d]);
    c.push_back(p);
  }
  return c;
}

MorreyEstimate morrey_norm(const SurfaceMesh& mesh, double sigma, const std::vector<Vec>& centers,
                           const std::vector<double>& radii, int q, bool override_sigma) {
  if (!override_sigma && !sigma_admissible(sigma, q))
    throw ConfigError("morrey_norm: sigma " + std::to_string(sigma) + " outside the admissible interval");
  for (double r : radii)
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("morrey_norm: radii must lie in (0, 1]");
  MorreyEstimate est;
  est.sigma = sigma;
  const double n = static_cast<double>(mesh.center.size());
  std::vector<const QuadNode*> active;
  for (const QuadNode& node : mesh.deficit_nodes) {
    if (node.flagged) {
      ++est.excluded_flagged;
      continue;
    }
    if (node.deficit > 0.0) active.push_back(&node);
  }
  std::vector<double> powered(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) powered[a] = std::pow(active[a]->deficit, sigma) * active[a]->weight;
  for (const Vec& p : centers)
    for (double r : radii) {
      double sum = 0.0;
      for (std::size_t a = 0; a < active.size(); ++a)
        if ((active[a]->x - p).norm() < r) sum += powered[a];
      MorreyRow row{p, r, std::pow(r, sigma + 1.0 - n) * sum};
      if (row.value > est.sup_value || est.rows.empty()) {
        est.sup_value = std::max(est.sup_value, row.value);
        est.sup_row = est.rows.size();
      }
      est.rows.push_back(std::move(row));
    }
  return est;
}

double levelset_area_constant(int m) {
  const double mean_abs_cos = std::tgamma(0.5 * m) / (std::sqrt(kPi) * std::tgamma(0.5 * (m + 1)));
  return 2.0 * ball_volume(m - 1) / mean_abs_cos;
}

AreaEstimate levelset_area_in_ball(const std::function<double(const Vec&)>& f, const Vec& p, double r,
                                   const AreaParams& params, const std::function<bool(const Vec&)>& keep) {
  const auto m = static_cast<int>(p.size());
  if (m < 2) throw ConfigError("levelset_area_in_ball: dimension must be at least 2");
  if (!(r > 0.0)) throw ConfigError("levelset_area_in_ball: radius must be positive");
  Rng rng(params.seed);
  auto in_ball = [&]() {
    return Vec(p + r * std::pow(rng.uniform(), 1.0 / m) * rng.unit_vector(m));
  };
  for (std::size_t c = 0; c < params.convexity_checks; ++c) {
    const Vec a = in_ball(), b = in_ball();
    const double fa = f(a), fb = f(b), fm = f(Vec(0.5 * (a + b)));
    if (fm > 0.5 * (fa + fb) + 1e-12 * (1.0 + std::abs(fa) + std::abs(fb)))
      throw NonConvexError("levelset_area_in_ball: midpoint convexity fails between " + format_point(a) + " and " +
                           format_point(b));
  }
  const double mean_abs_cos = std::tgamma(0.5 * m) / (std::sqrt(kPi) * std::tgamma(0.5 * (m + 1)));
  const double disc = ball_volume(m - 1) * std::pow(r, m - 1);
  const double tol = 1e-13 * r;
  constexpr double kInvPhi = 0.6180339887498949;
  double sum = 0.0, sum2 = 0.0;
  AreaEstimate est;
  est.lines = params.lines;
  for (std::size_t l = 0; l < params.lines; ++l) {
    const Vec w = rng.unit_vector(m);
    Vec z = rng.unit_vector(m);
    z -= z.dot(w) * w;
    const double zn = z.norm();
    if (zn < 1e-12) {
      --l;
      continue;
    }
    z /= zn;
    const double rho = r * std::pow(rng.uniform(), 1.0 / (m - 1));
    const double half = std::sqrt(std::max(r * r - rho * rho, 0.0));
    const Vec base = p + rho * z;
    auto g = [&](double s) { return f(Vec(base + s * w)); };
    const double ga = g(-half), gb = g(half);
    // Golden-section minimum of the convex restriction.
    double a = -half, b = half;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double gc = g(c), gd = g(d);
    while (b - a > tol) {
      if (gc < gd) {
        b = d;
        d = c;
        gd = gc;
        c = b - kInvPhi * (b - a);
        gc = g(c);
      } else {
        a = c;
        c = d;
        gc = gd;
        d = a + kInvPhi * (b - a);
        gd = g(d);
      }
    }
    const double smin = 0.5 * (a + b);
    const double gmin = g(smin);
    int count = 0;
    if (gmin < 0.0) {
      auto root = [&](double neg, double pos) {
        while (std::abs(pos - neg) > tol) {
          const double mid = 0.5 * (neg + pos);
          (g(mid) < 0.0 ? neg : pos) = mid;
        }
        return 0.5 * (neg + pos);
      };
      if (ga > 0.0) {
        const Vec x = base + root(smin, -half) * w;
        if (!keep || keep(x)) ++count;
      }
      if (gb > 0.0) {
        const Vec x = base + root(smin, half) * w;
        if (!keep || keep(x)) ++count;
      }
    }
    est.hits += static_cast<std::size_t>(count);
    sum += count;
    sum2 += static_cast<double>(count) * count;
  }
  const double N = static_cast<double>(params.lines);
  const double mean = sum / N;
  const double var = std::max(sum2 / N - mean * mean, 0.0);
  est.estimate = disc / mean_abs_cos * mean;
  est.std_error = disc / mean_abs_cos * std::sqrt(var / N);
  return est;
}

AreaEstimate band_area_in_ball(const Polytope& P, const SmoothingSchedule& S, int k, const Vec& p, double r,
                               const AreaParams& params, const EtaKernel& K) {
  if (k < 1 || k > P.q()) throw DomainError("band_area_in_ball: level out of range");
  auto f = [&](const Vec& x) { return uhat_value<double>(P, S, x, k, K); };
  const double w = 2.0 / S.lambda(k);
  auto keep = [&](const Vec& x) {
    if (!P.contains(x)) return false;
    return in_slab(uhat_value<double>(P, S, x, k - 1, K), -w, 0.0) && in_slab(P.face(k)(x), -w, 0.0);
  };
  return levelset_area_in_ball(f, p, r, params, keep);
}

AreaEstimate triple_band_area_in_ball(const Polytope& P, const SmoothingSchedule& S, int i, int j, int k,
                                      const Vec& p, double r, const AreaParams& params, const EtaKernel& K) {
  if (k < 1 || k > P.q() || i < 0 || j < 0 || i > P.q() || j > P.q() || i == j || i == k || j == k)
    throw DomainError("triple_band_area_in_ball: indices must be distinct and in range");
  auto f = [&](const Vec& x) { return uhat_value<double>(P, S, x, k, K); };
  const double w = 2.0 / S.lambda(k), l0 = 1.0 / S.lambda(0);
  auto keep = [&](const Vec& x) {
    if (!P.contains(x)) return false;
    return in_slab(uhat_value<double>(P, S, x, k - 1, K), -w, 0.0) && in_slab(P.face(k)(x), -w, 0.0) &&
           in_slab(P.face(j)(x), -4.0 * l0, 0.0) && in_slab(P.face(i)(x), -6.0 * l0, 0.0);
  };
  return levelset_area_in_ball(f, p, r, params, keep);
}

}  // namespace polysmooth
