#include "harness_internal.hpp"

#include "polysmooth/shapes.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

namespace polysmooth {

// ------------------------------------------------------------------ config

double ScenarioConfig::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

SmoothingSchedule ScenarioConfig::schedule(double Xi) const {
  return SmoothingSchedule(gamma, lambda0 ? *lambda0 : default_lambda0(Xi, gamma, polytope.q()));
}

SmoothingSchedule ScenarioConfig::schedule_for(double g, double Xi, std::size_t sweep_index) const {
  if (sweep_index < sweep_lambda0.size()) return SmoothingSchedule(g, sweep_lambda0[sweep_index]);
  return SmoothingSchedule(g, default_lambda0(Xi, g, polytope.q()));
}

void ScenarioConfig::validate() const {
  if (polytope.face_count() == 0) throw ConfigError("scenario: polytope has no faces");
  if (metric.dim() != polytope.dim())
    throw ConfigError("scenario: metric dimension " + std::to_string(metric.dim()) + " differs from polytope dimension " +
                      std::to_string(polytope.dim()));
  if (!(gamma > 0.0 && gamma < 0.5)) throw ConfigError("scenario: gamma must lie in (0, 1/2)");
  if (lambda0 && !(*lambda0 > 1.0)) throw ConfigError("scenario: lambda0 must exceed 1");
  for (double g : sweep_gammas)
    if (!(g > 0.0 && g < 0.5)) throw ConfigError("scenario: sweep gamma " + std::to_string(g) + " outside (0, 1/2)");
  for (double l : sweep_lambda0)
    if (!(l > 1.0)) throw ConfigError("scenario: sweep lambda0 must exceed 1");
  if (!sweep_lambda0.empty() && sweep_lambda0.size() != sweep_gammas.size())
    throw ConfigError("scenario: sweep lambda0 list must match the gamma list");
  if (mesh_level < 0 || mesh_level > 8 || morrey_level < 0 || morrey_level > 8)
    throw ConfigError("scenario: mesh levels must lie in [0, 8]");
  if (!sigma_override && !sigma_admissible(sigma, polytope.q()))
    throw ConfigError("scenario: sigma " + std::to_string(sigma) +
                      " outside the admissible interval; set sigma_override to force it");
  if (!(sigma > 0.0)) throw ConfigError("scenario: sigma must be positive");
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.polytope = unit_cube(3);
  cfg.metric = MetricField::euclidean(3);
  return cfg;
}

namespace {

Json load_part(const Json& j, const std::string& base_dir) {
  if (j.is_string()) {
    const std::filesystem::path p(j.get<std::string>());
    return read_json_file(p.is_absolute() ? p.string() : (std::filesystem::path(base_dir) / p).string());
  }
  return j;
}

Polytope polytope_part(const Json& j, std::vector<std::string>* warnings) {
  if (j.is_object() && j.contains("shape")) {
    const std::string s = j.at("shape").get<std::string>();
    if (s == "cube") return unit_cube(j.value("n", 3), j.value("side", 1.0));
    if (s == "simplex") return regular_simplex(j.value("inradius", 0.5));
    throw ConfigError("polytope.shape: unknown shape \"" + s + "\"");
  }
  return polytope_from_json(j, warnings);
}

template <class T>
void read_if(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("scenario.") + key + ": wrong type");
  }
}

}  // namespace

ScenarioConfig scenario_from_json(const Json& j, const std::string& base_dir) {
  if (!j.is_object()) throw ConfigError("scenario: expected an object");
  ScenarioConfig cfg = default_scenario();
  read_if(j, "name", cfg.name);
  std::vector<std::string> warnings;
  if (j.contains("polytope")) cfg.polytope = polytope_part(load_part(j.at("polytope"), base_dir), &warnings);
  cfg.metric = j.contains("metric") ? metric_from_json(load_part(j.at("metric"), base_dir))
                                    : MetricField::euclidean(cfg.polytope.dim());
  if (j.contains("schedule")) {
    const ScheduleSpec s = schedule_from_json(load_part(j.at("schedule"), base_dir));
    cfg.gamma = s.gamma;
    cfg.lambda0 = s.lambda0;
  }
  if (j.contains("sweep")) {
    const Json& sw = j.at("sweep");
    read_if(sw, "gammas", cfg.sweep_gammas);
    read_if(sw, "lambda0", cfg.sweep_lambda0);
  }
  read_if(j, "mesh_level", cfg.mesh_level);
  read_if(j, "morrey_level", cfg.morrey_level);
  read_if(j, "sigma", cfg.sigma);
  read_if(j, "sigma_override", cfg.sigma_override);
  read_if(j, "seed", cfg.seed);
  if (j.contains("samples")) {
    const Json& s = j.at("samples");
    read_if(s, "eta", cfg.samples.eta);
    read_if(s, "random_points", cfg.samples.random_points);
    read_if(s, "certificates", cfg.samples.certificates);
    read_if(s, "slab_points", cfg.samples.slab_points);
    read_if(s, "metric_points", cfg.samples.metric_points);
    read_if(s, "face_samples", cfg.samples.face_samples);
    read_if(s, "area_lines", cfg.samples.area_lines);
    read_if(s, "arc_points", cfg.samples.arc_points);
  }
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    if (!t.is_object()) throw ConfigError("scenario.tolerances: expected an object");
    for (const auto& [k, v] : t.items()) {
      if (!v.is_number()) throw ConfigError("scenario.tolerances." + k + ": expected a number");
      cfg.tolerances[k] = v.get<double>();
    }
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  const std::filesystem::path p(path);
  return scenario_from_json(read_json_file(path), p.has_parent_path() ? p.parent_path().string() : ".");
}

Json scenario_to_json(const ScenarioConfig& cfg) {
  Json tol = Json::object();
  for (const auto& [k, v] : cfg.tolerances) tol[k] = v;
  Json j = {{"name", cfg.name},
            {"polytope", polytope_to_json(cfg.polytope)},
            {"metric", metric_to_json(cfg.metric)},
            {"schedule", {{"gamma", cfg.gamma}}},
            {"sweep", {{"gammas", cfg.sweep_gammas}}},
            {"mesh_level", cfg.mesh_level},
            {"morrey_level", cfg.morrey_level},
            {"sigma", cfg.sigma},
            {"sigma_override", cfg.sigma_override},
            {"seed", cfg.seed},
            {"samples",
             {{"eta", cfg.samples.eta},
              {"random_points", cfg.samples.random_points},
              {"certificates", cfg.samples.certificates},
              {"slab_points", cfg.samples.slab_points},
              {"metric_points", cfg.samples.metric_points},
              {"face_samples", cfg.samples.face_samples},
              {"area_lines", cfg.samples.area_lines},
              {"arc_points", cfg.samples.arc_points}}},
            {"tolerances", tol}};
  j["schedule"]["lambda0"] = cfg.lambda0 ? Json(*cfg.lambda0) : Json(nullptr);
  if (!cfg.sweep_lambda0.empty()) j["sweep"]["lambda0"] = cfg.sweep_lambda0;
  return j;
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Skipped:
      return "skipped";
    case CheckStatus::AssumptionFailed:
      return "assumption-failed";
    case CheckStatus::Error:
      return "error";
  }
  return "unknown";
}

int VerificationReport::exit_code() const {
  bool fail = false, assumption = false;
  for (const auto& c : checks) {
    if (c.status == CheckStatus::Error) return 3;
    fail = fail || c.status == CheckStatus::Fail;
    assumption = assumption || c.status == CheckStatus::AssumptionFailed;
  }
  return fail ? 1 : assumption ? 2 : 0;
}

// ------------------------------------------------------------- environment

namespace detail {

CheckEnv::CheckEnv(const ScenarioConfig& c, std::vector<std::string>* n) : cfg(c), P(c.polytope), notices(n) {
  try {
    poly = check_assumptions(P);
    poly_ok = poly.pass;
    if (!poly.nonredundant) {
      for (const auto& f : poly.faces)
        if (!f.nonredundant) {
          poly_failure = "face " + std::to_string(f.face) + " is redundant";
          break;
        }
    } else if (!poly.acute) {
      for (const auto& p : poly.pairs)
        if (p.coactive && !p.acute) {
          poly_failure = "faces " + std::to_string(p.j) + " and " + std::to_string(p.k) +
                         " meet at an obtuse angle (inner product " + std::to_string(p.inner) + ")";
          break;
        }
    }
    C = compute_constants(P);
  } catch (const Error& e) {
    poly_ok = false;
    if (poly_failure.empty()) poly_failure = e.what();
  }
  if (C.Xi > 0.0) {
    S = cfg.schedule(C.Xi);
    const double heuristic = default_lambda0(C.Xi, cfg.gamma, P.q());
    lambda0_below_heuristic = S.lambda0 < heuristic * (1.0 - 1e-12);
    if (lambda0_below_heuristic)
      notice("lambda0 = " + std::to_string(S.lambda0) + " is below the default threshold " + std::to_string(heuristic) +
             "; bounds that need a large lambda0 are checked without guarantee");
  } else {
    S = SmoothingSchedule(cfg.gamma, cfg.lambda0.value_or(2.0));
  }
}

std::uint64_t CheckEnv::seed_for(const std::string& id) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : id) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::uint64_t st = h ^ (cfg.seed * 0x9e3779b97f4a7c15ULL);
  return splitmix64(st);
}

void CheckEnv::notice(const std::string& s) const {
  if (notices && std::find(notices->begin(), notices->end(), s) == notices->end()) notices->push_back(s);
}

std::vector<std::pair<int, int>> CheckEnv::meeting_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& p : poly.pairs)
    if (p.coactive) out.emplace_back(std::min(p.j, p.k), std::max(p.j, p.k));
  std::sort(out.begin(), out.end());
  return out;
}

const MetricAssumptionReport& CheckEnv::metric_hypotheses() {
  if (!metric_report) {
    metric_report = check_metric_assumptions(P, cfg.metric, cfg.samples.face_samples, seed_for("metric.hypotheses"));
    const auto& r = *metric_report;
    if (!r.mean_convex)
      metric_failure = "face " + std::to_string(r.min_face) + " has negative mean curvature " +
                       std::to_string(r.min_face_mean_curvature) + " at " + format_point(r.min_face_witness);
    else if (!r.angle_comparison)
      metric_failure = "angle comparison fails for faces " + std::to_string(r.max_angle_pair.first) + " and " +
                       std::to_string(r.max_angle_pair.second) + " by " + std::to_string(r.max_angle_excess) +
                       " at " + format_point(r.max_angle_witness);
  }
  return *metric_report;
}

const SurfaceMesh& CheckEnv::mesh() {
  if (!mesh_) {
    MeshOptions o;
    o.band_resolved = false;
    mesh_ = build_mesh(P, S, cfg.metric, default_directions(P.dim(), cfg.mesh_level), o);
  }
  return *mesh_;
}

const SurfaceMesh& CheckEnv::euclidean_mesh() {
  if (cfg.metric.family() == MetricFamily::Euclidean) return mesh();
  if (!euclidean_mesh_) {
    MeshOptions o;
    o.band_resolved = false;
    euclidean_mesh_ =
        build_mesh(P, S, MetricField::euclidean(P.dim()), default_directions(P.dim(), cfg.mesh_level), o);
  }
  return *euclidean_mesh_;
}

std::vector<Vec> CheckEnv::band_probes(const SmoothingSchedule& sched, double spread) {
  const Vec c = chebyshev_center(P).center;
  const int count = cfg.samples.arc_points;
  std::vector<Vec> out;
  auto add = [&](const Vec& a, const Vec& b, int k, int cnt) {
    if (a.dot(b) < -0.99) return;
    for (const Vec& x : band_surface_points(P, sched, c, a, b, k, cnt, spread)) out.push_back(x);
  };
  for (int k = 1; k <= P.q(); ++k)
    for (int j = 0; j < k; ++j) {
      const Vec& Nj = P.face(j).normal;
      const Vec& Nk = P.face(k).normal;
      if (Nj.dot(Nk) < -0.99) continue;
      add(Nj, Nk, k, count);
      // From the edge of faces i and j towards face k, crossing the level-k band near a vertex.
      for (int i = 0; i < k; ++i) {
        if (i == j || P.face(i).normal.dot(Nj) < -0.99) continue;
        add((P.face(i).normal + Nj).normalized(), Nk, k, std::max(1, count / 2));
      }
    }
  return out;
}

}  // namespace detail

// ------------------------------------------------------------------- suite

const std::vector<CheckSpec>& check_registry() {
  static const std::vector<CheckSpec> specs = [] {
    std::vector<CheckSpec> s;
    for (const auto& c : detail::registered_checks()) s.push_back(c.spec);
    return s;
  }();
  return specs;
}

std::vector<std::string> registry_anchors() {
  std::set<std::string> a;
  for (const auto& c : check_registry()) a.insert(c.anchor);
  return {a.begin(), a.end()};
}

namespace {

CheckRecord execute(const detail::RegisteredCheck& rc, detail::CheckEnv& env) {
  CheckRecord r;
  const auto& spec = rc.spec;
  auto finish = [&](CheckRecord out) {
    out.id = spec.id;
    out.anchor = spec.anchor;
    return out;
  };
  if (spec.needs_polytope && !env.poly_ok && spec.id != "polytope.assumptions") {
    r.status = CheckStatus::Skipped;
    r.note = "polytope assumptions failed: " + env.poly_failure;
    env.notice("checks on the smoothed domain skipped: polytope assumptions failed");
    return finish(r);
  }
  try {
    if (spec.needs_metric_hypotheses && !env.metric_hypotheses().pass) {
      r.status = CheckStatus::Skipped;
      r.note = "metric hypotheses failed: " + env.metric_failure;
      env.notice("skipped " + spec.id + ": it relies on the metric hypotheses, which fail for this scenario");
      return finish(r);
    }
    r = rc.fn(env);
  } catch (const ConfigError& e) {
    r = CheckRecord{};
    r.status = CheckStatus::AssumptionFailed;
    r.note = std::string("configuration: ") + e.what();
  } catch (const AssumptionError& e) {
    r = CheckRecord{};
    r.status = CheckStatus::AssumptionFailed;
    r.note = std::string("assumption: ") + e.what();
  } catch (const std::exception& e) {
    r = CheckRecord{};
    r.status = CheckStatus::Error;
    r.note = std::string("error in ") + spec.id + ": " + e.what();
  }
  return finish(r);
}

Json environment_echo(const ScenarioConfig& cfg) {
  Json env = {{"library", "polysmooth"},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
#if defined(__clang__)
              {"compiler", std::string("clang ") + __clang_version__},
#elif defined(__GNUC__)
              {"compiler", std::string("gcc ") + __VERSION__},
#else
              {"compiler", "unknown"},
#endif
              {"cxx_standard", static_cast<long>(__cplusplus)},
              {"threads", 1}};
  env["scenario"] = scenario_to_json(cfg);
  return env;
}

}  // namespace

VerificationReport run_suite(const ScenarioConfig& cfg, const std::vector<std::string>& only) {
  cfg.validate();
  for (const auto& id : only) {
    const auto& all = detail::registered_checks();
    if (std::none_of(all.begin(), all.end(), [&](const auto& c) { return c.spec.id == id; }))
      throw ConfigError("unknown check id \"" + id + "\"");
  }
  VerificationReport rep;
  rep.scenario = cfg.name;
  rep.seed = cfg.seed;
  rep.environment = environment_echo(cfg);
  detail::CheckEnv env(cfg, &rep.notices);
  for (const auto& rc : detail::registered_checks()) {
    if (!only.empty() && std::find(only.begin(), only.end(), rc.spec.id) == only.end()) continue;
    rep.checks.push_back(execute(rc, env));
  }
  std::stable_sort(rep.checks.begin(), rep.checks.end(),
                   [](const CheckRecord& a, const CheckRecord& b) { return a.id < b.id; });
  if (env.metric_report) {
    const auto& m = *env.metric_report;
    if (!m.curvature_note.empty()) env.notice(m.curvature_note);
  }
  rep.decay = env.decay;
  rep.heatmap = env.heatmap;
  return rep;
}

CheckRecord run_check(const std::string& id, const ScenarioConfig& cfg) {
  const VerificationReport r = run_suite(cfg, {id});
  return r.checks.front();
}

DecayTable sweep_gamma(const ScenarioConfig& cfg, const std::vector<double>& gammas, HeatmapGrid* heat) {
  const Polytope& P = cfg.polytope;
  const PolytopeConstants C = compute_constants(P);
  DecayTable t;
  t.predicted_exponent = cfg.sigma - P.q() * (cfg.sigma - 1.0);
  const DirectionSet dirs = default_directions(P.dim(), cfg.morrey_level);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const SmoothingSchedule S = cfg.schedule_for(gammas[i], C.Xi, i);
    const SurfaceMesh mesh = build_mesh(P, S, cfg.metric, dirs);
    const auto centers = default_morrey_centers(mesh, cfg.seed + i);
    const MorreyEstimate est = morrey_norm(mesh, cfg.sigma, centers, dyadic_radii(), P.q(), cfg.sigma_override);
    DecayRow row;
    row.gamma = S.gamma;
    row.lambda0 = S.lambda0;
    row.sigma = cfg.sigma;
    row.sup = est.sup_value;
    row.sup_radius = est.rows.empty() ? 0.0 : est.rows[est.sup_row].radius;
    row.nodes = mesh.deficit_nodes.size();
    row.excluded = est.excluded_flagged;
    t.rows.push_back(row);
    if (heat && i == 0 && P.dim() == 3)
      *heat = deficit_heatmap(mesh, 72, 36, "deficit, gamma = " + std::to_string(S.gamma));
  }
  // The slope is meaningless when the deficit vanishes identically.
  std::size_t usable = 0;
  for (const auto& r : t.rows)
    if (r.sup > 0.0 && std::isfinite(r.sup)) ++usable;
  t.slope_defined = cfg.metric.family() != MetricFamily::Euclidean && usable == t.rows.size() && usable >= 2;
  if (t.slope_defined) {
    double mx = 0, my = 0;
    for (const auto& r : t.rows) {
      mx += std::log(r.gamma);
      my += std::log(r.sup);
    }
    mx /= static_cast<double>(usable);
    my /= static_cast<double>(usable);
    double sxy = 0, sxx = 0;
    for (const auto& r : t.rows) {
      sxy += (std::log(r.gamma) - mx) * (std::log(r.sup) - my);
      sxx += (std::log(r.gamma) - mx) * (std::log(r.gamma) - mx);
    }
    t.slope_defined = sxx > 0;
    t.slope = sxx > 0 ? sxy / sxx : 0.0;
  }
  return t;
}

}  // namespace polysmooth
