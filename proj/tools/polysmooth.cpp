#include "polysmooth/harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

using namespace polysmooth;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ScenarioConfig scenario(const Globals& g) {
  ScenarioConfig cfg = g.config.empty() ? default_scenario() : load_scenario(g.config);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

void emit(const Globals& g, const std::string& file, const std::string& text) {
  if (g.out.empty()) return;
  const std::string path = (std::filesystem::path(g.out) / file).string();
  write_text_file(path, text);
  std::cerr << "wrote " << path << "\n";
}

void print_json(const Globals& g, const std::string& file, const Json& j) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  emit(g, file, text);
}

SmoothingSchedule schedule_of(const ScenarioConfig& cfg, std::optional<double> gamma, std::optional<double> lambda0) {
  ScenarioConfig c = cfg;
  if (gamma) c.gamma = *gamma;
  if (lambda0) c.lambda0 = *lambda0;
  return c.schedule(compute_constants(c.polytope).Xi);
}

Json constants_json(const PolytopeConstants& C) {
  Json table = Json::array();
  for (const auto& [eps, delta] : C.delta_table) table.push_back({{"epsilon", eps}, {"delta", delta}});
  return {{"Lambda", C.Lambda}, {"Xi", C.Xi}, {"M", C.M}, {"xi_sentinel", C.xi_sentinel}, {"delta_table", table}};
}

Json assumption_json(const AssumptionReport& r) {
  Json faces = Json::array();
  for (const auto& f : r.faces)
    faces.push_back({{"face", f.face},
                     {"nonredundant", f.nonredundant},
                     {"witness_value", f.witness_value},
                     {"witness", vec_to_json(f.witness)}});
  Json pairs = Json::array();
  for (const auto& p : r.pairs)
    if (p.coactive)
      pairs.push_back({{"j", p.j}, {"k", p.k}, {"inner", p.inner}, {"threshold", p.threshold}, {"acute", p.acute}});
  return {{"pass", r.pass}, {"nonredundant", r.nonredundant}, {"acute", r.acute}, {"faces", faces}, {"meeting_pairs", pairs}};
}

Json metric_report_json(const MetricAssumptionReport& r) {
  Json empty_pairs = Json::array();
  for (const auto& [j, k] : r.empty_pairs) empty_pairs.push_back({j, k});
  return {{"pass", r.pass},
          {"mean_convex", r.mean_convex},
          {"angle_comparison", r.angle_comparison},
          {"face_samples", r.face_samples},
          {"pair_samples", r.pair_samples},
          {"min_face_mean_curvature", r.min_face_mean_curvature},
          {"min_face", r.min_face},
          {"min_face_witness", vec_to_json(r.min_face_witness)},
          {"max_angle_excess", r.max_angle_excess},
          {"max_angle_pair", {r.max_angle_pair.first, r.max_angle_pair.second}},
          {"max_angle_witness", vec_to_json(r.max_angle_witness)},
          {"empty_faces", r.empty_faces},
          {"empty_pairs", empty_pairs},
          {"curvature_note", r.curvature_note}};
}

std::string samples_csv(const SurfaceMesh& m) {
  std::ostringstream s;
  s.precision(17);
  s << "x,y,z,label,H,trace_norm,deficit,weight,flagged\n";
  for (const auto& p : m.samples) {
    for (Eigen::Index d = 0; d < p.x.size(); ++d) s << p.x[d] << ',';
    for (Eigen::Index d = p.x.size(); d < 3; ++d) s << ',';
    s << to_string(p.label) << ',' << p.H << ',' << p.trace_norm << ',' << p.deficit << ',' << p.weight << ','
      << (p.flagged ? 1 : 0) << '\n';
  }
  return s.str();
}

SurfaceMesh mesh_of(const ScenarioConfig& cfg, const SmoothingSchedule& S, int level, bool resolved) {
  MeshOptions o;
  o.band_resolved = resolved;
  return build_mesh(cfg.polytope, S, cfg.metric, default_directions(cfg.polytope.dim(), level), o);
}

int run(int argc, char** argv) {
  CLI::App app{"Smoothed convex polytopes: construction, Gauss map and curvature-deficit verification"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Scenario JSON (default: unit cube, Euclidean metric)");
  app.add_option("--seed", g.seed, "RNG seed (overrides the scenario)");
  app.add_option("--out", g.out, "Directory for output files");

  std::optional<double> gamma, lambda0;
  auto schedule_opts = [&](CLI::App* sc) {
    sc->add_option("--gamma", gamma, "Schedule ratio in (0, 1/2)");
    sc->add_option("--lambda0", lambda0, "Base sharpness (> 1); default 8 Xi / gamma^q");
  };
  std::string point;
  int level_k = -1;
  int mesh_level = -1;
  bool resolved = false;
  std::optional<double> sigma;
  std::vector<double> gammas;
  std::vector<std::string> only;
  std::string file;

  auto* cp = app.add_subcommand("check-polytope", "Standing assumptions of a polytope file");
  cp->add_option("file", file, "Polytope JSON")->required();
  auto* cm = app.add_subcommand("check-metric", "Mean convexity and angle comparison of the scenario metric");
  auto* cc = app.add_subcommand("constants", "Lambda, Xi, M and the delta table");
  cc->add_option("file", file, "Polytope JSON (default: the scenario polytope)");
  auto* se = app.add_subcommand("smooth-eval", "Value, gradient and Hessian of a smoothed level");
  se->add_option("--point", point, "x,y,z")->required();
  se->add_option("--k", level_k, "Level (default q)");
  schedule_opts(se);
  auto* nh = app.add_subcommand("nhat", "Modified Gauss map at a point");
  nh->add_option("--point", point, "x,y,z")->required();
  nh->add_option("--k", level_k, "Level (default q)");
  schedule_opts(nh);
  auto* me = app.add_subcommand("mesh", "Radial mesh of the smoothed boundary");
  me->add_option("--level", mesh_level, "Direction subdivision level");
  me->add_flag("--band-resolved", resolved, "Integrate transition bands on sub-cells");
  schedule_opts(me);
  auto* ca = app.add_subcommand("classify-all", "Region labels of every mesh sample");
  ca->add_option("--level", mesh_level, "Direction subdivision level");
  schedule_opts(ca);
  auto* df = app.add_subcommand("deficit-field", "Curvature deficit on the mesh, CSV and heatmap");
  df->add_option("--level", mesh_level, "Direction subdivision level");
  schedule_opts(df);
  auto* mo = app.add_subcommand("morrey", "Morrey norm of the deficit");
  mo->add_option("--sigma", sigma, "Exponent (default from the scenario)");
  mo->add_option("--level", mesh_level, "Direction subdivision level");
  schedule_opts(mo);
  auto* sw = app.add_subcommand("sweep", "Morrey sup over a list of gamma values");
  sw->add_option("--gammas", gammas, "Gamma values (default from the scenario)")->delimiter(',');
  auto* va = app.add_subcommand("verify-all", "Run the verification suite and write the report");
  va->add_option("--only", only, "Restrict to these check ids")->delimiter(',');
  auto* lc = app.add_subcommand("list-checks", "Registered checks and their anchors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*cp) {
    std::vector<std::string> warnings;
    const Polytope P = polytope_from_json(read_json_file(file), &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    const AssumptionReport r = check_assumptions(P);
    Json j = assumption_json(r);
    if (r.pass) j["constants"] = constants_json(compute_constants(P));
    print_json(g, "polytope.json", j);
    return r.pass ? 0 : 2;
  }
  if (*lc) {
    for (const auto& c : check_registry())
      std::cout << c.id << "  [" << c.anchor << "]" << (c.needs_metric_hypotheses ? "  (needs metric hypotheses)" : "")
                << "\n";
    return 0;
  }
  const ScenarioConfig cfg = scenario(g);
  if (*cm) {
    const auto r = check_metric_assumptions(cfg.polytope, cfg.metric, cfg.samples.face_samples, cfg.seed);
    print_json(g, "metric.json", metric_report_json(r));
    return r.pass ? 0 : 2;
  }
  if (*cc) {
    const Polytope P = file.empty() ? cfg.polytope : polytope_from_json(read_json_file(file));
    print_json(g, "constants.json", constants_json(compute_constants(P)));
    return 0;
  }
  const int level = mesh_level >= 0 ? mesh_level : cfg.mesh_level;
  if (*se) {
    const SmoothingSchedule S = schedule_of(cfg, gamma, lambda0);
    const auto jet = uhat_jet(level_k < 0 ? cfg.polytope.q() : level_k, parse_point(point), S, cfg.polytope);
    print_json(g, "jet.json",
               {{"schedule", schedule_to_json(S)},
                {"value", jet.value},
                {"gradient", vec_to_json(jet.gradient)},
                {"hessian", mat_to_json(jet.hessian)}});
    return 0;
  }
  if (*nh) {
    const SmoothingSchedule S = schedule_of(cfg, gamma, lambda0);
    const int k = level_k < 0 ? cfg.polytope.q() : level_k;
    const NhatValue v = nhat_eval(k, parse_point(point), S, cfg.polytope, cfg.metric);
    Json cases = Json::array(), angles = Json::array();
    for (auto c : v.cases) cases.push_back(to_string(c));
    for (const auto& a : v.angles) angles.push_back({{"alpha", a.alpha}, {"theta", a.theta}, {"phi", a.phi}});
    print_json(g, "nhat.json",
               {{"schedule", schedule_to_json(S)},
                {"level", k},
                {"N", vec_to_json(v.N)},
                {"nu", vec_to_json(v.nu)},
                {"case", to_string(v.tag)},
                {"cases", cases},
                {"angles", angles},
                {"nu_discrepancy", v.nu_discrepancy}});
    return 0;
  }
  if (*me) {
    const SmoothingSchedule S = schedule_of(cfg, gamma, lambda0);
    const SurfaceMesh m = mesh_of(cfg, S, level, resolved);
    emit(g, "mesh.csv", samples_csv(m));
    print_json(g, "mesh.json",
               {{"schedule", schedule_to_json(S)},
                {"level", level},
                {"samples", m.samples.size()},
                {"g_area", m.total_area},
                {"euclidean_area", m.euclidean_area},
                {"flagged", m.flagged},
                {"band_cells", m.band_cells},
                {"resolved_area", m.resolved_area}});
    return 0;
  }
  if (*ca) {
    const SmoothingSchedule S = schedule_of(cfg, gamma, lambda0);
    const SurfaceMesh m = mesh_of(cfg, S, level, false);
    std::size_t counts[3] = {0, 0, 0}, failures = 0;
    std::ostringstream csv;
    csv.precision(17);
    csv << "sample,label,verified\n";
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
      const auto& s = m.samples[i];
      const bool ok = label_holds(s.label, s.x, S, cfg.polytope);
      failures += ok ? 0 : 1;
      ++counts[static_cast<int>(s.label.kind)];
      csv << i << ',' << to_string(s.label) << ',' << (ok ? 1 : 0) << '\n';
    }
    emit(g, "labels.csv", csv.str());
    print_json(g, "labels.json",
               {{"schedule", schedule_to_json(S)},
                {"samples", m.samples.size()},
                {"F", counts[0]},
                {"E", counts[1]},
                {"G", counts[2]},
                {"failed_recheck", failures}});
    return failures ? 1 : 0;
  }
  if (*df) {
    const SmoothingSchedule S = schedule_of(cfg, gamma, lambda0);
    const SurfaceMesh m = mesh_of(cfg, S, level, true);
    emit(g, "deficit.csv", samples_csv(m));
    if (cfg.polytope.dim() == 3) emit(g, "plots/deficit_heatmap.svg", heatmap_svg(deficit_heatmap(m, 72, 36, cfg.name)));
    double mx = 0.0;
    for (const auto& q : m.deficit_nodes)
      if (!q.flagged) mx = std::max(mx, q.deficit);
    print_json(g, "deficit.json",
               {{"schedule", schedule_to_json(S)},
                {"samples", m.samples.size()},
                {"quadrature_nodes", m.deficit_nodes.size()},
                {"max_deficit", mx},
                {"flagged", m.flagged}});
    return 0;
  }
  if (*mo) {
    const SmoothingSchedule S = schedule_of(cfg, gamma, lambda0);
    const SurfaceMesh m = mesh_of(cfg, S, mesh_level >= 0 ? mesh_level : cfg.morrey_level, true);
    const double sg = sigma.value_or(cfg.sigma);
    const MorreyEstimate e =
        morrey_norm(m, sg, default_morrey_centers(m, cfg.seed), dyadic_radii(), cfg.polytope.q(), cfg.sigma_override);
    std::ostringstream csv;
    csv.precision(17);
    csv << "center,radius,value\n";
    for (const auto& r : e.rows) csv << '"' << format_point(r.center) << "\"," << r.radius << ',' << r.value << '\n';
    emit(g, "morrey.csv", csv.str());
    print_json(g, "morrey.json",
               {{"schedule", schedule_to_json(S)},
                {"sigma", sg},
                {"sup", e.sup_value},
                {"sup_center", e.rows.empty() ? Json::array() : vec_to_json(e.rows[e.sup_row].center)},
                {"sup_radius", e.rows.empty() ? 0.0 : e.rows[e.sup_row].radius},
                {"excluded_flagged", e.excluded_flagged}});
    return 0;
  }
  if (*sw) {
    HeatmapGrid heat;
    const DecayTable t = sweep_gamma(cfg, gammas.empty() ? cfg.sweep_gammas : gammas, &heat);
    std::cout << decay_csv(t);
    std::cout << "slope," << (t.slope_defined ? std::to_string(t.slope) : std::string("degenerate"))
              << "\npredicted_exponent," << t.predicted_exponent << "\n";
    emit(g, "decay.csv", decay_csv(t));
    emit(g, "plots/decay.svg", decay_svg(t));
    if (heat.nlon) emit(g, "plots/deficit_heatmap.svg", heatmap_svg(heat));
    return 0;
  }
  if (*va) {
    const VerificationReport r = run_suite(cfg, only);
    for (const auto& c : r.checks)
      std::cout << to_string(c.status) << "  " << c.id << "  [" << c.anchor << "]"
                << (c.note.empty() ? "" : "  " + c.note) << "\n";
    for (const auto& n : r.notices) std::cout << "notice: " << n << "\n";
    const std::string dir = g.out.empty() ? "report" : g.out;
    for (const auto& p : emit_report(r, dir)) std::cerr << "wrote " << p << "\n";
    std::cout << "exit code " << r.exit_code() << "\n";
    return r.exit_code();
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const AssumptionError& e) {
    std::cerr << "assumption failed: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
