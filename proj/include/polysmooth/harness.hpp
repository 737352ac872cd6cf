#pragma once

#include "polysmooth/io.hpp"
#include "polysmooth/metric.hpp"
#include "polysmooth/polytope.hpp"
#include "polysmooth/smoothing.hpp"
#include "polysmooth/surface.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace polysmooth {

struct SampleCounts {
  std::size_t eta = 100000;           // random kernel arguments
  std::size_t random_points = 20000;  // ambient points for the smoothing bounds
  std::size_t certificates = 10000;   // configurations per constant certificate
  std::size_t slab_points = 200;      // per level for the map checks
  std::size_t metric_points = 1000;   // metric derivative points per family
  std::size_t face_samples = 100;     // per face / pair for the metric hypotheses
  std::size_t area_lines = 100000;    // chords per area estimate
  int arc_points = 24;                // band crossings per great arc
};

struct ScenarioConfig {
  std::string name = "cube-euclidean";
  Polytope polytope;
  MetricField metric;
  double gamma = 0.3;
  std::optional<double> lambda0;  // empty: 8 Xi / gamma^q
  std::vector<double> sweep_gammas{0.45, 0.3, 0.2};
  std::vector<double> sweep_lambda0;  // empty: heuristic per gamma
  int mesh_level = 4;    // vertex-rule meshes
  int morrey_level = 4;  // band-resolved meshes of the sweep
  double sigma = 1.1;
  bool sigma_override = false;
  SampleCounts samples;
  std::uint64_t seed = 1;
  std::map<std::string, double> tolerances;  // "<check id>.<name>" -> value

  double tolerance(const std::string& key, double fallback) const;
  SmoothingSchedule schedule(double Xi) const;
  SmoothingSchedule schedule_for(double gamma, double Xi, std::size_t sweep_index) const;
  // Throws ConfigError on out-of-range values.
  void validate() const;
};

// Unit cube with the Euclidean metric.
ScenarioConfig default_scenario();
// Polytope and metric may be inline objects or file names relative to base_dir.
ScenarioConfig scenario_from_json(const Json& j, const std::string& base_dir = ".");
ScenarioConfig load_scenario(const std::string& path);
Json scenario_to_json(const ScenarioConfig& cfg);

enum class CheckStatus { Pass, Fail, Skipped, AssumptionFailed, Error };
std::string to_string(CheckStatus s);

struct CheckRecord {
  std::string id;
  std::string anchor;
  CheckStatus status = CheckStatus::Pass;
  std::size_t samples = 0;
  double worst_residual = 0.0;
  double tolerance = 0.0;
  std::vector<std::pair<std::string, double>> fitted;
  std::string note;
};

struct DecayRow {
  double gamma = 0.0;
  double lambda0 = 0.0;
  double sigma = 0.0;
  double sup = 0.0;
  double sup_radius = 0.0;
  std::size_t nodes = 0;
  std::size_t excluded = 0;
};

struct DecayTable {
  std::vector<DecayRow> rows;
  bool slope_defined = false;
  double slope = 0.0;               // least squares of log sup against log gamma
  double predicted_exponent = 0.0;  // sigma - q (sigma - 1)
};

// Maximum deficit per (longitude, latitude) cell of the direction sphere.
struct HeatmapGrid {
  int nlon = 0;
  int nlat = 0;
  std::vector<double> values;  // row-major by latitude, south to north
  std::string title;
};

struct VerificationReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Json environment;
  std::vector<CheckRecord> checks;
  std::vector<std::string> notices;
  std::optional<DecayTable> decay;
  std::optional<HeatmapGrid> heatmap;
  // 3 if any check errored, else 1 on a failure, else 2 on a failed
  // assumption, else 0.
  int exit_code() const;
};

struct CheckSpec {
  std::string id;
  std::string anchor;
  bool needs_metric_hypotheses = false;
  bool needs_polytope = true;
  std::string summary;
};

const std::vector<CheckSpec>& check_registry();
// Sorted, duplicate-free anchors of the registry.
std::vector<std::string> registry_anchors();

// Runs the registered checks (all when `only` is empty) in registry order.
VerificationReport run_suite(const ScenarioConfig& cfg, const std::vector<std::string>& only = {});
CheckRecord run_check(const std::string& id, const ScenarioConfig& cfg);

// Morrey sup per gamma on band-resolved meshes at cfg.morrey_level. The first
// mesh's deficit field is stored in `heat` when it is non-null.
DecayTable sweep_gamma(const ScenarioConfig& cfg, const std::vector<double>& gammas, HeatmapGrid* heat = nullptr);

HeatmapGrid deficit_heatmap(const SurfaceMesh& mesh, int nlon, int nlat, const std::string& title);

Json report_to_json(const VerificationReport& r);
std::string summary_csv(const VerificationReport& r);
std::string decay_csv(const DecayTable& t);
std::string decay_svg(const DecayTable& t);
std::string heatmap_svg(const HeatmapGrid& h);
// report.json, summary.csv and plots/*.svg under out_dir; returns the paths.
std::vector<std::string> emit_report(const VerificationReport& r, const std::string& out_dir);

}  // namespace polysmooth
