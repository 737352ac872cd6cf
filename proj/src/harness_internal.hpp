#pragma once

#include "polysmooth/harness.hpp"

#include <optional>
#include <string>
#include <vector>

namespace polysmooth::detail {

// Shared state for one suite run. Meshes are built on first use.
class CheckEnv {
 public:
  CheckEnv(const ScenarioConfig& cfg, std::vector<std::string>* notices);

  const ScenarioConfig& cfg;
  Polytope P;
  AssumptionReport poly;
  bool poly_ok = false;
  std::string poly_failure;
  PolytopeConstants C;
  SmoothingSchedule S;
  bool lambda0_below_heuristic = false;
  std::optional<MetricAssumptionReport> metric_report;
  std::string metric_failure;
  std::vector<std::string>* notices;
  std::optional<DecayTable> decay;
  std::optional<HeatmapGrid> heatmap;

  std::uint64_t seed_for(const std::string& id) const;
  double tol(const std::string& key, double fallback) const { return cfg.tolerance(key, fallback); }
  void notice(const std::string& s) const;

  std::vector<std::pair<int, int>> meeting_pairs() const;
  const MetricAssumptionReport& metric_hypotheses();
  const SurfaceMesh& mesh();            // configured metric, vertex rule, cfg.mesh_level
  const SurfaceMesh& euclidean_mesh();  // Euclidean metric, same schedule and level
  // Boundary points crossing every level band: arcs between the normals of
  // each meeting pair and from each meeting pair towards a third face.
  std::vector<Vec> band_probes(const SmoothingSchedule& S, double spread);

 private:
  std::optional<SurfaceMesh> mesh_, euclidean_mesh_;
};

using CheckFn = CheckRecord (*)(CheckEnv&);

struct RegisteredCheck {
  CheckSpec spec;
  CheckFn fn;
};

const std::vector<RegisteredCheck>& registered_checks();

// Nonnegative least-squares residual of y against the columns of B by
// support enumeration.
double nnls_residual(const Mat& B, const Vec& y);

// Closest point to c on the flat {u_i = 0, i in idx}.
Vec flat_point(const Polytope& P, const std::vector<int>& idx, const Vec& c);

}  // namespace polysmooth::detail
