#pragma once

#include "polysmooth/metric.hpp"
#include "polysmooth/polytope.hpp"
#include "polysmooth/smoothing.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace polysmooth {

using Json = nlohmann::ordered_json;

// {"n": 3, "faces": [{"normal": [...], "offset": c}, ...]}. Renormalization
// warnings are appended to `warnings` when it is non-null.
Polytope polytope_from_json(const Json& j, std::vector<std::string>* warnings = nullptr);
Json polytope_to_json(const Polytope& P);

// {"family": "euclidean" | "constant" | "conformal" | "pullback", ...}
//   euclidean: "n"
//   constant:  "A" (rows), g = A^T A
//   conformal: "n", "potential": {"kind": "quadratic" | "gaussian", "scale",
//              "width", "center", "linear"}
//   pullback:  "eps", "B" (rows), "C" (list of n matrices, C[l](i, j) = C_ijl)
MetricField metric_from_json(const Json& j);
Json metric_to_json(const MetricField& m);

// {"gamma": g, "lambda0": l}. A missing lambda0 is returned empty so the
// caller can apply the default heuristic.
struct ScheduleSpec {
  double gamma = 0.25;
  std::optional<double> lambda0;
};
ScheduleSpec schedule_from_json(const Json& j);
Json schedule_to_json(const SmoothingSchedule& S);

Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j, const std::string& what);
Json mat_to_json(const Mat& m);
Mat mat_from_json(const Json& j, const std::string& what);

// Reads and parses a JSON file; ConfigError names the path on failure.
Json read_json_file(const std::string& path);
// Writes `text` to `path`, creating parent directories; Error names the path.
void write_text_file(const std::string& path, const std::string& text);

// "x,y,z" -> vector.
Vec parse_point(const std::string& s);

}  // namespace polysmooth
