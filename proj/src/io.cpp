#include "polysmooth/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace polysmooth {

namespace {

const Json& field(const Json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(what + ": missing \"" + key + "\"");
  return j.at(key);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) throw ConfigError(what + ": expected an integer");
  return j.get<int>();
}

}  // namespace

Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], what);
  return v;
}

Json mat_to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_to_json(m.row(r).transpose()));
  return a;
}

Mat mat_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a non-empty array of rows");
  const Vec first = vec_from_json(j[0], what);
  Mat m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vec row = vec_from_json(j[r], what);
    if (row.size() != first.size()) throw ConfigError(what + ": ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Polytope polytope_from_json(const Json& j, std::vector<std::string>* warnings) {
  const int n = integer(field(j, "n", "polytope"), "polytope.n");
  const Json& faces = field(j, "faces", "polytope");
  if (!faces.is_array() || faces.empty()) throw ConfigError("polytope.faces: expected a non-empty array");
  std::vector<Vec> normals;
  std::vector<double> offsets;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const std::string what = "polytope.faces[" + std::to_string(i) + "]";
    Vec nrm = vec_from_json(field(faces[i], "normal", what), what + ".normal");
    if (nrm.size() != n) throw ConfigError(what + ".normal: expected " + std::to_string(n) + " components");
    normals.push_back(nrm);
    offsets.push_back(number(field(faces[i], "offset", what), what + ".offset"));
  }
  return Polytope(n, normals, offsets, warnings);
}

Json polytope_to_json(const Polytope& P) {
  Json faces = Json::array();
  for (const auto& f : P.faces()) faces.push_back({{"normal", vec_to_json(f.normal)}, {"offset", f.offset}});
  return {{"n", P.dim()}, {"faces", faces}};
}

MetricField metric_from_json(const Json& j) {
  const Json& fam = field(j, "family", "metric");
  if (!fam.is_string()) throw ConfigError("metric.family: expected a string");
  const std::string f = fam.get<std::string>();
  if (f == "euclidean") return MetricField::euclidean(integer(field(j, "n", "metric"), "metric.n"));
  if (f == "constant") return MetricField::constant(mat_from_json(field(j, "A", "metric"), "metric.A"));
  if (f == "conformal") {
    const int n = integer(field(j, "n", "metric"), "metric.n");
    const Json& p = field(j, "potential", "metric");
    ConformalPotential phi;
    const std::string kind = p.value("kind", std::string("quadratic"));
    if (kind == "quadratic")
      phi.kind = ConformalPotential::Kind::Quadratic;
    else if (kind == "gaussian")
      phi.kind = ConformalPotential::Kind::Gaussian;
    else
      throw ConfigError("metric.potential.kind: unknown kind \"" + kind + "\"");
    phi.scale = number(field(p, "scale", "metric.potential"), "metric.potential.scale");
    if (p.contains("width")) phi.width = number(p.at("width"), "metric.potential.width");
    phi.center = p.contains("center") ? vec_from_json(p.at("center"), "metric.potential.center") : Vec(Vec::Zero(n));
    if (p.contains("linear")) phi.linear = vec_from_json(p.at("linear"), "metric.potential.linear");
    if (phi.center.size() != n || (phi.linear.size() && phi.linear.size() != n))
      throw ConfigError("metric.potential: vectors must have n components");
    if (!(phi.width > 0)) throw ConfigError("metric.potential.width must be positive");
    return MetricField::conformal(n, phi);
  }
  if (f == "pullback") {
    const double eps = number(field(j, "eps", "metric"), "metric.eps");
    const Mat B = mat_from_json(field(j, "B", "metric"), "metric.B");
    const Json& cj = field(j, "C", "metric");
    if (!cj.is_array()) throw ConfigError("metric.C: expected a list of matrices");
    std::vector<Mat> C;
    for (std::size_t l = 0; l < cj.size(); ++l) C.push_back(mat_from_json(cj[l], "metric.C[" + std::to_string(l) + "]"));
    return MetricField::pullback(eps, B, C);
  }
  throw ConfigError("metric.family: unknown family \"" + f + "\"");
}

Json metric_to_json(const MetricField& m) {
  switch (m.family()) {
    case MetricFamily::Euclidean:
      return {{"family", "euclidean"}, {"n", m.dim()}};
    case MetricFamily::Constant:
      return {{"family", "constant"}, {"A", mat_to_json(m.constant_factor())}};
    case MetricFamily::Conformal: {
      const auto& p = m.potential();
      Json pj = {{"kind", p.kind == ConformalPotential::Kind::Gaussian ? "gaussian" : "quadratic"},
                 {"scale", p.scale},
                 {"width", p.width},
                 {"center", vec_to_json(p.center)}};
      if (p.linear.size()) pj["linear"] = vec_to_json(p.linear);
      return {{"family", "conformal"}, {"n", m.dim()}, {"potential", pj}};
    }
    case MetricFamily::Pullback: {
      Json c = Json::array();
      for (const Mat& C : m.pullback_quadratic()) c.push_back(mat_to_json(C));
      return {{"family", "pullback"}, {"eps", m.pullback_eps()}, {"B", mat_to_json(m.pullback_linear())}, {"C", c}};
    }
  }
  return {};
}

ScheduleSpec schedule_from_json(const Json& j) {
  ScheduleSpec s;
  s.gamma = number(field(j, "gamma", "schedule"), "schedule.gamma");
  if (j.contains("lambda0") && !j.at("lambda0").is_null()) s.lambda0 = number(j.at("lambda0"), "schedule.lambda0");
  if (s.lambda0)
    SmoothingSchedule(s.gamma, *s.lambda0).validate();
  else if (!(s.gamma > 0.0 && s.gamma < 0.5))
    throw ConfigError("gamma must lie in (0, 1/2)");
  return s;
}

Json schedule_to_json(const SmoothingSchedule& S) { return {{"gamma", S.gamma}, {"lambda0", S.lambda0}}; }

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + p.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed for " + path);
}

Vec parse_point(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad point component \"" + tok + "\" in \"" + s + "\"");
    }
  }
  if (v.empty()) throw ConfigError("empty point");
  return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace polysmooth
