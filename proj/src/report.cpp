#include "polysmooth/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

namespace polysmooth {

namespace {

// Shortest round-trip text for a double; non-finite values become words.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  for (int p = 1; p <= 17; ++p) {
    char shorter[32];
    std::snprintf(shorter, sizeof shorter, "%.*g", p, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

Json number_or_text(double v) { return std::isfinite(v) ? Json(v) : Json(num(v)); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Viridis-like ramp on [0, 1].
std::string ramp(double t) {
  static const std::array<std::array<double, 3>, 5> stops = {
      {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  char buf[16];
  int c[3];
  for (int k = 0; k < 3; ++k)
    c[k] = static_cast<int>(std::lround(stops[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * (1 - f) +
                                        stops[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(k)] * f));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

}  // namespace

Json report_to_json(const VerificationReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    Json fitted = Json::object();
    for (const auto& [k, v] : c.fitted) fitted[k] = number_or_text(v);
    checks.push_back({{"id", c.id},
                      {"anchor", c.anchor},
                      {"status", to_string(c.status)},
                      {"pass", c.status == CheckStatus::Pass},
                      {"samples", c.samples},
                      {"worst_residual", number_or_text(c.worst_residual)},
                      {"tolerance", number_or_text(c.tolerance)},
                      {"fitted", fitted},
                      {"note", c.note}});
  }
  std::size_t counts[5] = {0, 0, 0, 0, 0};
  for (const auto& c : r.checks) ++counts[static_cast<int>(c.status)];
  Json j = {{"scenario", r.scenario},
            {"seed", r.seed},
            {"exit_code", r.exit_code()},
            {"totals",
             {{"pass", counts[0]},
              {"fail", counts[1]},
              {"skipped", counts[2]},
              {"assumption_failed", counts[3]},
              {"error", counts[4]}}},
            {"environment", r.environment},
            {"notices", r.notices},
            {"checks", checks}};
  if (r.decay) {
    Json rows = Json::array();
    for (const auto& row : r.decay->rows)
      rows.push_back({{"gamma", row.gamma},
                      {"lambda0", row.lambda0},
                      {"sigma", row.sigma},
                      {"morrey_sup", number_or_text(row.sup)},
                      {"sup_radius", row.sup_radius},
                      {"nodes", row.nodes},
                      {"excluded_flagged", row.excluded}});
    j["decay"] = {{"rows", rows},
                  {"slope_defined", r.decay->slope_defined},
                  {"slope", r.decay->slope_defined ? Json(r.decay->slope) : Json("degenerate")},
                  {"predicted_exponent", r.decay->predicted_exponent}};
  }
  return j;
}

std::string summary_csv(const VerificationReport& r) {
  std::ostringstream s;
  s << "id,anchor,status,samples,worst_residual,tolerance,note\n";
  for (const auto& c : r.checks)
    s << c.id << ',' << c.anchor << ',' << to_string(c.status) << ',' << c.samples << ',' << num(c.worst_residual)
      << ',' << num(c.tolerance) << ',' << csv_field(c.note) << '\n';
  return s.str();
}

std::string decay_csv(const DecayTable& t) {
  std::ostringstream s;
  s << "gamma,lambda0,sigma,morrey_sup\n";
  for (const auto& r : t.rows) s << num(r.gamma) << ',' << num(r.lambda0) << ',' << num(r.sigma) << ',' << num(r.sup) << '\n';
  return s.str();
}

std::string decay_svg(const DecayTable& t) {
  const double W = 480, H = 320, L = 70, R = 20, T = 30, B = 50;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Morrey sup against gamma (log-log)</text>\n";
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : t.rows)
    if (r.sup > 0 && std::isfinite(r.sup)) pts.emplace_back(std::log10(r.gamma), std::log10(r.sup));
  s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">log10 gamma</text>\n";
  s << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << (T + H - B) / 2
    << ")\" text-anchor=\"middle\">log10 sup</text>\n";
  if (pts.empty()) {
    s << "<text x=\"" << W / 2 << "\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\">deficit vanishes: nothing to plot</text>\n";
  } else {
    double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
    for (const auto& [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
    if (x1 - x0 < 1e-12) {
      x0 -= 0.5;
      x1 += 0.5;
    }
    if (y1 - y0 < 1e-12) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R - 20) + 10; };
    auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B - 20) - 10; };
    s << "<polyline fill=\"none\" stroke=\"#3b528b\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : pts) s << num(px(x)) << ',' << num(py(y)) << ' ';
    s << "\"/>\n";
    for (const auto& [x, y] : pts) {
      s << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"4\" fill=\"#21918c\"/>\n";
      s << "<text x=\"" << num(px(x) + 6) << "\" y=\"" << num(py(y) - 6) << "\" font-size=\"10\">" << num(std::pow(10.0, x))
        << "</text>\n";
    }
    s << "<text x=\"" << L + 8 << "\" y=\"" << T + 12 << "\" font-size=\"11\">"
      << (t.slope_defined ? "slope " + num(t.slope) : std::string("slope degenerate")) << ", predicted exponent "
      << num(t.predicted_exponent) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

HeatmapGrid deficit_heatmap(const SurfaceMesh& mesh, int nlon, int nlat, const std::string& title) {
  if (nlon <= 0 || nlat <= 0) throw ConfigError("deficit_heatmap: grid sizes must be positive");
  HeatmapGrid h;
  h.nlon = nlon;
  h.nlat = nlat;
  h.title = title;
  h.values.assign(static_cast<std::size_t>(nlon * nlat), 0.0);
  if (mesh.center.size() != 3) return h;
  for (const auto& q : mesh.deficit_nodes) {
    if (q.flagged) continue;
    const Vec d = (q.x - mesh.center).normalized();
    const double lon = std::atan2(d[1], d[0]);
    const double lat = std::asin(std::clamp(d[2], -1.0, 1.0));
    const int i = std::clamp(static_cast<int>((lon + kPi) / (2 * kPi) * nlon), 0, nlon - 1);
    const int j = std::clamp(static_cast<int>((lat + kPi / 2) / kPi * nlat), 0, nlat - 1);
    double& v = h.values[static_cast<std::size_t>(j * nlon + i)];
    v = std::max(v, q.deficit);
  }
  return h;
}

std::string heatmap_svg(const HeatmapGrid& h) {
  const int cell = 8, L = 40, T = 30;
  const int W = L + h.nlon * cell + 90, Hh = T + h.nlat * cell + 40;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : h.values)
    if (v > 0 && std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const bool any = hi > 0;
  const double llo = any ? std::log10(lo) : 0.0, lhi = any ? std::log10(hi) : 1.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << L << "\" y=\"18\" font-size=\"13\">" << xml_escape(h.title) << "</text>\n";
  for (int j = 0; j < h.nlat; ++j)
    for (int i = 0; i < h.nlon; ++i) {
      const double v = h.values[static_cast<std::size_t>(j * h.nlon + i)];
      const std::string fill =
          v > 0 && std::isfinite(v) ? ramp(lhi > llo ? (std::log10(v) - llo) / (lhi - llo) : 1.0) : "#dddddd";
      s << "<rect x=\"" << L + i * cell << "\" y=\"" << T + (h.nlat - 1 - j) * cell << "\" width=\"" << cell
        << "\" height=\"" << cell << "\" fill=\"" << fill << "\"/>\n";
    }
  s << "<text x=\"" << L << "\" y=\"" << Hh - 12 << "\" font-size=\"11\">longitude -180..180, latitude -90..90; grey: zero</text>\n";
  const int bx = L + h.nlon * cell + 20;
  for (int k = 0; k < 10; ++k)
    s << "<rect x=\"" << bx << "\" y=\"" << T + (9 - k) * 12 << "\" width=\"14\" height=\"12\" fill=\"" << ramp(k / 9.0)
      << "\"/>\n";
  s << "<text x=\"" << bx + 18 << "\" y=\"" << T + 10 << "\" font-size=\"10\">" << (any ? num(hi) : "0") << "</text>\n";
  s << "<text x=\"" << bx + 18 << "\" y=\"" << T + 120 << "\" font-size=\"10\">" << (any ? num(lo) : "0") << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::vector<std::string> emit_report(const VerificationReport& r, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::vector<std::string> paths;
  auto write = [&](const std::filesystem::path& p, const std::string& text) {
    write_text_file(p.string(), text);
    paths.push_back(p.string());
  };
  write(dir / "report.json", report_to_json(r).dump(2) + "\n");
  write(dir / "summary.csv", summary_csv(r));
  if (r.decay) {
    write(dir / "decay.csv", decay_csv(*r.decay));
    write(dir / "plots" / "decay.svg", decay_svg(*r.decay));
  }
  if (r.heatmap) write(dir / "plots" / "deficit_heatmap.svg", heatmap_svg(*r.heatmap));
  return paths;
}

}  // namespace polysmooth
