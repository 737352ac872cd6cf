#pragma once

#include "polysmooth/gaussmap.hpp"
#include "polysmooth/metric.hpp"
#include "polysmooth/polytope.hpp"
#include "polysmooth/smoothing.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace polysmooth {

// Chebyshev centre of the polytope; throws EmptyInteriorError if the margin
// is not positive.
Vec interior_center(const Polytope& P);

struct RadialHit {
  double t = 0.0;
  Vec x;
  double slope = 0.0;  // d/dt of the smoothed function along the ray at the root
};

// Root of t -> uhat_q(p0 + t w) on t > 0. A positive `t_guess` seeds a local
// bracket; the global bracket by doubling is used when that fails.
RadialHit radial_intersect(const Vec& p0, const Vec& w, const SmoothingSchedule& S, const Polytope& P,
                           double t_guess = -1.0, const EtaKernel& K = EtaKernel::standard());

// Unit directions with cell weights summing to the sphere's area. Triangles
// are present for the icosphere only.
struct DirectionSet {
  std::vector<Vec> dirs;
  std::vector<double> weights;
  std::vector<std::array<int, 3>> triangles;
  int dim() const { return dirs.empty() ? 0 : static_cast<int>(dirs.front().size()); }
};

DirectionSet icosphere(int level);
DirectionSet circle_directions(std::size_t count);
// Equal-weight cells from an unscrambled Sobol sequence mapped through the
// Gaussian inverse CDF.
DirectionSet sobol_directions(int n, std::size_t count);
// icosphere(level) for n = 3, 8 * 2^level points on the circle, and
// 10 * 4^level + 2 Sobol points for n >= 4.
DirectionSet default_directions(int n, int level);

double sphere_area(int n);  // |S^{n-1}|
double ball_volume(int m);  // volume of the unit m-ball

// Area of a star-shaped level set {f = 0} around p0 by the radial-graph rule.
double radial_surface_area(const std::function<double(const Vec&)>& f, const std::function<Vec(const Vec&)>& grad,
                           const Vec& p0, const DirectionSet& dirs);

// Points of the smoothed boundary on the great arc from direction a to
// direction b (seen from p0) where the level-k gap uhat_{k-1} - u_k takes
// `count` evenly spread values in (-spread/l_k, spread/l_k). Targets the arc
// does not bracket (gap must fall from a to b) are skipped.
std::vector<Vec> band_surface_points(const Polytope& P, const SmoothingSchedule& S, const Vec& p0, const Vec& a,
                                     const Vec& b, int k, int count, double spread,
                                     const EtaKernel& K = EtaKernel::standard());

enum class RegionKind { F, E, G };

struct RegionLabel {
  RegionKind kind = RegionKind::F;
  int i = -1, j = -1, k = 0;  // F(k), E(j,k), G(i,j,k)
  bool operator==(const RegionLabel&) const = default;
};
std::string to_string(const RegionLabel& l);

constexpr double kSurfaceTol = 1e-10;  // |uhat_q| on accepted surface points
constexpr double kSlabSlack = 1e-12;   // slack for the re-checked slab inequalities

// Deterministic region label from the level cascade; the defining inequalities
// of the returned set are re-checked and a DomainError is thrown on failure.
RegionLabel classify(const Vec& x, const SmoothingSchedule& S, const Polytope& P,
                     const EtaKernel& K = EtaKernel::standard());

// Re-evaluates the defining inequalities of `label` at x; on failure `why`
// names the first violated one.
bool label_holds(const RegionLabel& label, const Vec& x, const SmoothingSchedule& S, const Polytope& P,
                 std::string* why = nullptr, const EtaKernel& K = EtaKernel::standard());

struct TraceNorm {
  double value = 0.0;
  bool flagged = false;
  double richardson_gap = 0.0;  // finite-difference variant only
};

// Sum of singular values of dNhat_q restricted to a g-orthonormal tangent
// frame of the level set through x, with the Euclidean metric on the sphere.
// Differentiates the recursion in forward mode; flagged when x lies outside
// the domain of Nhat_q or the result is not finite.
TraceNorm dnhat_trace_norm(const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                           const EtaKernel& K = EtaKernel::standard());

// Central differences along the frame with step h and h/2, combined by
// Richardson extrapolation; flagged when the two differ by more than 1e-3
// relative.
TraceNorm dnhat_trace_norm_fd(const Vec& x, const SmoothingSchedule& S, const Polytope& P, const MetricField& metric,
                              double h, const EtaKernel& K = EtaKernel::standard());

// Area density with respect to the direction measure: t^{n-1} |grad| / <grad, w>
// times the g/Euclidean Gram ratio of the tangent space.
struct AreaDensity {
  double euclidean = 0.0;
  double g = 0.0;
};

struct SurfaceSample {
  Vec omega;
  double t = 0.0;
  Vec x;
  RegionLabel label;
  Vec nu;     // g-unit normal of the smoothed level set
  Vec N;      // Nhat_q
  double H = 0.0;
  double trace_norm = 0.0;
  double deficit = 0.0;  // max(trace_norm - H, 0)
  double weight = 0.0;   // g-area
  double euclidean_weight = 0.0;
  AreaDensity density;
  bool flagged = false;
  std::vector<double> gaps;  // uhat_{m-1} - u_m for m = 1..q
};

// Weighted point used for integrals of the deficit.
struct QuadNode {
  Vec x;
  double deficit = 0.0;
  double weight = 0.0;
  bool flagged = false;
};

struct MeshOptions {
  bool band_resolved = true;  // refine cells crossed by a transition band (n = 3)
  int outer_points = 8;       // Gauss points per outer sub-interval
  int inner_points = 8;       // Gauss points per inner sub-interval
};

struct SurfaceMesh {
  Vec center;
  std::vector<SurfaceSample> samples;
  std::vector<std::array<int, 3>> triangles;
  double total_area = 0.0;      // g-area
  double euclidean_area = 0.0;
  std::size_t flagged = 0;
  std::size_t band_cells = 0;
  double resolved_area = 0.0;  // g-area from the band-resolved rule
  std::vector<QuadNode> deficit_nodes;  // off-band sample weights plus band nodes
};

// Surface point data for direction w (no weight): root, label, normals, H,
// trace norm and deficit.
SurfaceSample evaluate_surface_point(const Vec& p0, const Vec& w, const SmoothingSchedule& S, const Polytope& P,
                                     const MetricField& metric, double t_guess = -1.0,
                                     const EtaKernel& K = EtaKernel::standard());

AreaDensity area_density(const SurfaceSample& s, const SmoothingSchedule& S, const Polytope& P,
                         const MetricField& metric, const EtaKernel& K = EtaKernel::standard());

SurfaceMesh build_mesh(const Polytope& P, const SmoothingSchedule& S, const MetricField& metric,
                       const DirectionSet& dirs, const MeshOptions& opt = {},
                       const EtaKernel& K = EtaKernel::standard());

struct MorreyRow {
  Vec center;
  double radius = 0.0;
  double value = 0.0;
};

struct MorreyEstimate {
  double sigma = 0.0;
  std::vector<MorreyRow> rows;
  double sup_value = 0.0;
  std::size_t sup_row = 0;
  std::size_t excluded_flagged = 0;
};

// Admissible exponents (1, q/(q-1)); for q <= 1 the interval is (1, inf).
bool sigma_admissible(double sigma, int q);

std::vector<double> dyadic_radii(int levels = 8);
// Every `stride`-th mesh point plus `extra` uniform points of the bounding box.
std::vector<Vec> default_morrey_centers(const SurfaceMesh& mesh, std::uint64_t seed, std::size_t stride = 8,
                                        std::size_t extra = 64);

// Throws ConfigError for an inadmissible sigma unless `override_sigma` is set.
MorreyEstimate morrey_norm(const SurfaceMesh& mesh, double sigma, const std::vector<Vec>& centers,
                           const std::vector<double>& radii, int q, bool override_sigma = false);

struct AreaParams {
  std::size_t lines = 200000;
  std::uint64_t seed = 1;
  std::size_t convexity_checks = 256;
};

struct AreaEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t lines = 0;
  std::size_t hits = 0;
};

// (m-1)-measure of {f = 0} inside B_r(p) for convex f by Crofton's formula:
// random chords of the ball in uniform directions, counting sign changes of f.
// `keep`, when set, restricts the count to crossing points it accepts. Throws
// NonConvexError if a random midpoint test fails.
AreaEstimate levelset_area_in_ball(const std::function<double(const Vec&)>& f, const Vec& p, double r,
                                   const AreaParams& params = {},
                                   const std::function<bool(const Vec&)>& keep = {});

// Constant of the level-set area bound: 2 |B^{m-1}| / E|<w, e>|.
double levelset_area_constant(int m);

// Area of the smoothed boundary inside the level-k transition slab
// {-2/l_k <= uhat_{k-1} <= 0} and {-2/l_k <= u_k <= 0}, within B_r(p).
AreaEstimate band_area_in_ball(const Polytope& P, const SmoothingSchedule& S, int k, const Vec& p, double r,
                               const AreaParams& params = {}, const EtaKernel& K = EtaKernel::standard());

// Same slab further intersected with {-4/l_0 <= u_j <= 0} and {-6/l_0 <= u_i <= 0}.
AreaEstimate triple_band_area_in_ball(const Polytope& P, const SmoothingSchedule& S, int i, int j, int k,
                                      const Vec& p, double r, const AreaParams& params = {},
                                      const EtaKernel& K = EtaKernel::standard());

}  // namespace polysmooth
