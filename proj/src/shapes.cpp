#include "polysmooth/shapes.hpp"

namespace polysmooth {

Polytope unit_cube(int n, double side) {
  std::vector<Vec> normals;
  std::vector<double> offsets;
  for (int i = 0; i < n; ++i) {
    normals.push_back(Vec::Unit(n, i));
    offsets.push_back(-side);
  }
  for (int i = 0; i < n; ++i) {
    normals.push_back(-Vec::Unit(n, i));
    offsets.push_back(0.0);
  }
  return Polytope(n, normals, offsets);
}

Polytope regular_simplex(double inradius) {
  const double s = 1.0 / std::sqrt(3.0);
  std::vector<Vec> normals = {Vec::Constant(3, s), Vec(3), Vec(3), Vec(3)};
  normals[1] << s, -s, -s;
  normals[2] << -s, s, -s;
  normals[3] << -s, -s, s;
  return Polytope(3, normals, std::vector<double>(4, -inradius));
}

Polytope half_space(const Vec& normal, double offset) {
  return Polytope(static_cast<int>(normal.size()), {normal}, {offset});
}

}  // namespace polysmooth
