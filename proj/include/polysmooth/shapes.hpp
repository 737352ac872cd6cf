#pragma once

#include "polysmooth/polytope.hpp"

namespace polysmooth {

// [0, side]^n with faces ordered x_1 <= side, ..., x_n <= side, -x_1 <= 0, ..., -x_n <= 0.
Polytope unit_cube(int n = 3, double side = 1.0);

// Regular tetrahedron centred at the origin with the given inradius.
Polytope regular_simplex(double inradius = 0.5);

// Single face u(x) = <normal, x> + offset (unbounded; for smoke tests).
Polytope half_space(const Vec& normal, double offset);

}  // namespace polysmooth
