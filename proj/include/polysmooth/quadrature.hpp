#pragma once

#include "polysmooth/common.hpp"

#include <vector>

namespace polysmooth {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule (Newton iteration on the Legendre recurrence).
GaussRule gauss_legendre(int n);

}  // namespace polysmooth
