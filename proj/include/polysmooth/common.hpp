#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace polysmooth {

template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VecX<double>;
using Mat = MatX<double>;

// Errors are split by how the CLI should react: configuration/assumption
// problems exit with 2, everything else that escapes is internal (3).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct AssumptionError : Error {
  using Error::Error;
};
struct UnboundedPolytopeError : AssumptionError {
  using AssumptionError::AssumptionError;
};
struct EmptyInteriorError : AssumptionError {
  using AssumptionError::AssumptionError;
};
struct LpError : Error {
  using Error::Error;
};
struct DegeneracyError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct VanishingGradientError : Error {
  using Error::Error;
};
struct NonConvexError : Error {
  using Error::Error;
};
struct InternalError : Error {
  using Error::Error;
};

inline std::string format_point(const Vec& x) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(x[i]);
  }
  return s + ")";
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace polysmooth
