#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shc {

constexpr int kMaxDim = 8;

/// Point or direction in R^d, stack-allocated up to kMaxDim.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::MatrixXd;

constexpr double kPi = std::numbers::pi;

// Error hierarchy. Every failure the library reports derives from shc::Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArgumentError : Error {
  using Error::Error;
};
struct InvalidProfileError : Error {
  using Error::Error;
};
struct InvalidModelError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct DegenerateScaleError : Error {
  using Error::Error;
};
struct BracketError : Error {
  using Error::Error;
};
struct OutOfRangeError : Error {
  using Error::Error;
};
struct IndeterminateClassificationError : Error {
  using Error::Error;
};
struct ClassificationConflictError : Error {
  using Error::Error;
};
struct NonUniqueProjectionError : Error {
  using Error::Error;
};
struct QualityError : Error {
  using Error::Error;
};
struct DivergentPerimeterError : Error {
  using Error::Error;
};
struct PreconditionError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

/// Surface area of the unit sphere S^{d-1}: 2 pi^{d/2} / Gamma(d/2).
inline double omega(int d) {
  return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Lebesgue measure of the unit ball in R^d.
inline double unit_ball_volume(int d) { return omega(d) / d; }

inline Vec zero_vec(int d) { return Vec::Zero(d); }

inline Vec unit_vec(int d, int axis) {
  Vec v = Vec::Zero(d);
  v[axis] = 1.0;
  return v;
}

}  // namespace shc
