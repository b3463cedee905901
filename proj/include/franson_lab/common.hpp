#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace franson_lab {

using cplx = std::complex<double>;
using Matrix4c = Eigen::Matrix<cplx, 4, 4>;
using Vector4c = Eigen::Matrix<cplx, 4, 1>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Raised when an input violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by curve fits that cannot produce a meaningful estimate.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the likelihood reconstruction when no restart converges.
class MleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an experiment or run configuration fails validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

/// Wraps an angle into [0, 2pi).
inline double wrap_phase(double phi) {
  double w = std::fmod(phi, two_pi);
  if (w < 0.0) w += two_pi;
  // fmod can return exactly two_pi after the correction for tiny negatives
  return w >= two_pi ? 0.0 : w;
}

/// Wraps an angle into (-pi, pi].
inline double wrap_phase_signed(double phi) {
  double w = wrap_phase(phi);
  return w > pi ? w - two_pi : w;
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

}  // namespace franson_lab
