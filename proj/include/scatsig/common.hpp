#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace scatsig {

using cd = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cd kI{0.0, 1.0};

// Failure classes. The CLI maps each one to its own exit status.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline CVec3 complexify(const Vec3& v) { return v.cast<cd>(); }

// Bilinear dot product (no conjugation), as used for polarization contractions.
inline cd bdot(const CVec3& a, const CVec3& b) { return a.transpose() * b; }

// Plain cross product. Eigen's cross() conjugates the result for complex
// scalars, which is never what the field formulas mean.
inline CVec3 bcross(const CVec3& a, const CVec3& b) {
  return CVec3(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0));
}

}  // namespace scatsig
