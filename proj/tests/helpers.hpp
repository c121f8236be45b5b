#pragma once

#include <cmath>
#include <complex>
#include <memory>

#include "scatsig/common.hpp"
#include "scatsig/quadrature.hpp"
#include "scatsig/rng.hpp"

namespace th {

using scatsig::cd;
using scatsig::CVec3;
using scatsig::Vec3;

inline double rel(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline Vec3 random_unit(scatsig::rng::Stream& s) {
  Vec3 v(s.normal(), s.normal(), s.normal());
  return v.normalized();
}

inline CVec3 random_cvec(scatsig::rng::Stream& s) {
  CVec3 v;
  for (int i = 0; i < 3; ++i) v(i) = cd{s.normal(), s.normal()};
  return v;
}

inline Eigen::VectorXcd random_field(scatsig::rng::Stream& s, int n) {
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = cd{s.normal(), s.normal()};
  return v;
}

inline std::shared_ptr<const scatsig::SphereQuadrature> gauss(int nt, int np = 0) {
  return std::make_shared<const scatsig::SphereQuadrature>(
      scatsig::build_quadrature(scatsig::QuadKind::PRODUCT_GAUSS, nt, np));
}

// Rotation matrix from an axis-angle pair.
inline Eigen::Matrix3d rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

}  // namespace th
