#pragma once

// Quadrature rules on the unit sphere with per-node tangent frames, and the
// nodal representation of tangential vector fields built on them.

#include <string>
#include <vector>

#include "scatsig/common.hpp"

namespace scatsig {

enum class QuadKind { PRODUCT_GAUSS, EQUAL_AREA };

struct SphereQuadrature {
  QuadKind kind = QuadKind::PRODUCT_GAUSS;
  int n_theta = 0;
  int n_phi = 0;
  int t = 0;  // exactness degree for spherical harmonics
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  std::vector<Vec3> e1;  // theta-hat
  std::vector<Vec3> e2;  // phi-hat

  int size() const { return static_cast<int>(nodes.size()); }
  int dim() const { return 2 * size(); }
  // Weight for each frame coordinate (i, s), index 2i + s.
  Eigen::VectorXd frame_weights() const;
};

// PRODUCT_GAUSS: n_theta Gauss-Legendre nodes in cos(theta) times n_phi
// uniform azimuths; t = min(2 n_theta - 1, n_phi - 1).
// EQUAL_AREA: n_theta bands of equal area with n_phi points each, all
// weights equal; midpoint rule in cos(theta), so only t = 1 is claimed.
// n_phi <= 0 selects 2 n_theta. Throws ConfigError for n_theta < 4.
SphereQuadrature build_quadrature(QuadKind kind, int n_theta, int n_phi = 0);

// Parses "16x32" (or "16") into (n_theta, n_phi).
std::pair<int, int> parse_quad_spec(const std::string& spec);

// A tangential field sampled at the nodes: entry 2i + s is the coefficient of
// frame vector e^(s+1) at node i.
using TangentField = Eigen::VectorXcd;

inline CVec3 field_at(const SphereQuadrature& q, const TangentField& g, int i) {
  return g(2 * i) * complexify(q.e1[static_cast<std::size_t>(i)]) +
         g(2 * i + 1) * complexify(q.e2[static_cast<std::size_t>(i)]);
}

// Projects a 3-vector field given per node onto the frame coordinates.
TangentField to_frame(const SphereQuadrature& q, const std::vector<CVec3>& values);

}  // namespace scatsig
