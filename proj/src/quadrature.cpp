#include "scatsig/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>

#include "scatsig/sphfun.hpp"

namespace scatsig {

Eigen::VectorXd SphereQuadrature::frame_weights() const {
  Eigen::VectorXd w(dim());
  for (int i = 0; i < size(); ++i) {
    w(2 * i) = weights[static_cast<std::size_t>(i)];
    w(2 * i + 1) = weights[static_cast<std::size_t>(i)];
  }
  return w;
}

namespace {

void push_node(SphereQuadrature& q, double cos_theta, double phi, double weight) {
  const double s = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  Vec3 x(s * std::cos(phi), s * std::sin(phi), cos_theta);
  Vec3 th, ph;
  sphfun::spherical_frame(x, th, ph);
  q.nodes.push_back(x);
  q.weights.push_back(weight);
  q.e1.push_back(th);
  q.e2.push_back(ph);
}

}  // namespace

SphereQuadrature build_quadrature(QuadKind kind, int n_theta, int n_phi) {
  if (n_theta < 4) throw ConfigError("quadrature order must be at least 4");
  if (n_phi <= 0) n_phi = 2 * n_theta;
  if (n_phi < 4) throw ConfigError("quadrature azimuth count must be at least 4");

  SphereQuadrature q;
  q.kind = kind;
  q.n_theta = n_theta;
  q.n_phi = n_phi;
  const std::size_t total = static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_phi);
  q.nodes.reserve(total);
  q.weights.reserve(total);
  q.e1.reserve(total);
  q.e2.reserve(total);
  const double dphi = 2.0 * kPi / n_phi;

  if (kind == QuadKind::PRODUCT_GAUSS) {
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
        gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n_theta)),
        &gsl_integration_glfixed_table_free);
    if (!table) throw NumericError("Gauss-Legendre table allocation failed");
    for (int a = 0; a < n_theta; ++a) {
      double x = 0.0, w = 0.0;
      gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(a), &x, &w, table.get());
      for (int b = 0; b < n_phi; ++b) push_node(q, x, b * dphi, w * dphi);
    }
    q.t = std::min(2 * n_theta - 1, n_phi - 1);
  } else {
    const double dz = 2.0 / n_theta;
    const double w = 4.0 * kPi / static_cast<double>(total);
    for (int a = 0; a < n_theta; ++a) {
      const double z = 1.0 - (a + 0.5) * dz;
      // Stagger alternate bands so nodes do not line up in meridians.
      const double shift = (a % 2 == 0) ? 0.0 : 0.5 * dphi;
      for (int b = 0; b < n_phi; ++b) push_node(q, z, b * dphi + shift, w);
    }
    q.t = 1;
  }
  return q;
}

std::pair<int, int> parse_quad_spec(const std::string& spec) {
  const auto x = spec.find('x');
  try {
    std::size_t used = 0;
    if (x == std::string::npos) {
      const int nt = std::stoi(spec, &used);
      if (used != spec.size()) throw ConfigError("bad quadrature spec '" + spec + "'");
      return {nt, 2 * nt};
    }
    const std::string a = spec.substr(0, x);
    const std::string b = spec.substr(x + 1);
    const int nt = std::stoi(a, &used);
    if (used != a.size()) throw ConfigError("bad quadrature spec '" + spec + "'");
    const int np = std::stoi(b, &used);
    if (used != b.size()) throw ConfigError("bad quadrature spec '" + spec + "'");
    return {nt, np};
  } catch (const std::logic_error&) {
    throw ConfigError("bad quadrature spec '" + spec + "'");
  }
}

TangentField to_frame(const SphereQuadrature& q, const std::vector<CVec3>& values) {
  if (static_cast<int>(values.size()) != q.size()) throw std::invalid_argument("to_frame: size mismatch");
  TangentField g(q.dim());
  for (int i = 0; i < q.size(); ++i) {
    const auto& v = values[static_cast<std::size_t>(i)];
    g(2 * i) = bdot(complexify(q.e1[static_cast<std::size_t>(i)]), v);
    g(2 * i + 1) = bdot(complexify(q.e2[static_cast<std::size_t>(i)]), v);
  }
  return g;
}

}  // namespace scatsig
