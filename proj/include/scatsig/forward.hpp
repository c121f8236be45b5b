#pragma once

// Series solutions for spherically symmetric scatterers.
//
// Fields are expanded in the modal fields of a layer with wave number
// kappa = k m, m = sqrt(n) (principal root):
//   M_lm = z_l(kappa r) V_lm
//   N_lm = curl(M_lm)/kappa = -[ sqrt(l(l+1)) f/rho^2 Y_lm xhat + f'/rho U_lm ]
// with rho = kappa r and f = rho z_l the Riccati function. The incident wave is
// E^i = (i/k) curl curl p e^{ik x.d} = ik p_T e^{ik x.d}; its coefficients are
//   a_lm = 4 pi i^l   ik conj(V_lm(d)).p
//   b_lm = 4 pi i^l+1 ik conj(U_lm(d)).p.
// Outside the scatterer the radial profiles are psi_l + T xi_l, so with the
// large-argument form of xi_l the far field pattern is
//   E_inf(xhat; d, p) = 4 pi sum_lm [ T^M_l (p.conj V_lm(d)) V_lm(xhat)
//                                   + T^N_l (p.conj U_lm(d)) U_lm(xhat) ].
// The electric far field operator therefore acts as 4 pi T on each mode.
// Energy conservation for lossless media gives |1 + 2T| = 1 per mode, which is
// the circle |lambda + 2 pi| = 2 pi; absorption gives |1 + 2T| < 1.

#include <optional>
#include <vector>

#include <json.hpp>

#include "scatsig/common.hpp"
#include "scatsig/quadrature.hpp"
#include "scatsig/sphfun.hpp"

namespace scatsig::forward {

struct Layer {
  double r = 1.0;  // outer radius
  cd n{2.0, 0.0};  // relative index (the coefficient N of the medium)
};

struct MediumSpec {
  std::vector<Layer> layers;

  double radius() const { return layers.empty() ? 0.0 : layers.back().r; }
  // Throws ConfigError unless radii increase strictly, Re n > 0, Im n >= 0.
  void validate() const;
  static MediumSpec single(double a, cd n) { return MediumSpec{{Layer{a, n}}}; }
};

nlohmann::json medium_to_json(const MediumSpec& m);
MediumSpec medium_from_json(const nlohmann::json& j);

struct PlaneWave {
  Vec3 d;
  CVec3 p;
  double k = 1.0;
};

struct DipoleSource {
  Vec3 z;
  CVec3 q;
  double k = 1.0;
};

enum class SKind { IDENTITY, CURL_CURL };

struct ImpedanceBall {
  double R = 1.0;
  cd lambda{1.0, 0.0};
  SKind s_kind = SKind::CURL_CURL;
};

// Per-degree scattering coefficients; index l = 0 is unused.
struct ModalCoefficients {
  int L = 0;
  std::vector<cd> te;  // T^M_l, multiplies the V (curl-type) family
  std::vector<cd> tm;  // T^N_l, multiplies the U (gradient-type) family
  bool converged = false;
};

constexpr double kDecayTol = 1e-14;
constexpr int kMaxDegree = 200;

// Wiscombe-style start value ceil(x + 4 x^{1/3} + 6), x = k a.
int truncation_degree(double k, double a);

// Coefficients at a fixed truncation; `converged` reports the decay test.
ModalCoefficients mie_coefficients(const MediumSpec& medium, double k, int L);
// Starts from truncation_degree and extends until both families have decayed.
// Throws NumericError if kMaxDegree is reached first.
ModalCoefficients mie_coefficients(const MediumSpec& medium, double k);

ModalCoefficients impedance_coefficients(const ImpedanceBall& ball, double k, int L);
ModalCoefficients impedance_coefficients(const ImpedanceBall& ball, double k);

// Far field of the modal expansion for incidence (d, p).
CVec3 modal_far_field(const ModalCoefficients& c, const Vec3& d, const CVec3& p, const Vec3& xhat);

CVec3 electric_far_field(const MediumSpec& medium, double k, const Vec3& d, const CVec3& p, const Vec3& xhat);
// H_inf = xhat x E_inf.
CVec3 magnetic_far_field(const MediumSpec& medium, double k, const Vec3& d, const CVec3& p, const Vec3& xhat);
// Kernel of the magnetic far field operator: H_inf(xhat; d, (i/k) d x p), the
// magnetic far field for an incident wave whose magnetic polarization is p.
CVec3 magnetic_wave_far_field(const MediumSpec& medium, double k, const Vec3& d, const CVec3& p,
                              const Vec3& xhat);
CVec3 impedance_far_field(const ImpedanceBall& ball, double k, const Vec3& d, const CVec3& p,
                          const Vec3& xhat);

// Incident coefficients (a_lm, b_lm) ordered by sphfun::mode_offset.
void incident_coefficients(int L, double k, const Vec3& d, const CVec3& p, Eigen::VectorXcd& a,
                           Eigen::VectorXcd& b);

struct FieldPair {
  CVec3 E;
  CVec3 H;
};

// Radial profile in one layer: f = A psi(kappa r) + C xi(kappa r).
struct LayerCoeffs {
  cd A{1.0, 0.0};
  cd C{0.0, 0.0};
};

struct RadialSample {
  cd f, df;   // Riccati profile and its derivative in rho
  cd kappa;   // k m of the layer
  cd rho;     // kappa r
};

// Layer-by-layer coefficients for each degree, normalized so the exterior
// profile is psi + T xi. Layer index layers.size() is the exterior.
class LayeredSolution {
 public:
  LayeredSolution(const MediumSpec& medium, double k, int L);

  int L() const { return L_; }
  double k() const { return k_; }
  int layer_count() const { return static_cast<int>(m_.size()); }  // including exterior
  int layer_of(double r) const;
  cd index_root(int layer) const { return m_[static_cast<std::size_t>(layer)]; }
  double inner_radius(int layer) const;
  double outer_radius(int layer) const;  // infinity for the exterior
  const ModalCoefficients& coefficients() const { return coeffs_; }
  const LayerCoeffs& te(int l, int layer) const { return te_[idx(l, layer)]; }
  const LayerCoeffs& tm(int l, int layer) const { return tm_[idx(l, layer)]; }

  // Profiles of the TE and TM families at radius r > 0 inside `layer`.
  RadialSample radial_te(int l, int layer, double r) const;
  RadialSample radial_tm(int l, int layer, double r) const;

  // Total field for modal incident coefficients; layer < 0 picks the layer
  // containing x. Requires |x| > 0.
  FieldPair total_field(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const Vec3& x,
                        int layer = -1) const;
  FieldPair total_field(const Vec3& d, const CVec3& p, const Vec3& x, int layer = -1) const;
  // Scattered field outside the scatterer.
  FieldPair scattered_field(const Vec3& d, const CVec3& p, const Vec3& x) const;

 private:
  std::size_t idx(int l, int layer) const {
    return static_cast<std::size_t>(l) * m_.size() + static_cast<std::size_t>(layer);
  }
  RadialSample radial(int l, const LayerCoeffs& c, int layer, double r) const;
  FieldPair assemble(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const Vec3& x, int layer,
                     bool scattered_only) const;

  double k_;
  int L_;
  std::vector<double> radii_;  // outer radius per interior layer
  std::vector<cd> m_;          // per layer, exterior last
  std::vector<LayerCoeffs> te_, tm_;
  ModalCoefficients coeffs_;
};

// Transfers a regular profile (1, 0) in the innermost layer out through the
// given interfaces. radii[j] is the outer radius of layer j; m has one more
// entry than radii (the layer outside the last interface). Returns the
// coefficient pair per layer, unnormalized. `te` selects the family.
std::vector<LayerCoeffs> transfer_profile(const std::vector<double>& radii, const std::vector<cd>& m,
                                          double k, int l, bool te);

// E and H of one (l, m) term: a_te M(f_te) + b_tm N(f_tm) in a layer with
// index root m; H = curl E / (ik). Exposed so oracles can rebuild eigenfunctions.
FieldPair modal_field(const sphfun::VshValue& v, int l, cd a_te, cd b_tm, const RadialSample& te,
                      const RadialSample& tm, cd index_root, const Vec3& xhat);

// Far fields of a point dipole at z:
//   E = (ik/4pi) (xhat x q) x xhat e^{-ik xhat.z},  H = (ik/4pi) (xhat x q) e^{-ik xhat.z}.
FieldPair dipole_far_fields(const DipoleSource& src, const Vec3& xhat);

// v_g(x) = -ik sum_j w_j g(d_j) e^{-ik x.d_j}.
CVec3 herglotz_field(const SphereQuadrature& q, const TangentField& g, double k, const Vec3& x);

// ||v_g||_{L^2(ball)} by Gauss-Legendre in r and a product Gauss rule in angle.
double herglotz_ball_norm(const SphereQuadrature& q, const TangentField& g, double k, double radius,
                          const Vec3& center);

}  // namespace scatsig::forward
