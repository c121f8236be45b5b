#include "scatsig/forward.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <limits>
#include <memory>

#include "scatsig/oracles.hpp"

namespace scatsig::forward {

using sphfun::mode_count;
using sphfun::mode_offset;
using sphfun::RiccatiPair;

void MediumSpec::validate() const {
  if (layers.empty()) throw ConfigError("medium: at least one layer is required");
  double prev = 0.0;
  for (const auto& layer : layers) {
    if (!std::isfinite(layer.r) || layer.r <= prev)
      throw ConfigError("medium: layer radii must be positive and strictly increasing");
    if (!std::isfinite(layer.n.real()) || !std::isfinite(layer.n.imag()) || layer.n.real() <= 0.0)
      throw ConfigError("medium: Re n must be positive");
    if (layer.n.imag() < 0.0) throw ConfigError("medium: Im n must be nonnegative");
    prev = layer.r;
  }
}

nlohmann::json medium_to_json(const MediumSpec& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers) layers.push_back({{"r", l.r}, {"n_re", l.n.real()}, {"n_im", l.n.imag()}});
  return {{"layers", layers}};
}

MediumSpec medium_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("medium: expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "layers") throw ConfigError("medium: unknown key '" + key + "'");
  }
  if (!j.contains("layers") || !j.at("layers").is_array()) throw ConfigError("medium: 'layers' array is required");
  MediumSpec m;
  for (const auto& item : j.at("layers")) {
    if (!item.is_object()) throw ConfigError("medium: each layer must be an object");
    Layer layer{0.0, {0.0, 0.0}};
    bool has_r = false, has_re = false;
    for (const auto& [key, value] : item.items()) {
      if (!value.is_number()) throw ConfigError("medium: layer key '" + key + "' must be a number");
      if (key == "r") {
        layer.r = value.get<double>();
        has_r = true;
      } else if (key == "n_re") {
        layer.n.real(value.get<double>());
        has_re = true;
      } else if (key == "n_im") {
        layer.n.imag(value.get<double>());
      } else {
        throw ConfigError("medium: unknown layer key '" + key + "'");
      }
    }
    if (!has_r || !has_re) throw ConfigError("medium: each layer needs 'r' and 'n_re'");
    m.layers.push_back(layer);
  }
  m.validate();
  return m;
}

int truncation_degree(double k, double a) {
  const double x = k * a;
  return std::max(1, static_cast<int>(std::ceil(x + 4.0 * std::cbrt(x) + 6.0)));
}

namespace {

struct Interfaces {
  std::vector<double> radii;
  std::vector<cd> m;  // radii.size() + 1 entries
};

Interfaces interfaces_of(const MediumSpec& medium) {
  medium.validate();
  Interfaces f;
  for (const auto& layer : medium.layers) {
    f.radii.push_back(layer.r);
    f.m.push_back(std::sqrt(layer.n));
  }
  f.m.push_back(1.0);
  return f;
}

// Coefficients for every degree 1..L and every layer, computed with one
// Riccati evaluation per interface side. Result index: [l][layer].
struct Profiles {
  std::vector<std::vector<LayerCoeffs>> te, tm;
};

void step(LayerCoeffs in, const RiccatiPair& a, const RiccatiPair& b, cd m_in, cd m_out, bool te,
          LayerCoeffs& out) {
  const cd f = in.A * a.psi + in.C * a.xi;
  const cd df = in.A * a.dpsi + in.C * a.dxi;
  if (te) {
    // f/m and f' are continuous.
    const cd P = f / m_in;
    const cd Q = df;
    out.A = (m_out * P * b.dxi - Q * b.xi) / kI;
    out.C = (Q * b.psi - m_out * P * b.dpsi) / kI;
  } else {
    // f'/m and f are continuous.
    const cd P = df / m_in;
    const cd Q = f;
    out.A = (Q * b.dxi - m_out * P * b.xi) / kI;
    out.C = (m_out * P * b.psi - Q * b.dpsi) / kI;
  }
}

void rescale(std::vector<LayerCoeffs>& layers, std::size_t upto) {
  const double s = std::max(std::abs(layers[upto].A), std::abs(layers[upto].C));
  if (s == 0.0 || !std::isfinite(s)) return;
  for (std::size_t j = 0; j <= upto; ++j) {
    layers[j].A /= s;
    layers[j].C /= s;
  }
}

Profiles transfer_all(const Interfaces& f, double k, int L) {
  const std::size_t J = f.radii.size();
  Profiles out;
  out.te.assign(static_cast<std::size_t>(L) + 1, std::vector<LayerCoeffs>(J + 1));
  out.tm.assign(static_cast<std::size_t>(L) + 1, std::vector<LayerCoeffs>(J + 1));
  for (std::size_t j = 0; j < J; ++j) {
    const auto in = sphfun::riccati_array(L, f.m[j] * k * f.radii[j]);
    const auto ex = sphfun::riccati_array(L, f.m[j + 1] * k * f.radii[j]);
    for (int l = 1; l <= L; ++l) {
      const auto li = static_cast<std::size_t>(l);
      step(out.te[li][j], in[li], ex[li], f.m[j], f.m[j + 1], true, out.te[li][j + 1]);
      step(out.tm[li][j], in[li], ex[li], f.m[j], f.m[j + 1], false, out.tm[li][j + 1]);
      rescale(out.te[li], j + 1);
      rescale(out.tm[li], j + 1);
    }
  }
  return out;
}

void normalize_exterior(std::vector<LayerCoeffs>& layers) {
  const cd A = layers.back().A;
  if (A == cd{0.0, 0.0} || !std::isfinite(std::abs(A)))
    throw NumericError("layered medium: degenerate exterior amplitude");
  for (auto& c : layers) {
    c.A /= A;
    c.C /= A;
  }
}

bool decayed(const ModalCoefficients& c) {
  const auto L = static_cast<std::size_t>(c.L);
  return std::abs(c.te[L]) <= kDecayTol && std::abs(c.tm[L]) <= kDecayTol;
}

}  // namespace

std::vector<LayerCoeffs> transfer_profile(const std::vector<double>& radii, const std::vector<cd>& m,
                                          double k, int l, bool te) {
  if (m.size() != radii.size() + 1) throw std::invalid_argument("transfer_profile: size mismatch");
  std::vector<LayerCoeffs> layers(radii.size() + 1);
  for (std::size_t j = 0; j < radii.size(); ++j) {
    const auto a = sphfun::riccati_pair(l, m[j] * k * radii[j]);
    const auto b = sphfun::riccati_pair(l, m[j + 1] * k * radii[j]);
    step(layers[j], a, b, m[j], m[j + 1], te, layers[j + 1]);
    rescale(layers, j + 1);
  }
  return layers;
}

ModalCoefficients mie_coefficients(const MediumSpec& medium, double k, int L) {
  if (!(k > 0.0)) throw ConfigError("wave number must be positive");
  if (L < 1 || L > kMaxDegree) throw ConfigError("truncation degree out of range");
  const auto f = interfaces_of(medium);
  auto prof = transfer_all(f, k, L);
  ModalCoefficients c;
  c.L = L;
  c.te.assign(static_cast<std::size_t>(L) + 1, 0.0);
  c.tm.assign(static_cast<std::size_t>(L) + 1, 0.0);
  for (int l = 1; l <= L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    normalize_exterior(prof.te[li]);
    normalize_exterior(prof.tm[li]);
    c.te[li] = prof.te[li].back().C;
    c.tm[li] = prof.tm[li].back().C;
  }
  c.converged = decayed(c);
  return c;
}

ModalCoefficients mie_coefficients(const MediumSpec& medium, double k) {
  medium.validate();
  for (int L = truncation_degree(k, medium.radius()); L <= kMaxDegree; L += 4) {
    auto c = mie_coefficients(medium, k, L);
    if (c.converged) return c;
  }
  throw NumericError("mie_coefficients: series did not converge below degree 200");
}

ModalCoefficients impedance_coefficients(const ImpedanceBall& ball, double k, int L) {
  if (!(k > 0.0)) throw ConfigError("wave number must be positive");
  if (!(ball.R > 0.0)) throw ConfigError("impedance ball radius must be positive");
  if (!std::isfinite(ball.lambda.real()) || !std::isfinite(ball.lambda.imag()))
    throw ConfigError("impedance parameter must be finite");
  const auto rp = sphfun::riccati_array(L, cd{k * ball.R, 0.0});
  ModalCoefficients c;
  c.L = L;
  c.te.assign(static_cast<std::size_t>(L) + 1, 0.0);
  c.tm.assign(static_cast<std::size_t>(L) + 1, 0.0);
  const cd lam = ball.lambda;
  constexpr double kResonanceTol = 1e-13;
  for (int l = 1; l <= L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    const auto s = oracles::s_modal_multiplier(l, ball.R, ball.s_kind);
    const auto& r = rp[li];
    // nu x curl E = lambda S E_T, mode by mode; the exterior profile is psi + T xi.
    const cd den_te = k * r.dxi + lam * s.c_V * r.xi;
    const cd den_tm = k * r.xi - lam * s.c_U * r.dxi;
    const double scale_te = std::abs(k * r.dxi) + std::abs(lam * s.c_V * r.xi);
    const double scale_tm = std::abs(k * r.xi) + std::abs(lam * s.c_U * r.dxi);
    if (std::abs(den_te) <= kResonanceTol * scale_te || std::abs(den_tm) <= kResonanceTol * scale_tm)
      throw NumericError("impedance ball: resonant parameter at degree " + std::to_string(l));
    c.te[li] = -(k * r.dpsi + lam * s.c_V * r.psi) / den_te;
    c.tm[li] = -(k * r.psi - lam * s.c_U * r.dpsi) / den_tm;
  }
  c.converged = decayed(c);
  return c;
}

ModalCoefficients impedance_coefficients(const ImpedanceBall& ball, double k) {
  for (int L = truncation_degree(k, ball.R); L <= kMaxDegree; L += 4) {
    auto c = impedance_coefficients(ball, k, L);
    if (c.converged) return c;
  }
  throw NumericError("impedance_coefficients: series did not converge below degree 200");
}

CVec3 modal_far_field(const ModalCoefficients& c, const Vec3& d, const CVec3& p, const Vec3& xhat) {
  const auto vd = sphfun::vsh_all(c.L, d);
  const auto vx = sphfun::vsh_all(c.L, xhat);
  CVec3 e = CVec3::Zero();
  for (int l = 1; l <= c.L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    for (int m = -l; m <= l; ++m) {
      const auto o = static_cast<std::size_t>(mode_offset(l, m));
      e += c.te[li] * bdot(p, vd[o].V.conjugate()) * vx[o].V;
      e += c.tm[li] * bdot(p, vd[o].U.conjugate()) * vx[o].U;
    }
  }
  return 4.0 * kPi * e;
}

CVec3 electric_far_field(const MediumSpec& medium, double k, const Vec3& d, const CVec3& p, const Vec3& xhat) {
  return modal_far_field(mie_coefficients(medium, k), d, p, xhat);
}

CVec3 magnetic_far_field(const MediumSpec& medium, double k, const Vec3& d, const CVec3& p, const Vec3& xhat) {
  return bcross(complexify(xhat), electric_far_field(medium, k, d, p, xhat));
}

CVec3 magnetic_wave_far_field(const MediumSpec& medium, double k, const Vec3& d, const CVec3& p,
                              const Vec3& xhat) {
  // xhat x V = -U, xhat x U = V and (d x p).conj V(d) = p.conj U(d),
  // (d x p).conj U(d) = -p.conj V(d) turn the electric series into this one.
  const auto c = mie_coefficients(medium, k);
  const auto vd = sphfun::vsh_all(c.L, d);
  const auto vx = sphfun::vsh_all(c.L, xhat);
  CVec3 h = CVec3::Zero();
  for (int l = 1; l <= c.L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    for (int m = -l; m <= l; ++m) {
      const auto o = static_cast<std::size_t>(mode_offset(l, m));
      h += c.te[li] * bdot(p, vd[o].U.conjugate()) * vx[o].U;
      h += c.tm[li] * bdot(p, vd[o].V.conjugate()) * vx[o].V;
    }
  }
  return (-4.0 * kPi * kI / k) * h;
}

CVec3 impedance_far_field(const ImpedanceBall& ball, double k, const Vec3& d, const CVec3& p,
                          const Vec3& xhat) {
  return modal_far_field(impedance_coefficients(ball, k), d, p, xhat);
}

void incident_coefficients(int L, double k, const Vec3& d, const CVec3& p, Eigen::VectorXcd& a,
                           Eigen::VectorXcd& b) {
  const auto vd = sphfun::vsh_all(L, d);
  a.resize(mode_count(L));
  b.resize(mode_count(L));
  cd il = 1.0;
  for (int l = 1; l <= L; ++l) {
    il *= kI;
    for (int m = -l; m <= l; ++m) {
      const auto o = mode_offset(l, m);
      a(o) = 4.0 * kPi * il * kI * k * bdot(p, vd[static_cast<std::size_t>(o)].V.conjugate());
      b(o) = 4.0 * kPi * il * kI * kI * k * bdot(p, vd[static_cast<std::size_t>(o)].U.conjugate());
    }
  }
}

FieldPair modal_field(const sphfun::VshValue& v, int l, cd a_te, cd b_tm, const RadialSample& te,
                      const RadialSample& tm, cd index_root, const Vec3& xhat) {
  const double s = std::sqrt(static_cast<double>(l) * (l + 1));
  const CVec3 x = complexify(xhat);
  // M(f) = f/rho V,  N(f) = -[s f/rho^2 Y xhat + f'/rho U].
  const CVec3 m_te = (te.f / te.rho) * v.V;
  const CVec3 n_te = -(s * te.f / (te.rho * te.rho) * v.Y * x + (te.df / te.rho) * v.U);
  const CVec3 m_tm = (tm.f / tm.rho) * v.V;
  const CVec3 n_tm = -(s * tm.f / (tm.rho * tm.rho) * v.Y * x + (tm.df / tm.rho) * v.U);
  FieldPair out;
  out.E = a_te * m_te + b_tm * n_tm;
  // curl M = kappa N and curl N = kappa M, and kappa/(ik) = -i m.
  out.H = -kI * index_root * (a_te * n_te + b_tm * m_tm);
  return out;
}

LayeredSolution::LayeredSolution(const MediumSpec& medium, double k, int L) : k_(k), L_(L) {
  if (!(k > 0.0)) throw ConfigError("wave number must be positive");
  if (L < 1 || L > kMaxDegree) throw ConfigError("truncation degree out of range");
  const auto f = interfaces_of(medium);
  radii_ = f.radii;
  m_ = f.m;
  auto prof = transfer_all(f, k, L);
  const std::size_t nl = m_.size();
  te_.assign((static_cast<std::size_t>(L) + 1) * nl, LayerCoeffs{});
  tm_.assign((static_cast<std::size_t>(L) + 1) * nl, LayerCoeffs{});
  coeffs_.L = L;
  coeffs_.te.assign(static_cast<std::size_t>(L) + 1, 0.0);
  coeffs_.tm.assign(static_cast<std::size_t>(L) + 1, 0.0);
  for (int l = 1; l <= L; ++l) {
    const auto li = static_cast<std::size_t>(l);
    normalize_exterior(prof.te[li]);
    normalize_exterior(prof.tm[li]);
    for (std::size_t j = 0; j < nl; ++j) {
      te_[idx(l, static_cast<int>(j))] = prof.te[li][j];
      tm_[idx(l, static_cast<int>(j))] = prof.tm[li][j];
    }
    coeffs_.te[li] = prof.te[li].back().C;
    coeffs_.tm[li] = prof.tm[li].back().C;
  }
  coeffs_.converged = decayed(coeffs_);
}

int LayeredSolution::layer_of(double r) const {
  for (std::size_t j = 0; j < radii_.size(); ++j) {
    if (r <= radii_[j]) return static_cast<int>(j);
  }
  return static_cast<int>(radii_.size());
}

double LayeredSolution::inner_radius(int layer) const {
  return layer == 0 ? 0.0 : radii_[static_cast<std::size_t>(layer) - 1];
}

double LayeredSolution::outer_radius(int layer) const {
  return static_cast<std::size_t>(layer) < radii_.size() ? radii_[static_cast<std::size_t>(layer)]
                                                          : std::numeric_limits<double>::infinity();
}

RadialSample LayeredSolution::radial(int l, const LayerCoeffs& c, int layer, double r) const {
  if (!(r > 0.0)) throw std::domain_error("radial profile requires r > 0");
  RadialSample s;
  s.kappa = k_ * m_[static_cast<std::size_t>(layer)];
  s.rho = s.kappa * r;
  const auto p = sphfun::riccati_pair(l, s.rho);
  s.f = c.A * p.psi + c.C * p.xi;
  s.df = c.A * p.dpsi + c.C * p.dxi;
  return s;
}

RadialSample LayeredSolution::radial_te(int l, int layer, double r) const { return radial(l, te(l, layer), layer, r); }

RadialSample LayeredSolution::radial_tm(int l, int layer, double r) const { return radial(l, tm(l, layer), layer, r); }

FieldPair LayeredSolution::assemble(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const Vec3& x,
                                    int layer, bool scattered_only) const {
  const double r = x.norm();
  if (!(r > 0.0)) throw std::domain_error("field evaluation requires |x| > 0");
  if (a.size() < mode_count(L_) || b.size() < mode_count(L_))
    throw std::invalid_argument("field evaluation: coefficient vectors too short");
  if (layer < 0) layer = layer_of(r);
  const Vec3 xhat = x / r;
  const cd mroot = m_[static_cast<std::size_t>(layer)];
  const cd kappa = k_ * mroot;
  const cd rho = kappa * r;
  const auto rp = sphfun::riccati_array(L_, rho);
  const auto vsh = sphfun::vsh_all(L_, xhat);
  FieldPair out{CVec3::Zero(), CVec3::Zero()};
  for (int l = 1; l <= L_; ++l) {
    const auto li = static_cast<std::size_t>(l);
    LayerCoeffs cte = te(l, layer);
    LayerCoeffs ctm = tm(l, layer);
    if (scattered_only) {
      cte.A = 0.0;
      ctm.A = 0.0;
    }
    RadialSample ste{cte.A * rp[li].psi + cte.C * rp[li].xi, cte.A * rp[li].dpsi + cte.C * rp[li].dxi, kappa, rho};
    RadialSample stm{ctm.A * rp[li].psi + ctm.C * rp[li].xi, ctm.A * rp[li].dpsi + ctm.C * rp[li].dxi, kappa, rho};
    for (int m = -l; m <= l; ++m) {
      const auto o = mode_offset(l, m);
      const auto f = modal_field(vsh[static_cast<std::size_t>(o)], l, a(o), b(o), ste, stm, mroot, xhat);
      out.E += f.E;
      out.H += f.H;
    }
  }
  return out;
}

FieldPair LayeredSolution::total_field(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b, const Vec3& x,
                                       int layer) const {
  return assemble(a, b, x, layer, false);
}

FieldPair LayeredSolution::total_field(const Vec3& d, const CVec3& p, const Vec3& x, int layer) const {
  Eigen::VectorXcd a, b;
  incident_coefficients(L_, k_, d, p, a, b);
  return assemble(a, b, x, layer, false);
}

FieldPair LayeredSolution::scattered_field(const Vec3& d, const CVec3& p, const Vec3& x) const {
  if (x.norm() < radii_.back()) throw std::domain_error("scattered field is evaluated outside the scatterer");
  Eigen::VectorXcd a, b;
  incident_coefficients(L_, k_, d, p, a, b);
  return assemble(a, b, x, layer_count() - 1, true);
}

FieldPair dipole_far_fields(const DipoleSource& src, const Vec3& xhat) {
  const cd phase = std::exp(-kI * src.k * xhat.dot(src.z));
  const cd pre = kI * src.k / (4.0 * kPi) * phase;
  const CVec3 x = complexify(xhat);
  const CVec3 xq = bcross(x, src.q);
  return {pre * bcross(xq, x), pre * xq};
}

CVec3 herglotz_field(const SphereQuadrature& q, const TangentField& g, double k, const Vec3& x) {
  if (g.size() != q.dim()) throw std::invalid_argument("herglotz_field: field size mismatch");
  CVec3 v = CVec3::Zero();
  for (int j = 0; j < q.size(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    v += (q.weights[ju] * std::exp(-kI * k * x.dot(q.nodes[ju]))) * field_at(q, g, j);
  }
  return -kI * k * v;
}

double herglotz_ball_norm(const SphereQuadrature& q, const TangentField& g, double k, double radius,
                          const Vec3& center) {
  if (!(radius > 0.0)) throw std::invalid_argument("herglotz_ball_norm: radius must be positive");
  const double kr = k * (radius + center.norm());
  const int nr = std::max(12, static_cast<int>(std::ceil(kr)) + 10);
  const int nt = std::max(10, static_cast<int>(std::ceil(kr)) + 10);
  const auto ang = build_quadrature(QuadKind::PRODUCT_GAUSS, nt);
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(nr)), &gsl_integration_glfixed_table_free);
  double sum = 0.0;
  for (int a = 0; a < nr; ++a) {
    double r = 0.0, wr = 0.0;
    gsl_integration_glfixed_point(0.0, radius, static_cast<std::size_t>(a), &r, &wr, table.get());
    for (int b = 0; b < ang.size(); ++b) {
      const auto bu = static_cast<std::size_t>(b);
      const CVec3 v = herglotz_field(q, g, k, center + r * ang.nodes[bu]);
      sum += wr * r * r * ang.weights[bu] * v.squaredNorm();
    }
  }
  return std::sqrt(sum);
}

}  // namespace scatsig::forward
