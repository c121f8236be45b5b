#include "scatsig/oracles.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace scatsig::oracles {

using forward::LayerCoeffs;
using forward::RadialSample;

SMultiplier s_modal_multiplier(int l, double R, forward::SKind kind) {
  if (l < 1) throw std::invalid_argument("s_modal_multiplier: l must be >= 1");
  if (!(R > 0.0)) throw std::invalid_argument("s_modal_multiplier: R must be positive");
  if (kind == forward::SKind::IDENTITY) return {1.0, 1.0};
  // curl_S U = 0, so S U = 0. For V: curl_S V = -sqrt(l(l+1)) Y / R, the
  // Laplace-Beltrami solve gives q = R Y / sqrt(l(l+1)) and vec curl q = -V.
  // The sign is fixed so that S >= 0; R cancels.
  return {0.0, 1.0};
}

const char* family_name(Family f) { return f == Family::TE ? "TE" : "TM"; }

namespace {

struct CauchyPair {
  cd a11, a12, a21, a22;  // columns: interior medium, free space
};

CauchyPair matching_matrix(double a, cd n, int l, Family family, double k) {
  if (n == cd{1.0, 0.0}) throw ConfigError("transmission determinant: n = 1 is degenerate");
  if (!(k > 0.0)) throw ConfigError("transmission determinant: k must be positive");
  const cd m = std::sqrt(n);
  const auto pi = sphfun::riccati_pair(l, m * k * a);
  const auto p0 = sphfun::riccati_pair(l, cd{k * a, 0.0});
  // TE: psi_n/m = psi_0, psi_n' = psi_0'. TM: psi_n'/m = psi_0', psi_n = psi_0.
  if (family == Family::TE) return {pi.psi, -m * p0.psi, pi.dpsi, -p0.dpsi};
  return {pi.dpsi, -m * p0.dpsi, pi.psi, -p0.psi};
}

}  // namespace

cd tev_determinant(double a, cd n, int l, Family family, double k) {
  const auto M = matching_matrix(a, n, l, family, k);
  const double c1 = std::sqrt(std::norm(M.a11) + std::norm(M.a21));
  const double c2 = std::sqrt(std::norm(M.a12) + std::norm(M.a22));
  const cd det = M.a11 * M.a22 - M.a12 * M.a21;
  // Sign chosen so TE reads psi(mka) psi'(ka) - m psi'(mka) psi(ka).
  return -det / (c1 * c2);
}

double tev_matching_sigma_min(double a, cd n, int l, Family family, double k) {
  const auto M = matching_matrix(a, n, l, family, k);
  Eigen::Matrix2cd A;
  A << M.a11, M.a12, M.a21, M.a22;
  A.col(0).normalize();
  A.col(1).normalize();
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(A);
  return svd.singularValues()(1);
}

std::vector<TevRoot> tev_roots(double a, double n, int l_max, double k_lo, double k_hi, double step) {
  if (!(k_lo > 0.0) || !(k_hi > k_lo)) throw ConfigError("tev_roots: need 0 < k_lo < k_hi");
  if (!(step > 0.0) || step > 0.01) step = 0.01;
  if (n == 1.0) throw ConfigError("transmission determinant: n = 1 is degenerate");
  const int count = static_cast<int>(std::ceil((k_hi - k_lo) / step));
  const double h = (k_hi - k_lo) / count;
  std::vector<TevRoot> roots;
  for (int l = 1; l <= l_max; ++l) {
    for (Family fam : {Family::TE, Family::TM}) {
      auto f = [&](double k) { return tev_determinant(a, cd{n, 0.0}, l, fam, k).real(); };
      double k0 = k_lo;
      double f0 = f(k0);
      for (int i = 1; i <= count; ++i) {
        const double k1 = k_lo + i * h;
        const double f1 = f(k1);
        if (f0 == 0.0) {
          roots.push_back({k0, l, fam});
        } else if ((f0 < 0.0) != (f1 < 0.0) && f1 != 0.0) {
          double lo = k0, hi = k1, flo = f0;
          while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            const double fm = f(mid);
            if (fm == 0.0) {
              lo = hi = mid;
              break;
            }
            if ((fm < 0.0) == (flo < 0.0)) {
              lo = mid;
              flo = fm;
            } else {
              hi = mid;
            }
          }
          roots.push_back({0.5 * (lo + hi), l, fam});
        }
        k0 = k1;
        f0 = f1;
      }
    }
  }
  std::sort(roots.begin(), roots.end(), [](const TevRoot& x, const TevRoot& y) { return x.k < y.k; });
  return roots;
}

double first_tev(double a, double n, int l_max, double k_lo, double k_cap) {
  // Extend the search window until a root appears.
  double lo = k_lo;
  while (lo < k_cap) {
    const double hi = std::min(k_cap, lo + 4.0);
    const auto roots = tev_roots(a, n, l_max, lo, hi);
    if (!roots.empty()) return roots.front().k;
    lo = hi;
  }
  throw NumericError("first_tev: no transmission eigenvalue below the search cap");
}

double index_bound_from_tev(double k1_measured, double a, double n_lo, double n_hi, int l_max) {
  if (!(k1_measured > 0.0)) throw ConfigError("index_bound: k1 must be positive");
  if (!(n_lo > 0.0) || !(n_hi > n_lo)) throw ConfigError("index_bound: need 0 < n_lo < n_hi");
  if (n_lo < 1.0 && n_hi > 1.0) throw ConfigError("index_bound: search interval must not contain n = 1");
  // Roots beyond the cap count as +infinity; k1 grows without bound as n -> 1.
  const double cap = 2.0 * k1_measured + 10.0;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  auto g = [&](double n) {
    try {
      return first_tev(a, n, l_max, 0.05, cap) - k1_measured;
    } catch (const NumericError&) {
      return kInf;
    }
  };

  // Monotonicity check on a coarse sample of the interval.
  constexpr int kSamples = 5;
  std::vector<double> vals;
  for (int i = 0; i <= kSamples; ++i) vals.push_back(g(n_lo + (n_hi - n_lo) * i / kSamples));
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < vals.size(); ++i) {
    const bool both_inf = vals[i] == kInf && vals[i - 1] == kInf;
    inc = inc && (vals[i] > vals[i - 1] || both_inf);
    dec = dec && (vals[i] < vals[i - 1] || both_inf);
  }
  if (!inc && !dec) throw NumericError("index_bound: k1(n) is not monotone on the search interval");
  if ((vals.front() < 0.0) == (vals.back() < 0.0)) throw NumericError("index_bound: bracket failure");

  double lo = n_lo, hi = n_hi, glo = vals.front();
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

RadialSample StekloffMode::profile(double r) const {
  if (!(r > 0.0) || r > R * (1.0 + 1e-12)) throw std::domain_error("Stekloff profile: r must lie in (0, R]");
  std::size_t j = 0;
  while (j + 1 < radii.size() && r > radii[j]) ++j;
  RadialSample s;
  s.kappa = k * m[j];
  s.rho = s.kappa * r;
  const auto p = sphfun::riccati_pair(l, s.rho);
  s.f = coeffs[j].A * p.psi + coeffs[j].C * p.xi;
  s.df = coeffs[j].A * p.dpsi + coeffs[j].C * p.dxi;
  return s;
}

forward::FieldPair StekloffMode::eigenfunction(int order, const Vec3& x) const {
  const double r = x.norm();
  const auto s = profile(r);
  std::size_t j = 0;
  while (j + 1 < radii.size() && r > radii[j]) ++j;
  const Vec3 xhat = x / r;
  const auto v = sphfun::vector_spherical_harmonics({l, order}, xhat);
  const RadialSample zero{0.0, 0.0, s.kappa, s.rho};
  if (family == Family::TE) return forward::modal_field(v, l, 1.0, 0.0, s, zero, m[j], xhat);
  return forward::modal_field(v, l, 0.0, 1.0, zero, s, m[j], xhat);
}

double StekloffMode::boundary_residual(int order, const Vec3& xhat) const {
  const Vec3 x = R * xhat;
  const auto w = eigenfunction(order, x);
  const CVec3 nu = complexify(xhat);
  const CVec3 curl_w = kI * k * w.H;
  const CVec3 lhs = bcross(nu, curl_w);
  const CVec3 wt = w.E - bdot(nu, w.E) * nu;
  // A single mode's trace lies in one family, so S acts as the multiplier c.
  const CVec3 rhs = lambda * c * wt;
  const double scale = lhs.norm() + rhs.norm();
  return scale == 0.0 ? 0.0 : (lhs - rhs).norm() / scale;
}

cd StekloffMode::modal_residual(cd trial) const {
  const auto s = profile(R);
  const double scale = std::abs(s.kappa * s.f) + std::abs(s.kappa * s.df);
  if (family == Family::TE) return (-s.kappa * s.df - trial * c * s.f) / scale;
  return (-s.kappa * s.f + trial * c * s.df) / scale;
}

std::vector<StekloffMode> stekloff_eigs_ball(const forward::MediumSpec& medium, double R, double k, int l_max,
                                             forward::SKind s_kind) {
  medium.validate();
  if (!(k > 0.0)) throw ConfigError("Stekloff: k must be positive");
  const double a = medium.radius();
  if (R < a * (1.0 - 1e-12)) throw ConfigError("Stekloff: ball B must contain the scatterer (R >= a)");
  if (l_max < 1) throw ConfigError("Stekloff: l_max must be >= 1");

  std::vector<double> radii;
  std::vector<cd> m;
  for (const auto& layer : medium.layers) {
    radii.push_back(layer.r);
    m.push_back(std::sqrt(layer.n));
  }
  if (R > a * (1.0 + 1e-12)) {
    radii.push_back(R);
    m.push_back(1.0);
  } else {
    radii.back() = R;
  }
  const std::vector<double> interfaces(radii.begin(), radii.end() - 1);

  std::vector<StekloffMode> out;
  for (int l = 1; l <= l_max; ++l) {
    const auto mult = s_modal_multiplier(l, R, s_kind);
    for (Family fam : {Family::TE, Family::TM}) {
      StekloffMode mode;
      mode.family = fam;
      mode.l = l;
      mode.k = k;
      mode.R = R;
      mode.c = fam == Family::TE ? mult.c_V : mult.c_U;
      mode.radii = radii;
      mode.m = m;
      mode.coeffs = forward::transfer_profile(interfaces, m, k, l, fam == Family::TE);
      const auto s = mode.profile(R);
      const double scale = std::abs(s.f) + std::abs(s.df);
      // nu x curl w vanishes when f' = 0 (TE) or f = 0 (TM).
      const cd neumann = fam == Family::TE ? s.df : s.f;
      if (std::abs(neumann) <= 1e-8 * scale)
        throw NumericError("interior Neumann resonance at degree " + std::to_string(l) + " (" + family_name(fam) +
                           ")");
      if (mode.c == 0.0) continue;
      if (fam == Family::TE) {
        if (s.f == cd{0.0, 0.0}) continue;
        mode.lambda = -s.kappa * s.df / (mode.c * s.f);
      } else {
        mode.lambda = s.kappa * s.f / (mode.c * s.df);
      }
      out.push_back(mode);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const StekloffMode& x, const StekloffMode& y) { return std::abs(x.lambda) < std::abs(y.lambda); });
  return out;
}

namespace {

// Angular integral of |w|^2 over the unit sphere for one mode at radius r.
double angular_density(const StekloffMode& mode, double r) {
  const auto s = mode.profile(r);
  if (mode.family == Family::TE) return std::norm(s.f / s.rho);
  const double ll = static_cast<double>(mode.l) * (mode.l + 1);
  return ll * std::norm(s.f / (s.rho * s.rho)) + std::norm(s.df / s.rho);
}

}  // namespace

cd shift_estimate(const StekloffMode& mode, cd delta_n, double r_c, double k) {
  if (!(r_c > 0.0) || r_c > mode.R * (1.0 + 1e-12)) throw ConfigError("shift_estimate: need 0 < r_c <= R");
  const auto sR = mode.profile(mode.R);
  const cd trace = mode.family == Family::TE ? sR.f / sR.rho : sR.df / sR.rho;
  const double denom = mode.R * mode.R * mode.c * mode.c * std::norm(trace);
  if (denom == 0.0) throw NumericError("shift_estimate: mode lies in the kernel of S");
  if (delta_n == cd{0.0, 0.0}) return 0.0;

  // Gauss-Legendre on each layer piece below r_c.
  constexpr std::size_t kNodes = 48;
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(kNodes), &gsl_integration_glfixed_table_free);
  double integral = 0.0;
  double lo = 0.0;
  for (double edge : mode.radii) {
    const double hi = std::min(edge, r_c);
    if (hi > lo) {
      for (std::size_t i = 0; i < kNodes; ++i) {
        double r = 0.0, w = 0.0;
        gsl_integration_glfixed_point(lo, hi, i, &r, &w, table.get());
        integral += w * r * r * angular_density(mode, r);
      }
    }
    lo = edge;
    if (lo >= r_c) break;
  }
  return -k * k * delta_n * integral / denom;
}

}  // namespace scatsig::oracles
