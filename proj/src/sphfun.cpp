#include "scatsig/sphfun.hpp"

#include <algorithm>
#include <cmath>

namespace scatsig::sphfun {

namespace {

constexpr double kRescaleAbove = 1e200;
constexpr double kRescaleBy = 1e-200;

bool finite(cd z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

cd exact_j0(cd x) { return std::sin(x) / x; }
cd exact_j1(cd x) { return (std::sin(x) / x - std::cos(x)) / x; }

}  // namespace

std::vector<cd> spherical_bessel_j_array(int lmax, cd x) {
  if (lmax < 0) throw std::invalid_argument("spherical_bessel_j: negative degree");
  std::vector<cd> out(static_cast<std::size_t>(lmax) + 1, cd{0.0, 0.0});
  const double ax = std::abs(x);
  if (ax == 0.0) {
    out[0] = 1.0;
    return out;
  }

  // Miller's algorithm: j_l is the minimal solution of the three-term
  // recurrence, so descending from far above lmax converges to it up to a
  // constant fixed by j_0 or j_1.
  const double top = std::max(static_cast<double>(lmax), ax);
  const int start = static_cast<int>(top + 20.0 + std::sqrt(40.0 * top));

  cd f_next = 0.0;   // f_{l+1}
  cd f_cur = 1e-30;  // f_l at l = start
  for (int l = start; l > 0; --l) {
    const cd f_prev = static_cast<double>(2 * l + 1) / x * f_cur - f_next;
    f_next = f_cur;
    f_cur = f_prev;
    if (l - 1 <= lmax) out[static_cast<std::size_t>(l - 1)] = f_cur;
    if (std::abs(f_cur) > kRescaleAbove) {
      f_cur *= kRescaleBy;
      f_next *= kRescaleBy;
      for (int j = l - 1; j <= lmax; ++j) out[static_cast<std::size_t>(j)] *= kRescaleBy;
    }
  }
  // out[0] now holds f_0; out[1] holds f_1 when lmax >= 1.
  const cd f0 = f_cur;
  const cd f1 = f_next;

  cd scale;
  const cd j0 = exact_j0(x);
  if (ax >= 0.5) {
    const cd j1 = exact_j1(x);
    scale = std::abs(j0) >= std::abs(j1) ? j0 / f0 : j1 / f1;
  } else {
    scale = j0 / f0;
  }
  for (auto& v : out) {
    v *= scale;
    if (!finite(v)) throw NumericError("spherical_bessel_j: recurrence overflow");
  }
  return out;
}

cd spherical_bessel_j(int l, cd x) { return spherical_bessel_j_array(l, x)[static_cast<std::size_t>(l)]; }

std::vector<cd> spherical_hankel1_array(int lmax, cd x) {
  if (lmax < 0) throw std::invalid_argument("spherical_hankel1: negative degree");
  if (x == cd{0.0, 0.0}) throw std::domain_error("spherical_hankel1: argument is zero");
  std::vector<cd> out(static_cast<std::size_t>(lmax) + 1);
  const cd e = std::exp(kI * x);
  out[0] = -kI * e / x;
  if (lmax >= 1) out[1] = -e * (x + kI) / (x * x);
  // Forward recurrence is stable: h1 is the dominant solution.
  for (int l = 1; l < lmax; ++l) {
    out[static_cast<std::size_t>(l) + 1] =
        static_cast<double>(2 * l + 1) / x * out[static_cast<std::size_t>(l)] -
        out[static_cast<std::size_t>(l) - 1];
  }
  for (const auto& v : out) {
    if (!finite(v)) throw NumericError("spherical_hankel1: recurrence overflow");
  }
  return out;
}

cd spherical_hankel1(int l, cd x) { return spherical_hankel1_array(l, x)[static_cast<std::size_t>(l)]; }

std::vector<RiccatiPair> riccati_array(int lmax, cd x) {
  if (x == cd{0.0, 0.0}) throw std::domain_error("riccati_pair: argument is zero");
  const auto j = spherical_bessel_j_array(lmax, x);
  const auto h = spherical_hankel1_array(lmax, x);
  std::vector<RiccatiPair> out(static_cast<std::size_t>(lmax) + 1);
  out[0] = {x * j[0], std::cos(x), x * h[0], std::exp(kI * x)};
  for (int l = 1; l <= lmax; ++l) {
    const auto i = static_cast<std::size_t>(l);
    out[i].psi = x * j[i];
    out[i].dpsi = x * j[i - 1] - static_cast<double>(l) * j[i];
    out[i].xi = x * h[i];
    out[i].dxi = x * h[i - 1] - static_cast<double>(l) * h[i];
  }
  return out;
}

RiccatiPair riccati_pair(int l, cd x) { return riccati_array(l, x)[static_cast<std::size_t>(l)]; }

void spherical_frame(const Vec3& xhat, Vec3& theta_hat, Vec3& phi_hat) {
  const double s = std::hypot(xhat.x(), xhat.y());
  const double c = xhat.z();
  const double phi = std::atan2(xhat.y(), xhat.x());
  const double cp = std::cos(phi);
  const double sp = std::sin(phi);
  theta_hat = Vec3(c * cp, c * sp, -s);
  phi_hat = Vec3(-sp, cp, 0.0);
}

namespace {

// Legendre data at one direction: Q_l^m = Pbar_l^m / sin^m(theta) and dQ/dx,
// both finite at the poles.
struct ReducedLegendre {
  int L;
  std::vector<double> q, dq;
  double at(int l, int m) const { return q[idx(l, m)]; }
  double dat(int l, int m) const { return dq[idx(l, m)]; }
  std::size_t idx(int l, int m) const { return static_cast<std::size_t>(l * (l + 1) / 2 + m); }
};

ReducedLegendre reduced_legendre(int L, double x) {
  ReducedLegendre r{L, {}, {}};
  const std::size_t n = static_cast<std::size_t>((L + 1) * (L + 2) / 2);
  r.q.assign(n, 0.0);
  r.dq.assign(n, 0.0);
  double qmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= L; ++m) {
    if (m > 0) qmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    r.q[r.idx(m, m)] = qmm;
    r.dq[r.idx(m, m)] = 0.0;
    if (m + 1 > L) continue;
    const double c = std::sqrt(2.0 * m + 3.0);
    r.q[r.idx(m + 1, m)] = c * x * qmm;
    r.dq[r.idx(m + 1, m)] = c * qmm;
    for (int l = m + 2; l <= L; ++l) {
      const double ll = l;
      const double mm = m;
      const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
      const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
      r.q[r.idx(l, m)] = a * (x * r.q[r.idx(l - 1, m)] - b * r.q[r.idx(l - 2, m)]);
      r.dq[r.idx(l, m)] =
          a * (r.q[r.idx(l - 1, m)] + x * r.dq[r.idx(l - 1, m)] - b * r.dq[r.idx(l - 2, m)]);
    }
  }
  return r;
}

struct PointFrame {
  double x, s, phi;
  Vec3 th, ph;
};

PointFrame point_frame(const Vec3& xhat) {
  PointFrame f{};
  f.x = xhat.z();
  f.s = std::hypot(xhat.x(), xhat.y());
  f.phi = std::atan2(xhat.y(), xhat.x());
  spherical_frame(xhat, f.th, f.ph);
  return f;
}

// Value for m >= 0.
VshValue vsh_nonneg(const ReducedLegendre& leg, const PointFrame& f, int l, int m) {
  const double q = leg.at(l, m);
  const double dq = leg.dat(l, m);
  double p, dp_dtheta, m_p_over_s;
  if (m == 0) {
    p = q;
    dp_dtheta = -f.s * dq;
    m_p_over_s = 0.0;
  } else {
    const double sm1 = std::pow(f.s, m - 1);
    p = sm1 * f.s * q;
    dp_dtheta = m * f.x * sm1 * q - sm1 * f.s * f.s * dq;
    m_p_over_s = m * sm1 * q;
  }
  const cd phase = std::exp(kI * (static_cast<double>(m) * f.phi));
  VshValue out;
  out.Y = p * phase;
  if (l == 0) {
    out.U.setZero();
    out.V.setZero();
    return out;
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
  out.U = (dp_dtheta * complexify(f.th) + kI * m_p_over_s * complexify(f.ph)) * (phase * norm);
  out.V = (dp_dtheta * complexify(f.ph) - kI * m_p_over_s * complexify(f.th)) * (phase * norm);
  return out;
}

VshValue negate_order(const VshValue& v, int m) {
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return {sign * std::conj(v.Y), sign * v.U.conjugate(), sign * v.V.conjugate()};
}

}  // namespace

VshValue vector_spherical_harmonics(ModeIndex mode, const Vec3& xhat) {
  if (mode.l < 0 || std::abs(mode.m) > mode.l) throw std::invalid_argument("vector_spherical_harmonics: invalid mode");
  const auto f = point_frame(xhat);
  const auto leg = reduced_legendre(mode.l, f.x);
  const int am = std::abs(mode.m);
  const auto v = vsh_nonneg(leg, f, mode.l, am);
  return mode.m >= 0 ? v : negate_order(v, am);
}

std::vector<VshValue> vsh_all(int L, const Vec3& xhat) {
  std::vector<VshValue> out(static_cast<std::size_t>(mode_count(L)));
  const auto f = point_frame(xhat);
  const auto leg = reduced_legendre(L, f.x);
  for (int l = 1; l <= L; ++l) {
    for (int m = 0; m <= l; ++m) {
      const auto v = vsh_nonneg(leg, f, l, m);
      out[static_cast<std::size_t>(mode_offset(l, m))] = v;
      if (m > 0) out[static_cast<std::size_t>(mode_offset(l, -m))] = negate_order(v, m);
    }
  }
  return out;
}

}  // namespace scatsig::sphfun
