#pragma once

// Spherical Bessel/Hankel functions of complex argument, Riccati-Bessel pairs
// and vector spherical harmonics.
//
// VSH convention used throughout the library:
//   Y_lm  fully normalized, Condon-Shortley phase, int_{S^2} |Y_lm|^2 = 1
//   U_lm  = grad_S Y_lm / sqrt(l(l+1))     (gradient type)
//   V_lm  = xhat x U_lm                    (curl type)
// so {U_lm, V_lm} is orthonormal in L^2_t(S^2).

#include <vector>

#include "scatsig/common.hpp"

namespace scatsig::sphfun {

struct ModeIndex {
  int l = 0;
  int m = 0;
};

// Linear index of (l, m) among the tangential modes l = 1..L, m = -l..l.
constexpr int mode_offset(int l, int m) { return l * l - 1 + m + l; }
constexpr int mode_count(int L) { return L * (L + 2); }

// Regular spherical Bessel function j_l. Throws NumericError on overflow.
cd spherical_bessel_j(int l, cd x);
// j_0..j_lmax evaluated together (Miller backward recurrence).
std::vector<cd> spherical_bessel_j_array(int lmax, cd x);

// Outgoing spherical Hankel function h^(1)_l = j_l + i y_l.
// Throws std::domain_error at x = 0.
cd spherical_hankel1(int l, cd x);
std::vector<cd> spherical_hankel1_array(int lmax, cd x);

// Riccati-Bessel functions psi_l = x j_l(x), xi_l = x h1_l(x) and their
// derivatives. psi xi' - psi' xi = i.
struct RiccatiPair {
  cd psi;
  cd dpsi;
  cd xi;
  cd dxi;
};

RiccatiPair riccati_pair(int l, cd x);
// Entries l = 0..lmax.
std::vector<RiccatiPair> riccati_array(int lmax, cd x);

struct VshValue {
  cd Y;
  CVec3 U;
  CVec3 V;
};

// Evaluates Y, U, V at a unit vector. Near the poles the limit forms are used;
// nothing is divided by sin(theta). U and V are zero for l = 0.
VshValue vector_spherical_harmonics(ModeIndex mode, const Vec3& xhat);

// All modes l = 1..L at one direction, ordered by mode_offset.
std::vector<VshValue> vsh_all(int L, const Vec3& xhat);

// Spherical unit vectors at xhat: theta-hat and phi-hat (phi = 0 at the poles).
void spherical_frame(const Vec3& xhat, Vec3& theta_hat, Vec3& phi_hat);

}  // namespace scatsig::sphfun
