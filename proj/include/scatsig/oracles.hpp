#pragma once

// Analytic characterizations on balls used to cross-check the operator-based
// pipeline: transmission-eigenvalue determinants, modal multipliers of the
// surface operator S, generalized Stekloff eigenvalues and the first-order
// eigenvalue shift. Formulas are derived in docs/math.md.

#include <string>
#include <vector>

#include "scatsig/forward.hpp"

namespace scatsig::oracles {

// Multipliers of S on the two tangential families of degree l on a sphere:
// S U_lm = c_U U_lm, S V_lm = c_V V_lm. For CURL_CURL, S is the orthogonal
// projector onto divergence-free fields, so c_U = 0, c_V = 1 for every l and R.
// For IDENTITY both are 1.
struct SMultiplier {
  double c_U = 0.0;
  double c_V = 1.0;
};
SMultiplier s_modal_multiplier(int l, double R, forward::SKind kind = forward::SKind::CURL_CURL);

enum class Family { TE, TM };
const char* family_name(Family f);

struct ModeFamily {
  Family family = Family::TE;
  int l = 1;
};

// Per-mode transmission determinant for a homogeneous ball (a, n), scaled by
// the norms of the two Cauchy-data vectors so it is real for real n:
//   TE: psi(mka) psi'(ka) - m psi'(mka) psi(ka)
//   TM: psi'(mka) psi(ka) - m psi(mka) psi'(ka),   m = sqrt(n).
// Throws ConfigError for n = 1.
cd tev_determinant(double a, cd n, int l, Family family, double k);

// Smallest singular value of the 2x2 Cauchy-data matching matrix with unit
// columns; vanishes exactly at transmission eigenvalues.
double tev_matching_sigma_min(double a, cd n, int l, Family family, double k);

struct TevRoot {
  double k = 0.0;
  int l = 1;
  Family family = Family::TE;
};

// Sign changes on a grid of step <= `step`, refined by bisection to 1e-12.
std::vector<TevRoot> tev_roots(double a, double n, int l_max, double k_lo, double k_hi, double step = 0.01);

// Smallest transmission eigenvalue above k_lo over degrees 1..l_max.
// Throws NumericError if none is found below k_cap.
double first_tev(double a, double n, int l_max = 8, double k_lo = 0.05, double k_cap = 60.0);

// Inverts n -> k1(n) on [n_lo, n_hi] by bisection. Throws NumericError on a
// bracket failure or if k1 is not monotone on the interval.
double index_bound_from_tev(double k1_measured, double a, double n_lo, double n_hi, int l_max = 8);

// Generalized Stekloff eigenpair of one mode family on the ball B_R.
struct StekloffMode {
  Family family = Family::TE;
  int l = 1;
  cd lambda;
  double k = 1.0;
  double R = 1.0;
  double c = 1.0;                            // S multiplier of the family
  std::vector<double> radii;                 // outer radius per layer; last = R
  std::vector<cd> m;                         // index roots per layer
  std::vector<forward::LayerCoeffs> coeffs;  // radial profile per layer

  // Riccati profile of the eigenfunction at 0 < r <= R.
  forward::RadialSample profile(double r) const;
  // Eigenfunction w (in E) and curl w / (ik) (in H) for order m at x.
  forward::FieldPair eigenfunction(int order, const Vec3& x) const;
  // Boundary residual of nu x curl w - lambda S w_T at R xhat, scaled by the
  // size of the two terms.
  double boundary_residual(int order, const Vec3& xhat) const;
  // Modal boundary functional at a trial lambda; affine in lambda with its
  // root at the eigenvalue.
  cd modal_residual(cd trial) const;
};

// Eigenvalues for degrees 1..l_max of the medium placed in B_R (R >= a).
// Families whose S multiplier vanishes contribute nothing. Throws
// NumericError("interior Neumann resonance") if a retained mode has
// nu x curl w = 0 on the boundary to 1e-8 relative. Sorted by |lambda|.
std::vector<StekloffMode> stekloff_eigs_ball(const forward::MediumSpec& medium, double R, double k, int l_max,
                                             forward::SKind s_kind = forward::SKind::CURL_CURL);

// First-order prediction of lambda - lambda_delta when n changes by delta_n on
// the ball |x| < r_c: -k^2 (dN w, w) / <S w_T, S w_T>.
cd shift_estimate(const StekloffMode& mode, cd delta_n, double r_c, double k);

}  // namespace scatsig::oracles
