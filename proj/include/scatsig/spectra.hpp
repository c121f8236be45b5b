#pragma once

// Spectral diagnostics of discretized far field operators.

#include <cstdint>
#include <vector>

#include "scatsig/ffop.hpp"

namespace scatsig::spectra {

struct EigenSet {
  Eigen::VectorXcd values;      // sorted by decreasing |lambda|
  Eigen::MatrixXcd vectors;     // unit right eigenvectors by column; empty unless requested
  std::vector<double> residuals;  // ||A v - lambda v|| / ||A||_2 per pair; empty without vectors
  double norm = 0.0;            // operator norm of A in the weighted inner product
};

// Dense eigen-decomposition (LAPACK zgeev). Throws NumericError on failure.
EigenSet eig(const Eigen::MatrixXcd& A, bool vectors = false);
EigenSet eig(const ffop::FarFieldMatrix& F, bool vectors = false);

struct Circle {
  cd center;
  double radius;
};
// (-2 pi, 2 pi) for ELECTRIC, (2 pi i / k, 2 pi / k) for MAGNETIC; other kinds
// throw ConfigError.
Circle circle_for(ffop::OperatorKind kind, double k);
std::vector<double> circle_residual(const Eigen::VectorXcd& values, ffop::OperatorKind kind, double k);

// LHS - RHS of
//   k int_D Im n E_g . conj(E_h) dx = -2 pi (F g, h) - 2 pi (g, F h) - (F g, F h)
// for an ELECTRIC matrix. E_g is the total field of the Herglotz incident wave
// with kernel g; the LHS is integrated over absorbing layers only.
cd energy_identity_residual(const ffop::FarFieldMatrix& F, const TangentField& g, const TangentField& h);

// Minimum of Im((-ik A) g, g) over `samples` random unit g.
double lidski_positivity(const ffop::FarFieldMatrix& F, int samples, std::uint64_t seed);

// ||A* A - A A*|| / ||A||^2 in the weighted inner product (Frobenius numerator).
double normality_residual(const ffop::FarFieldMatrix& F);

// Bottleneck matching of the `top` largest reference eigenvalues against the
// perturbed spectrum; references below `floor` in modulus are exempt. Both
// inputs sorted by decreasing modulus. Returns the largest matched distance.
double matched_displacement(const Eigen::VectorXcd& reference, const Eigen::VectorXcd& perturbed, int top,
                            double floor);

struct PhasePoint {
  double k = 0.0;
  double norm = 0.0;
  std::vector<cd> phases;  // lambda / |lambda| for |lambda| >= floor ||A||
  double min_plus = 0.0;   // min_j |phase_j + 1|
  double min_minus = 0.0;  // min_j |phase_j - 1|
};

struct PhaseTrack {
  double floor = 1e-6;
  std::vector<PhasePoint> points;
};

// Magnetic far field operator eigenvalue phases over a k grid.
PhaseTrack phase_track(const forward::MediumSpec& medium, const std::vector<double>& k_grid,
                       const ffop::QuadPtr& quad, double floor = 1e-6);

}  // namespace scatsig::spectra
