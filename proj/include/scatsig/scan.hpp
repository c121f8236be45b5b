#pragma once

// Tikhonov-regularized far field equations and indicator scans over k (for
// transmission eigenvalues) or lambda (for Stekloff eigenvalues).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "scatsig/ffop.hpp"

namespace scatsig::scan {

struct TikhonovConfig {
  bool auto_alpha = true;
  double alpha = 0.0;  // used when auto_alpha is false; must be positive
  double noise = 0.0;  // noise level feeding the automatic rule

  // AUTO: max(noise^2, 1e-10) ||A||^2.
  double resolve(double op_norm) const;
  void validate() const;
};

// Solves (alpha I + A* A) g = A* rhs with the weighted adjoint, as the
// Hermitian system (alpha W + A^H W A) g = A^H W rhs. Factorizes once.
class TikhonovSolver {
 public:
  TikhonovSolver(const Eigen::MatrixXcd& A, const Eigen::VectorXd& w, double alpha);
  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const;

 private:
  Eigen::MatrixXcd AhW_;
  Eigen::LLT<Eigen::MatrixXcd> llt_;
};

Eigen::VectorXcd tikhonov_solve(const ffop::FarFieldMatrix& A, const TangentField& rhs, double alpha);

struct ZSampling {
  int count = 10;
  double radius = 0.25;
  Vec3 center = Vec3::Zero();
  std::uint64_t seed = 1;

  // Throws ConfigError unless radius + |center| < a and count >= 1.
  void validate(double a) const;
  // Uniform points in the sampling ball, deterministic in the seed.
  std::vector<Vec3> points() const;
};

enum class Indicator { G_NORM, HERGLOTZ };

struct ScanConfig {
  TikhonovConfig tikhonov;
  ZSampling zs;
  double eps = 0.0;              // multiplicative noise on the measured operator
  std::uint64_t noise_seed = 0;  // one realization shared by every grid point
  Indicator indicator = Indicator::G_NORM;
  CVec3 polarization = CVec3(1.0, 0.0, 0.0);
};

enum class ScanMode { K, LAMBDA_REAL, LAMBDA_COMPLEX };

struct ComplexRect {
  double re_lo = 0.0, re_hi = 1.0, im_lo = 0.0, im_hi = 1.0;
  int n = 40;  // points per axis
  std::vector<double> re_axis() const;
  std::vector<double> im_axis() const;
};

struct ScanResult {
  ScanMode mode = ScanMode::K;
  std::vector<cd> grid;  // complex mode: row-major over (im, re)
  std::optional<ComplexRect> rect;
  std::vector<std::vector<double>> per_z;  // [grid][z]
  std::vector<double> mean;                // NaN where the point is a gap
  std::vector<double> alpha;
  std::vector<std::string> gaps;  // reason per gap point; empty string if valid
  std::vector<Vec3> z;
  bool valid(std::size_t i) const { return gaps[i].empty(); }
};

std::vector<double> linear_grid(double lo, double hi, double step);

// Magnetic far field equation with rhs H_inf of a dipole at each z.
ScanResult tev_scan(const forward::MediumSpec& medium, const std::vector<double>& k_grid, const ffop::QuadPtr& quad,
                    const ScanConfig& cfg);

// Modified far field equation F_M g = E_inf(., z; q) with F_M = F_e - F_S(lambda).
ScanResult stekloff_scan(const forward::MediumSpec& medium, double R, double k, const std::vector<double>& lambdas,
                         const ffop::QuadPtr& quad, const ScanConfig& cfg,
                         forward::SKind s_kind = forward::SKind::CURL_CURL);
ScanResult stekloff_scan(const forward::MediumSpec& medium, double R, double k, const ComplexRect& rect,
                         const ffop::QuadPtr& quad, const ScanConfig& cfg,
                         forward::SKind s_kind = forward::SKind::CURL_CURL);

// Real mode: interior strict local maxima above min_prominence * median.
// Complex mode: interior points dominating their 8 neighbours, same threshold.
// Gaps never qualify and break neighbourhoods. Returns grid indices.
std::vector<std::size_t> find_peaks(const ScanResult& result, double min_prominence);

}  // namespace scatsig::scan
