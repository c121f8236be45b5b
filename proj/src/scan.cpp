#include "scatsig/scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scatsig/parallel.hpp"
#include "scatsig/rng.hpp"

namespace scatsig::scan {

using ffop::FarFieldMatrix;
using ffop::ModalBasis;
using ffop::ModalDiagonal;
using ffop::OperatorKind;

double TikhonovConfig::resolve(double op_norm) const {
  if (!auto_alpha) return alpha;
  const double n2 = op_norm * op_norm;
  return std::max(noise * noise * n2, 1e-10 * n2);
}

void TikhonovConfig::validate() const {
  if (!auto_alpha && !(alpha > 0.0)) throw ConfigError("tikhonov: alpha must be positive");
  if (!(noise >= 0.0)) throw ConfigError("tikhonov: noise level must be non-negative");
}

TikhonovSolver::TikhonovSolver(const Eigen::MatrixXcd& A, const Eigen::VectorXd& w, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("tikhonov: alpha must be positive");
  AhW_ = A.adjoint() * w.asDiagonal();
  Eigen::MatrixXcd N = AhW_ * A;
  N.diagonal() += alpha * w.cast<cd>();
  llt_.compute(N);
  if (llt_.info() != Eigen::Success) throw NumericError("tikhonov: normal equations not positive definite");
}

Eigen::VectorXcd TikhonovSolver::solve(const Eigen::VectorXcd& rhs) const { return llt_.solve(AhW_ * rhs); }

Eigen::VectorXcd tikhonov_solve(const FarFieldMatrix& A, const TangentField& rhs, double alpha) {
  if (!A.quad) throw std::invalid_argument("tikhonov_solve: matrix has no quadrature");
  return TikhonovSolver(A.A, A.quad->frame_weights(), alpha).solve(rhs);
}

void ZSampling::validate(double a) const {
  if (count < 1) throw ConfigError("z sampling: count must be at least 1");
  if (!(radius >= 0.0)) throw ConfigError("z sampling: radius must be non-negative");
  if (!(radius + center.norm() < a)) throw ConfigError("z sampling: sampling ball must lie strictly inside the scatterer");
}

std::vector<Vec3> ZSampling::points() const {
  rng::Stream s(seed);
  std::vector<Vec3> pts;
  for (int i = 0; i < count; ++i) {
    Vec3 dir(s.normal(), s.normal(), s.normal());
    dir.normalize();
    pts.push_back(center + radius * std::cbrt(s.uniform01()) * dir);
  }
  return pts;
}

std::vector<double> ComplexRect::re_axis() const {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? re_lo : re_lo + (re_hi - re_lo) * i / (n - 1));
  return v;
}

std::vector<double> ComplexRect::im_axis() const {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? im_lo : im_lo + (im_hi - im_lo) * i / (n - 1));
  return v;
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw ConfigError("grid: step must be positive");
  if (!(hi >= lo)) throw ConfigError("grid: upper bound below lower bound");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  if (count > 10'000'000) throw ConfigError("grid: too many points");
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = lo + static_cast<double>(i) * step;
  return g;
}

namespace {

// Mode-space data for the diagonal fast path: with Phi^H W Phi = I, the
// Tikhonov solution is Phi diag(conj d / (alpha + |d|^2)) Phi^H W f.
struct ModalSpace {
  const ModalBasis* basis = nullptr;
  int L = 0;
  Eigen::MatrixXcd phi;  // [U | V] truncated to L
  bool orthonormal = false;
};

ModalSpace make_space(const ModalBasis& basis, int L) {
  ModalSpace s;
  s.basis = &basis;
  s.L = L;
  const int M = sphfun::mode_count(L);
  s.phi.resize(basis.quad().dim(), 2 * M);
  s.phi.leftCols(M) = basis.U(L);
  s.phi.rightCols(M) = basis.V(L);
  const Eigen::MatrixXcd G = s.phi.adjoint() * basis.w().asDiagonal() * s.phi;
  const double dev = (G - Eigen::MatrixXcd::Identity(2 * M, 2 * M)).cwiseAbs().maxCoeff();
  s.orthonormal = dev <= 1e-10;
  return s;
}

Eigen::VectorXcd mode_vector(const ModalDiagonal& d, int L) {
  const int M = sphfun::mode_count(L);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(2 * M);
  for (int l = 1; l <= std::min(L, d.L); ++l) {
    for (int m = -l; m <= l; ++m) {
      const int o = sphfun::mode_offset(l, m);
      v(o) = d.dU(l);
      v(M + o) = d.dV(l);
    }
  }
  return v;
}

ModalDiagonal subtract(const ModalDiagonal& a, const ModalDiagonal& b) {
  ModalDiagonal d;
  d.L = std::max(a.L, b.L);
  d.dU = Eigen::VectorXcd::Zero(d.L + 1);
  d.dV = Eigen::VectorXcd::Zero(d.L + 1);
  d.dU.head(a.L + 1) += a.dU;
  d.dV.head(a.L + 1) += a.dV;
  d.dU.head(b.L + 1) -= b.dU;
  d.dV.head(b.L + 1) -= b.dV;
  return d;
}

double weighted_norm(const Eigen::VectorXcd& g, const Eigen::VectorXd& w) {
  return std::sqrt((g.cwiseAbs2().array() * w.array()).sum());
}

struct PointOutput {
  std::vector<double> per_z;
  double alpha = 0.0;
  std::string gap;
};

// Solves for every right-hand side with the operator either in mode space
// (noise-free, orthonormal basis) or densely.
struct PointSolver {
  const ScanConfig& cfg;
  const SphereQuadrature& quad;
  double k;
  double herglotz_radius;

  double indicator(const Eigen::VectorXcd& g) const {
    if (cfg.indicator == Indicator::HERGLOTZ)
      return forward::herglotz_ball_norm(quad, g, k, herglotz_radius, Vec3::Zero());
    return weighted_norm(g, quad.frame_weights());
  }

  PointOutput modal(const ModalSpace& space, const ModalDiagonal& d, const std::vector<TangentField>& rhs) const {
    PointOutput out;
    const Eigen::VectorXcd dv = mode_vector(d, space.L);
    const double nrm = dv.cwiseAbs().maxCoeff();
    out.alpha = cfg.tikhonov.resolve(nrm);
    const Eigen::VectorXcd filt = dv.conjugate().array() / (out.alpha + dv.cwiseAbs2().array()).cast<cd>();
    const Eigen::VectorXd& w = space.basis->w();
    for (const auto& f : rhs) {
      const Eigen::VectorXcd c = space.phi.adjoint() * (w.cast<cd>().asDiagonal() * f);
      const Eigen::VectorXcd g = space.phi * filt.cwiseProduct(c);
      out.per_z.push_back(indicator(g));
    }
    return out;
  }

  PointOutput dense(const FarFieldMatrix& F, const std::vector<TangentField>& rhs) const {
    PointOutput out;
    out.alpha = cfg.tikhonov.resolve(ffop::operator_norm(F));
    const TikhonovSolver solver(F.A, quad.frame_weights(), out.alpha);
    for (const auto& f : rhs) out.per_z.push_back(indicator(solver.solve(f)));
    return out;
  }
};

std::vector<TangentField> dipole_rhs(const SphereQuadrature& q, const std::vector<Vec3>& zs, const CVec3& pol,
                                     double k, bool magnetic) {
  std::vector<TangentField> out;
  for (const auto& z : zs) {
    std::vector<CVec3> vals;
    for (const auto& x : q.nodes) {
      const auto f = forward::dipole_far_fields({z, pol, k}, x);
      vals.push_back(magnetic ? f.H : f.E);
    }
    out.push_back(to_frame(q, vals));
  }
  return out;
}

ScanResult finish(ScanMode mode, std::vector<cd> grid, std::vector<PointOutput> pts, std::vector<Vec3> zs) {
  ScanResult r;
  r.mode = mode;
  r.grid = std::move(grid);
  r.z = std::move(zs);
  for (auto& p : pts) {
    double m = std::numeric_limits<double>::quiet_NaN();
    if (p.gap.empty()) {
      m = 0.0;
      for (double v : p.per_z) m += v;
      m /= static_cast<double>(p.per_z.size());
    }
    r.mean.push_back(m);
    r.alpha.push_back(p.alpha);
    r.gaps.push_back(p.gap);
    r.per_z.push_back(std::move(p.per_z));
  }
  return r;
}

void check_common(const forward::MediumSpec& medium, const ffop::QuadPtr& quad, const ScanConfig& cfg) {
  if (!quad) throw ConfigError("scan: quadrature required");
  medium.validate();
  cfg.tikhonov.validate();
  if (!(cfg.eps >= 0.0)) throw ConfigError("scan: noise level must be non-negative");
  cfg.zs.validate(medium.radius());
}

ScanResult stekloff_impl(const forward::MediumSpec& medium, double R, double k, ScanMode mode,
                         const std::vector<cd>& lambdas, const ffop::QuadPtr& quad, const ScanConfig& cfg,
                         forward::SKind s_kind) {
  check_common(medium, quad, cfg);
  if (!(k > 0.0)) throw ConfigError("stekloff scan: k must be positive");
  if (!(R >= medium.radius())) throw ConfigError("stekloff scan: B must contain the scatterer");
  ffop::Scene scene;
  scene.medium = medium;
  const ModalDiagonal de = ffop::modal_diagonal(OperatorKind::ELECTRIC, scene, k);
  // Impedance truncation depends on k R only.
  const int Ls = forward::impedance_coefficients({R, cd{1.0, 0.0}, s_kind}, k).L;
  const int L = std::max(de.L, Ls);
  ModalBasis basis(quad, L);
  const ModalSpace space = make_space(basis, L);
  const bool fast = cfg.eps == 0.0 && space.orthonormal;

  FarFieldMatrix Fe;
  if (!fast) {
    Fe.kind = OperatorKind::ELECTRIC;
    Fe.k = k;
    Fe.quad = quad;
    Fe.A = ffop::modal_operator(basis, de);
    if (cfg.eps > 0.0) Fe = ffop::add_noise(Fe, cfg.eps, cfg.noise_seed);
  }
  const auto zs = cfg.zs.points();
  const auto rhs = dipole_rhs(*quad, zs, cfg.polarization, k, false);
  const PointSolver solver{cfg, *quad, k, R};

  std::vector<PointOutput> pts(lambdas.size());
  parallel_for(lambdas.size(), [&](std::size_t i) {
    try {
      ffop::Scene s;
      s.ball = forward::ImpedanceBall{R, lambdas[i], s_kind};
      const ModalDiagonal ds = ffop::modal_diagonal(OperatorKind::IMPEDANCE, s, k);
      if (fast) {
        pts[i] = solver.modal(space, subtract(de, ds), rhs);
      } else {
        FarFieldMatrix F = Fe;
        F.kind = OperatorKind::MODIFIED;
        F.A -= ffop::modal_operator(basis, ds);
        pts[i] = solver.dense(F, rhs);
      }
    } catch (const NumericError& e) {
      pts[i] = PointOutput{{}, 0.0, e.what()};
    }
  });
  return finish(mode, lambdas, std::move(pts), zs);
}

}  // namespace

ScanResult tev_scan(const forward::MediumSpec& medium, const std::vector<double>& k_grid, const ffop::QuadPtr& quad,
                    const ScanConfig& cfg) {
  check_common(medium, quad, cfg);
  if (k_grid.empty()) throw ConfigError("tev scan: empty k grid");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (!(k_grid[i] > 0.0)) throw ConfigError("tev scan: wave numbers must be positive");
    if (i > 0 && !(k_grid[i] > k_grid[i - 1])) throw ConfigError("tev scan: k grid must increase strictly");
  }
  for (const auto& l : medium.layers)
    if (l.n.imag() != 0.0) throw ConfigError("tev scan: the index must be real");
  ffop::Scene scene;
  scene.medium = medium;
  int L = 0;
  for (double k : k_grid) L = std::max(L, forward::mie_coefficients(medium, k).L);
  ModalBasis basis(quad, L);
  const ModalSpace space = make_space(basis, L);
  const bool fast = cfg.eps == 0.0 && space.orthonormal;
  const auto zs = cfg.zs.points();

  std::vector<PointOutput> pts(k_grid.size());
  parallel_for(k_grid.size(), [&](std::size_t i) {
    const double k = k_grid[i];
    const PointSolver solver{cfg, *quad, k, medium.radius()};
    const auto rhs = dipole_rhs(*quad, zs, cfg.polarization, k, true);
    try {
      const ModalDiagonal d = ffop::modal_diagonal(OperatorKind::MAGNETIC, scene, k);
      if (fast) {
        pts[i] = solver.modal(space, d, rhs);
      } else {
        FarFieldMatrix F;
        F.kind = OperatorKind::MAGNETIC;
        F.k = k;
        F.quad = quad;
        F.A = ffop::modal_operator(basis, d);
        if (cfg.eps > 0.0) F = ffop::add_noise(F, cfg.eps, cfg.noise_seed);
        pts[i] = solver.dense(F, rhs);
      }
    } catch (const NumericError& e) {
      pts[i] = PointOutput{{}, 0.0, e.what()};
    }
  });
  std::vector<cd> grid(k_grid.begin(), k_grid.end());
  return finish(ScanMode::K, std::move(grid), std::move(pts), zs);
}

ScanResult stekloff_scan(const forward::MediumSpec& medium, double R, double k, const std::vector<double>& lambdas,
                         const ffop::QuadPtr& quad, const ScanConfig& cfg, forward::SKind s_kind) {
  if (lambdas.empty()) throw ConfigError("stekloff scan: empty lambda grid");
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1])) throw ConfigError("stekloff scan: lambda grid must increase strictly");
  std::vector<cd> grid(lambdas.begin(), lambdas.end());
  return stekloff_impl(medium, R, k, ScanMode::LAMBDA_REAL, grid, quad, cfg, s_kind);
}

ScanResult stekloff_scan(const forward::MediumSpec& medium, double R, double k, const ComplexRect& rect,
                         const ffop::QuadPtr& quad, const ScanConfig& cfg, forward::SKind s_kind) {
  if (rect.n < 2) throw ConfigError("stekloff scan: rectangle needs at least 2 points per axis");
  if (!(rect.re_hi > rect.re_lo) || !(rect.im_hi > rect.im_lo)) throw ConfigError("stekloff scan: empty rectangle");
  std::vector<cd> grid;
  for (double im : rect.im_axis())
    for (double re : rect.re_axis()) grid.emplace_back(re, im);
  auto r = stekloff_impl(medium, R, k, ScanMode::LAMBDA_COMPLEX, grid, quad, cfg, s_kind);
  r.rect = rect;
  return r;
}

std::vector<std::size_t> find_peaks(const ScanResult& r, double min_prominence) {
  std::vector<double> valid;
  for (std::size_t i = 0; i < r.mean.size(); ++i)
    if (r.valid(i)) valid.push_back(r.mean[i]);
  std::vector<std::size_t> peaks;
  if (valid.size() < 3) return peaks;
  std::nth_element(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(valid.size() / 2), valid.end());
  const double threshold = min_prominence * valid[valid.size() / 2];
  const auto& v = r.mean;
  if (r.mode != ScanMode::LAMBDA_COMPLEX) {
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (!r.valid(i - 1) || !r.valid(i) || !r.valid(i + 1)) continue;
      // Strict on the left so a two-point plateau reports once.
      if (v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= threshold) peaks.push_back(i);
    }
    return peaks;
  }
  const int n = r.rect->n;
  for (int a = 1; a + 1 < n; ++a) {
    for (int b = 1; b + 1 < n; ++b) {
      const auto c = static_cast<std::size_t>(a * n + b);
      if (!r.valid(c) || v[c] < threshold) continue;
      bool dominant = true;
      for (int da = -1; da <= 1 && dominant; ++da) {
        for (int db = -1; db <= 1; ++db) {
          if (da == 0 && db == 0) continue;
          const auto o = static_cast<std::size_t>((a + da) * n + (b + db));
          // Earlier neighbours must be strictly lower, later ones not higher.
          const bool earlier = o < c;
          if (!r.valid(o) || (earlier ? v[o] >= v[c] : v[o] > v[c])) {
            dominant = false;
            break;
          }
        }
      }
      if (dominant) peaks.push_back(c);
    }
  }
  return peaks;
}

}  // namespace scatsig::scan
