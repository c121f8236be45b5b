#include "scatsig/spectra.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <functional>
#include <numeric>
#include <string>

#include "scatsig/parallel.hpp"
#include "scatsig/rng.hpp"

namespace scatsig::spectra {

using ffop::FarFieldMatrix;
using ffop::OperatorKind;

namespace {

double plain_norm(const Eigen::MatrixXcd& A) {
  return ffop::operator_norm(A, Eigen::VectorXd::Ones(A.rows()));
}

// Permutation sorting by decreasing modulus; ties broken by (re, im). Keys are
// quantized relative to the largest modulus so rounding noise cannot flip ties.
std::vector<Eigen::Index> order_by_modulus(const Eigen::VectorXcd& v) {
  const double scale = v.size() > 0 ? std::max(v.cwiseAbs().maxCoeff(), 1e-300) : 1.0;
  auto q = [scale](double x) { return std::llround(x / scale * 1e12); };
  struct Key {
    long long m, re, im;
  };
  std::vector<Key> keys;
  for (Eigen::Index i = 0; i < v.size(); ++i) keys.push_back({q(std::abs(v(i))), q(v(i).real()), q(v(i).imag())});
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    const Key& ka = keys[static_cast<std::size_t>(a)];
    const Key& kb = keys[static_cast<std::size_t>(b)];
    if (ka.m != kb.m) return ka.m > kb.m;
    if (ka.re != kb.re) return ka.re > kb.re;
    return ka.im > kb.im;
  });
  return idx;
}

}  // namespace

EigenSet eig(const Eigen::MatrixXcd& A, bool vectors) {
  if (A.rows() != A.cols()) throw std::invalid_argument("eig: matrix must be square");
  if (!A.allFinite()) throw NumericError("eig: non-finite matrix entries");
  const auto n = static_cast<lapack_int>(A.rows());
  EigenSet out;
  if (n == 0) return out;
  Eigen::MatrixXcd work = A;
  Eigen::VectorXcd w(n);
  Eigen::MatrixXcd vr;
  if (vectors) vr.resize(n, n);
  lapack_complex_double dummy{};
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n, work.data(), n, w.data(),
                                        &dummy, 1, vectors ? vr.data() : &dummy, vectors ? n : 1);
  if (info != 0) throw NumericError("eig: zgeev failed with info = " + std::to_string(info));

  const auto idx = order_by_modulus(w);
  out.values.resize(n);
  for (lapack_int i = 0; i < n; ++i) out.values(i) = w(idx[static_cast<std::size_t>(i)]);
  out.norm = plain_norm(A);
  if (vectors) {
    out.vectors.resize(n, n);
    for (lapack_int i = 0; i < n; ++i) out.vectors.col(i) = vr.col(idx[static_cast<std::size_t>(i)]).normalized();
    const double scale = out.norm > 0.0 ? out.norm : 1.0;
    out.residuals.resize(static_cast<std::size_t>(n));
    for (lapack_int i = 0; i < n; ++i)
      out.residuals[static_cast<std::size_t>(i)] =
          (A * out.vectors.col(i) - out.values(i) * out.vectors.col(i)).norm() / scale;
  }
  return out;
}

EigenSet eig(const FarFieldMatrix& F, bool vectors) {
  auto out = eig(F.A, vectors);
  out.norm = ffop::operator_norm(F);
  if (vectors) {
    // Residuals stay relative to the plain 2-norm they were computed with.
    const double plain = plain_norm(F.A);
    const double scale = plain > 0.0 ? plain : 1.0;
    for (Eigen::Index i = 0; i < out.values.size(); ++i)
      out.residuals[static_cast<std::size_t>(i)] =
          (F.A * out.vectors.col(i) - out.values(i) * out.vectors.col(i)).norm() / scale;
  }
  return out;
}

Circle circle_for(OperatorKind kind, double k) {
  switch (kind) {
    case OperatorKind::ELECTRIC: return {cd{-2.0 * kPi, 0.0}, 2.0 * kPi};
    case OperatorKind::MAGNETIC: return {cd{0.0, 2.0 * kPi / k}, 2.0 * kPi / k};
    default: throw ConfigError(std::string("no circle law for operator kind '") + ffop::kind_name(kind) + "'");
  }
}

std::vector<double> circle_residual(const Eigen::VectorXcd& values, OperatorKind kind, double k) {
  const Circle c = circle_for(kind, k);
  std::vector<double> r(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i)
    r[static_cast<std::size_t>(i)] = std::abs(std::abs(values(i) - c.center) - c.radius);
  return r;
}

namespace {

// Modal coefficients of the Herglotz incident wave with kernel g.
void herglotz_coefficients(const SphereQuadrature& q, const TangentField& g, int L, double k, Eigen::VectorXcd& a,
                           Eigen::VectorXcd& b) {
  const int M = sphfun::mode_count(L);
  a = Eigen::VectorXcd::Zero(M);
  b = Eigen::VectorXcd::Zero(M);
  Eigen::VectorXcd aj, bj;
  for (int j = 0; j < q.size(); ++j) {
    const CVec3 p = field_at(q, g, j);
    if (p.squaredNorm() == 0.0) continue;
    forward::incident_coefficients(L, k, q.nodes[static_cast<std::size_t>(j)], p, aj, bj);
    a += q.weights[static_cast<std::size_t>(j)] * aj;
    b += q.weights[static_cast<std::size_t>(j)] * bj;
  }
}

}  // namespace

cd energy_identity_residual(const FarFieldMatrix& F, const TangentField& g, const TangentField& h) {
  if (F.kind != OperatorKind::ELECTRIC) throw ConfigError("energy identity: needs an electric far field operator");
  if (!F.medium || !F.quad) throw ConfigError("energy identity: matrix lacks medium or quadrature");
  const auto& q = *F.quad;
  const double k = F.k;
  const TangentField Fg = F.A * g, Fh = F.A * h;
  const cd rhs = -2.0 * kPi * ffop::inner_product(Fg, h, q) - 2.0 * kPi * ffop::inner_product(g, Fh, q) -
                 ffop::inner_product(Fg, Fh, q);

  cd lhs = 0.0;
  const auto& medium = *F.medium;
  const bool absorbing = std::any_of(medium.layers.begin(), medium.layers.end(),
                                     [](const forward::Layer& l) { return l.n.imag() > 0.0; });
  if (absorbing) {
    const auto coeffs = forward::mie_coefficients(medium, k);
    const int L = coeffs.L;
    const forward::LayeredSolution sol(medium, k, L);
    Eigen::VectorXcd ag, bg, ah, bh;
    herglotz_coefficients(q, g, L, k, ag, bg);
    herglotz_coefficients(q, h, L, k, ah, bh);
    // Angular rule exact for the degree-2L products, radial Gauss per layer.
    const auto ang = build_quadrature(QuadKind::PRODUCT_GAUSS, std::max(4, L + 2), 2 * L + 4);
    const int nr = 24;
    std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
        gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(nr)), &gsl_integration_glfixed_table_free);
    double inner = 0.0;
    for (std::size_t layer = 0; layer < medium.layers.size(); ++layer) {
      const double outer = medium.layers[layer].r;
      const double im = medium.layers[layer].n.imag();
      if (im > 0.0) {
        cd acc = 0.0;
        for (int ir = 0; ir < nr; ++ir) {
          double r = 0.0, wr = 0.0;
          gsl_integration_glfixed_point(inner, outer, static_cast<std::size_t>(ir), &r, &wr, table.get());
          for (int ia = 0; ia < ang.size(); ++ia) {
            const Vec3 x = r * ang.nodes[static_cast<std::size_t>(ia)];
            const CVec3 eg = sol.total_field(ag, bg, x, static_cast<int>(layer)).E;
            const CVec3 eh = sol.total_field(ah, bh, x, static_cast<int>(layer)).E;
            acc += wr * r * r * ang.weights[static_cast<std::size_t>(ia)] * bdot(eg, eh.conjugate());
          }
        }
        lhs += k * im * acc;
      }
      inner = outer;
    }
  }
  return lhs - rhs;
}

double lidski_positivity(const FarFieldMatrix& F, int samples, std::uint64_t seed) {
  if (!F.quad) throw std::invalid_argument("lidski_positivity: matrix has no quadrature");
  const auto& q = *F.quad;
  rng::Stream s(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int t = 0; t < samples; ++t) {
    TangentField g(q.dim());
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = cd{s.normal(), s.normal()};
    g /= std::sqrt(ffop::inner_product(g, g, q).real());
    const cd v = ffop::inner_product(cd{0.0, -F.k} * (F.A * g), g, q);
    best = std::min(best, v.imag());
  }
  return samples > 0 ? best : 0.0;
}

double normality_residual(const FarFieldMatrix& F) {
  const double nrm = ffop::operator_norm(F);
  if (nrm == 0.0) return 0.0;
  const Eigen::MatrixXcd As = ffop::weighted_adjoint(F.A, F.quad->frame_weights());
  return (As * F.A - F.A * As).norm() / (nrm * nrm);
}

double matched_displacement(const Eigen::VectorXcd& reference, const Eigen::VectorXcd& perturbed, int top,
                            double floor) {
  std::vector<cd> ref;
  for (Eigen::Index i = 0; i < reference.size() && static_cast<int>(ref.size()) < top; ++i)
    if (std::abs(reference(i)) >= floor) ref.push_back(reference(i));
  if (ref.empty()) return 0.0;
  // Candidates: the leading perturbed values plus slack for reordering.
  const auto nc = std::min<std::size_t>(static_cast<std::size_t>(perturbed.size()), ref.size() + 3);
  if (nc < ref.size()) throw std::invalid_argument("matched_displacement: perturbed spectrum too short");
  std::vector<cd> cand(perturbed.data(), perturbed.data() + nc);
  // Exhaustive bottleneck assignment; sizes are tiny.
  double best = std::numeric_limits<double>::infinity();
  std::vector<bool> used(nc, false);
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double worst) {
    if (worst >= best) return;
    if (i == ref.size()) {
      best = worst;
      return;
    }
    for (std::size_t j = 0; j < nc; ++j) {
      if (used[j]) continue;
      used[j] = true;
      rec(i + 1, std::max(worst, std::abs(ref[i] - cand[j])));
      used[j] = false;
    }
  };
  rec(0, 0.0);
  return best;
}

PhaseTrack phase_track(const forward::MediumSpec& medium, const std::vector<double>& k_grid,
                       const ffop::QuadPtr& quad, double floor) {
  if (k_grid.empty()) throw ConfigError("phase_track: empty k grid");
  for (double k : k_grid)
    if (!(k > 0.0)) throw ConfigError("phase_track: wave numbers must be positive");
  medium.validate();
  PhaseTrack out;
  out.floor = floor;
  out.points.resize(k_grid.size());
  ffop::Scene scene;
  scene.medium = medium;
  // Shared basis sized for the largest wave number before going parallel.
  ffop::ModalBasis basis(quad);
  int Lmax = 0;
  for (double k : k_grid) Lmax = std::max(Lmax, ffop::modal_diagonal(OperatorKind::MAGNETIC, scene, k).L);
  basis.reserve(Lmax);
  parallel_for(k_grid.size(), [&](std::size_t i) {
    const double k = k_grid[i];
    ffop::FarFieldMatrix F;
    F.kind = OperatorKind::MAGNETIC;
    F.k = k;
    F.medium = medium;
    F.quad = quad;
    F.A = ffop::modal_operator(basis, ffop::modal_diagonal(OperatorKind::MAGNETIC, scene, k));
    const auto es = eig(F);
    PhasePoint& p = out.points[i];
    p.k = k;
    p.norm = es.norm;
    p.min_plus = std::numeric_limits<double>::infinity();
    p.min_minus = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < es.values.size(); ++j) {
      const cd v = es.values(j);
      if (std::abs(v) < floor * es.norm || v == 0.0) continue;
      const cd ph = v / std::abs(v);
      p.phases.push_back(ph);
      p.min_plus = std::min(p.min_plus, std::abs(ph + 1.0));
      p.min_minus = std::min(p.min_minus, std::abs(ph - 1.0));
    }
  });
  return out;
}

}  // namespace scatsig::spectra
