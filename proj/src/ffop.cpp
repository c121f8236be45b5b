#include "scatsig/ffop.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "scatsig/rng.hpp"

namespace scatsig::ffop {

using sphfun::mode_count;

const char* kind_name(OperatorKind k) {
  switch (k) {
    case OperatorKind::ELECTRIC: return "electric";
    case OperatorKind::MAGNETIC: return "magnetic";
    case OperatorKind::IMPEDANCE: return "impedance";
    case OperatorKind::MODIFIED: return "modified";
  }
  return "unknown";
}

OperatorKind parse_kind(const std::string& s) {
  if (s == "electric") return OperatorKind::ELECTRIC;
  if (s == "magnetic") return OperatorKind::MAGNETIC;
  if (s == "impedance") return OperatorKind::IMPEDANCE;
  if (s == "modified") return OperatorKind::MODIFIED;
  throw ConfigError("unknown operator kind '" + s + "' (electric|magnetic|impedance|modified)");
}

ModalBasis::ModalBasis(QuadPtr quad, int L) : quad_(std::move(quad)) {
  if (!quad_) throw std::invalid_argument("ModalBasis: null quadrature");
  w_ = quad_->frame_weights();
  reserve(L);
}

void ModalBasis::reserve(int L) {
  if (L <= L_) return;
  const int n = quad_->size();
  const int M = mode_count(L);
  U_.resize(2 * n, M);
  V_.resize(2 * n, M);
  for (int i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const auto vals = sphfun::vsh_all(L, quad_->nodes[iu]);
    const CVec3 e1 = complexify(quad_->e1[iu]);
    const CVec3 e2 = complexify(quad_->e2[iu]);
    for (int o = 0; o < M; ++o) {
      const auto& v = vals[static_cast<std::size_t>(o)];
      U_(2 * i, o) = bdot(e1, v.U);
      U_(2 * i + 1, o) = bdot(e2, v.U);
      V_(2 * i, o) = bdot(e1, v.V);
      V_(2 * i + 1, o) = bdot(e2, v.V);
    }
  }
  L_ = L;
}

namespace {

const forward::MediumSpec& need_medium(const Scene& s) {
  if (!s.medium) throw ConfigError("operator kind requires a medium");
  return *s.medium;
}

const forward::ImpedanceBall& need_ball(const Scene& s) {
  if (!s.ball) throw ConfigError("operator kind requires an impedance ball");
  return *s.ball;
}

ModalDiagonal electric_like(const forward::ModalCoefficients& c) {
  ModalDiagonal d;
  d.L = c.L;
  d.dU = Eigen::VectorXcd::Zero(c.L + 1);
  d.dV = Eigen::VectorXcd::Zero(c.L + 1);
  for (int l = 1; l <= c.L; ++l) {
    d.dU(l) = 4.0 * kPi * c.tm[static_cast<std::size_t>(l)];
    d.dV(l) = 4.0 * kPi * c.te[static_cast<std::size_t>(l)];
  }
  return d;
}

}  // namespace

ModalDiagonal modal_diagonal(OperatorKind kind, const Scene& scene, double k) {
  switch (kind) {
    case OperatorKind::ELECTRIC:
      return electric_like(forward::mie_coefficients(need_medium(scene), k));
    case OperatorKind::IMPEDANCE:
      return electric_like(forward::impedance_coefficients(need_ball(scene), k));
    case OperatorKind::MAGNETIC: {
      // H_inf(xhat; d, (i/k) d x p) swaps the families: U picks up T^M, V picks up T^N.
      const auto c = forward::mie_coefficients(need_medium(scene), k);
      ModalDiagonal d;
      d.L = c.L;
      d.dU = Eigen::VectorXcd::Zero(c.L + 1);
      d.dV = Eigen::VectorXcd::Zero(c.L + 1);
      const cd pre = -4.0 * kPi * kI / k;
      for (int l = 1; l <= c.L; ++l) {
        d.dU(l) = pre * c.te[static_cast<std::size_t>(l)];
        d.dV(l) = pre * c.tm[static_cast<std::size_t>(l)];
      }
      return d;
    }
    case OperatorKind::MODIFIED: {
      const auto e = modal_diagonal(OperatorKind::ELECTRIC, scene, k);
      const auto s = modal_diagonal(OperatorKind::IMPEDANCE, scene, k);
      ModalDiagonal d;
      d.L = std::max(e.L, s.L);
      d.dU = Eigen::VectorXcd::Zero(d.L + 1);
      d.dV = Eigen::VectorXcd::Zero(d.L + 1);
      d.dU.head(e.L + 1) += e.dU;
      d.dV.head(e.L + 1) += e.dV;
      d.dU.head(s.L + 1) -= s.dU;
      d.dV.head(s.L + 1) -= s.dV;
      return d;
    }
  }
  throw ConfigError("unknown operator kind");
}

Eigen::MatrixXcd modal_operator(const ModalBasis& basis, const ModalDiagonal& diag) {
  if (basis.L() < diag.L) throw std::invalid_argument("modal_operator: basis degree too small");
  const int M = mode_count(diag.L);
  const int n2 = basis.quad().dim();
  Eigen::MatrixXcd phi(n2, 2 * M);
  phi.leftCols(M) = basis.U(diag.L);
  phi.rightCols(M) = basis.V(diag.L);
  Eigen::VectorXcd dvec(2 * M);
  for (int l = 1; l <= diag.L; ++l) {
    for (int m = -l; m <= l; ++m) {
      const int o = sphfun::mode_offset(l, m);
      dvec(o) = diag.dU(l);
      dvec(M + o) = diag.dV(l);
    }
  }
  const Eigen::MatrixXcd scaled = phi * dvec.asDiagonal();
  Eigen::MatrixXcd A = scaled * phi.adjoint();
  A = A * basis.w().asDiagonal();
  return A;
}

FarFieldMatrix assemble(OperatorKind kind, const Scene& scene, double k, ModalBasis& basis) {
  if (!(k > 0.0)) throw ConfigError("wave number must be positive");
  const auto diag = modal_diagonal(kind, scene, k);
  basis.reserve(diag.L);
  FarFieldMatrix F;
  F.kind = kind;
  F.k = k;
  F.medium = scene.medium;
  F.ball = scene.ball;
  F.quad = basis.quad_ptr();
  F.A = modal_operator(basis, diag);
  return F;
}

FarFieldMatrix assemble(OperatorKind kind, const Scene& scene, double k, const QuadPtr& quad) {
  ModalBasis basis(quad);
  return assemble(kind, scene, k, basis);
}

FarFieldMatrix assemble_direct(OperatorKind kind, const Scene& scene, double k, const QuadPtr& quad) {
  std::optional<forward::ModalCoefficients> ce, cs;
  if (kind != OperatorKind::IMPEDANCE) ce = forward::mie_coefficients(need_medium(scene), k);
  if (kind == OperatorKind::IMPEDANCE || kind == OperatorKind::MODIFIED)
    cs = forward::impedance_coefficients(need_ball(scene), k);
  const auto& q = *quad;
  const int n = q.size();
  FarFieldMatrix F;
  F.kind = kind;
  F.k = k;
  F.medium = scene.medium;
  F.ball = scene.ball;
  F.quad = quad;
  F.A.resize(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Vec3& d = q.nodes[ju];
    for (int t = 0; t < 2; ++t) {
      const CVec3 p = complexify(t == 0 ? q.e1[ju] : q.e2[ju]);
      for (int i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        const Vec3& x = q.nodes[iu];
        CVec3 v;
        switch (kind) {
          case OperatorKind::ELECTRIC: v = forward::modal_far_field(*ce, d, p, x); break;
          case OperatorKind::IMPEDANCE: v = forward::modal_far_field(*cs, d, p, x); break;
          case OperatorKind::MODIFIED:
            v = forward::modal_far_field(*ce, d, p, x) - forward::modal_far_field(*cs, d, p, x);
            break;
          case OperatorKind::MAGNETIC: {
            const CVec3 pm = (kI / k) * bcross(complexify(d), p);
            v = bcross(complexify(x), forward::modal_far_field(*ce, d, pm, x));
            break;
          }
        }
        F.A(2 * i, 2 * j + t) = q.weights[ju] * bdot(complexify(q.e1[iu]), v);
        F.A(2 * i + 1, 2 * j + t) = q.weights[ju] * bdot(complexify(q.e2[iu]), v);
      }
    }
  }
  return F;
}

FarFieldMatrix add_noise(const FarFieldMatrix& A, double eps, std::uint64_t seed) {
  if (!(eps >= 0.0)) throw ConfigError("noise level must be nonnegative");
  FarFieldMatrix out = A;
  out.eps = eps;
  out.seed = seed;
  if (eps == 0.0) return out;
  const double s = eps / std::sqrt(2.0);
  const auto cols = static_cast<std::uint64_t>(A.A.cols());
  for (Eigen::Index p = 0; p < A.A.rows(); ++p) {
    for (Eigen::Index q = 0; q < A.A.cols(); ++q) {
      const std::uint64_t idx = static_cast<std::uint64_t>(p) * cols + static_cast<std::uint64_t>(q);
      const double zeta = rng::uniform_pm1(seed, 2 * idx);
      const double mu = rng::uniform_pm1(seed, 2 * idx + 1);
      out.A(p, q) *= cd{1.0 + s * zeta, s * mu};
    }
  }
  return out;
}

cd inner_product(const TangentField& u, const TangentField& v, const SphereQuadrature& quad) {
  if (u.size() != quad.dim() || v.size() != quad.dim())
    throw std::invalid_argument("inner_product: dimension mismatch");
  cd s = 0.0;
  for (int i = 0; i < quad.size(); ++i) {
    const double w = quad.weights[static_cast<std::size_t>(i)];
    s += w * (u(2 * i) * std::conj(v(2 * i)) + u(2 * i + 1) * std::conj(v(2 * i + 1)));
  }
  return s;
}

Eigen::MatrixXcd weighted_adjoint(const Eigen::MatrixXcd& A, const Eigen::VectorXd& w) {
  return w.cwiseInverse().asDiagonal() * A.adjoint() * w.asDiagonal();
}

FarFieldMatrix adjoint(const FarFieldMatrix& A) {
  if (!A.quad) throw std::invalid_argument("adjoint: matrix has no quadrature");
  FarFieldMatrix out = A;
  out.A = weighted_adjoint(A.A, A.quad->frame_weights());
  return out;
}

double operator_norm(const Eigen::MatrixXcd& A, const Eigen::VectorXd& w) {
  if (A.size() == 0) return 0.0;
  // ||A||_W = ||B||_2 with B = W^1/2 A W^-1/2.
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXcd B = sw.asDiagonal() * A * sw.cwiseInverse().asDiagonal();
  Eigen::VectorXcd v(B.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cd{1.0 + 0.01 * static_cast<double>(i % 7), 0.1 * static_cast<double>(i % 3)};
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < 500; ++it) {
    const Eigen::VectorXcd u = B * v;
    const Eigen::VectorXcd z = B.adjoint() * u;
    const double nz = z.norm();
    if (nz == 0.0) return 0.0;
    const double next = std::sqrt(nz);
    v = z / nz;
    if (it > 3 && std::abs(next - est) <= 1e-14 * next) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

double operator_norm(const FarFieldMatrix& A) {
  if (!A.quad) throw std::invalid_argument("operator_norm: matrix has no quadrature");
  return operator_norm(A.A, A.quad->frame_weights());
}

namespace {

constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw IoError(path + ": truncated far field matrix file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void save_matrix(const FarFieldMatrix& F, const std::string& path) {
  if (!F.quad) throw std::invalid_argument("save_matrix: matrix has no quadrature");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path + ": cannot open for writing");
  const auto& q = *F.quad;
  os.write("FFOP", 4);
  put<std::uint32_t>(os, kFormatVersion);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(F.kind));
  put<double>(os, F.k);
  put<double>(os, F.eps);
  put<std::uint64_t>(os, F.seed);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(q.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(q.t));
  for (const auto& x : q.nodes)
    for (int c = 0; c < 3; ++c) put<double>(os, x(c));
  for (double w : q.weights) put<double>(os, w);
  for (const auto& e : q.e1)
    for (int c = 0; c < 3; ++c) put<double>(os, e(c));
  for (const auto& e : q.e2)
    for (int c = 0; c < 3; ++c) put<double>(os, e(c));
  for (Eigen::Index r = 0; r < F.A.rows(); ++r) {
    for (Eigen::Index c = 0; c < F.A.cols(); ++c) {
      put<double>(os, F.A(r, c).real());
      put<double>(os, F.A(r, c).imag());
    }
  }
  if (!os) throw IoError(path + ": write failed");
}

FarFieldMatrix load_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path + ": cannot open for reading");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "FFOP", 4) != 0) throw IoError(path + ": not a far field matrix file");
  const auto version = get<std::uint32_t>(is, path);
  if (version != kFormatVersion) throw IoError(path + ": unsupported format version " + std::to_string(version));
  FarFieldMatrix F;
  const auto kind = get<std::uint8_t>(is, path);
  if (kind > 3) throw IoError(path + ": invalid operator kind");
  F.kind = static_cast<OperatorKind>(kind);
  F.k = get<double>(is, path);
  F.eps = get<double>(is, path);
  F.seed = get<std::uint64_t>(is, path);
  const auto n = get<std::uint32_t>(is, path);
  auto q = std::make_shared<SphereQuadrature>();
  q->t = static_cast<int>(get<std::uint32_t>(is, path));
  q->nodes.resize(n);
  q->weights.resize(n);
  q->e1.resize(n);
  q->e2.resize(n);
  for (auto& x : q->nodes)
    for (int c = 0; c < 3; ++c) x(c) = get<double>(is, path);
  for (auto& w : q->weights) w = get<double>(is, path);
  for (auto& e : q->e1)
    for (int c = 0; c < 3; ++c) e(c) = get<double>(is, path);
  for (auto& e : q->e2)
    for (int c = 0; c < 3; ++c) e(c) = get<double>(is, path);
  F.A.resize(2 * static_cast<Eigen::Index>(n), 2 * static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < F.A.rows(); ++r) {
    for (Eigen::Index c = 0; c < F.A.cols(); ++c) {
      const double re = get<double>(is, path);
      const double im = get<double>(is, path);
      F.A(r, c) = cd{re, im};
    }
  }
  F.quad = q;
  return F;
}

}  // namespace scatsig::ffop
