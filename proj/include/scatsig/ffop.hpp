#pragma once

// Discretized far field operators on a sphere quadrature.
//
// Matrix entries are A[(i,s),(j,t)] = w_j e^s_i . K(xhat_i; d = xhat_j, p = e^t_j),
// row/column index 2i + s. Every kernel used here is diagonal in the vector
// spherical harmonics, so with Phi_U[(i,s), lm] = e^s_i . U_lm(xhat_i) (and
// Phi_V alike) the matrix factors as
//   A = Phi_U diag(dU) Phi_U^H W + Phi_V diag(dV) Phi_V^H W,
// which is how assembly is carried out. W = diag(w_j) repeated per frame vector.
// The weighted inner product is (u, v) = v^H W u and the adjoint A* = W^-1 A^H W.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "scatsig/forward.hpp"
#include "scatsig/quadrature.hpp"

namespace scatsig::ffop {

enum class OperatorKind : std::uint8_t { ELECTRIC = 0, MAGNETIC = 1, IMPEDANCE = 2, MODIFIED = 3 };
const char* kind_name(OperatorKind k);
OperatorKind parse_kind(const std::string& s);

using QuadPtr = std::shared_ptr<const SphereQuadrature>;

// Frame components of U_lm and V_lm at every node for degrees 1..L. Grows on
// demand; not safe to grow concurrently, so call reserve() before parallel use.
class ModalBasis {
 public:
  explicit ModalBasis(QuadPtr quad, int L = 0);
  void reserve(int L);
  int L() const { return L_; }
  const SphereQuadrature& quad() const { return *quad_; }
  const QuadPtr& quad_ptr() const { return quad_; }
  // Leading mode_count(L) columns.
  auto U(int L) const { return U_.leftCols(sphfun::mode_count(L)); }
  auto V(int L) const { return V_.leftCols(sphfun::mode_count(L)); }
  const Eigen::VectorXd& w() const { return w_; }

 private:
  QuadPtr quad_;
  int L_ = 0;
  Eigen::MatrixXcd U_, V_;
  Eigen::VectorXd w_;
};

struct Scene {
  std::optional<forward::MediumSpec> medium;
  std::optional<forward::ImpedanceBall> ball;
};

struct FarFieldMatrix {
  OperatorKind kind = OperatorKind::ELECTRIC;
  double k = 1.0;
  double eps = 0.0;
  std::uint64_t seed = 0;
  std::optional<forward::MediumSpec> medium;
  std::optional<forward::ImpedanceBall> ball;
  QuadPtr quad;
  Eigen::MatrixXcd A;

  int dim() const { return static_cast<int>(A.rows()); }
};

// Per-degree diagonal of an operator kind: entry l of (dU, dV).
struct ModalDiagonal {
  int L = 0;
  Eigen::VectorXcd dU, dV;  // length L + 1, index 0 unused
};

ModalDiagonal modal_diagonal(OperatorKind kind, const Scene& scene, double k);

// A = Phi_U diag(dU) Phi_U^H W + Phi_V diag(dV) Phi_V^H W.
Eigen::MatrixXcd modal_operator(const ModalBasis& basis, const ModalDiagonal& diag);

// Throws ConfigError when the scene lacks what the kind needs.
FarFieldMatrix assemble(OperatorKind kind, const Scene& scene, double k, ModalBasis& basis);
FarFieldMatrix assemble(OperatorKind kind, const Scene& scene, double k, const QuadPtr& quad);

// Entry-by-entry assembly from the forward far field functions; slow, used as
// the definition-level reference.
FarFieldMatrix assemble_direct(OperatorKind kind, const Scene& scene, double k, const QuadPtr& quad);

// A_pq (1 + eps (zeta + i mu)/sqrt 2), zeta and mu uniform on [-1, 1] drawn
// from counters 2 idx and 2 idx + 1, idx = p cols + q.
FarFieldMatrix add_noise(const FarFieldMatrix& A, double eps, std::uint64_t seed);

// sum_j w_j u_j . conj(v_j)
cd inner_product(const TangentField& u, const TangentField& v, const SphereQuadrature& quad);

FarFieldMatrix adjoint(const FarFieldMatrix& A);
Eigen::MatrixXcd weighted_adjoint(const Eigen::MatrixXcd& A, const Eigen::VectorXd& w);

// Operator 2-norm in the weighted inner product, by power iteration.
double operator_norm(const Eigen::MatrixXcd& A, const Eigen::VectorXd& w);
double operator_norm(const FarFieldMatrix& A);

// Binary persistence (see README for the layout). Throws IoError.
void save_matrix(const FarFieldMatrix& A, const std::string& path);
FarFieldMatrix load_matrix(const std::string& path);

}  // namespace scatsig::ffop
