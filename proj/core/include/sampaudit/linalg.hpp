#pragma once

// Dense complex matrix kernel.
//
// Conventions used everywhere in the library:
//   * matrices are stored row-major;
//   * in a tensor product X (x) Y the leftmost factor is the most significant
//     digit of the combined index, i.e. (X (x) Y)[i*dy + k][j*dy + l] = X[i][j] * Y[k][l].

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sampaudit/errors.hpp"

namespace sampaudit::linalg {

using Complex = std::complex<double>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using RVector = Eigen::VectorXd;

inline constexpr std::size_t kDefaultMaxDimension = 4096;
inline constexpr double kStructuralTol = 1e-9;
inline constexpr double kHermitianTol = 1e-10;

struct Register {
  std::string label;
  std::size_t dim = 1;
};

/// Ordered factorization of a Hilbert space into labelled registers.
class RegisterLayout {
 public:
  RegisterLayout() = default;
  explicit RegisterLayout(std::vector<Register> registers);

  const std::vector<Register>& registers() const noexcept { return registers_; }
  std::size_t size() const noexcept { return registers_.size(); }
  std::size_t total_dim() const noexcept { return total_; }
  std::size_t dim_of(const std::string& label) const { return registers_[index_of(label)].dim; }
  /// Throws Error(layout) for unknown labels.
  std::size_t index_of(const std::string& label) const;
  bool contains(const std::string& label) const noexcept;

 private:
  std::vector<Register> registers_;
  std::size_t total_ = 1;
};

CMatrix identity(std::size_t dim);
/// |i><i| on a space of dimension dim.
CMatrix basis_projector(std::size_t dim, std::size_t i);
CVector basis_vector(std::size_t dim, std::size_t i);
CMatrix outer(const CVector& u, const CVector& v);
inline CMatrix outer(const CVector& u) { return outer(u, u); }

double max_abs(const CMatrix& m);
bool is_finite(const CMatrix& m);
bool is_hermitian(const CMatrix& m, double tol);
/// ||U^dagger U - I||_max.
double unitarity_defect(const CMatrix& u);
CMatrix hermitian_part(const CMatrix& m);

/// Kronecker product. Throws Error(size) if either combined dimension exceeds max_dim.
CMatrix tensor(const CMatrix& x, const CMatrix& y, std::size_t max_dim = kDefaultMaxDimension);
CVector tensor(const CVector& x, const CVector& y, std::size_t max_dim = kDefaultMaxDimension);

/// Traces out every register not listed in keep. The result is ordered as the labels in
/// keep, so a permuted keep list also permutes the surviving factors.
CMatrix partial_trace(const CMatrix& x, const RegisterLayout& layout, std::span<const std::string> keep);
CMatrix partial_trace(const CMatrix& x, const RegisterLayout& layout,
                      std::initializer_list<std::string> keep);

/// Places an operator acting on the listed registers (in the listed order) into the full
/// layout, acting as identity on the remaining registers. Produces a dense matrix.
CMatrix lift(const CMatrix& op, const RegisterLayout& layout, std::span<const std::string> targets);
CMatrix lift(const CMatrix& op, const RegisterLayout& layout, std::initializer_list<std::string> targets);

/// Matrix-free version of lift(op, ...) * state.
CVector apply_local(const CMatrix& op, const RegisterLayout& layout, std::span<const std::string> targets,
                    const CVector& state);
CVector apply_local(const CMatrix& op, const RegisterLayout& layout, std::initializer_list<std::string> targets,
                    const CVector& state);

/// Reorders the tensor factors of a vector: result uses the register order given by order.
CVector permute_registers(const CVector& v, const RegisterLayout& layout, std::span<const std::string> order);

struct HermitianEigen {
  RVector values;   // descending
  CMatrix vectors;  // columns are eigenvectors, matching values
};

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized as (X + X^dagger)/2 first;
/// asymmetry beyond tol_herm is rejected.
HermitianEigen herm_eig(const CMatrix& x, double tol_herm = kHermitianTol);

/// (1/2) sum |lambda_i| for a Hermitian matrix, no density-matrix checks.
double half_trace_norm(const CMatrix& hermitian);

/// Validates unit trace, Hermiticity and positivity at tol.
void require_density_matrix(const CMatrix& rho, double tol = kStructuralTol);

/// Trace distance between two density matrices.
double trace_distance(const CMatrix& rho, const CMatrix& sigma, double tol = kStructuralTol);

/// Trace distance between the (possibly subnormalized) rank-one operators |u><u| and |v><v|.
double pure_trace_distance(const CVector& u, const CVector& v);

bool is_projector(const CMatrix& m, double tol);

}  // namespace sampaudit::linalg
