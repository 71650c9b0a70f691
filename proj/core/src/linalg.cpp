#include "sampaudit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace sampaudit::linalg {

namespace {

// Global-index offsets of every configuration of the listed registers, enumerated with the
// first listed register most significant.
std::vector<std::size_t> offsets_for(const RegisterLayout& layout, const std::vector<std::size_t>& regs) {
  const auto& all = layout.registers();
  std::vector<std::size_t> stride(all.size(), 1);
  for (std::size_t r = all.size(); r-- > 1;) stride[r - 1] = stride[r] * all[r].dim;

  std::vector<std::size_t> out{0};
  for (std::size_t r : regs) {
    std::vector<std::size_t> next;
    next.reserve(out.size() * all[r].dim);
    for (std::size_t base : out)
      for (std::size_t d = 0; d < all[r].dim; ++d) next.push_back(base + d * stride[r]);
    out = std::move(next);
  }
  return out;
}

std::vector<std::size_t> resolve(const RegisterLayout& layout, std::span<const std::string> labels) {
  std::vector<std::size_t> idx;
  idx.reserve(labels.size());
  for (const auto& l : labels) {
    std::size_t i = layout.index_of(l);
    if (std::find(idx.begin(), idx.end(), i) != idx.end())
      throw Error(Error::Kind::layout, "register '" + l + "' listed twice");
    idx.push_back(i);
  }
  return idx;
}

std::vector<std::size_t> complement(const RegisterLayout& layout, const std::vector<std::size_t>& regs) {
  std::vector<std::size_t> rest;
  for (std::size_t r = 0; r < layout.size(); ++r)
    if (std::find(regs.begin(), regs.end(), r) == regs.end()) rest.push_back(r);
  return rest;
}

void require_layout_dim(const RegisterLayout& layout, std::size_t dim, const char* what) {
  if (layout.total_dim() != dim)
    throw Error(Error::Kind::layout, std::string(what) + ": layout dimension " +
                                                     std::to_string(layout.total_dim()) + " does not match " +
                                                     std::to_string(dim));
}

}  // namespace

RegisterLayout::RegisterLayout(std::vector<Register> registers) : registers_(std::move(registers)) {
  std::unordered_set<std::string> seen;
  for (const auto& r : registers_) {
    if (r.dim == 0) throw Error(Error::Kind::layout, "register '" + r.label + "' has dimension 0");
    if (!seen.insert(r.label).second)
      throw Error(Error::Kind::layout, "duplicate register label '" + r.label + "'");
    total_ *= r.dim;
  }
}

std::size_t RegisterLayout::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < registers_.size(); ++i)
    if (registers_[i].label == label) return i;
  throw Error(Error::Kind::layout, "unknown register label '" + label + "'");
}

bool RegisterLayout::contains(const std::string& label) const noexcept {
  return std::any_of(registers_.begin(), registers_.end(), [&](const Register& r) { return r.label == label; });
}

CMatrix identity(std::size_t dim) { return CMatrix::Identity(dim, dim); }

CMatrix basis_projector(std::size_t dim, std::size_t i) {
  CMatrix m = CMatrix::Zero(dim, dim);
  m(i, i) = 1.0;
  return m;
}

CVector basis_vector(std::size_t dim, std::size_t i) {
  CVector v = CVector::Zero(dim);
  v(i) = 1.0;
  return v;
}

CMatrix outer(const CVector& u, const CVector& v) { return u * v.adjoint(); }

double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

bool is_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

bool is_hermitian(const CMatrix& m, double tol) {
  return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

double unitarity_defect(const CMatrix& u) {
  if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
  return max_abs(u.adjoint() * u - identity(u.rows()));
}

CMatrix hermitian_part(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

CMatrix tensor(const CMatrix& x, const CMatrix& y, std::size_t max_dim) {
  const auto rows = static_cast<std::size_t>(x.rows()) * y.rows();
  const auto cols = static_cast<std::size_t>(x.cols()) * y.cols();
  if (rows > max_dim || cols > max_dim)
    throw Error(Error::Kind::size, "tensor product dimension " + std::to_string(std::max(rows, cols)) +
                                                   " exceeds maximum " + std::to_string(max_dim));
  CMatrix out(rows, cols);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
  return out;
}

CVector tensor(const CVector& x, const CVector& y, std::size_t max_dim) {
  const auto n = static_cast<std::size_t>(x.size()) * y.size();
  if (n > max_dim)
    throw Error(Error::Kind::size,
                      "tensor product dimension " + std::to_string(n) + " exceeds maximum " + std::to_string(max_dim));
  CVector out(n);
  for (Eigen::Index i = 0; i < x.size(); ++i) out.segment(i * y.size(), y.size()) = x(i) * y;
  return out;
}

CMatrix partial_trace(const CMatrix& x, const RegisterLayout& layout, std::span<const std::string> keep) {
  if (x.rows() != x.cols()) throw Error(Error::Kind::validation, "partial_trace: matrix is not square");
  require_layout_dim(layout, x.rows(), "partial_trace");
  const auto kept = resolve(layout, keep);
  const auto kept_off = offsets_for(layout, kept);
  const auto traced_off = offsets_for(layout, complement(layout, kept));

  const auto n = static_cast<Eigen::Index>(kept_off.size());
  CMatrix out = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex acc = 0.0;
      for (std::size_t t : traced_off) acc += x(kept_off[i] + t, kept_off[j] + t);
      out(i, j) = acc;
    }
  return out;
}

CMatrix partial_trace(const CMatrix& x, const RegisterLayout& layout, std::initializer_list<std::string> keep) {
  return partial_trace(x, layout, std::span<const std::string>(keep.begin(), keep.size()));
}

CMatrix lift(const CMatrix& op, const RegisterLayout& layout, std::span<const std::string> targets) {
  const auto regs = resolve(layout, targets);
  const auto target_off = offsets_for(layout, regs);
  if (static_cast<std::size_t>(op.rows()) != target_off.size() || op.rows() != op.cols())
    throw Error(Error::Kind::layout, "lift: operator dimension does not match target registers");
  const auto spectator_off = offsets_for(layout, complement(layout, regs));

  const auto d = static_cast<Eigen::Index>(layout.total_dim());
  CMatrix out = CMatrix::Zero(d, d);
  for (std::size_t s : spectator_off)
    for (Eigen::Index i = 0; i < op.rows(); ++i)
      for (Eigen::Index j = 0; j < op.cols(); ++j) out(target_off[i] + s, target_off[j] + s) = op(i, j);
  return out;
}

CMatrix lift(const CMatrix& op, const RegisterLayout& layout, std::initializer_list<std::string> targets) {
  return lift(op, layout, std::span<const std::string>(targets.begin(), targets.size()));
}

CVector apply_local(const CMatrix& op, const RegisterLayout& layout, std::span<const std::string> targets,
                    const CVector& state) {
  require_layout_dim(layout, state.size(), "apply_local");
  const auto regs = resolve(layout, targets);
  const auto target_off = offsets_for(layout, regs);
  if (static_cast<std::size_t>(op.rows()) != target_off.size() || op.rows() != op.cols())
    throw Error(Error::Kind::layout, "apply_local: operator dimension does not match target registers");
  const auto spectator_off = offsets_for(layout, complement(layout, regs));

  CVector out = CVector::Zero(state.size());
  CVector local(op.cols());
  for (std::size_t s : spectator_off) {
    for (Eigen::Index j = 0; j < op.cols(); ++j) local(j) = state(target_off[j] + s);
    const CVector mapped = op * local;
    for (Eigen::Index i = 0; i < op.rows(); ++i) out(target_off[i] + s) = mapped(i);
  }
  return out;
}

CVector apply_local(const CMatrix& op, const RegisterLayout& layout, std::initializer_list<std::string> targets,
                    const CVector& state) {
  return apply_local(op, layout, std::span<const std::string>(targets.begin(), targets.size()), state);
}

CVector permute_registers(const CVector& v, const RegisterLayout& layout, std::span<const std::string> order) {
  require_layout_dim(layout, v.size(), "permute_registers");
  const auto regs = resolve(layout, order);
  if (regs.size() != layout.size())
    throw Error(Error::Kind::layout, "permute_registers: order must list every register");
  const auto off = offsets_for(layout, regs);
  CVector out(v.size());
  for (std::size_t k = 0; k < off.size(); ++k) out(k) = v(off[k]);
  return out;
}

HermitianEigen herm_eig(const CMatrix& x, double tol_herm) {
  if (x.rows() != x.cols()) throw Error(Error::Kind::validation, "herm_eig: matrix is not square");
  if (!is_finite(x)) throw Error(Error::Kind::validation, "herm_eig: non-finite entries");
  const double scale = std::max(1.0, max_abs(x));
  if (max_abs(x - x.adjoint()) > tol_herm * scale)
    throw Error(Error::Kind::validation, "herm_eig: matrix is not Hermitian within tolerance");

  const Eigen::MatrixXcd sym = hermitian_part(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw Error(Error::Kind::validation, "herm_eig: eigensolver did not converge");

  const auto n = x.rows();
  HermitianEigen out{RVector(n), CMatrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

double half_trace_norm(const CMatrix& hermitian) {
  if (hermitian.size() == 0) return 0.0;
  return 0.5 * herm_eig(hermitian, kStructuralTol).values.cwiseAbs().sum();
}

void require_density_matrix(const CMatrix& rho, double tol) {
  if (rho.rows() != rho.cols()) throw Error(Error::Kind::validation, "density matrix is not square");
  if (!is_finite(rho)) throw Error(Error::Kind::validation, "density matrix has non-finite entries");
  if (!is_hermitian(rho, tol)) throw Error(Error::Kind::validation, "density matrix is not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0)) > tol)
    throw Error(Error::Kind::validation, "density matrix does not have unit trace");
  if (herm_eig(rho, tol).values.minCoeff() < -tol)
    throw Error(Error::Kind::validation, "density matrix is not positive semidefinite");
}

double trace_distance(const CMatrix& rho, const CMatrix& sigma, double tol) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw Error(Error::Kind::layout, "trace_distance: dimension mismatch");
  require_density_matrix(rho, tol);
  require_density_matrix(sigma, tol);
  return std::clamp(half_trace_norm(rho - sigma), 0.0, 1.0);
}

double pure_trace_distance(const CVector& u, const CVector& v) {
  if (u.size() != v.size()) throw Error(Error::Kind::layout, "pure_trace_distance: dimension mismatch");
  // |u><u| - |v><v| has rank <= 2 with eigenvalues of opposite sign, so the trace norm is
  // sqrt((|u|^2 - |v|^2)^2 + 4 (|u|^2 |v|^2 - |<u|v>|^2)). The Gram determinant is evaluated as
  // |u|^2 |w|^2 with w the component of v orthogonal to u, which stays accurate when u ~ v.
  const double nu = u.squaredNorm();
  const double nv = v.squaredNorm();
  double gram = 0.0;
  if (nu > 0.0 && nv > 0.0) {
    const CVector w = v - (u.dot(v) / nu) * u;
    gram = nu * w.squaredNorm();
  }
  return 0.5 * std::sqrt((nu - nv) * (nu - nv) + 4.0 * gram);
}

bool is_projector(const CMatrix& m, double tol) {
  if (m.rows() != m.cols() || !is_finite(m)) return false;
  return max_abs(m - m.adjoint()) <= tol && max_abs(m * m - m) <= tol;
}

}  // namespace sampaudit::linalg
