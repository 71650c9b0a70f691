#pragma once

// Dense primal-dual interior-point solver for block-diagonal semidefinite programs
//
//   maximize   sum_k tr(C_k X_k) + offset
//   subject to sum_k tr(A_ik X_k) = b_i,   X_k Hermitian PSD,
//
// with dual
//
//   minimize   b^T y + offset
//   subject to Z_k = sum_i y_i A_ik - C_k  PSD.
//
// Complex Hermitian blocks are solved through the real symmetric embedding
// X -> [[Re X, -Im X], [Im X, Re X]], under which tr(CX) = tr(E(C) E(X)) / 2.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "sampaudit/linalg.hpp"

namespace sampaudit::sdp {

struct BlockTerm {
  std::size_t block = 0;
  linalg::CMatrix coeff;  // Hermitian
};

struct Constraint {
  std::vector<BlockTerm> terms;
  double rhs = 0.0;
};

struct Problem {
  std::vector<std::size_t> block_dims;
  std::vector<linalg::CMatrix> objective;  // one Hermitian matrix per block
  std::vector<Constraint> constraints;
  double objective_offset = 0.0;
};

/// Throws a validation error (or size error beyond the dense limits) for malformed problems.
void validate(const Problem& prob, double herm_tol = 1e-10);

inline constexpr std::size_t kMaxEmbeddedDimension = 512;
inline constexpr std::size_t kMaxConstraints = 5000;

enum class Status { optimal, max_iter, infeasible, numerical_failure };
std::string to_string(Status s);

struct IterateRecord {
  double primal_value = 0.0;
  double dual_value = 0.0;
  double primal_infeasibility = 0.0;  // ||b - A(X)|| / (1 + ||b||)
  double dual_infeasibility = 0.0;    // ||A^T y - C - Z||_F / (1 + ||C||_F)
  double mu = 0.0;                    // <X, Z> / n
};

struct Solution {
  std::vector<linalg::CMatrix> blocks;
  std::vector<double> duals;  // one per input constraint; 0 for constraints removed by presolve
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;  // dual_value - primal_value
  int iterations = 0;
  Status status = Status::numerical_failure;
  std::size_t constraints_removed = 0;
  std::vector<IterateRecord> history;
  std::string message;
};

struct Options {
  double rel_gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  double step_backoff = 0.98;
  double presolve_rank_tol = 1e-10;
  /// Final certificate thresholds that an optimal status must meet.
  double certified_gap = 1e-7;
  double certified_residual = 1e-7;
  double certified_min_eig = -1e-8;
};

Solution solve(const Problem& prob, const Options& opts = {});

struct ResidualReport {
  double max_primal_residual = 0.0;  // max_i |sum_k tr(A_ik X_k) - b_i|
  double min_block_eigenvalue = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double min_dual_slack_eigenvalue = 0.0;  // of sum_i y_i A_i - C
};

/// Recomputes residuals, objective values and dual slack from the problem data alone.
ResidualReport validate_solution(const Problem& prob, const Solution& sol);

/// Writes the problem in SDPA sparse format (.dat-s) for external cross-checking. The file
/// describes the real embedded problem in SDPA's convention, whose primal is this solver's
/// dual, so its optimum equals this problem's optimum minus objective_offset.
void write_sdpa(std::ostream& os, const Problem& prob);

}  // namespace sampaudit::sdp
