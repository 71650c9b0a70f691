#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "sampaudit/random.hpp"
#include "sampaudit/sdp_solver.hpp"

namespace la = sampaudit::linalg;
namespace sdp = sampaudit::sdp;
using la::CMatrix;
using la::Complex;
using sampaudit::Error;
using sampaudit::StreamRng;

namespace {

sdp::Problem unit_trace_problem(const CMatrix& c) {
  const std::size_t d = static_cast<std::size_t>(c.rows());
  sdp::Problem p;
  p.block_dims = {d};
  p.objective = {c};
  p.constraints = {{{{0, la::identity(d)}}, 1.0}};
  return p;
}

// Hermitian basis of d x d matrices paired with the value tr(H rho) it pins.
std::vector<sdp::Constraint> pin_to(const CMatrix& rho) {
  const auto d = rho.rows();
  std::vector<sdp::Constraint> out;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) {
      CMatrix re = CMatrix::Zero(d, d);
      re(i, j) += 1.0;
      re(j, i) += 1.0;
      out.push_back({{{0, re}}, (re * rho).trace().real()});
      if (i != j) {
        CMatrix im = CMatrix::Zero(d, d);
        im(i, j) = Complex(0, 1);
        im(j, i) = Complex(0, -1);
        out.push_back({{{0, im}}, (im * rho).trace().real()});
      }
    }
  return out;
}

}  // namespace

TEST(Solve, UnitTraceProblemMatchesLargestEigenvalue) {
  StreamRng rng(301);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + rng.below(5);
    const CMatrix c = sampaudit::random::hermitian(d, rng);
    const auto prob = unit_trace_problem(c);
    const auto sol = sdp::solve(prob);
    ASSERT_EQ(sol.status, sdp::Status::optimal) << sol.message;
    const double ref = oracle::lambda_max(c);
    EXPECT_NEAR(sol.primal_value, ref, 1e-7);
    EXPECT_NEAR(sol.duals[0], ref, 1e-7);
    const auto rep = sdp::validate_solution(prob, sol);
    EXPECT_LE(rep.max_primal_residual, 1e-7);
    EXPECT_GE(rep.min_block_eigenvalue, -1e-8);
    EXPECT_LE(std::abs(rep.gap), 1e-7);
    EXPECT_GE(rep.min_dual_slack_eigenvalue, -1e-7);
  }
}

TEST(Solve, OptimalStatusMeetsCertificate) {
  StreamRng rng(302);
  for (int t = 0; t < 20; ++t) {
    const auto sol = sdp::solve(unit_trace_problem(sampaudit::random::hermitian(4, rng)));
    ASSERT_EQ(sol.status, sdp::Status::optimal);
    EXPECT_LE(sol.gap, 1e-7);
    for (const auto& x : sol.blocks) EXPECT_GE(la::herm_eig(x).values.minCoeff(), -1e-8);
  }
}

TEST(Solve, FullyDeterminedVariable) {
  StreamRng rng(303);
  const CMatrix rho = sampaudit::random::density_matrix(3, rng);
  sdp::Problem p;
  p.block_dims = {3};
  p.objective = {la::identity(3)};
  p.constraints = pin_to(rho);
  p.constraints.push_back({{{0, la::identity(3)}}, 1.0});  // implied by the pins
  const auto sol = sdp::solve(p);
  ASSERT_EQ(sol.status, sdp::Status::optimal) << sol.message;
  EXPECT_NEAR(sol.primal_value, 1.0, 1e-7);
  EXPECT_LE(la::max_abs(sol.blocks[0] - rho), 1e-6);
  EXPECT_GE(sol.constraints_removed, 1u);
}

TEST(Solve, NativeComplexObjectiveMatchesReportedValue) {
  StreamRng rng(304);
  for (int t = 0; t < 20; ++t) {
    const auto prob = unit_trace_problem(sampaudit::random::hermitian(3, rng));
    const auto sol = sdp::solve(prob);
    const double native = (prob.objective[0] * sol.blocks[0]).trace().real();
    EXPECT_NEAR(native, sol.primal_value, 1e-9);
  }
}

TEST(Solve, MultipleBlocksShareTheBudget) {
  StreamRng rng(305);
  for (int t = 0; t < 10; ++t) {
    const CMatrix c1 = sampaudit::random::hermitian(2, rng), c2 = sampaudit::random::hermitian(3, rng);
    sdp::Problem p;
    p.block_dims = {2, 3};
    p.objective = {c1, c2};
    p.constraints = {{{{0, la::identity(2)}, {1, la::identity(3)}}, 1.0}};
    const auto sol = sdp::solve(p);
    ASSERT_EQ(sol.status, sdp::Status::optimal);
    EXPECT_NEAR(sol.primal_value, std::max(oracle::lambda_max(c1), oracle::lambda_max(c2)), 1e-7);
  }
}

TEST(Solve, ObjectiveOffsetIsAdded) {
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 0) = 1.0;
  auto p = unit_trace_problem(c);
  p.objective_offset = 0.25;
  const auto sol = sdp::solve(p);
  EXPECT_NEAR(sol.primal_value, 1.25, 1e-7);
}

TEST(Solve, WeakDualityOnFeasibleIterates) {
  StreamRng rng(306);
  for (int t = 0; t < 30; ++t) {
    const auto sol = sdp::solve(unit_trace_problem(sampaudit::random::hermitian(4, rng)));
    ASSERT_FALSE(sol.history.empty());
    // The iteration starts infeasible; the duality relation applies once both sides are feasible.
    int feasible = 0;
    for (const auto& it : sol.history) {
      if (it.primal_infeasibility > 1e-8 || it.dual_infeasibility > 1e-8) continue;
      ++feasible;
      EXPECT_GE(it.dual_value, it.primal_value - 1e-9);
    }
    EXPECT_GE(feasible, 3);
  }
}

TEST(Solve, IsDeterministic) {
  StreamRng rng(307);
  const auto prob = unit_trace_problem(sampaudit::random::hermitian(5, rng));
  const auto a = sdp::solve(prob), b = sdp::solve(prob);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].primal_value, b.history[i].primal_value);
    EXPECT_EQ(a.history[i].dual_value, b.history[i].dual_value);
    EXPECT_EQ(a.history[i].mu, b.history[i].mu);
  }
  EXPECT_EQ(a.blocks[0], b.blocks[0]);
}

TEST(Solve, ScalingEquivariance) {
  StreamRng rng(308);
  for (int t = 0; t < 10; ++t) {
    const CMatrix c = sampaudit::random::hermitian(3, rng);
    const auto base = sdp::solve(unit_trace_problem(c));
    for (double alpha : {0.5, 3.0, 10.0}) {
      const auto scaled = sdp::solve(unit_trace_problem(CMatrix(alpha * c)));
      EXPECT_NEAR(scaled.primal_value, alpha * base.primal_value, 1e-7 * std::max(1.0, alpha));
      EXPECT_LE(la::max_abs(scaled.blocks[0] - base.blocks[0]), 1e-4);
    }
  }
}

TEST(Solve, DetectsInfeasibility) {
  auto p = unit_trace_problem(la::identity(2));
  p.constraints[0].rhs = -1.0;
  EXPECT_EQ(sdp::solve(p).status, sdp::Status::infeasible);
}

TEST(Validate, RejectsMalformedProblems) {
  auto p = unit_trace_problem(la::identity(2));
  p.objective[0](0, 1) = 1.0;  // not Hermitian
  EXPECT_THROW(sdp::validate(p), Error);

  p = unit_trace_problem(la::identity(2));
  p.constraints[0].terms[0].block = 3;
  EXPECT_THROW(sdp::validate(p), Error);

  p = unit_trace_problem(la::identity(2));
  p.constraints[0].terms[0].coeff = la::identity(3);
  EXPECT_THROW(sdp::validate(p), Error);

  p = unit_trace_problem(la::identity(300));
  try {
    sdp::validate(p);
    FAIL() << "expected a size error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), Error::Kind::size);
  }
}

TEST(ValidateSolution, ReportsResidualOfHandBuiltPoints) {
  const auto prob = unit_trace_problem(la::identity(2));
  sdp::Solution zero;
  zero.blocks = {CMatrix::Zero(2, 2)};
  zero.duals = {0.0};
  EXPECT_NEAR(sdp::validate_solution(prob, zero).max_primal_residual, 1.0, 1e-15);

  sdp::Solution off;
  off.blocks = {CMatrix(0.8 * la::identity(2))};
  off.duals = {1.0};
  const auto rep = sdp::validate_solution(prob, off);
  EXPECT_NEAR(rep.max_primal_residual, 0.6, 1e-15);
  EXPECT_NEAR(rep.primal_value, 1.6, 1e-15);
  EXPECT_NEAR(rep.dual_value, 1.0, 1e-15);
}

TEST(WriteSdpa, EmitsHeaderAndEntries) {
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 1) = Complex(0, 1);
  c(1, 0) = Complex(0, -1);
  std::ostringstream os;
  sdp::write_sdpa(os, unit_trace_problem(c));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.front(), '*');
  std::getline(is, line);
  EXPECT_EQ(line, "1 = mDIM");
  std::getline(is, line);
  EXPECT_EQ(line, "1 = nBLOCK");
  std::getline(is, line);
  EXPECT_EQ(line, "4 = bLOCKsTRUCT");
  std::getline(is, line);
  EXPECT_EQ(line, "1");
  // Embedded identity contributes four diagonal halves for the constraint matrix.
  int constraint_entries = 0;
  while (std::getline(is, line))
    if (line.rfind("1 1 ", 0) == 0) ++constraint_entries;
  EXPECT_EQ(constraint_entries, 4);
}
