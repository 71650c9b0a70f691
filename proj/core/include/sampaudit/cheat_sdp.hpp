#pragma once

// Optimal cheating probabilities for message-passing protocols.
//
// For an honest party H facing an arbitrary opponent, the SDP variables are H's views
// rho_k on H-private (x) M right after each message arrives. The opponent holds the
// purification of everything else, so any sequence of views is reachable as long as H's
// private register is untouched while the message is away:
//
//   Tr_M(rho_k) = Tr_M(U rho_{k-1} U^dagger)
//
// where U is H's own unitary applied in between (the chain starts from H's all-zero state).
// The forcing probability p*(o) is the maximum of tr(Pi_o * final view).

#include <cstddef>
#include <optional>
#include <vector>

#include "sampaudit/correlation.hpp"
#include "sampaudit/protocol.hpp"
#include "sampaudit/sdp_solver.hpp"

namespace sampaudit {

inline constexpr double kBoundSlack = 1e-6;

struct CheatSDPInstance {
  sdp::Problem problem;
  Party honest = Party::bob;
  std::size_t outcome = 0;
  /// Move index after which each block's view is taken.
  std::vector<std::size_t> view_after_move;
  /// Isometry from each block's space into private (x) M. Blocks are restricted to
  /// (reachable private support) (x) M, so a block X stands for the view E X E^dagger.
  std::vector<linalg::CMatrix> block_embedding;
  /// Honest views on private (x) M, and the same views in block coordinates (a feasible point).
  std::vector<linalg::CMatrix> honest_view;
  std::vector<linalg::CMatrix> honest_point;
  double honest_value = 0.0;
};

/// Builds the forcing SDP for `outcome` of the honest party. Checks that honest play is a
/// feasible point with objective equal to the honest marginal; a failure there is reported as a
/// validation error since it means the protocol model is inconsistent.
CheatSDPInstance build_cheat_sdp(const Protocol& proto, Party honest, std::size_t outcome);

struct ForcingResult {
  double value = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double max_residual = 0.0;
};

/// Solves an instance; throws Error(solver) with iterate diagnostics unless the solver
/// certifies optimality.
ForcingResult solve_instance(const CheatSDPInstance& inst, const sdp::Options& opts = {});

/// Maximum probability the opponent can force the honest party to output `outcome`.
double forcing_probability(const Protocol& proto, Party honest, std::size_t outcome);

struct CheatReport {
  JointDistribution joint;
  std::vector<double> honest_a, honest_b;    // p(a), p(b)
  std::vector<double> forcing_a, forcing_b;  // p*(a): Bob cheats; p*(b): Alice cheats
  std::vector<double> gaps_a, gaps_b;
  std::vector<double> kitaev_residuals;  // p*(a) p*(b) - p(ab), row-major (a, b)
  std::vector<double> forcing_floor;     // sqrt(p(ab)), row-major
  std::optional<std::size_t> abort_a, abort_b;
  double min_residual = 0.0;
  /// False if any guaranteed inequality fails beyond kBoundSlack; that indicates a
  /// solver or model defect, never a property of the protocol.
  bool consistent = true;
  std::vector<std::string> defects;

  double residual(std::size_t a, std::size_t b) const { return kitaev_residuals[a * joint.nb + b]; }
};

CheatReport kitaev_check(const Protocol& proto, std::size_t threads = 0);

struct AuditVerdict {
  bool passed = true;
  double delta = 0.0;
  /// max over non-abort outcomes of p*(o) - (p(o) + delta).
  double worst_margin = 0.0;
  std::optional<Party> worst_party;  // whose output is biased
  std::size_t worst_outcome = 0;
  BiasFloor floor;
  CheatReport report;
};

/// Passes iff p*(o) <= p(o) + delta + kBoundSlack for every non-abort outcome of both parties.
AuditVerdict delta_security_audit(const Protocol& proto, double delta, std::size_t threads = 0);
AuditVerdict delta_security_audit(const CheatReport& report, double delta);

}  // namespace sampaudit
