#include "sampaudit/cheat_sdp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "sampaudit/parallel.hpp"

namespace sampaudit {

using linalg::CMatrix;
using linalg::Complex;

namespace {

// Hermitian basis of d x d matrices: E_ii, E_ij + E_ji and -i(E_ij - E_ji) for i < j.
std::vector<CMatrix> hermitian_basis(std::size_t d) {
  std::vector<CMatrix> basis;
  basis.reserve(d * d);
  for (std::size_t i = 0; i < d; ++i) basis.push_back(linalg::basis_projector(d, i));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      CMatrix s = CMatrix::Zero(d, d);
      s(i, j) = s(j, i) = 1.0;
      basis.push_back(s);
      CMatrix a = CMatrix::Zero(d, d);
      a(i, j) = Complex(0.0, -1.0);
      a(j, i) = Complex(0.0, 1.0);
      basis.push_back(a);
    }
  return basis;
}

// Honest party's view on private (x) M: either a constant, or W X_block W^dagger where W maps
// the block's reduced space into private (x) M.
struct ViewExpr {
  std::optional<std::size_t> block;
  CMatrix w;         // used when block is set
  CMatrix constant;  // used otherwise
};

double trace_real(const CMatrix& a, const CMatrix& b) { return (a * b).trace().real(); }

// Orthonormal basis (as columns) of the support of a PSD matrix.
CMatrix support_basis(const CMatrix& psd) {
  const auto eig = linalg::herm_eig(linalg::hermitian_part(psd), 1e-8);
  const double top = std::max(eig.values(0), 0.0);
  Eigen::Index r = 0;
  while (r < eig.values.size() && eig.values(r) > 1e-10 * std::max(top, 1.0)) ++r;
  return eig.vectors.leftCols(std::max<Eigen::Index>(r, 1));
}

}  // namespace

CheatSDPInstance build_cheat_sdp(const Protocol& proto, Party honest, std::size_t outcome) {
  validate(proto);
  const auto& fm = proto.measurement(honest);
  if (outcome >= fm.outcomes())
    throw validation_error("outcome " + std::to_string(outcome) + " is outside the " + to_string(honest) +
                           " alphabet");

  const std::size_t dh = proto.dims.private_dim(honest);
  const std::size_t dm = proto.dims.m;
  const std::size_t dv = dh * dm;
  const CMatrix id_m = linalg::identity(dm);
  const linalg::RegisterLayout view_layout({{"P", dh}, {"M", dm}});

  const HonestRun run = simulate_honest(proto);
  const auto layout = global_layout(proto.dims);
  const auto view_regs = private_and_message(honest);

  CheatSDPInstance inst;
  inst.honest = honest;
  inst.outcome = outcome;
  auto& prob = inst.problem;

  ViewExpr view{std::nullopt, CMatrix(), linalg::basis_projector(dv, 0)};
  bool holds_message = proto.first_mover == honest;

  for (std::size_t t = 0; t < proto.rounds.size(); ++t) {
    const auto& mv = proto.rounds[t];
    if (mv.actor == honest) {
      if (view.block) view.w = mv.unitary * view.w;
      else view.constant = mv.unitary * view.constant * mv.unitary.adjoint();
      holds_message = false;
      continue;
    }

    // A message arrives. The new view keeps the private marginal of the previous one, so it
    // lives on (support of that marginal) (x) M; restricting to that face keeps the SDP strictly
    // feasible.
    const CMatrix widest = view.block ? CMatrix(view.w * view.w.adjoint()) : view.constant;
    const CMatrix v = support_basis(linalg::partial_trace(widest, view_layout, {"P"}));
    const auto r = static_cast<std::size_t>(v.cols());
    const CMatrix embed = linalg::tensor(v, id_m);

    const std::size_t k = prob.block_dims.size();
    prob.block_dims.push_back(r * dm);
    prob.objective.push_back(CMatrix::Zero(r * dm, r * dm));
    for (const auto& h : hermitian_basis(r)) {
      sdp::Constraint con;
      con.terms.push_back({k, linalg::tensor(h, id_m)});
      const CMatrix full = linalg::tensor(CMatrix(v * h * v.adjoint()), id_m);
      if (view.block) {
        con.terms.push_back({*view.block, linalg::hermitian_part(-(view.w.adjoint() * full * view.w))});
        con.rhs = 0.0;
      } else {
        con.rhs = trace_real(full, view.constant);
      }
      prob.constraints.push_back(std::move(con));
    }
    view = ViewExpr{k, embed, CMatrix()};
    holds_message = true;

    const std::vector<std::string> keep(view_regs.begin(), view_regs.end());
    const CMatrix rho = linalg::partial_trace(linalg::outer(run.states[t + 1]), layout, keep);
    inst.block_embedding.push_back(embed);
    inst.honest_view.push_back(rho);
    inst.honest_point.push_back(embed.adjoint() * rho * embed);
    inst.view_after_move.push_back(t);
  }

  const CMatrix& pi = fm.projectors[outcome];
  const CMatrix final_op = holds_message ? pi : linalg::tensor(pi, id_m);
  if (view.block) {
    prob.objective[*view.block] = linalg::hermitian_part(view.w.adjoint() * final_op * view.w);
  } else {
    prob.objective_offset = trace_real(final_op, view.constant);
  }

  // Honest play must lie in the reduced face, be feasible and attain the honest marginal.
  double worst = 0.0;
  for (std::size_t k = 0; k < inst.honest_point.size(); ++k) {
    const CMatrix& e = inst.block_embedding[k];
    worst = std::max(worst, linalg::max_abs(e * inst.honest_point[k] * e.adjoint() - inst.honest_view[k]));
  }
  double honest_obj = prob.objective_offset;
  for (std::size_t k = 0; k < prob.block_dims.size(); ++k) honest_obj += trace_real(prob.objective[k], inst.honest_point[k]);
  for (const auto& con : prob.constraints) {
    double lhs = 0.0;
    for (const auto& term : con.terms) lhs += trace_real(term.coeff, inst.honest_point[term.block]);
    worst = std::max(worst, std::abs(lhs - con.rhs));
  }
  const double marginal = honest == Party::alice ? run.joint.marginal_a(outcome) : run.joint.marginal_b(outcome);
  if (worst > 1e-9 || std::abs(honest_obj - marginal) > 1e-9) {
    std::ostringstream os;
    os << "cheat SDP model inconsistency: honest point residual " << worst << ", objective " << honest_obj
       << " vs honest marginal " << marginal;
    throw validation_error(os.str());
  }
  inst.honest_value = marginal;
  return inst;
}

ForcingResult solve_instance(const CheatSDPInstance& inst, const sdp::Options& opts) {
  ForcingResult res;
  if (inst.problem.block_dims.empty()) {
    res.value = inst.problem.objective_offset;
    return res;
  }
  const sdp::Solution sol = sdp::solve(inst.problem, opts);
  if (sol.status != sdp::Status::optimal) {
    std::ostringstream os;
    os << "solver failed for " << to_string(inst.honest) << " outcome " << inst.outcome << ": status "
       << sdp::to_string(sol.status) << " after " << sol.iterations << " iterations";
    if (!sol.message.empty()) os << " (" << sol.message << ")";
    if (!sol.history.empty()) {
      const auto& last = sol.history.back();
      os << "; last iterate primal " << last.primal_value << " dual " << last.dual_value << " pinf "
         << last.primal_infeasibility << " dinf " << last.dual_infeasibility << " mu " << last.mu;
    }
    throw Error(Error::Kind::solver, os.str());
  }
  const auto check = sdp::validate_solution(inst.problem, sol);
  res.value = sol.primal_value;
  res.gap = sol.gap;
  res.iterations = sol.iterations;
  res.max_residual = check.max_primal_residual;
  return res;
}

double forcing_probability(const Protocol& proto, Party honest, std::size_t outcome) {
  return solve_instance(build_cheat_sdp(proto, honest, outcome)).value;
}

CheatReport kitaev_check(const Protocol& proto, std::size_t threads) {
  const HonestRun run = simulate_honest(proto);
  CheatReport rep;
  rep.joint = run.joint;
  rep.abort_a = proto.alice.abort_outcome;
  rep.abort_b = proto.bob.abort_outcome;
  const std::size_t na = rep.joint.na, nb = rep.joint.nb;
  for (std::size_t a = 0; a < na; ++a) rep.honest_a.push_back(rep.joint.marginal_a(a));
  for (std::size_t b = 0; b < nb; ++b) rep.honest_b.push_back(rep.joint.marginal_b(b));

  // Jobs 0..na-1: Alice honest (Bob forces a); na..na+nb-1: Bob honest.
  std::vector<ForcingResult> results(na + nb);
  parallel_for(
      na + nb,
      [&](std::size_t j) {
        const Party honest = j < na ? Party::alice : Party::bob;
        const std::size_t outcome = j < na ? j : j - na;
        results[j] = solve_instance(build_cheat_sdp(proto, honest, outcome));
      },
      threads);
  for (std::size_t a = 0; a < na; ++a) {
    rep.forcing_a.push_back(results[a].value);
    rep.gaps_a.push_back(results[a].gap);
  }
  for (std::size_t b = 0; b < nb; ++b) {
    rep.forcing_b.push_back(results[na + b].value);
    rep.gaps_b.push_back(results[na + b].gap);
  }

  rep.min_residual = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      const double r = rep.forcing_a[a] * rep.forcing_b[b] - rep.joint(a, b);
      rep.kitaev_residuals.push_back(r);
      rep.forcing_floor.push_back(std::sqrt(std::max(0.0, rep.joint(a, b))));
      rep.min_residual = std::min(rep.min_residual, r);
      if (r < -kBoundSlack) {
        std::ostringstream os;
        os << "Kitaev residual " << r << " at (a, b) = (" << a << ", " << b << ")";
        rep.defects.push_back(os.str());
      }
    }
  for (std::size_t a = 0; a < na; ++a)
    if (rep.forcing_a[a] < rep.honest_a[a] - kBoundSlack)
      rep.defects.push_back("p*(a=" + std::to_string(a) + ") below honest probability");
  for (std::size_t b = 0; b < nb; ++b)
    if (rep.forcing_b[b] < rep.honest_b[b] - kBoundSlack)
      rep.defects.push_back("p*(b=" + std::to_string(b) + ") below honest probability");
  rep.consistent = rep.defects.empty();
  return rep;
}

AuditVerdict delta_security_audit(const CheatReport& report, double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw validation_error("audit delta must be finite and nonnegative");
  AuditVerdict v;
  v.delta = delta;
  v.report = report;
  v.floor = bias_floor(report.joint);
  v.worst_margin = -std::numeric_limits<double>::infinity();

  auto consider = [&](Party party, const std::vector<double>& forcing, const std::vector<double>& honest,
                      std::optional<std::size_t> abort_outcome) {
    for (std::size_t o = 0; o < forcing.size(); ++o) {
      if (abort_outcome && *abort_outcome == o) continue;
      const double margin = forcing[o] - (honest[o] + delta);
      if (margin > v.worst_margin) {
        v.worst_margin = margin;
        v.worst_party = party;
        v.worst_outcome = o;
      }
    }
  };
  consider(Party::alice, report.forcing_a, report.honest_a, report.abort_a);
  consider(Party::bob, report.forcing_b, report.honest_b, report.abort_b);
  v.passed = v.worst_margin <= kBoundSlack;
  return v;
}

AuditVerdict delta_security_audit(const Protocol& proto, double delta, std::size_t threads) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw validation_error("audit delta must be finite and nonnegative");
  return delta_security_audit(kitaev_check(proto, threads), delta);
}

}  // namespace sampaudit
