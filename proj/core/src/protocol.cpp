#include "sampaudit/protocol.hpp"

#include <cmath>

namespace sampaudit {

using linalg::CMatrix;
using linalg::CVector;

std::string to_string(Party p) { return p == Party::alice ? "alice" : "bob"; }

Party message_holder(const Protocol& proto) {
  return proto.rounds.empty() ? proto.first_mover : other(proto.rounds.back().actor);
}

std::size_t final_measurement_dim(const Protocol& proto, Party p) {
  const std::size_t priv = proto.dims.private_dim(p);
  return message_holder(proto) == p ? priv * proto.dims.m : priv;
}

linalg::RegisterLayout global_layout(const ProtocolDims& dims) {
  return linalg::RegisterLayout({{"A", dims.a}, {"M", dims.m}, {"B", dims.b}});
}

std::vector<std::string> private_and_message(Party p) {
  return {p == Party::alice ? "A" : "B", "M"};
}

std::vector<std::string> final_registers(const Protocol& proto, Party p) {
  if (message_holder(proto) == p) return private_and_message(p);
  return {p == Party::alice ? "A" : "B"};
}

void validate(const Protocol& proto, double tol) {
  const auto& d = proto.dims;
  if (d.a == 0 || d.m == 0 || d.b == 0) throw validation_error("protocol register dimensions must be positive");
  if (d.total() > linalg::kDefaultMaxDimension)
    throw size_error("protocol dimension dA*dM*dB = " + std::to_string(d.total()) + " exceeds " +
                     std::to_string(linalg::kDefaultMaxDimension));
  if (proto.rounds.size() > kMaxRounds)
    throw size_error("protocol has " + std::to_string(proto.rounds.size()) + " rounds, limit is " +
                     std::to_string(kMaxRounds));

  Party expected = proto.first_mover;
  for (std::size_t t = 0; t < proto.rounds.size(); ++t) {
    const auto& mv = proto.rounds[t];
    const std::string where = "round " + std::to_string(t);
    if (mv.actor != expected) throw validation_error(where + ": moves must alternate starting with the first mover");
    const auto dim = static_cast<Eigen::Index>(d.private_dim(mv.actor) * d.m);
    if (mv.unitary.rows() != dim || mv.unitary.cols() != dim)
      throw validation_error(where + ": unitary must act on the actor's private register (x) M");
    if (!linalg::is_finite(mv.unitary)) throw validation_error(where + ": unitary has non-finite entries");
    if (linalg::unitarity_defect(mv.unitary) > tol) throw validation_error(where + ": matrix is not unitary");
    expected = other(expected);
  }

  for (Party p : {Party::alice, Party::bob}) {
    const auto& fm = proto.measurement(p);
    const std::string who = to_string(p) + " final measurement";
    if (fm.outcomes() > kMaxOutcomes)
      throw size_error(who + " has more than " + std::to_string(kMaxOutcomes) + " outcomes");
    if (fm.abort_outcome && *fm.abort_outcome >= fm.outcomes())
      throw validation_error(who + ": abort outcome index out of range");
    validate_measurements({fm.projectors}, final_measurement_dim(proto, p), who.c_str(), tol);
  }
}

CMatrix embed_unitary(const CMatrix& u, Party actor, const ProtocolDims& dims) {
  const auto dim = static_cast<Eigen::Index>(dims.private_dim(actor) * dims.m);
  if (u.rows() != dim || u.cols() != dim)
    throw layout_error("embed_unitary: unitary does not match the " + to_string(actor) + " private (x) M dimension");
  const auto regs = private_and_message(actor);
  return linalg::lift(u, global_layout(dims), regs);
}

HonestRun simulate_honest(const Protocol& proto) {
  validate(proto);
  const auto layout = global_layout(proto.dims);

  HonestRun run;
  CVector state = linalg::basis_vector(proto.dims.total(), 0);
  run.states.push_back(state);
  for (const auto& mv : proto.rounds) {
    state = linalg::apply_local(mv.unitary, layout, private_and_message(mv.actor), state);
    run.states.push_back(state);
  }
  run.final_state = state;

  const auto alice_regs = final_registers(proto, Party::alice);
  const auto bob_regs = final_registers(proto, Party::bob);
  run.joint.na = proto.alice.outcomes();
  run.joint.nb = proto.bob.outcomes();
  run.joint.p.assign(run.joint.na * run.joint.nb, 0.0);
  for (std::size_t a = 0; a < run.joint.na; ++a) {
    const CVector after_a = linalg::apply_local(proto.alice.projectors[a], layout, alice_regs, state);
    for (std::size_t b = 0; b < run.joint.nb; ++b) {
      const CVector after_ab = linalg::apply_local(proto.bob.projectors[b], layout, bob_regs, after_a);
      run.joint.p[a * run.joint.nb + b] = after_ab.squaredNorm();
    }
  }
  return run;
}

}  // namespace sampaudit
