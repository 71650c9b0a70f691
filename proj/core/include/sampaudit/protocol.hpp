#pragma once

// Fixed-input two-party message-passing protocols on registers A (Alice), M (message) and
// B (Bob). Global ordering is A (x) M (x) B. Each move is a unitary by the party holding M on
// its private register (x) M -- ordered private first, so Bob's unitaries act on B (x) M --
// after which M passes to the other party.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "sampaudit/correlation.hpp"
#include "sampaudit/linalg.hpp"

namespace sampaudit {

enum class Party { alice, bob };

inline Party other(Party p) { return p == Party::alice ? Party::bob : Party::alice; }
std::string to_string(Party p);

inline constexpr std::size_t kMaxRounds = 16;
inline constexpr std::size_t kMaxOutcomes = 16;

struct Move {
  Party actor = Party::alice;
  linalg::CMatrix unitary;
};

/// Final projective measurement of one party. abort_outcome, when set, marks the outcome that
/// stands for an abort.
struct FinalMeasurement {
  std::vector<linalg::CMatrix> projectors;
  std::optional<std::size_t> abort_outcome;

  std::size_t outcomes() const { return projectors.size(); }
  bool is_abort(std::size_t outcome) const { return abort_outcome && *abort_outcome == outcome; }
};

struct ProtocolDims {
  std::size_t a = 1;
  std::size_t m = 1;
  std::size_t b = 1;

  std::size_t total() const { return a * m * b; }
  std::size_t private_dim(Party p) const { return p == Party::alice ? a : b; }
};

struct Protocol {
  ProtocolDims dims;
  Party first_mover = Party::alice;
  std::vector<Move> rounds;
  FinalMeasurement alice;
  FinalMeasurement bob;

  const FinalMeasurement& measurement(Party p) const { return p == Party::alice ? alice : bob; }
};

/// Holder of M after the last move; with no moves, the first mover.
Party message_holder(const Protocol& proto);

/// Dimension of the space a party's final measurement acts on: private (x) M for the final
/// holder of M, private alone otherwise.
std::size_t final_measurement_dim(const Protocol& proto, Party p);

/// Throws a validation error naming the failed invariant.
void validate(const Protocol& proto, double tol = linalg::kStructuralTol);

linalg::RegisterLayout global_layout(const ProtocolDims& dims);

/// Registers a party's local operators act on, in operator order.
std::vector<std::string> private_and_message(Party p);
std::vector<std::string> final_registers(const Protocol& proto, Party p);

/// Embeds a move unitary (on actor-private (x) M) into A (x) M (x) B.
linalg::CMatrix embed_unitary(const linalg::CMatrix& u, Party actor, const ProtocolDims& dims);

struct HonestRun {
  linalg::CVector final_state;
  /// State after each move; states[0] is the initial all-zero state.
  std::vector<linalg::CVector> states;
  JointDistribution joint;
};

/// Runs the protocol with both parties honest from |0>_A |0>_M |0>_B.
HonestRun simulate_honest(const Protocol& proto);

}  // namespace sampaudit
