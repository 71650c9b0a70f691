#pragma once

// Canonical device specifications and protocols, plus random instance generators.

#include <cstddef>
#include <vector>

#include "sampaudit/correlation.hpp"
#include "sampaudit/protocol.hpp"
#include "sampaudit/random.hpp"

namespace sampaudit::catalog {

/// (|00> + |11>)/sqrt(2), one input per side, computational-basis measurements.
DeviceSpec bell_computational();

/// (|00> + |11>)/sqrt(2) with Alice measuring Z or X and Bob measuring (Z +- X)/sqrt(2).
DeviceSpec chsh();

/// |i>|j>, computational-basis measurements.
DeviceSpec product_basis_state(std::size_t i, std::size_t j);

/// Alice prepares (|00> + |11>)/sqrt(2) on A (x) M and sends M; dA = dM = 2, dB = 1. Both
/// measure in the computational basis.
Protocol one_round_bell();

/// Parties sample locally: Alice rotates |0>_A to sum_a sqrt(q_a)|a>, then Bob does the same with
/// his weights. The message register is one-dimensional, so nothing is communicated.
Protocol local_sampling(const std::vector<double>& q_a, const std::vector<double>& q_b);

/// Zero-round protocol on dA = dB = 2 where both parties measure |0>.
Protocol zero_round_deterministic();

/// Real unitary mapping |0> to sum_k sqrt(q_k)|k> (Householder reflection).
linalg::CMatrix state_preparation(const std::vector<double>& q);

struct RandomSpecLimits {
  std::size_t max_dim = 4;
  std::size_t max_inputs = 3;
  std::size_t max_outcomes = 3;
};

/// Haar-random state with random projective measurements.
DeviceSpec random_spec(StreamRng& rng, const RandomSpecLimits& lim = {});

/// Random product state |alpha>|beta> with random projective measurements.
DeviceSpec random_product_spec(StreamRng& rng, const RandomSpecLimits& lim = {});

struct RandomProtocolLimits {
  std::size_t max_dim = 4;
  std::size_t max_rounds = 3;
  std::size_t max_outcomes = 3;
};

/// Random registers (dA, dB in [1, max_dim], dM in [2, max_dim]), 1..max_rounds Haar moves with a
/// random first mover, and random final projective measurements.
Protocol random_protocol(StreamRng& rng, const RandomProtocolLimits& lim = {});

}  // namespace sampaudit::catalog
