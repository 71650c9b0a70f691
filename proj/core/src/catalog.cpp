#include "sampaudit/catalog.hpp"

#include <algorithm>
#include <cmath>

namespace sampaudit::catalog {

using linalg::CMatrix;
using linalg::CVector;

namespace {

std::vector<CMatrix> computational(std::size_t dim) {
  std::vector<CMatrix> out;
  for (std::size_t i = 0; i < dim; ++i) out.push_back(linalg::basis_projector(dim, i));
  return out;
}

CVector bell_state() {
  CVector psi = CVector::Zero(4);
  psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
  return psi;
}

// Eigenprojectors {(I + O)/2, (I - O)/2} of a Hermitian involution O.
std::vector<CMatrix> binary_observable(const CMatrix& o) {
  const CMatrix id = linalg::identity(o.rows());
  return {(id + o) * 0.5, (id - o) * 0.5};
}

std::size_t draw(StreamRng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

}  // namespace

DeviceSpec bell_computational() {
  DeviceSpec s;
  s.dim_a = s.dim_b = 2;
  s.state = bell_state();
  s.alice_meas = {computational(2)};
  s.bob_meas = {computational(2)};
  return s;
}

DeviceSpec chsh() {
  CMatrix z = CMatrix::Zero(2, 2), x = CMatrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  x(0, 1) = x(1, 0) = 1.0;
  const double r = 1.0 / std::sqrt(2.0);
  DeviceSpec s;
  s.dim_a = s.dim_b = 2;
  s.state = bell_state();
  s.alice_meas = {binary_observable(z), binary_observable(x)};
  s.bob_meas = {binary_observable(r * (z + x)), binary_observable(r * (z - x))};
  return s;
}

DeviceSpec product_basis_state(std::size_t i, std::size_t j) {
  DeviceSpec s;
  s.dim_a = s.dim_b = 2;
  s.state = linalg::tensor(linalg::basis_vector(2, i), linalg::basis_vector(2, j));
  s.alice_meas = {computational(2)};
  s.bob_meas = {computational(2)};
  return s;
}

CMatrix state_preparation(const std::vector<double>& q) {
  const std::size_t d = q.size();
  CVector target(d);
  for (std::size_t k = 0; k < d; ++k) target(k) = std::sqrt(std::max(0.0, q[k]));
  target /= target.norm();
  const CVector e0 = linalg::basis_vector(d, 0);
  CVector w = e0 - target;
  if (w.norm() < 1e-14) return linalg::identity(d);
  w /= w.norm();
  // Householder reflection swapping e0 and target.
  return linalg::identity(d) - 2.0 * linalg::outer(w);
}

Protocol one_round_bell() {
  // CNOT (A control, M target) after a Hadamard on A.
  CMatrix h(2, 2);
  h << 1, 1, 1, -1;
  h /= std::sqrt(2.0);
  CMatrix cnot = CMatrix::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;

  Protocol p;
  p.dims = {2, 2, 1};
  p.first_mover = Party::alice;
  p.rounds = {{Party::alice, cnot * linalg::tensor(h, linalg::identity(2))}};
  p.alice.projectors = computational(2);
  p.bob.projectors = computational(2);  // on B (x) M = M
  return p;
}

Protocol local_sampling(const std::vector<double>& q_a, const std::vector<double>& q_b) {
  Protocol p;
  p.dims = {q_a.size(), 1, q_b.size()};
  p.first_mover = Party::alice;
  p.rounds = {{Party::alice, state_preparation(q_a)}, {Party::bob, state_preparation(q_b)}};
  p.alice.projectors = computational(q_a.size());
  p.bob.projectors = computational(q_b.size());
  return p;
}

Protocol zero_round_deterministic() {
  Protocol p;
  p.dims = {2, 1, 2};
  p.first_mover = Party::alice;
  p.alice.projectors = computational(2);
  p.bob.projectors = computational(2);
  return p;
}

DeviceSpec random_spec(StreamRng& rng, const RandomSpecLimits& lim) {
  DeviceSpec s;
  s.dim_a = draw(rng, 1, lim.max_dim);
  s.dim_b = draw(rng, 1, lim.max_dim);
  s.state = random::unit_vector(s.dim_a * s.dim_b, rng);
  const std::size_t nx = draw(rng, 1, lim.max_inputs), ny = draw(rng, 1, lim.max_inputs);
  const std::size_t na = draw(rng, 1, std::min(lim.max_outcomes, s.dim_a));
  const std::size_t nb = draw(rng, 1, std::min(lim.max_outcomes, s.dim_b));
  for (std::size_t x = 0; x < nx; ++x) s.alice_meas.push_back(random::projective_measurement(s.dim_a, na, rng));
  for (std::size_t y = 0; y < ny; ++y) s.bob_meas.push_back(random::projective_measurement(s.dim_b, nb, rng));
  return s;
}

DeviceSpec random_product_spec(StreamRng& rng, const RandomSpecLimits& lim) {
  DeviceSpec s = random_spec(rng, lim);
  s.state = linalg::tensor(random::unit_vector(s.dim_a, rng), random::unit_vector(s.dim_b, rng));
  return s;
}

Protocol random_protocol(StreamRng& rng, const RandomProtocolLimits& lim) {
  Protocol p;
  p.dims.a = draw(rng, 1, lim.max_dim);
  p.dims.m = draw(rng, 2, std::max<std::size_t>(2, lim.max_dim));
  p.dims.b = draw(rng, 1, lim.max_dim);
  p.first_mover = rng.below(2) == 0 ? Party::alice : Party::bob;
  const std::size_t rounds = draw(rng, 1, lim.max_rounds);
  Party actor = p.first_mover;
  for (std::size_t t = 0; t < rounds; ++t) {
    p.rounds.push_back({actor, random::haar_unitary(p.dims.private_dim(actor) * p.dims.m, rng)});
    actor = other(actor);
  }
  for (Party party : {Party::alice, Party::bob}) {
    const std::size_t dim = final_measurement_dim(p, party);
    const std::size_t outcomes = draw(rng, 1, std::min(lim.max_outcomes, dim));
    (party == Party::alice ? p.alice : p.bob).projectors = random::projective_measurement(dim, outcomes, rng);
  }
  return p;
}

}  // namespace sampaudit::catalog
