#pragma once

// Deterministic random streams and random quantum objects.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "sampaudit/linalg.hpp"

namespace sampaudit {

/// Counter-based generator: output k of stream (seed, stream) is mix(key + k * gamma), so
/// any trial's draws are reproducible independently of execution order.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  explicit StreamRng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform in [0, 1) with 53 bits.
  double uniform();
  /// Uniform integer in [0, bound), bound > 0, unbiased.
  std::size_t below(std::size_t bound);
  double normal();
  /// Samples an index from nonnegative weights (need not be normalized).
  std::size_t categorical(const std::vector<double>& weights);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

namespace random {

linalg::CMatrix haar_unitary(std::size_t dim, StreamRng& rng);
/// Haar-random unit vector.
linalg::CVector unit_vector(std::size_t dim, StreamRng& rng);
/// Random density matrix from the induced measure with ancilla dimension = dim.
linalg::CMatrix density_matrix(std::size_t dim, StreamRng& rng);
/// Random Hermitian matrix with Gaussian entries.
linalg::CMatrix hermitian(std::size_t dim, StreamRng& rng);
/// Complete orthogonal projector family: rotates the computational basis by a Haar unitary and
/// splits the basis vectors into `outcomes` nonempty groups. Requires 1 <= outcomes <= dim.
std::vector<linalg::CMatrix> projective_measurement(std::size_t dim, std::size_t outcomes, StreamRng& rng);
/// Probability vector drawn uniformly from the simplex.
std::vector<double> simplex_point(std::size_t n, StreamRng& rng);

}  // namespace random
}  // namespace sampaudit
