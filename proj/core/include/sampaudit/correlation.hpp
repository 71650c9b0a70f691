#pragma once

// Device specifications, the correlations they produce, and the product/non-product analysis
// built on them: witnesses, the secure-sampling bias floor, closeness up to supplied local
// isometries, and the multiparty bipartition scan.

#include <cstddef>
#include <optional>
#include <vector>

#include "sampaudit/linalg.hpp"

namespace sampaudit {

inline constexpr double kProductTol = 1e-8;
inline constexpr std::size_t kMaxParties = 12;

/// A bipartite pure state with one projective measurement family per input on each side.
/// alice_meas[x][a] acts on A, bob_meas[y][b] acts on B; the state lives on A (x) B.
struct DeviceSpec {
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  linalg::CVector state;
  std::vector<std::vector<linalg::CMatrix>> alice_meas;
  std::vector<std::vector<linalg::CMatrix>> bob_meas;

  std::size_t alice_inputs() const { return alice_meas.size(); }
  std::size_t bob_inputs() const { return bob_meas.size(); }
  std::size_t alice_outcomes() const { return alice_meas.empty() ? 0 : alice_meas.front().size(); }
  std::size_t bob_outcomes() const { return bob_meas.empty() ? 0 : bob_meas.front().size(); }
};

/// Throws a validation error naming the first failed invariant.
void validate(const DeviceSpec& spec, double tol = linalg::kStructuralTol);

/// Validates one party's measurement families on a space of the given dimension.
void validate_measurements(const std::vector<std::vector<linalg::CMatrix>>& families, std::size_t dim,
                           const char* party, double tol = linalg::kStructuralTol);

/// Joint outcome table p(ab|xy) with the derived marginals p(a|x), p(b|y).
class Correlation {
 public:
  /// table is indexed ((x * ny + y) * na + a) * nb + b. Normalization and no-signalling are
  /// checked at tol.
  Correlation(std::size_t nx, std::size_t ny, std::size_t na, std::size_t nb, std::vector<double> table,
              double tol = linalg::kStructuralTol);

  /// A single-input correlation (|X| = |Y| = 1) from a joint table p(ab), row-major in (a, b).
  static Correlation single_input(std::size_t na, std::size_t nb, std::vector<double> table,
                                  double tol = linalg::kStructuralTol);

  std::size_t inputs_a() const noexcept { return nx_; }
  std::size_t inputs_b() const noexcept { return ny_; }
  std::size_t outcomes_a() const noexcept { return na_; }
  std::size_t outcomes_b() const noexcept { return nb_; }

  double p(std::size_t a, std::size_t b, std::size_t x, std::size_t y) const {
    return table_[((x * ny_ + y) * na_ + a) * nb_ + b];
  }
  double alice_marginal(std::size_t a, std::size_t x) const { return pa_[x * na_ + a]; }
  double bob_marginal(std::size_t b, std::size_t y) const { return pb_[y * nb_ + b]; }
  const std::vector<double>& table() const noexcept { return table_; }

 private:
  std::size_t nx_, ny_, na_, nb_;
  std::vector<double> table_;
  std::vector<double> pa_;
  std::vector<double> pb_;
};

/// p(ab|xy) = <psi| M^x_a (x) M^y_b |psi>.
Correlation compute_correlation(const DeviceSpec& spec);

struct NonProductWitness {
  std::size_t a = 0, b = 0, x = 0, y = 0;
  double violation = 0.0;  // p(ab|xy) - p(a|x) p(b|y)
};

struct ProductTest {
  bool product = true;
  std::optional<NonProductWitness> witness;
};

/// Searches for the largest positive deviation p(ab|xy) - p(a|x)p(b|y). A deviation above tol
/// makes the correlation non-product; ties are broken by the first (x, y, a, b) in
/// lexicographic order. Negative deviations never need checking: if every deviation is <= 0,
/// they sum to zero per (x, y) and so all vanish.
ProductTest is_product(const Correlation& corr, double tol = kProductTol);

/// Two-party joint distribution p(ab), row-major in (a, b).
struct JointDistribution {
  std::size_t na = 0;
  std::size_t nb = 0;
  std::vector<double> p;

  double operator()(std::size_t a, std::size_t b) const { return p[a * nb + b]; }
  double marginal_a(std::size_t a) const;
  double marginal_b(std::size_t b) const;
};

void validate(const JointDistribution& dist, double tol = linalg::kStructuralTol);

struct PairRoot {
  std::size_t a = 0, b = 0;
  double delta = 0.0;
};

struct BiasFloor {
  double delta_lb = 0.0;
  std::vector<PairRoot> roots;  // one per pair with p(ab) > p(a)p(b) + tol, in (a, b) order
};

/// For every pair with p(ab) above both tol and p(a)p(b) + tol, the positive root of
/// (p(a) + d)(p(b) + d) = p(ab). No protocol sampling p can be d-secure for d < delta_lb.
BiasFloor bias_floor(const JointDistribution& dist, double tol = kProductTol);

/// Local isometries V_A : A' -> A (x) A'', V_B : B' -> B (x) B'' and a junk state on A'' (x) B''.
struct IsometryPair {
  linalg::CMatrix v_a;
  linalg::CMatrix v_b;
  std::size_t junk_dim_a = 1;
  std::size_t junk_dim_b = 1;
  linalg::CVector junk;

  /// Identity isometries with one-dimensional junk.
  static IsometryPair identity(std::size_t dim_a, std::size_t dim_b);
};

void validate(const IsometryPair& iso, double tol = linalg::kStructuralTol);

struct ClosenessResult {
  bool close = false;
  double max_distance = 0.0;
  std::size_t a = 0, b = 0, x = 0, y = 0;  // maximizing tuple
};

/// Trace distance, for every (x, y, a, b), between the unnormalized outer products of
/// (V_A (x) V_B)(N^x_a (x) N^y_b)|phi> and (M^x_a (x) M^y_b)|psi> (x) |junk>, with the second
/// vector reordered to A A'' B B''. close iff the maximum is <= delta up to kStructuralTol.
ClosenessResult check_closeness(const DeviceSpec& candidate, const DeviceSpec& target, const IsometryPair& iso,
                                double delta);

/// Joint distribution over n parties, row-major with party 0 most significant.
struct MultipartyDist {
  std::vector<std::size_t> outcomes;
  std::vector<double> p;
};

void validate(const MultipartyDist& dist, double tol = linalg::kStructuralTol);

struct Bipartition {
  std::vector<std::size_t> alice;  // zero-based party indices
  std::vector<std::size_t> bob;
};

struct PartitionWitness {
  Bipartition partition;
  /// Witness on the coarse-grained pair; a and b index the row-major tuples of the parties in
  /// partition.alice and partition.bob respectively. x = y = 0.
  NonProductWitness witness;
};

/// Bipartitions in canonical order: mask m = 1 .. 2^(n-1) - 1 over the first n - 1 parties
/// selects the Alice side; the last party is always on Bob's side.
std::vector<Bipartition> bipartitions(std::size_t parties);

/// Coarse-grains a multiparty distribution to the two-party table across a bipartition.
JointDistribution coarse_grain(const MultipartyDist& dist, const Bipartition& cut);

/// First bipartition (canonical order) across which the distribution is non-product.
std::optional<PartitionWitness> multiparty_nonproduct(const MultipartyDist& dist, double tol = kProductTol,
                                                      std::size_t max_parties = kMaxParties);

}  // namespace sampaudit
