#include "sampaudit/correlation.hpp"

#include <cmath>
#include <sstream>

namespace sampaudit {

using linalg::CMatrix;
using linalg::CVector;

namespace {

std::string fmt_index(const char* what, std::size_t i) {
  std::ostringstream os;
  os << what << "[" << i << "]";
  return os.str();
}

}  // namespace

void validate_measurements(const std::vector<std::vector<CMatrix>>& families, std::size_t dim, const char* party,
                           double tol) {
  const std::string who(party);
  if (families.empty()) throw validation_error(who + " has no measurement inputs");
  const std::size_t outcomes = families.front().size();
  for (std::size_t x = 0; x < families.size(); ++x) {
    const auto& fam = families[x];
    const std::string where = who + " " + fmt_index("input", x);
    if (fam.empty()) throw validation_error(where + " has no outcomes");
    if (fam.size() != outcomes) throw validation_error(where + " has a different outcome count than input 0");
    CMatrix sum = CMatrix::Zero(dim, dim);
    for (std::size_t a = 0; a < fam.size(); ++a) {
      const auto& m = fam[a];
      if (static_cast<std::size_t>(m.rows()) != dim || static_cast<std::size_t>(m.cols()) != dim)
        throw validation_error(where + " " + fmt_index("outcome", a) + " has the wrong dimension");
      if (!linalg::is_projector(m, tol))
        throw validation_error(where + " " + fmt_index("outcome", a) + " is not a projector");
      for (std::size_t b = 0; b < a; ++b)
        if (linalg::max_abs(m * fam[b]) > tol)
          throw validation_error(where + " outcomes " + std::to_string(b) + " and " + std::to_string(a) +
                                 " are not orthogonal");
      sum += m;
    }
    if (linalg::max_abs(sum - linalg::identity(dim)) > tol)
      throw validation_error(where + " projectors do not sum to the identity");
  }
}

void validate(const DeviceSpec& spec, double tol) {
  if (spec.dim_a == 0 || spec.dim_b == 0) throw validation_error("device spec dimensions must be positive");
  if (spec.dim_a * spec.dim_b > linalg::kDefaultMaxDimension)
    throw size_error("device spec dimension exceeds " + std::to_string(linalg::kDefaultMaxDimension));
  if (static_cast<std::size_t>(spec.state.size()) != spec.dim_a * spec.dim_b)
    throw validation_error("state dimension does not equal dim_a * dim_b");
  if (!spec.state.allFinite()) throw validation_error("state has non-finite entries");
  if (std::abs(spec.state.norm() - 1.0) > tol) throw validation_error("state does not have unit norm");
  validate_measurements(spec.alice_meas, spec.dim_a, "alice", tol);
  validate_measurements(spec.bob_meas, spec.dim_b, "bob", tol);
}

Correlation::Correlation(std::size_t nx, std::size_t ny, std::size_t na, std::size_t nb, std::vector<double> table,
                         double tol)
    : nx_(nx), ny_(ny), na_(na), nb_(nb), table_(std::move(table)), pa_(nx * na, 0.0), pb_(ny * nb, 0.0) {
  if (nx == 0 || ny == 0 || na == 0 || nb == 0) throw validation_error("correlation sizes must be positive");
  if (table_.size() != nx * ny * na * nb) throw validation_error("correlation table has the wrong size");
  for (double v : table_)
    if (!std::isfinite(v) || v < -tol) throw validation_error("correlation entries must be finite and nonnegative");

  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y) {
      double total = 0.0;
      for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b) total += p(a, b, x, y);
      if (std::abs(total - 1.0) > tol)
        throw validation_error("correlation is not normalized at (x, y) = (" + std::to_string(x) + ", " +
                               std::to_string(y) + ")");
    }

  // No-signalling: Alice's marginal must not depend on y and vice versa.
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t a = 0; a < na; ++a) {
      double first = 0.0;
      for (std::size_t y = 0; y < ny; ++y) {
        double m = 0.0;
        for (std::size_t b = 0; b < nb; ++b) m += p(a, b, x, y);
        if (y == 0) first = m;
        else if (std::abs(m - first) > tol) throw validation_error("correlation signals from Bob to Alice");
        pa_[x * na + a] += m / static_cast<double>(ny);
      }
    }
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t b = 0; b < nb; ++b) {
      double first = 0.0;
      for (std::size_t x = 0; x < nx; ++x) {
        double m = 0.0;
        for (std::size_t a = 0; a < na; ++a) m += p(a, b, x, y);
        if (x == 0) first = m;
        else if (std::abs(m - first) > tol) throw validation_error("correlation signals from Alice to Bob");
        pb_[y * nb + b] += m / static_cast<double>(nx);
      }
    }
}

Correlation Correlation::single_input(std::size_t na, std::size_t nb, std::vector<double> table, double tol) {
  return Correlation(1, 1, na, nb, std::move(table), tol);
}

Correlation compute_correlation(const DeviceSpec& spec) {
  validate(spec);
  const linalg::RegisterLayout layout({{"A", spec.dim_a}, {"B", spec.dim_b}});
  const std::size_t nx = spec.alice_inputs(), ny = spec.bob_inputs();
  const std::size_t na = spec.alice_outcomes(), nb = spec.bob_outcomes();

  std::vector<CVector> bob_side;  // (I (x) M^y_b)|psi>, indexed y * nb + b
  bob_side.reserve(ny * nb);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t b = 0; b < nb; ++b) bob_side.push_back(linalg::apply_local(spec.bob_meas[y][b], layout, {"B"}, spec.state));

  std::vector<double> table(nx * ny * na * nb);
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t a = 0; a < na; ++a) {
      const CVector alice_side = linalg::apply_local(spec.alice_meas[x][a], layout, {"A"}, spec.state);
      for (std::size_t y = 0; y < ny; ++y)
        for (std::size_t b = 0; b < nb; ++b) {
          // <psi| (M_a (x) I)(I (x) M_b) |psi>, M_a Hermitian.
          const linalg::Complex v = alice_side.dot(bob_side[y * nb + b]);
          if (std::abs(v.imag()) > 1e-10) throw validation_error("correlation entry has a non-negligible imaginary part");
          table[((x * ny + y) * na + a) * nb + b] = v.real();
        }
    }
  return Correlation(nx, ny, na, nb, std::move(table));
}

ProductTest is_product(const Correlation& corr, double tol) {
  std::optional<NonProductWitness> best;
  for (std::size_t x = 0; x < corr.inputs_a(); ++x)
    for (std::size_t y = 0; y < corr.inputs_b(); ++y)
      for (std::size_t a = 0; a < corr.outcomes_a(); ++a)
        for (std::size_t b = 0; b < corr.outcomes_b(); ++b) {
          const double dev = corr.p(a, b, x, y) - corr.alice_marginal(a, x) * corr.bob_marginal(b, y);
          if (!best || dev > best->violation) best = NonProductWitness{a, b, x, y, dev};
        }
  if (best && best->violation > tol) return {false, best};
  return {true, std::nullopt};
}

double JointDistribution::marginal_a(std::size_t a) const {
  double s = 0.0;
  for (std::size_t b = 0; b < nb; ++b) s += (*this)(a, b);
  return s;
}

double JointDistribution::marginal_b(std::size_t b) const {
  double s = 0.0;
  for (std::size_t a = 0; a < na; ++a) s += (*this)(a, b);
  return s;
}

void validate(const JointDistribution& dist, double tol) {
  if (dist.na == 0 || dist.nb == 0) throw validation_error("distribution alphabets must be nonempty");
  if (dist.p.size() != dist.na * dist.nb) throw validation_error("distribution table has the wrong size");
  double total = 0.0;
  for (double v : dist.p) {
    if (!std::isfinite(v) || v < -tol) throw validation_error("distribution entries must be finite and nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > tol) throw validation_error("distribution does not sum to 1");
}

BiasFloor bias_floor(const JointDistribution& dist, double tol) {
  validate(dist);
  BiasFloor out;
  for (std::size_t a = 0; a < dist.na; ++a) {
    const double pa = dist.marginal_a(a);
    for (std::size_t b = 0; b < dist.nb; ++b) {
      const double pab = dist(a, b);
      const double pb = dist.marginal_b(b);
      const double excess = pab - pa * pb;
      if (pab <= tol || excess <= tol) continue;
      // Positive root of d^2 + (pa + pb) d + (pa pb - pab) = 0, written without cancellation.
      const double disc = std::sqrt((pa - pb) * (pa - pb) + 4.0 * pab);
      const double delta = 2.0 * excess / ((pa + pb) + disc);
      out.roots.push_back({a, b, delta});
      out.delta_lb = std::max(out.delta_lb, delta);
    }
  }
  return out;
}

IsometryPair IsometryPair::identity(std::size_t dim_a, std::size_t dim_b) {
  IsometryPair iso;
  iso.v_a = linalg::identity(dim_a);
  iso.v_b = linalg::identity(dim_b);
  iso.junk = CVector::Ones(1);
  return iso;
}

void validate(const IsometryPair& iso, double tol) {
  if (iso.junk_dim_a == 0 || iso.junk_dim_b == 0) throw validation_error("junk dimensions must be positive");
  if (static_cast<std::size_t>(iso.junk.size()) != iso.junk_dim_a * iso.junk_dim_b)
    throw validation_error("junk state dimension does not equal junk_dim_a * junk_dim_b");
  if (std::abs(iso.junk.norm() - 1.0) > tol) throw validation_error("junk state does not have unit norm");
  for (const auto* v : {&iso.v_a, &iso.v_b}) {
    if (v->rows() < v->cols() || v->cols() == 0) throw validation_error("isometry must have rows >= cols > 0");
    if (linalg::max_abs(v->adjoint() * *v - linalg::identity(v->cols())) > tol)
      throw validation_error("isometry does not satisfy V^dagger V = I");
  }
}

ClosenessResult check_closeness(const DeviceSpec& candidate, const DeviceSpec& target, const IsometryPair& iso,
                                double delta) {
  validate(candidate);
  validate(target);
  validate(iso);
  if (candidate.alice_inputs() != target.alice_inputs() || candidate.bob_inputs() != target.bob_inputs() ||
      candidate.alice_outcomes() != target.alice_outcomes() || candidate.bob_outcomes() != target.bob_outcomes())
    throw layout_error("candidate and target have different input/outcome alphabets");
  if (static_cast<std::size_t>(iso.v_a.cols()) != candidate.dim_a ||
      static_cast<std::size_t>(iso.v_b.cols()) != candidate.dim_b)
    throw layout_error("isometry domains do not match the candidate dimensions");
  if (static_cast<std::size_t>(iso.v_a.rows()) != target.dim_a * iso.junk_dim_a ||
      static_cast<std::size_t>(iso.v_b.rows()) != target.dim_b * iso.junk_dim_b)
    throw layout_error("isometry ranges do not match target (x) junk dimensions");

  const linalg::RegisterLayout cand_layout({{"A", candidate.dim_a}, {"B", candidate.dim_b}});
  const linalg::RegisterLayout targ_layout({{"A", target.dim_a}, {"B", target.dim_b}});
  const std::size_t da = target.dim_a, db = target.dim_b, ja = iso.junk_dim_a, jb = iso.junk_dim_b;

  // (V_A (x) V_B) w for w on A' (x) B': reshape w to a dA' x dB' matrix W, map to V_A W V_B^T.
  auto apply_isometries = [&](const CVector& w) {
    const Eigen::Map<const CMatrix> wm(w.data(), candidate.dim_a, candidate.dim_b);
    const CMatrix out = iso.v_a * wm * iso.v_b.transpose();
    return CVector(Eigen::Map<const CVector>(out.data(), out.size()));
  };
  // (M_a (x) M_b)|psi> (x) |junk>, reordered from A B A'' B'' to A A'' B B''.
  auto with_junk = [&](const CVector& v) {
    CVector out(da * ja * db * jb);
    for (std::size_t a = 0; a < da; ++a)
      for (std::size_t b = 0; b < db; ++b)
        for (std::size_t ka = 0; ka < ja; ++ka)
          for (std::size_t kb = 0; kb < jb; ++kb)
            out(((a * ja + ka) * db + b) * jb + kb) = v(a * db + b) * iso.junk(ka * jb + kb);
    return out;
  };

  ClosenessResult result;
  result.max_distance = -1.0;
  for (std::size_t x = 0; x < target.alice_inputs(); ++x)
    for (std::size_t y = 0; y < target.bob_inputs(); ++y)
      for (std::size_t a = 0; a < target.alice_outcomes(); ++a)
        for (std::size_t b = 0; b < target.bob_outcomes(); ++b) {
          CVector c = linalg::apply_local(candidate.alice_meas[x][a], cand_layout, {"A"}, candidate.state);
          c = linalg::apply_local(candidate.bob_meas[y][b], cand_layout, {"B"}, c);
          CVector t = linalg::apply_local(target.alice_meas[x][a], targ_layout, {"A"}, target.state);
          t = linalg::apply_local(target.bob_meas[y][b], targ_layout, {"B"}, t);
          const double d = linalg::pure_trace_distance(apply_isometries(c), with_junk(t));
          if (d > result.max_distance) {
            result.max_distance = d;
            result.a = a;
            result.b = b;
            result.x = x;
            result.y = y;
          }
        }
  result.close = result.max_distance <= delta + linalg::kStructuralTol;
  return result;
}

void validate(const MultipartyDist& dist, double tol) {
  if (dist.outcomes.empty()) throw validation_error("multiparty distribution has no parties");
  std::size_t total = 1;
  for (std::size_t k : dist.outcomes) {
    if (k == 0) throw validation_error("multiparty outcome alphabets must be nonempty");
    total *= k;
  }
  if (dist.p.size() != total) throw validation_error("multiparty table has the wrong size");
  double sum = 0.0;
  for (double v : dist.p) {
    if (!std::isfinite(v) || v < -tol) throw validation_error("multiparty entries must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol) throw validation_error("multiparty distribution does not sum to 1");
}

std::vector<Bipartition> bipartitions(std::size_t parties) {
  std::vector<Bipartition> out;
  if (parties < 2) return out;
  const std::size_t count = (std::size_t{1} << (parties - 1)) - 1;
  for (std::size_t mask = 1; mask <= count; ++mask) {
    Bipartition cut;
    for (std::size_t i = 0; i < parties; ++i) {
      const bool alice = i + 1 < parties && ((mask >> i) & 1U);
      (alice ? cut.alice : cut.bob).push_back(i);
    }
    out.push_back(std::move(cut));
  }
  return out;
}

JointDistribution coarse_grain(const MultipartyDist& dist, const Bipartition& cut) {
  const std::size_t n = dist.outcomes.size();
  JointDistribution out;
  out.na = 1;
  out.nb = 1;
  for (std::size_t i : cut.alice) out.na *= dist.outcomes[i];
  for (std::size_t i : cut.bob) out.nb *= dist.outcomes[i];
  out.p.assign(out.na * out.nb, 0.0);

  std::vector<std::size_t> digit(n, 0);
  for (std::size_t flat = 0; flat < dist.p.size(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t i = n; i-- > 0;) {
      digit[i] = rest % dist.outcomes[i];
      rest /= dist.outcomes[i];
    }
    std::size_t a = 0, b = 0;
    for (std::size_t i : cut.alice) a = a * dist.outcomes[i] + digit[i];
    for (std::size_t i : cut.bob) b = b * dist.outcomes[i] + digit[i];
    out.p[a * out.nb + b] += dist.p[flat];
  }
  return out;
}

std::optional<PartitionWitness> multiparty_nonproduct(const MultipartyDist& dist, double tol,
                                                      std::size_t max_parties) {
  if (dist.outcomes.size() > max_parties)
    throw size_error("multiparty distribution has " + std::to_string(dist.outcomes.size()) +
                     " parties, limit is " + std::to_string(max_parties));
  validate(dist);
  for (auto& cut : bipartitions(dist.outcomes.size())) {
    const JointDistribution joint = coarse_grain(dist, cut);
    const auto test = is_product(Correlation::single_input(joint.na, joint.nb, joint.p), tol);
    if (!test.product) return PartitionWitness{std::move(cut), *test.witness};
  }
  return std::nullopt;
}

}  // namespace sampaudit
