#include "sampaudit/sdp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace sampaudit::sdp {

using linalg::CMatrix;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::max_iter: return "max_iter";
    case Status::infeasible: return "infeasible";
    case Status::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

void validate(const Problem& prob, double herm_tol) {
  const std::size_t nb = prob.block_dims.size();
  if (prob.objective.size() != nb) throw validation_error("sdp: one objective matrix per block is required");
  std::size_t embedded = 0;
  for (std::size_t k = 0; k < nb; ++k) {
    const auto d = static_cast<Eigen::Index>(prob.block_dims[k]);
    if (d == 0) throw validation_error("sdp: block dimensions must be positive");
    embedded += 2 * prob.block_dims[k];
    const auto& c = prob.objective[k];
    if (c.rows() != d || c.cols() != d) throw validation_error("sdp: objective block has the wrong dimension");
    if (!linalg::is_finite(c) || !linalg::is_hermitian(c, herm_tol))
      throw validation_error("sdp: objective block " + std::to_string(k) + " is not Hermitian");
  }
  if (embedded > kMaxEmbeddedDimension)
    throw size_error("sdp: embedded dimension " + std::to_string(embedded) + " exceeds " +
                     std::to_string(kMaxEmbeddedDimension));
  if (prob.constraints.size() > kMaxConstraints)
    throw size_error("sdp: more than " + std::to_string(kMaxConstraints) + " constraints");
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto& con = prob.constraints[i];
    if (!std::isfinite(con.rhs)) throw validation_error("sdp: constraint right-hand side is not finite");
    for (const auto& t : con.terms) {
      if (t.block >= nb) throw validation_error("sdp: constraint " + std::to_string(i) + " refers to a missing block");
      const auto d = static_cast<Eigen::Index>(prob.block_dims[t.block]);
      if (t.coeff.rows() != d || t.coeff.cols() != d)
        throw validation_error("sdp: constraint " + std::to_string(i) + " coefficient has the wrong dimension");
      if (!linalg::is_finite(t.coeff) || !linalg::is_hermitian(t.coeff, herm_tol))
        throw validation_error("sdp: constraint " + std::to_string(i) + " coefficient is not Hermitian");
    }
  }
}

namespace {

using Blocks = std::vector<MatrixXd>;

MatrixXd embed(const CMatrix& h) {
  const auto d = h.rows();
  MatrixXd e(2 * d, 2 * d);
  e.topLeftCorner(d, d) = h.real();
  e.topRightCorner(d, d) = -h.imag();
  e.bottomLeftCorner(d, d) = h.imag();
  e.bottomRightCorner(d, d) = h.real();
  return e;
}

// Projection of an embedded block back to the Hermitian matrix it represents.
CMatrix unembed(const MatrixXd& e) {
  const auto d = e.rows() / 2;
  const MatrixXd re = 0.5 * (e.topLeftCorner(d, d) + e.bottomRightCorner(d, d));
  const MatrixXd im = 0.5 * (e.bottomLeftCorner(d, d) - e.topRightCorner(d, d));
  CMatrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) out(i, j) = {re(i, j), im(i, j)};
  return linalg::hermitian_part(out);
}

double inner(const Blocks& a, const Blocks& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double frob(const Blocks& a) { return std::sqrt(inner(a, a)); }

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

struct RealTerm {
  std::size_t constraint;
  MatrixXd coeff;
};

// Real embedded problem after presolve.
struct RealProblem {
  std::vector<Eigen::Index> dims;
  Blocks c;
  std::vector<std::vector<RealTerm>> by_block;  // terms grouped per block
  VectorXd b;
  std::vector<std::size_t> kept;  // original constraint index of each kept row
  std::size_t total_dim = 0;

  std::size_t m() const { return static_cast<std::size_t>(b.size()); }

  VectorXd apply(const Blocks& x) const {
    VectorXd out = VectorXd::Zero(b.size());
    for (std::size_t k = 0; k < dims.size(); ++k)
      for (const auto& t : by_block[k]) out(t.constraint) += t.coeff.cwiseProduct(x[k]).sum();
    return out;
  }

  Blocks adjoint(const VectorXd& y) const {
    Blocks out;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      MatrixXd acc = MatrixXd::Zero(dims[k], dims[k]);
      for (const auto& t : by_block[k]) acc += y(t.constraint) * t.coeff;
      out.push_back(std::move(acc));
    }
    return out;
  }
};

// Vectorization preserving the trace inner product on symmetric matrices.
void svec_into(const MatrixXd& m, Eigen::Ref<VectorXd> out) {
  Eigen::Index p = 0;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i <= j; ++i) out(p++) = (i == j) ? m(i, j) : std::sqrt(2.0) * m(i, j);
}

struct PresolveResult {
  RealProblem real;
  bool consistent = true;
};

PresolveResult presolve(const Problem& prob, double rank_tol) {
  PresolveResult res;
  RealProblem& rp = res.real;
  const std::size_t nb = prob.block_dims.size();
  std::vector<Eigen::Index> svec_offset(nb + 1, 0);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto n = static_cast<Eigen::Index>(2 * prob.block_dims[k]);
    rp.dims.push_back(n);
    rp.total_dim += static_cast<std::size_t>(n);
    rp.c.push_back(0.5 * embed(prob.objective[k]));
    svec_offset[k + 1] = svec_offset[k] + n * (n + 1) / 2;
  }

  const std::size_t m = prob.constraints.size();
  std::vector<std::vector<std::pair<std::size_t, MatrixXd>>> real_terms(m);
  MatrixXd vecs = MatrixXd::Zero(svec_offset[nb], static_cast<Eigen::Index>(m));
  VectorXd rhs(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    rhs(i) = prob.constraints[i].rhs;
    // Merge repeated blocks within a constraint.
    std::vector<MatrixXd> acc(nb);
    for (const auto& t : prob.constraints[i].terms) {
      MatrixXd e = 0.5 * embed(t.coeff);
      if (acc[t.block].size() == 0) acc[t.block] = std::move(e);
      else acc[t.block] += e;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      if (acc[k].size() == 0) continue;
      svec_into(acc[k], vecs.col(i).segment(svec_offset[k], svec_offset[k + 1] - svec_offset[k]));
      real_terms[i].emplace_back(k, std::move(acc[k]));
    }
  }

  std::vector<std::size_t> kept;
  if (m > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(vecs);
    qr.setThreshold(rank_tol);
    const auto rank = static_cast<std::size_t>(qr.rank());
    for (std::size_t r = 0; r < rank; ++r) kept.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(r)));
    std::sort(kept.begin(), kept.end());

    // Dropped rows must be consistent with the kept ones.
    if (rank < m && rank > 0) {
      MatrixXd basis(vecs.rows(), static_cast<Eigen::Index>(rank));
      VectorXd basis_rhs(static_cast<Eigen::Index>(rank));
      for (std::size_t r = 0; r < rank; ++r) {
        basis.col(r) = vecs.col(kept[r]);
        basis_rhs(r) = rhs(kept[r]);
      }
      const Eigen::ColPivHouseholderQR<MatrixXd> bqr(basis);
      for (std::size_t i = 0; i < m; ++i) {
        if (std::binary_search(kept.begin(), kept.end(), i)) continue;
        const VectorXd coef = bqr.solve(VectorXd(vecs.col(i)));
        if (std::abs(coef.dot(basis_rhs) - rhs(i)) > 1e-8 * (1.0 + std::abs(rhs(i)))) res.consistent = false;
      }
    } else if (rank == 0) {
      for (std::size_t i = 0; i < m; ++i)
        if (std::abs(rhs(i)) > 1e-8) res.consistent = false;
    }
  }

  rp.kept = kept;
  rp.b.resize(static_cast<Eigen::Index>(kept.size()));
  rp.by_block.resize(nb);
  for (std::size_t r = 0; r < kept.size(); ++r) {
    rp.b(r) = rhs(kept[r]);
    for (auto& [k, mat] : real_terms[kept[r]]) rp.by_block[k].push_back({r, std::move(mat)});
  }
  return res;
}

// Largest alpha with x + alpha dx PSD (infinity if unbounded), via the Cholesky factor of x.
double max_step(const Blocks& x, const Blocks& dx, bool& ok) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    Eigen::LLT<MatrixXd> llt(x[k]);
    if (llt.info() != Eigen::Success) {
      ok = false;
      return 0.0;
    }
    const MatrixXd l_inv_dx = llt.matrixL().solve(dx[k]);
    const MatrixXd w = llt.matrixL().solve(l_inv_dx.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(w), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues()(0);
    if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

struct Direction {
  Blocks dx;
  VectorXd dy;
  Blocks dz;
};

}  // namespace

Solution solve(const Problem& prob, const Options& opts) {
  validate(prob);
  Solution sol;
  sol.duals.assign(prob.constraints.size(), 0.0);
  for (auto d : prob.block_dims) sol.blocks.push_back(CMatrix::Zero(d, d));

  auto pre = presolve(prob, opts.presolve_rank_tol);
  const RealProblem& rp = pre.real;
  sol.constraints_removed = prob.constraints.size() - rp.m();
  if (!pre.consistent) {
    sol.status = Status::infeasible;
    sol.message = "presolve: dependent constraints have inconsistent right-hand sides";
    return sol;
  }

  if (rp.dims.empty()) {
    // Nothing to optimize: every constraint is empty and (by consistency) has zero rhs.
    sol.primal_value = sol.dual_value = prob.objective_offset;
    sol.status = Status::optimal;
    return sol;
  }

  const std::size_t nb = rp.dims.size();
  const auto m = static_cast<Eigen::Index>(rp.m());
  const double n_total = static_cast<double>(rp.total_dim);
  const double b_norm = rp.b.norm();
  const double c_norm = frob(rp.c);

  // Scaled identity start.
  Blocks x, z;
  for (std::size_t k = 0; k < nb; ++k) {
    const double n = static_cast<double>(rp.dims[k]);
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max({10.0, std::sqrt(n), rp.c[k].norm()});
    for (const auto& t : rp.by_block[k]) {
      const double an = t.coeff.norm();
      xi = std::max(xi, n * (1.0 + std::abs(rp.b(t.constraint))) / (1.0 + an));
      eta = std::max(eta, an);
    }
    x.push_back(xi * MatrixXd::Identity(rp.dims[k], rp.dims[k]));
    z.push_back(eta * MatrixXd::Identity(rp.dims[k], rp.dims[k]));
  }
  VectorXd y = VectorXd::Zero(m);

  sol.status = Status::max_iter;
  int stalled = 0;
  Blocks prev_x;
  VectorXd prev_y;
  for (int iter = 0;; ++iter) {
    const VectorXd r_p = rp.b - rp.apply(x);
    Blocks r_d = rp.adjoint(y);
    for (std::size_t k = 0; k < nb; ++k) r_d[k] -= rp.c[k] + z[k];

    IterateRecord rec;
    rec.primal_value = inner(rp.c, x) + prob.objective_offset;
    rec.dual_value = rp.b.dot(y) + prob.objective_offset;
    rec.primal_infeasibility = r_p.norm() / (1.0 + b_norm);
    rec.dual_infeasibility = frob(r_d) / (1.0 + c_norm);
    rec.mu = inner(x, z) / n_total;
    sol.history.push_back(rec);
    sol.iterations = iter;

    const double pobj = rec.primal_value - prob.objective_offset;
    const double dobj = rec.dual_value - prob.objective_offset;
    const double scale = 1.0 + std::abs(pobj) + std::abs(dobj);
    const double rel_gap = std::abs(dobj - pobj) / scale;
    const double rel_compl = rec.mu * n_total / scale;
    if (rel_gap <= opts.rel_gap_tol && rel_compl <= opts.rel_gap_tol &&
        rec.primal_infeasibility <= opts.feas_tol && rec.dual_infeasibility <= opts.feas_tol) {
      sol.status = Status::optimal;
      break;
    }
    if (y.size() > 0 && y.cwiseAbs().maxCoeff() > 1e12) {
      sol.status = Status::infeasible;
      sol.message = "dual iterates diverge: primal problem appears infeasible";
      break;
    }
    if (frob(x) > 1e12) {
      sol.status = Status::infeasible;
      sol.message = "primal iterates diverge: dual problem appears infeasible";
      break;
    }
    if (iter >= opts.max_iter) {
      sol.status = Status::max_iter;
      sol.message = "iteration cap reached";
      break;
    }

    Blocks z_inv;
    bool factor_ok = true;
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<MatrixXd> llt(z[k]);
      if (llt.info() != Eigen::Success) {
        factor_ok = false;
        break;
      }
      z_inv.push_back(sym(llt.solve(MatrixXd::Identity(rp.dims[k], rp.dims[k]))));
    }
    if (!factor_ok) {
      sol.status = Status::numerical_failure;
      sol.message = "dual slack lost positive definiteness";
      break;
    }

    // Schur complement O_ij = sum_k <A_jk, X_k A_ik Z_k^{-1}>.
    MatrixXd schur = MatrixXd::Zero(m, m);
    for (std::size_t k = 0; k < nb; ++k) {
      for (const auto& ti : rp.by_block[k]) {
        const MatrixXd g = x[k] * ti.coeff * z_inv[k];
        for (const auto& tj : rp.by_block[k]) schur(ti.constraint, tj.constraint) += tj.coeff.cwiseProduct(g).sum();
      }
    }
    schur = sym(schur);
    Eigen::LLT<MatrixXd> schur_llt(schur);
    Eigen::LDLT<MatrixXd> schur_ldlt;
    const bool use_llt = schur_llt.info() == Eigen::Success;
    if (!use_llt) schur_ldlt.compute(schur);

    // HKM direction for the complementarity target X dZ + dX Z = K.
    auto direction = [&](const Blocks& k_target) {
      Direction d;
      VectorXd rhs = -r_p;
      std::vector<MatrixXd> base(nb);
      for (std::size_t k = 0; k < nb; ++k) base[k] = sym((k_target[k] - x[k] * r_d[k]) * z_inv[k]);
      rhs += rp.apply(base);
      d.dy = use_llt ? VectorXd(schur_llt.solve(rhs)) : VectorXd(schur_ldlt.solve(rhs));
      d.dz = rp.adjoint(d.dy);
      for (std::size_t k = 0; k < nb; ++k) {
        d.dz[k] += r_d[k];
        d.dx.push_back(sym((k_target[k] - x[k] * d.dz[k]) * z_inv[k]));
      }
      return d;
    };

    // Predictor.
    Blocks k_aff(nb);
    for (std::size_t k = 0; k < nb; ++k) k_aff[k] = -x[k] * z[k];
    const Direction aff = direction(k_aff);
    bool ok = true;
    const double ap_aff = std::min(1.0, max_step(x, aff.dx, ok));
    const double ad_aff = std::min(1.0, max_step(z, aff.dz, ok));
    if (!ok) {
      sol.status = Status::numerical_failure;
      sol.message = "iterate lost positive definiteness";
      break;
    }
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < nb; ++k)
      mu_aff += (x[k] + ap_aff * aff.dx[k]).cwiseProduct(z[k] + ad_aff * aff.dz[k]).sum();
    mu_aff /= n_total;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / rec.mu, 3.0), 0.0, 1.0);

    // Corrector with the second-order term.
    Blocks k_cor(nb);
    for (std::size_t k = 0; k < nb; ++k)
      k_cor[k] = sigma * rec.mu * MatrixXd::Identity(rp.dims[k], rp.dims[k]) - x[k] * z[k] - aff.dx[k] * aff.dz[k];
    const Direction dir = direction(k_cor);
    const double ap = std::min(1.0, opts.step_backoff * max_step(x, dir.dx, ok));
    const double ad = std::min(1.0, opts.step_backoff * max_step(z, dir.dz, ok));
    if (!ok || !std::isfinite(ap) || !std::isfinite(ad)) {
      sol.status = Status::numerical_failure;
      sol.message = "step computation failed";
      break;
    }
    stalled = (ap < 1e-10 && ad < 1e-10) ? stalled + 1 : 0;
    if (stalled >= 5) {
      sol.status = Status::numerical_failure;
      sol.message = "step lengths stalled";
      break;
    }

    prev_x = x;
    prev_y = y;
    for (std::size_t k = 0; k < nb; ++k) {
      x[k] = sym(x[k] + ap * dir.dx[k]);
      z[k] = sym(z[k] + ad * dir.dz[k]);
    }
    y += ad * dir.dy;
  }

  auto extract = [&](const Blocks& xs, const VectorXd& ys) {
    for (std::size_t k = 0; k < nb; ++k) sol.blocks[k] = unembed(xs[k]);
    for (std::size_t r = 0; r < rp.kept.size(); ++r) sol.duals[rp.kept[r]] = ys(static_cast<Eigen::Index>(r));
    return validate_solution(prob, sol);
  };
  auto certified = [&](const ResidualReport& c) {
    return std::abs(c.gap) <= opts.certified_gap && c.max_primal_residual <= opts.certified_residual &&
           c.min_block_eigenvalue >= opts.certified_min_eig &&
           c.min_dual_slack_eigenvalue >= opts.certified_min_eig;
  };

  ResidualReport check = extract(x, y);
  // Breakdown close to the optimum: the last accepted iterate may already carry a certificate.
  if (sol.status == Status::numerical_failure && !prev_x.empty() && !certified(check)) {
    const ResidualReport prev = extract(prev_x, prev_y);
    if (certified(prev)) {
      check = prev;
      sol.status = Status::optimal;
      sol.message = "recovered last certified iterate after: " + sol.message;
    } else {
      check = extract(x, y);
    }
  } else if (sol.status == Status::numerical_failure && certified(check)) {
    sol.status = Status::optimal;
  }
  sol.primal_value = check.primal_value;
  sol.dual_value = check.dual_value;
  sol.gap = check.gap;
  if (sol.status == Status::optimal && !certified(check)) {
    sol.status = Status::numerical_failure;
    sol.message = "converged iterate failed the optimality certificate";
  }
  return sol;
}

ResidualReport validate_solution(const Problem& prob, const Solution& sol) {
  ResidualReport rep;
  rep.primal_value = prob.objective_offset;
  rep.dual_value = prob.objective_offset;
  rep.min_block_eigenvalue = std::numeric_limits<double>::infinity();
  rep.min_dual_slack_eigenvalue = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < prob.block_dims.size(); ++k) {
    rep.primal_value += (prob.objective[k] * sol.blocks[k]).trace().real();
    rep.min_block_eigenvalue = std::min(rep.min_block_eigenvalue, linalg::herm_eig(sol.blocks[k], 1e-8).values.minCoeff());
  }

  std::vector<CMatrix> slack;
  for (std::size_t k = 0; k < prob.block_dims.size(); ++k) slack.push_back(-prob.objective[k]);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    const auto& con = prob.constraints[i];
    double lhs = 0.0;
    for (const auto& t : con.terms) {
      lhs += (t.coeff * sol.blocks[t.block]).trace().real();
      if (i < sol.duals.size()) slack[t.block] += sol.duals[i] * t.coeff;
    }
    rep.max_primal_residual = std::max(rep.max_primal_residual, std::abs(lhs - con.rhs));
    if (i < sol.duals.size()) rep.dual_value += con.rhs * sol.duals[i];
  }
  for (const auto& s : slack)
    rep.min_dual_slack_eigenvalue =
        std::min(rep.min_dual_slack_eigenvalue, linalg::herm_eig(linalg::hermitian_part(s), 1e-6).values.minCoeff());

  if (prob.block_dims.empty()) {
    rep.min_block_eigenvalue = 0.0;
    rep.min_dual_slack_eigenvalue = 0.0;
  }
  rep.gap = rep.dual_value - rep.primal_value;
  return rep;
}

void write_sdpa(std::ostream& os, const Problem& prob) {
  validate(prob);
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << "* sampaudit SDP, real embedding; SDPA primal min c^T x s.t. sum F_i x_i - F_0 PSD\n";
  os << prob.constraints.size() << " = mDIM\n";
  os << prob.block_dims.size() << " = nBLOCK\n";
  for (std::size_t k = 0; k < prob.block_dims.size(); ++k) os << (k ? " " : "") << 2 * prob.block_dims[k];
  os << " = bLOCKsTRUCT\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) os << (i ? " " : "") << prob.constraints[i].rhs;
  os << "\n";

  auto emit = [&](std::size_t mat, std::size_t block, const CMatrix& h) {
    const MatrixXd e = 0.5 * embed(h);
    for (Eigen::Index i = 0; i < e.rows(); ++i)
      for (Eigen::Index j = i; j < e.cols(); ++j)
        if (e(i, j) != 0.0) os << mat << " " << block + 1 << " " << i + 1 << " " << j + 1 << " " << e(i, j) << "\n";
  };
  for (std::size_t k = 0; k < prob.block_dims.size(); ++k) emit(0, k, prob.objective[k]);
  for (std::size_t i = 0; i < prob.constraints.size(); ++i) {
    std::vector<CMatrix> merged(prob.block_dims.size());
    for (const auto& t : prob.constraints[i].terms) {
      if (merged[t.block].size() == 0) merged[t.block] = t.coeff;
      else merged[t.block] += t.coeff;
    }
    for (std::size_t k = 0; k < merged.size(); ++k)
      if (merged[k].size() != 0) emit(i + 1, k, merged[k]);
  }
  os.flags(flags);
  os.precision(precision);
}

}  // namespace sampaudit::sdp
