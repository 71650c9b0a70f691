#pragma once

// Reference computations written out from definitions, independent of the library routines.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "sampaudit/correlation.hpp"
#include "sampaudit/linalg.hpp"
#include "sampaudit/protocol.hpp"

namespace oracle {

using sampaudit::linalg::CMatrix;
using sampaudit::linalg::Complex;
using sampaudit::linalg::CVector;

// (X (x) Y)[i*dy + k][j*dy + l] = X[i][j] Y[k][l], entry by entry.
inline CMatrix kron(const CMatrix& x, const CMatrix& y) {
  CMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      for (Eigen::Index k = 0; k < y.rows(); ++k)
        for (Eigen::Index l = 0; l < y.cols(); ++l) out(i * y.rows() + k, j * y.cols() + l) = x(i, j) * y(k, l);
  return out;
}

inline CVector kron(const CVector& x, const CVector& y) {
  CVector out(x.size() * y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index k = 0; k < y.size(); ++k) out(i * y.size() + k) = x(i) * y(k);
  return out;
}

inline CMatrix eye(std::size_t d) { return CMatrix::Identity(d, d); }

// Trace over the middle factor of a (d1 x d2 x d3) operator, keeping factors 1 and 3.
inline CMatrix trace_middle(const CMatrix& x, std::size_t d1, std::size_t d2, std::size_t d3) {
  CMatrix out = CMatrix::Zero(d1 * d3, d1 * d3);
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t k = 0; k < d3; ++k)
      for (std::size_t j = 0; j < d1; ++j)
        for (std::size_t l = 0; l < d3; ++l)
          for (std::size_t m = 0; m < d2; ++m)
            out(i * d3 + k, j * d3 + l) += x((i * d2 + m) * d3 + k, (j * d2 + m) * d3 + l);
  return out;
}

// Trace over the last factor of a (d1 x d2) operator.
inline CMatrix trace_last(const CMatrix& x, std::size_t d1, std::size_t d2) {
  return trace_middle(x, d1, d2, 1);
}

// Trace over the first factor of a (d1 x d2) operator.
inline CMatrix trace_first(const CMatrix& x, std::size_t d1, std::size_t d2) {
  return trace_middle(x, 1, d1, d2);
}

inline double lambda_max(const CMatrix& h) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(h), false);
  double best = -1e300;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::max(best, es.eigenvalues()(i).real());
  return best;
}

inline std::vector<double> eigenvalues(const CMatrix& h) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Eigen::MatrixXcd(h), false);
  std::vector<double> v;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) v.push_back(es.eigenvalues()(i).real());
  std::sort(v.begin(), v.end());
  return v;
}

inline double trace_distance(const CMatrix& rho, const CMatrix& sigma) {
  double s = 0.0;
  for (double l : eigenvalues(rho - sigma)) s += std::abs(l);
  return s / 2.0;
}

// <psi| M (x) N |psi> expanded as a double sum over basis indices.
inline double expectation(const CVector& psi, const CMatrix& m, const CMatrix& n) {
  const auto da = m.rows(), db = n.rows();
  Complex s = 0.0;
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index k = 0; k < db; ++k)
      for (Eigen::Index j = 0; j < da; ++j)
        for (Eigen::Index l = 0; l < db; ++l) s += std::conj(psi(i * db + k)) * m(i, j) * n(k, l) * psi(j * db + l);
  return s.real();
}

// Table p(ab|xy), indexed ((x*ny + y)*na + a)*nb + b.
inline std::vector<double> correlation_table(const sampaudit::DeviceSpec& spec) {
  std::vector<double> t;
  for (const auto& fx : spec.alice_meas)
    for (const auto& fy : spec.bob_meas)
      for (const auto& m : fx)
        for (const auto& n : fy) t.push_back(expectation(spec.state, m, n));
  return t;
}

// Exhaustive equality check of p(ab|xy) = p(a|x)p(b|y) with marginals averaged over the other
// party's input.
inline bool brute_force_product(const std::vector<double>& t, std::size_t nx, std::size_t ny, std::size_t na,
                                std::size_t nb, double tol) {
  auto p = [&](std::size_t x, std::size_t y, std::size_t a, std::size_t b) { return t[((x * ny + y) * na + a) * nb + b]; };
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t a = 0; a < na; ++a)
        for (std::size_t b = 0; b < nb; ++b) {
          double pa = 0.0, pb = 0.0;
          for (std::size_t yy = 0; yy < ny; ++yy)
            for (std::size_t bb = 0; bb < nb; ++bb) pa += p(x, yy, a, bb) / static_cast<double>(ny);
          for (std::size_t xx = 0; xx < nx; ++xx)
            for (std::size_t aa = 0; aa < na; ++aa) pb += p(xx, y, aa, b) / static_cast<double>(nx);
          if (std::abs(p(x, y, a, b) - pa * pb) > tol) return false;
        }
  return true;
}

// Largest delta over pairs with (p(a) + d)(p(b) + d) = p(ab), by bisection on [0, 1].
inline double bias_floor_bisection(const std::vector<double>& p, std::size_t na, std::size_t nb, double tol) {
  std::vector<double> pa(na, 0.0), pb(nb, 0.0);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      pa[a] += p[a * nb + b];
      pb[b] += p[a * nb + b];
    }
  double best = 0.0;
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      const double pab = p[a * nb + b];
      if (pab <= tol || pab - pa[a] * pb[b] <= tol) continue;
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((pa[a] + mid) * (pb[b] + mid) < pab ? lo : hi) = mid;
      }
      best = std::max(best, 0.5 * (lo + hi));
    }
  return best;
}

// Full-matrix honest execution: every move is embedded by explicit Kronecker products, with
// Bob's B (x) M operator reordered to M (x) B by conjugating with the swap.
inline CMatrix swap_operator(std::size_t d1, std::size_t d2) {
  CMatrix s = CMatrix::Zero(d1 * d2, d1 * d2);
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < d2; ++j) s(j * d1 + i, i * d2 + j) = 1.0;
  return s;
}

inline CMatrix embed_move(const CMatrix& u, sampaudit::Party actor, const sampaudit::ProtocolDims& d) {
  if (actor == sampaudit::Party::alice) return kron(u, eye(d.b));
  const CMatrix s = swap_operator(d.b, d.m);  // B (x) M -> M (x) B
  return kron(eye(d.a), CMatrix(s * u * s.adjoint()));
}

inline std::vector<double> honest_joint(const sampaudit::Protocol& proto) {
  const auto& d = proto.dims;
  CVector psi = CVector::Zero(d.total());
  psi(0) = 1.0;
  for (const auto& mv : proto.rounds) psi = embed_move(mv.unitary, mv.actor, d) * psi;
  const sampaudit::Party holder =
      proto.rounds.empty() ? proto.first_mover : sampaudit::other(proto.rounds.back().actor);
  auto alice_op = [&](const CMatrix& p) {
    return holder == sampaudit::Party::alice ? kron(p, eye(d.b)) : kron(kron(p, eye(d.m)), eye(d.b));
  };
  auto bob_op = [&](const CMatrix& p) {
    if (holder == sampaudit::Party::alice) return kron(eye(d.a * d.m), p);
    const CMatrix s = swap_operator(d.b, d.m);
    return kron(eye(d.a), CMatrix(s * p * s.adjoint()));
  };
  std::vector<double> joint;
  for (const auto& pa : proto.alice.projectors)
    for (const auto& pb : proto.bob.projectors)
      joint.push_back((psi.adjoint() * alice_op(pa) * bob_op(pb) * psi)(0, 0).real());
  return joint;
}

}  // namespace oracle
