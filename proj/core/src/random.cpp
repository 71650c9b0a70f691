#include "sampaudit/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sampaudit {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

StreamRng::StreamRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL))) {}

StreamRng::result_type StreamRng::operator()() { return mix64(key_ + (++counter_) * kGamma); }

double StreamRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::size_t StreamRng::below(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("StreamRng::below: bound must be positive");
  const std::uint64_t b = bound;
  const std::uint64_t limit = max() - (max() % b + 1) % b;
  for (;;) {
    const std::uint64_t r = (*this)();
    if (r <= limit) return static_cast<std::size_t>(r % b);
  }
}

double StreamRng::normal() {
  // Box-Muller; u1 in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t StreamRng::categorical(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw std::invalid_argument("StreamRng::categorical: weights sum to zero");
  const double target = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (target < acc) return i;
  }
  return last_positive;
}

namespace random {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;

namespace {

CMatrix ginibre(std::size_t rows, std::size_t cols, StreamRng& rng) {
  CMatrix g(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) g(i, j) = Complex(rng.normal(), rng.normal()) / std::sqrt(2.0);
  return g;
}

}  // namespace

CMatrix haar_unitary(std::size_t dim, StreamRng& rng) {
  const Eigen::MatrixXcd g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phases of R's diagonal so Q is Haar distributed.
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

CVector unit_vector(std::size_t dim, StreamRng& rng) {
  CVector v = ginibre(dim, 1, rng);
  return v / v.norm();
}

CMatrix density_matrix(std::size_t dim, StreamRng& rng) {
  const CMatrix g = ginibre(dim, dim, rng);
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return linalg::hermitian_part(rho);
}

CMatrix hermitian(std::size_t dim, StreamRng& rng) { return linalg::hermitian_part(ginibre(dim, dim, rng)); }

std::vector<CMatrix> projective_measurement(std::size_t dim, std::size_t outcomes, StreamRng& rng) {
  if (outcomes == 0 || outcomes > dim)
    throw std::invalid_argument("projective_measurement: need 1 <= outcomes <= dim");
  const CMatrix u = haar_unitary(dim, rng);
  // Every outcome gets one basis vector, the rest are assigned at random.
  std::vector<std::size_t> owner(dim);
  for (std::size_t k = 0; k < dim; ++k) owner[k] = k < outcomes ? k : rng.below(outcomes);
  for (std::size_t k = dim; k-- > 1;) std::swap(owner[k], owner[rng.below(k + 1)]);

  std::vector<CMatrix> family(outcomes, CMatrix::Zero(dim, dim));
  for (std::size_t k = 0; k < dim; ++k) family[owner[k]] += linalg::outer(CVector(u.col(k)));
  for (auto& p : family) p = linalg::hermitian_part(p);
  return family;
}

std::vector<double> simplex_point(std::size_t n, StreamRng& rng) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& v : p) {
    v = -std::log(1.0 - rng.uniform());
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace random
}  // namespace sampaudit
