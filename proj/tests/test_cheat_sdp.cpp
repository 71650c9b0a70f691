#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "sampaudit/catalog.hpp"
#include "sampaudit/cheat_sdp.hpp"

namespace la = sampaudit::linalg;
namespace cat = sampaudit::catalog;
using la::CMatrix;
using sampaudit::Error;
using sampaudit::Party;
using sampaudit::Protocol;
using sampaudit::StreamRng;

namespace {

const double kCoinFloor = (std::sqrt(2.0) - 1.0) / 2.0;

std::vector<Protocol> random_protocols(std::uint64_t seed, int count) {
  StreamRng rng(seed);
  std::vector<Protocol> out;
  for (int i = 0; i < count; ++i) out.push_back(cat::random_protocol(rng));
  return out;
}

}  // namespace

TEST(ForcingProbability, OneRoundBobOutcomeMatchesEigenvalueOracle) {
  const auto proto = cat::one_round_bell();
  for (std::size_t b = 0; b < 2; ++b) {
    // Alice may send any state of M; the best is the top eigenvector of Bob's projector.
    const double oracle_value = oracle::lambda_max(proto.bob.projectors[b]);
    EXPECT_NEAR(sampaudit::forcing_probability(proto, Party::bob, b), oracle_value, 1e-6);
    EXPECT_NEAR(oracle_value, 1.0, 1e-12);
  }
}

TEST(ForcingProbability, OneRoundAliceOutcomeIsPinned) {
  const auto proto = cat::one_round_bell();
  // Alice receives nothing, so her final view is her own honest reduced state.
  const auto run = sampaudit::simulate_honest(proto);
  const CMatrix rho_a = oracle::trace_last(la::outer(run.final_state), 2, 2);
  for (std::size_t a = 0; a < 2; ++a) {
    const double fixed = (proto.alice.projectors[a] * rho_a).trace().real();
    EXPECT_NEAR(fixed, 0.5, 1e-12);
    EXPECT_NEAR(sampaudit::forcing_probability(proto, Party::alice, a), fixed, 1e-6);
  }
}

TEST(ForcingProbability, ZeroRoundDeterministic) {
  const auto proto = cat::zero_round_deterministic();
  EXPECT_NEAR(sampaudit::forcing_probability(proto, Party::alice, 0), 1.0, 1e-6);
  EXPECT_NEAR(sampaudit::forcing_probability(proto, Party::bob, 0), 1.0, 1e-6);
  EXPECT_NEAR(sampaudit::forcing_probability(proto, Party::bob, 1), 0.0, 1e-6);
}

TEST(ForcingProbability, OutcomeOutOfRangeIsRejected) {
  EXPECT_THROW(sampaudit::forcing_probability(cat::one_round_bell(), Party::bob, 2), Error);
}

TEST(BuildCheatSdp, HonestPointIsFeasibleWithHonestValue) {
  std::vector<Protocol> protos = random_protocols(401, 30);
  protos.push_back(cat::one_round_bell());
  protos.push_back(cat::local_sampling({0.3, 0.7}, {0.1, 0.5, 0.4}));
  for (const auto& proto : protos) {
    const auto joint = sampaudit::simulate_honest(proto).joint;
    for (Party honest : {Party::alice, Party::bob}) {
      const std::size_t outcomes = proto.measurement(honest).outcomes();
      for (std::size_t o = 0; o < outcomes; ++o) {
        const auto inst = sampaudit::build_cheat_sdp(proto, honest, o);
        const double marginal = honest == Party::alice ? joint.marginal_a(o) : joint.marginal_b(o);
        EXPECT_NEAR(inst.honest_value, marginal, 1e-9);
        if (inst.problem.block_dims.empty()) continue;
        sampaudit::sdp::Solution pt;
        pt.blocks = inst.honest_point;
        pt.duals.assign(inst.problem.constraints.size(), 0.0);
        const auto rep = sampaudit::sdp::validate_solution(inst.problem, pt);
        EXPECT_LE(rep.max_primal_residual, 1e-9);
        EXPECT_GE(rep.min_block_eigenvalue, -1e-9);
        EXPECT_NEAR(rep.primal_value, marginal, 1e-9);
        for (std::size_t k = 0; k < inst.honest_point.size(); ++k) {
          const CMatrix& e = inst.block_embedding[k];
          EXPECT_LE(la::max_abs(e * inst.honest_point[k] * e.adjoint() - inst.honest_view[k]), 1e-9);
          EXPECT_LE(la::max_abs(e.adjoint() * e - la::identity(static_cast<std::size_t>(e.cols()))), 1e-9);
        }
      }
    }
  }
}

TEST(BuildCheatSdp, OneBlockPerReceivedMessage) {
  const auto proto = cat::one_round_bell();
  EXPECT_EQ(sampaudit::build_cheat_sdp(proto, Party::bob, 0).problem.block_dims.size(), 1u);
  EXPECT_EQ(sampaudit::build_cheat_sdp(proto, Party::alice, 0).problem.block_dims.size(), 0u);
}

TEST(ForcingProbability, WithinBoundsOnRandomProtocols) {
  for (const auto& proto : random_protocols(402, 25)) {
    const auto joint = sampaudit::simulate_honest(proto).joint;
    for (std::size_t a = 0; a < joint.na; ++a) {
      const double v = sampaudit::forcing_probability(proto, Party::alice, a);
      EXPECT_GE(v, joint.marginal_a(a) - 1e-6);
      EXPECT_LE(v, 1.0 + 1e-6);
    }
    for (std::size_t b = 0; b < joint.nb; ++b) {
      const double v = sampaudit::forcing_probability(proto, Party::bob, b);
      EXPECT_GE(v, joint.marginal_b(b) - 1e-6);
      EXPECT_LE(v, 1.0 + 1e-6);
    }
  }
}

TEST(SolveInstance, ReturnsCertifiedPrimalPoint) {
  for (const auto& proto : random_protocols(403, 10)) {
    const auto inst = sampaudit::build_cheat_sdp(proto, Party::bob, 0);
    const auto r = sampaudit::solve_instance(inst);
    EXPECT_LE(r.gap, 1e-7);
    EXPECT_LE(r.max_residual, 1e-7);
  }
}

TEST(KitaevCheck, OneRoundIsTight) {
  const auto rep = sampaudit::kitaev_check(cat::one_round_bell());
  EXPECT_TRUE(rep.consistent);
  EXPECT_NEAR(rep.residual(0, 0), 0.0, 1e-6);
  EXPECT_NEAR(rep.residual(1, 1), 0.0, 1e-6);
  EXPECT_NEAR(rep.residual(0, 1), 0.5, 1e-6);
  EXPECT_NEAR(rep.forcing_floor[0], std::sqrt(0.5), 1e-12);
  // The protocol samples the ideal coin, so matching outcomes must reach 1/2.
  for (std::size_t a = 0; a < 2; ++a) EXPECT_GE(rep.forcing_a[a] * rep.forcing_b[a], 0.5 - 1e-6);
}

TEST(KitaevCheck, LocalSamplingHasNoCheatingAdvantage) {
  const std::vector<double> qa{0.25, 0.75}, qb{0.5, 0.2, 0.3};
  const auto rep = sampaudit::kitaev_check(cat::local_sampling(qa, qb));
  EXPECT_TRUE(rep.consistent);
  for (std::size_t a = 0; a < 2; ++a) EXPECT_NEAR(rep.forcing_a[a], qa[a], 1e-6);
  for (std::size_t b = 0; b < 3; ++b) EXPECT_NEAR(rep.forcing_b[b], qb[b], 1e-6);
  for (double r : rep.kitaev_residuals) EXPECT_NEAR(r, 0.0, 1e-6);
}

TEST(KitaevCheck, BoundsHoldOnRandomProtocols) {
  for (const auto& proto : random_protocols(404, 30)) {
    const auto rep = sampaudit::kitaev_check(proto);
    EXPECT_TRUE(rep.consistent);
    for (std::size_t a = 0; a < rep.joint.na; ++a)
      for (std::size_t b = 0; b < rep.joint.nb; ++b) {
        EXPECT_GE(rep.residual(a, b), -1e-6);
        EXPECT_GE(std::max(rep.forcing_a[a], rep.forcing_b[b]), std::sqrt(rep.joint(a, b)) - 1e-6);
      }
    for (std::size_t a = 0; a < rep.joint.na; ++a) EXPECT_GE(rep.forcing_a[a], rep.honest_a[a] - 1e-6);
    for (std::size_t b = 0; b < rep.joint.nb; ++b) EXPECT_GE(rep.forcing_b[b], rep.honest_b[b] - 1e-6);
  }
}

TEST(KitaevCheck, ThreadCountDoesNotChangeResults) {
  const auto proto = random_protocols(405, 1).front();
  const auto one = sampaudit::kitaev_check(proto, 1);
  const auto many = sampaudit::kitaev_check(proto, 4);
  EXPECT_EQ(one.forcing_a, many.forcing_a);
  EXPECT_EQ(one.forcing_b, many.forcing_b);
}

TEST(Audit, LocalSamplingPassesAtZero) {
  const auto v = sampaudit::delta_security_audit(cat::local_sampling({0.4, 0.6}, {0.9, 0.1}), 0.0);
  EXPECT_TRUE(v.passed);
  EXPECT_EQ(v.floor.delta_lb, 0.0);
}

TEST(Audit, OneRoundFailsWithBobMargin) {
  const auto v = sampaudit::delta_security_audit(cat::one_round_bell(), 0.4);
  EXPECT_FALSE(v.passed);
  EXPECT_NEAR(v.worst_margin, 0.1, 1e-6);
  ASSERT_TRUE(v.worst_party);
  EXPECT_EQ(*v.worst_party, Party::bob);
  EXPECT_NEAR(v.floor.delta_lb, kCoinFloor, 1e-12);
}

TEST(Audit, AbortOutcomeIsNotAudited) {
  auto proto = cat::one_round_bell();
  proto.bob.abort_outcome = 0;
  const auto v = sampaudit::delta_security_audit(proto, 0.4);
  EXPECT_FALSE(v.passed);
  EXPECT_EQ(*v.worst_party, Party::bob);
  EXPECT_EQ(v.worst_outcome, 1u);
}

TEST(Audit, FailsBelowBiasFloor) {
  int nonproduct = 0;
  for (const auto& proto : random_protocols(406, 30)) {
    const auto rep = sampaudit::kitaev_check(proto);
    const double floor = sampaudit::bias_floor(rep.joint).delta_lb;
    if (floor <= 1e-3) continue;
    ++nonproduct;
    EXPECT_FALSE(sampaudit::delta_security_audit(rep, floor - 1e-4).passed);
  }
  EXPECT_GT(nonproduct, 0);
}

TEST(Audit, RejectsNegativeDelta) {
  EXPECT_THROW(sampaudit::delta_security_audit(cat::one_round_bell(), -0.1), Error);
}
