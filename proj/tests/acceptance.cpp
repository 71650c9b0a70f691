// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sampaudit/catalog.hpp"
#include "sampaudit/cheat_sdp.hpp"
#include "sampaudit/correlation.hpp"
#include "sampaudit/cutchoose_sim.hpp"
#include "sampaudit/random.hpp"
#include "sampaudit/sdp_solver.hpp"

namespace cat = sampaudit::catalog;
namespace la = sampaudit::linalg;
namespace sim = sampaudit::sim;
using sampaudit::Party;
using sampaudit::StreamRng;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<sampaudit::DeviceSpec> random_specs() {
  StreamRng rng(20240101);
  std::vector<sampaudit::DeviceSpec> specs;
  for (int i = 0; i < 1000; ++i) specs.push_back(cat::random_spec(rng));
  return specs;
}

std::vector<sampaudit::Protocol> random_protocols() {
  StreamRng rng(777);
  std::vector<sampaudit::Protocol> protos;
  for (int i = 0; i < 150; ++i) protos.push_back(cat::random_protocol(rng));
  return protos;
}

sim::SimConfig chsh_config() {
  sim::SimConfig cfg;
  cfg.n = 50;
  cfg.target = cat::chsh();
  cfg.trials = 2000;
  cfg.seed = 20260101;
  return cfg;
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const auto bell = sampaudit::compute_correlation(cat::bell_computational());
  double bell_err = 0.0;
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      bell_err = std::max(bell_err, std::abs(bell.p(a, b, 0, 0) - (a == b ? 0.5 : 0.0)));
  double worst = 0.0;
  for (const auto& spec : random_specs()) {
    const auto c = sampaudit::compute_correlation(spec);
    for (std::size_t x = 0; x < c.inputs_a(); ++x)
      for (std::size_t y = 0; y < c.inputs_b(); ++y) {
        double total = 0.0;
        for (std::size_t a = 0; a < c.outcomes_a(); ++a) {
          double row = 0.0;
          for (std::size_t b = 0; b < c.outcomes_b(); ++b) {
            total += c.p(a, b, x, y);
            row += c.p(a, b, x, y);
            worst = std::max(worst, -c.p(a, b, x, y));
          }
          // Alice's marginal must not depend on y: compare against y = 0.
          double row0 = 0.0;
          for (std::size_t b = 0; b < c.outcomes_b(); ++b) row0 += c.p(a, b, x, 0);
          worst = std::max(worst, std::abs(row - row0));
        }
        for (std::size_t b = 0; b < c.outcomes_b(); ++b) {
          double col = 0.0, col0 = 0.0;
          for (std::size_t a = 0; a < c.outcomes_a(); ++a) {
            col += c.p(a, b, x, y);
            col0 += c.p(a, b, 0, y);
          }
          worst = std::max(worst, std::abs(col - col0));
        }
        worst = std::max(worst, std::abs(total - 1.0));
      }
  }
  const double elapsed = seconds_since(t0);
  o.pass = bell_err <= 1e-12 && worst <= 1e-9 && elapsed < 10.0;
  o.detail = "bell error " + fmt("%.2e", bell_err) + ", worst invariant deviation " + fmt("%.2e", worst) +
             " over 1000 specs, " + fmt("%.2f", elapsed) + " s";
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::vector<sampaudit::DeviceSpec> specs = random_specs();
  StreamRng rng(4242);
  for (int i = 0; i < 200; ++i) specs.push_back(cat::random_product_spec(rng));
  int disagreements = 0, nonproduct = 0;
  for (const auto& spec : specs) {
    const auto c = sampaudit::compute_correlation(spec);
    const bool ref =
        oracle::brute_force_product(c.table(), c.inputs_a(), c.inputs_b(), c.outcomes_a(), c.outcomes_b(), 1e-8);
    const bool got = sampaudit::is_product(c, 1e-8).product;
    if (ref != got) ++disagreements;
    if (!got) ++nonproduct;
  }
  o.pass = disagreements == 0;
  o.detail = std::to_string(disagreements) + " disagreements over " + std::to_string(specs.size()) + " specs (" +
             std::to_string(nonproduct) + " non-product)";
  return o;
}

Outcome criterion3() {
  Outcome o;
  const double expected = (std::sqrt(2.0) - 1.0) / 2.0;
  const double coin = sampaudit::bias_floor({2, 2, {0.5, 0.0, 0.0, 0.5}}).delta_lb;
  StreamRng rng(99);
  int nonzero = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t na = 1 + rng.below(4), nb = 1 + rng.below(4);
    const auto qa = sampaudit::random::simplex_point(na, rng), qb = sampaudit::random::simplex_point(nb, rng);
    sampaudit::JointDistribution d{na, nb, {}};
    for (double x : qa)
      for (double y : qb) d.p.push_back(x * y);
    if (sampaudit::bias_floor(d).delta_lb != 0.0) ++nonzero;
  }
  o.pass = std::abs(coin - expected) <= 1e-9 && nonzero == 0;
  o.detail = "coin floor " + fmt("%.12f", coin) + " (expected " + fmt("%.12f", expected) + "), " +
             std::to_string(nonzero) + " of 200 product distributions with a nonzero floor";
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto proto = cat::one_round_bell();
  double pb = 1.0, pa = 0.5;
  for (std::size_t k = 0; k < 2; ++k) {
    const double vb = sampaudit::forcing_probability(proto, Party::bob, k);
    const double va = sampaudit::forcing_probability(proto, Party::alice, k);
    if (std::abs(vb - 1.0) > std::abs(pb - 1.0)) pb = vb;
    if (std::abs(va - 0.5) > std::abs(pa - 0.5)) pa = va;
  }
  StreamRng rng(31337);
  double worst = 0.0;
  int failed = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t d = 2 + rng.below(7);
    const la::CMatrix c = sampaudit::random::hermitian(d, rng);
    sampaudit::sdp::Problem prob;
    prob.block_dims = {d};
    prob.objective = {c};
    prob.constraints = {{{{0, la::identity(d)}}, 1.0}};
    const auto sol = sampaudit::sdp::solve(prob);
    if (sol.status != sampaudit::sdp::Status::optimal) ++failed;
    worst = std::max(worst, std::abs(sol.primal_value - oracle::lambda_max(c)));
  }
  o.pass = std::abs(pb - 1.0) <= 1e-6 && std::abs(pa - 0.5) <= 1e-6 && worst <= 1e-7 && failed == 0;
  o.detail = "p*(b) " + fmt("%.10f", pb) + ", p*(a) " + fmt("%.10f", pa) + ", max |solver - lambda_max| " +
             fmt("%.2e", worst) + " over 50 instances";
  return o;
}

struct ProtocolResult {
  sampaudit::CheatReport report;
  bool solved = false;
  std::string error;
};

std::vector<ProtocolResult>& solved_protocols() {
  static std::vector<ProtocolResult> results = [] {
    std::vector<ProtocolResult> out;
    for (const auto& proto : random_protocols()) {
      ProtocolResult r;
      try {
        r.report = sampaudit::kitaev_check(proto);
        r.solved = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      out.push_back(std::move(r));
    }
    return out;
  }();
  return results;
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  const auto& results = solved_protocols();
  const double elapsed = seconds_since(t0);
  int unsolved = 0;
  double min_residual = 1.0, min_floor_margin = 1.0;
  for (const auto& r : results) {
    if (!r.solved) {
      ++unsolved;
      continue;
    }
    const auto& rep = r.report;
    for (std::size_t a = 0; a < rep.joint.na; ++a)
      for (std::size_t b = 0; b < rep.joint.nb; ++b) {
        min_residual = std::min(min_residual, rep.residual(a, b));
        min_floor_margin =
            std::min(min_floor_margin, std::max(rep.forcing_a[a], rep.forcing_b[b]) - std::sqrt(rep.joint(a, b)));
      }
  }
  o.pass = unsolved == 0 && min_residual >= -1e-6 && min_floor_margin >= -1e-6 && elapsed <= 600.0;
  o.detail = std::to_string(results.size()) + " protocols, " + std::to_string(unsolved) + " unsolved, min residual " +
             fmt("%.2e", min_residual) + ", min floor margin " + fmt("%.2e", min_floor_margin) + ", " +
             fmt("%.1f", elapsed) + " s";
  return o;
}

Outcome criterion6() {
  Outcome o;
  int audited = 0, wrong = 0;
  for (const auto& r : solved_protocols()) {
    if (!r.solved) continue;
    const auto& joint = r.report.joint;
    const auto test = sampaudit::is_product(sampaudit::Correlation::single_input(joint.na, joint.nb, joint.p));
    if (test.product || test.witness->violation <= 1e-4) continue;
    ++audited;
    const double delta = std::max(0.0, sampaudit::bias_floor(joint).delta_lb - 1e-3);
    const auto v = sampaudit::delta_security_audit(r.report, delta);
    if (v.passed || !v.worst_party) ++wrong;
  }
  StreamRng rng(5150);
  int local = 0, local_failed = 0;
  for (int i = 0; i < 30; ++i) {
    const auto qa = sampaudit::random::simplex_point(1 + rng.below(4), rng);
    const auto qb = sampaudit::random::simplex_point(1 + rng.below(4), rng);
    ++local;
    if (!sampaudit::delta_security_audit(cat::local_sampling(qa, qb), 0.0).passed) ++local_failed;
  }
  o.pass = audited > 0 && wrong == 0 && local_failed == 0;
  o.detail = std::to_string(audited) + " non-product protocols audited below the floor, " + std::to_string(wrong) +
             " passed or lacked a failing marginal; " + std::to_string(local - local_failed) + "/" +
             std::to_string(local) + " local-sampling protocols pass at delta 0";
  return o;
}

class HandoverTamperer final : public sim::Adversary {
 public:
  std::string name() const override { return "handover-tamperer"; }
  std::vector<sim::BoxTamper> on_box_handover(std::size_t device, const sim::TrialView& view) const override {
    return {{device, sim::Side::alice_box, (*view.devices)[device].alice_meas}};
  }
};

std::string fingerprint(const sim::SimReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << rep.tau << ' ' << rep.aborts << ' ' << rep.abort_rate << ' ' << rep.agreement_rate << ' '
     << rep.delta_hat_mean << ' ' << rep.max_bias << '\n';
  for (const auto& m : rep.marginal) os << m.count << '/' << m.total << ' ';
  sim::write_trials_csv(os, rep);
  return os.str();
}

Outcome criterion7() {
  Outcome o;
  auto cfg = chsh_config();
  cfg.keep_trials = true;
  const auto first = sim::run_honest(cfg);
  const auto second = sim::run_honest(cfg);
  const bool identical = fingerprint(first) == fingerprint(second);
  bool rejected = false;
  std::string message;
  try {
    auto small = chsh_config();
    small.trials = 20;
    sim::run_adversarial(small, HandoverTamperer());
  } catch (const sampaudit::Error& e) {
    rejected = e.kind() == sampaudit::Error::Kind::locality;
    message = e.what();
  }
  o.pass = first.abort_rate <= 0.05 && first.agreement_rate == 1.0 && rejected && identical;
  o.detail = "tau " + fmt("%.4f", first.tau) + ", abort rate " + fmt("%.4f", first.abort_rate) + ", agreement " +
             fmt("%.3f", first.agreement_rate) + ", locality violation " + (rejected ? "rejected" : "NOT rejected") +
             ", reruns " + (identical ? "bit-identical" : "differ");
  return o;
}

Outcome criterion8() {
  Outcome o;
  const auto rep = sim::run_adversarial(chsh_config(), sim::FinalBoxSwapAdversary());
  o.pass = rep.horn != sim::Horn::none && (rep.bias_ci_excludes_zero || rep.abort_exceeds_baseline);
  const auto& worst = rep.marginal[rep.max_bias_index];
  o.detail = "horn " + sim::to_string(rep.horn) + ": max bias " + fmt("%.4f", rep.max_bias) + " CI [" +
             fmt("%.4f", worst.bias_ci.lo) + ", " + fmt("%.4f", worst.bias_ci.hi) + "], abort " +
             fmt("%.4f", rep.abort_rate) + " vs honest " + fmt("%.4f", rep.baseline_abort_rate.value_or(-1.0));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7, criterion8};
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %zu: %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
