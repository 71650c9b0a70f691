#pragma once

// Monte-Carlo simulation of n-device cut-and-choose self-testing.
//
// Device i is a pair of boxes: Alice's box A_i starts with Alice and Bob's box B_i with Bob.
// Bob tests a random subset of devices (Alice hands him A_i for each), then Alice tests all but
// one of the remaining devices (Bob hands her B_i), and the last device j is certified. Every
// tested device is pressed once with inputs drawn from the test input distribution. A party
// aborts when its test statistic exceeds tau.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sampaudit/correlation.hpp"
#include "sampaudit/protocol.hpp"
#include "sampaudit/random.hpp"

namespace sampaudit::sim {

/// Named decreasing, vanishing curve: power scale * n^-rate or exponential scale * exp(-rate n).
struct ParameterCurve {
  enum class Shape { power, exponential };
  Shape shape = Shape::power;
  double scale = 1.0;
  double rate = 0.5;

  double operator()(double n) const;
};

std::string to_string(ParameterCurve::Shape s);

struct SimConfig {
  std::size_t n = 50;
  DeviceSpec target;
  /// Abort threshold; calibrated from honest runs when absent.
  std::optional<double> tau;
  /// Test input distribution over (x, y), row-major; empty means uniform.
  std::vector<double> input_dist;
  std::size_t trials = 2000;
  std::uint64_t seed = 0;
  /// Number of devices Bob tests; default floor((n - 1) / 2).
  std::optional<std::size_t> bob_tests;
  ParameterCurve epsilon_fn{ParameterCurve::Shape::power, 1.0, 0.5};
  ParameterCurve delta_fn{ParameterCurve::Shape::power, 1.0, 0.5};
  /// Honest abort rate aimed for by calibration, and the number of calibration runs.
  double calibration_abort = 0.04;
  std::size_t calibration_trials = 10000;
  bool keep_trials = false;
  std::size_t threads = 0;

  std::size_t bob_test_count() const { return bob_tests.value_or((n - 1) / 2); }
};

/// Throws a validation error naming the violated invariant.
void validate(const SimConfig& cfg);

enum class Side { alice_box, bob_box };

/// Replacement of one box's measurement family. Only measurements are replaced: the shared
/// state of a device was fixed when it was created.
struct BoxTamper {
  std::size_t device = 0;
  Side side = Side::bob_box;
  std::vector<std::vector<linalg::CMatrix>> measurements;
};

/// Read-only view of the trial handed to adversary hooks.
struct TrialView {
  std::size_t trial = 0;
  std::size_t n = 0;
  const std::vector<DeviceSpec>* devices = nullptr;
  /// Devices Bob tested, once chosen.
  const std::vector<std::size_t>* bob_tested = nullptr;
};

/// Controls Bob and manufactures the devices. Hooks must be deterministic functions of their
/// arguments and the supplied generator so that reports are reproducible.
class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;

  /// Specs of all n devices; each must share the target's dimensions and alphabet sizes.
  virtual std::vector<DeviceSpec> create_devices(const SimConfig& cfg, StreamRng& rng) const;
  /// Devices Bob tests (exactly cfg.bob_test_count() distinct indices).
  virtual std::vector<std::size_t> choose_tests(const SimConfig& cfg, const TrialView& view, StreamRng& rng) const;
  /// Called when Bob is about to hand B_device to Alice. Returned requests are checked against
  /// box possession before they take effect.
  virtual std::vector<BoxTamper> on_box_handover(std::size_t device, const TrialView& view) const;
  /// True if Bob aborts on his own failed test like an honest party would.
  virtual bool follows_own_test() const { return false; }
};

/// Behaves exactly like an honest Bob with honest devices.
class HonestAdversary final : public Adversary {
 public:
  std::string name() const override { return "honest"; }
  bool follows_own_test() const override { return true; }
};

/// Box-exchange tamper attack: Bob builds `tampered` devices whose
/// Alice box always outputs 0, keeps them out of his own test set, and at handover replaces
/// each tampered device's Bob box with one that always outputs 0 as well. Alice's tests see
/// (0, 0), and the certified device is biased towards a = 0 whenever it is a tampered one.
class FinalBoxSwapAdversary final : public Adversary {
 public:
  explicit FinalBoxSwapAdversary(std::size_t tampered = 6) : tampered_(tampered) {}
  std::string name() const override { return "final-box-swap"; }
  std::vector<DeviceSpec> create_devices(const SimConfig& cfg, StreamRng& rng) const override;
  std::vector<std::size_t> choose_tests(const SimConfig& cfg, const TrialView& view, StreamRng& rng) const override;
  std::vector<BoxTamper> on_box_handover(std::size_t device, const TrialView& view) const override;
  std::size_t tampered() const { return tampered_; }

 private:
  std::size_t tampered_;
};

/// Every device is the target conjugated by fixed local unitaries: identical correlation,
/// different spec under identity isometries.
class RotatedDevicesAdversary final : public Adversary {
 public:
  explicit RotatedDevicesAdversary(double angle = 0.3) : angle_(angle) {}
  std::string name() const override { return "rotated-devices"; }
  std::vector<DeviceSpec> create_devices(const SimConfig& cfg, StreamRng& rng) const override;
  bool follows_own_test() const override { return true; }

 private:
  double angle_;
};

/// Shipped adversaries by name: honest, final-box-swap, rotated-devices.
std::unique_ptr<Adversary> make_adversary(const std::string& name);
std::vector<std::string> adversary_names();

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// 95% Wilson score interval (z = 1.959963984540054).
Interval wilson_interval(std::size_t successes, std::size_t total, double z = 1.959963984540054);

/// Max over (x, y) buckets with at least one sample of sum_ab |count/total - p(ab|xy)|.
/// counts is indexed like the correlation table.
double test_statistic(const std::vector<std::size_t>& counts, const Correlation& target);

struct TrialRecord {
  std::size_t trial = 0;
  bool aborted = false;
  std::string aborted_by;  // "bob", "alice" or empty
  double bob_statistic = 0.0;
  double alice_statistic = 0.0;  // 0 when Alice did not test
  std::size_t alice_index = 0;   // certified index Alice outputs
  std::size_t bob_index = 0;     // certified index Bob outputs
  std::size_t x = 0;             // Alice's input on the certified device
  std::size_t a = 0;             // Alice's output on the certified device
  double certified_delta = 0.0;
};

struct OutcomeBias {
  std::size_t x = 0, a = 0;
  double target = 0.0;
  std::size_t count = 0;
  std::size_t total = 0;
  double estimate = 0.0;
  double bias = 0.0;   // estimate - target
  Interval bias_ci;    // Wilson interval shifted by -target
};

enum class Horn { none, bias, abort, both };
std::string to_string(Horn h);

struct SimReport {
  std::string adversary = "honest";
  std::size_t n = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t bob_tests = 0;
  double tau = 0.0;
  bool tau_calibrated = false;

  std::size_t aborts = 0;
  double abort_rate = 0.0;
  Interval abort_ci;
  std::size_t accepted = 0;
  double agreement_rate = 1.0;  // over accepted trials; 1 when none were accepted

  double epsilon_n = 0.0;
  double delta_n = 0.0;
  double delta_hat_mean = 0.0;  // over accepted trials
  double delta_hat_max = 0.0;
  double delta_exceed_rate = 0.0;  // accepted trials with certified closeness above delta(n), over all trials

  std::vector<OutcomeBias> marginal;
  double max_bias = 0.0;
  std::size_t max_bias_index = 0;  // into marginal
  bool bias_ci_excludes_zero = false;

  /// Honest reference run with the same configuration, for adversarial reports.
  std::optional<double> baseline_abort_rate;
  std::optional<Interval> baseline_abort_ci;
  bool abort_exceeds_baseline = false;
  Horn horn = Horn::none;

  std::vector<TrialRecord> records;  // filled when keep_trials is set
};

/// Smallest threshold at which honest runs abort with empirical rate <= cfg.calibration_abort.
double calibrate_tau(const SimConfig& cfg);

SimReport run_honest(const SimConfig& cfg);
/// Bob is controlled by adv; Alice is honest. Throws Error(locality) when a hook asks to alter
/// a box Alice holds.
SimReport run_adversarial(const SimConfig& cfg, const Adversary& adv);

/// One line per trial with a header.
void write_trials_csv(std::ostream& os, const SimReport& rep);

}  // namespace sampaudit::sim
