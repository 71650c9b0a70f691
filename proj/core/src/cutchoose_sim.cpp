#include "sampaudit/cutchoose_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <limits>
#include <ostream>

#include "sampaudit/parallel.hpp"

namespace sampaudit::sim {

using linalg::CMatrix;

namespace {

constexpr std::uint64_t kAdversaryStream = std::uint64_t{1} << 62;
constexpr std::uint64_t kCalibrationStream = std::uint64_t{1} << 63;

bool same_spec(const DeviceSpec& u, const DeviceSpec& v) {
  if (u.dim_a != v.dim_a || u.dim_b != v.dim_b || u.state != v.state) return false;
  auto same_family = [](const auto& f, const auto& g) {
    if (f.size() != g.size()) return false;
    for (std::size_t x = 0; x < f.size(); ++x) {
      if (f[x].size() != g[x].size()) return false;
      for (std::size_t a = 0; a < f[x].size(); ++a)
        if (f[x][a] != g[x][a]) return false;
    }
    return true;
  };
  return same_family(u.alice_meas, v.alice_meas) && same_family(u.bob_meas, v.bob_meas);
}

void check_shape(const DeviceSpec& dev, const DeviceSpec& target, const std::string& what) {
  if (dev.dim_a != target.dim_a || dev.dim_b != target.dim_b)
    throw validation_error(what + " does not share the target's dimensions");
  if (dev.alice_inputs() != target.alice_inputs() || dev.bob_inputs() != target.bob_inputs() ||
      dev.alice_outcomes() != target.alice_outcomes() || dev.bob_outcomes() != target.bob_outcomes())
    throw validation_error(what + " does not share the target's input and outcome alphabets");
  validate(dev);
}

// Family whose outcome 0 is the identity: the box always answers 0.
std::vector<std::vector<CMatrix>> constant_zero_family(std::size_t inputs, std::size_t outcomes, std::size_t dim) {
  std::vector<std::vector<CMatrix>> fam(inputs);
  for (auto& f : fam) {
    f.push_back(linalg::identity(dim));
    for (std::size_t a = 1; a < outcomes; ++a) f.push_back(CMatrix::Zero(dim, dim));
  }
  return fam;
}

bool alice_box_constant_zero(const DeviceSpec& dev) {
  const CMatrix id = linalg::identity(dev.dim_a);
  return std::all_of(dev.alice_meas.begin(), dev.alice_meas.end(),
                     [&](const auto& f) { return linalg::max_abs(f[0] - id) <= 1e-12; });
}

std::vector<std::size_t> random_subset(std::vector<std::size_t> pool, std::size_t k, StreamRng& rng) {
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Givens rotation by angle in the plane of basis vectors 0 and 1 (identity in dimension 1).
CMatrix rotation(std::size_t dim, double angle) {
  CMatrix u = linalg::identity(dim);
  if (dim < 2) return u;
  u(0, 0) = std::cos(angle);
  u(0, 1) = -std::sin(angle);
  u(1, 0) = std::sin(angle);
  u(1, 1) = std::cos(angle);
  return u;
}

// Randomness of one trial, all drawn up front so the abort decision is monotone in tau.
struct Draws {
  std::vector<std::size_t> x, y;
  std::vector<double> u;
  std::size_t keep = 0;  // position of the certified device among the untested ones
};

Draws draw_trial(std::uint64_t seed, std::uint64_t stream, std::size_t n, std::size_t untested,
                 const std::vector<double>& input_dist, std::size_t ny) {
  StreamRng rng(seed, stream);
  Draws d;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t xy = rng.categorical(input_dist);
    d.x.push_back(xy / ny);
    d.y.push_back(xy % ny);
    d.u.push_back(rng.uniform());
  }
  d.keep = rng.below(untested);
  return d;
}

// Outcome pair for inputs (x, y) by inverse-CDF sampling with uniform u.
std::pair<std::size_t, std::size_t> sample_outcome(const Correlation& c, std::size_t x, std::size_t y, double u) {
  double acc = 0.0;
  const std::size_t na = c.outcomes_a(), nb = c.outcomes_b();
  std::pair<std::size_t, std::size_t> last{0, 0};
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b) {
      const double p = c.p(a, b, x, y);
      if (p <= 0.0) continue;
      last = {a, b};
      acc += p;
      if (u < acc) return last;
    }
  return last;
}

struct Context {
  const SimConfig& cfg;
  const Correlation& target_corr;
  std::vector<double> input_dist;
  IsometryPair iso;
  double delta_n = 0.0;
};

struct TrialResult {
  TrialRecord rec;
  bool accepted = false;
};

class TrialRunner {
 public:
  TrialRunner(const Context& ctx, const Adversary& adv) : ctx_(ctx), adv_(adv) {}

  TrialResult run(std::size_t trial, std::uint64_t stream_base, double tau, bool always_test_alice) const {
    const SimConfig& cfg = ctx_.cfg;
    const std::size_t n = cfg.n;
    const std::size_t kb = cfg.bob_test_count();
    const std::size_t ny = cfg.target.bob_inputs();
    const Correlation& target = ctx_.target_corr;

    StreamRng adv_rng(cfg.seed, kAdversaryStream + stream_base + trial);
    std::vector<DeviceSpec> devices = adv_.create_devices(cfg, adv_rng);
    if (devices.size() != n)
      throw validation_error("adversary " + adv_.name() + " created " + std::to_string(devices.size()) +
                             " devices, expected " + std::to_string(n));
    std::vector<std::optional<Correlation>> corr(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (same_spec(devices[i], cfg.target)) corr[i] = target;
      else check_shape(devices[i], cfg.target, "device " + std::to_string(i));
    }

    TrialView view{trial, n, &devices, nullptr};
    const std::vector<std::size_t> bob_set = adv_.choose_tests(cfg, view, adv_rng);
    check_test_set(bob_set, n, kb);
    view.bob_tested = &bob_set;

    const Draws d = draw_trial(cfg.seed, stream_base + trial, n, n - kb, ctx_.input_dist, ny);

    std::vector<Party> holder_a(n, Party::alice), holder_b(n, Party::bob);
    auto outcome_of = [&](std::size_t i) {
      if (!corr[i]) corr[i] = compute_correlation(devices[i]);
      return sample_outcome(*corr[i], d.x[i], d.y[i], d.u[i]);
    };
    auto statistic = [&](const std::vector<std::size_t>& tested) {
      std::vector<std::size_t> counts(target.table().size(), 0);
      const std::size_t na = target.outcomes_a(), nb = target.outcomes_b();
      for (std::size_t i : tested) {
        const auto [a, b] = outcome_of(i);
        ++counts[((d.x[i] * ny + d.y[i]) * na + a) * nb + b];
      }
      return test_statistic(counts, target);
    };

    TrialResult res;
    TrialRecord& rec = res.rec;
    rec.trial = trial;

    // Bob's tests: Alice hands over her boxes.
    for (std::size_t i : bob_set) holder_a[i] = Party::bob;
    rec.bob_statistic = statistic(bob_set);
    const bool bob_rejects = adv_.follows_own_test() && rec.bob_statistic > tau;

    std::vector<bool> in_bob(n, false);
    for (std::size_t i : bob_set) in_bob[i] = true;
    std::vector<std::size_t> untested;
    for (std::size_t i = 0; i < n; ++i)
      if (!in_bob[i]) untested.push_back(i);
    const std::size_t j = untested[d.keep];
    std::vector<std::size_t> alice_set;
    for (std::size_t i : untested)
      if (i != j) alice_set.push_back(i);

    if (bob_rejects && !always_test_alice) {
      rec.aborted = true;
      rec.aborted_by = "bob";
      return res;
    }

    // Alice's tests: Bob hands over his boxes, and may tamper with what he still holds.
    for (std::size_t i : alice_set) {
      for (const BoxTamper& req : adv_.on_box_handover(i, view)) apply(req, i, devices, corr, holder_a, holder_b);
      holder_b[i] = Party::alice;
    }
    rec.alice_statistic = statistic(alice_set);
    if (bob_rejects || rec.alice_statistic > tau) {
      rec.aborted = true;
      rec.aborted_by = bob_rejects ? "bob" : "alice";
      return res;
    }

    // Both parties derive the certified index from their own view of the test sets.
    rec.alice_index = j;
    std::vector<bool> tested(n, false);
    for (std::size_t i : bob_set) tested[i] = true;
    for (std::size_t i : alice_set) tested[i] = true;
    std::size_t bob_index = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!tested[i]) bob_index = (bob_index == n) ? i : n + 1;
    rec.bob_index = bob_index;

    rec.x = d.x[j];
    rec.a = outcome_of(j).first;
    rec.certified_delta =
        same_spec(devices[j], cfg.target) ? 0.0 : check_closeness(devices[j], cfg.target, ctx_.iso, ctx_.delta_n).max_distance;
    res.accepted = true;
    return res;
  }

 private:
  void check_test_set(const std::vector<std::size_t>& set, std::size_t n, std::size_t kb) const {
    if (set.size() != kb)
      throw validation_error("adversary " + adv_.name() + " chose " + std::to_string(set.size()) +
                             " test devices, expected " + std::to_string(kb));
    std::vector<bool> seen(n, false);
    for (std::size_t i : set) {
      if (i >= n || seen[i]) throw validation_error("adversary " + adv_.name() + " chose an invalid test set");
      seen[i] = true;
    }
  }

  void apply(const BoxTamper& req, std::size_t handover, std::vector<DeviceSpec>& devices,
             std::vector<std::optional<Correlation>>& corr, const std::vector<Party>& holder_a,
             const std::vector<Party>& holder_b) const {
    const std::string call = adv_.name() + ".on_box_handover(device=" + std::to_string(handover) + ")";
    if (req.device >= devices.size()) throw validation_error(call + " referred to a missing device");
    const bool alice_side = req.side == Side::alice_box;
    const Party holder = alice_side ? holder_a[req.device] : holder_b[req.device];
    if (holder == Party::alice)
      throw Error(Error::Kind::locality, call + " tried to modify box " + (alice_side ? "A_" : "B_") +
                                             std::to_string(req.device) + " while Alice holds it");
    DeviceSpec& dev = devices[req.device];
    const auto& old = alice_side ? dev.alice_meas : dev.bob_meas;
    if (req.measurements.size() != old.size() || req.measurements.front().size() != old.front().size())
      throw validation_error(call + " changed a box's input or outcome alphabet");
    validate_measurements(req.measurements, alice_side ? dev.dim_a : dev.dim_b, alice_side ? "alice" : "bob");
    (alice_side ? dev.alice_meas : dev.bob_meas) = req.measurements;
    corr[req.device].reset();
  }

  const Context& ctx_;
  const Adversary& adv_;
};

std::vector<double> resolved_inputs(const SimConfig& cfg) {
  const std::size_t cells = cfg.target.alice_inputs() * cfg.target.bob_inputs();
  if (!cfg.input_dist.empty()) return cfg.input_dist;
  return std::vector<double>(cells, 1.0 / static_cast<double>(cells));
}

double calibrate(const SimConfig& cfg, const Context& ctx) {
  const HonestAdversary honest;
  const TrialRunner runner(ctx, honest);
  std::vector<double> stats(cfg.calibration_trials);
  parallel_for(
      cfg.calibration_trials,
      [&](std::size_t t) {
        const TrialResult r = runner.run(t, kCalibrationStream, std::numeric_limits<double>::infinity(), true);
        stats[t] = std::max(r.rec.bob_statistic, r.rec.alice_statistic);
      },
      cfg.threads);
  std::sort(stats.begin(), stats.end());
  const auto allowed = static_cast<std::size_t>(std::floor(cfg.calibration_abort * static_cast<double>(stats.size())));
  const double tau = stats[stats.size() - 1 - std::min(allowed, stats.size() - 1)];
  return std::max(tau, 1e-12);
}

SimReport simulate(const SimConfig& cfg, const Context& ctx, const Adversary& adv, double tau) {
  const TrialRunner runner(ctx, adv);
  std::vector<TrialResult> results(cfg.trials);
  parallel_for(
      cfg.trials, [&](std::size_t t) { results[t] = runner.run(t, 0, tau, false); }, cfg.threads);

  SimReport rep;
  rep.adversary = adv.name();
  rep.n = cfg.n;
  rep.trials = cfg.trials;
  rep.seed = cfg.seed;
  rep.bob_tests = cfg.bob_test_count();
  rep.tau = tau;
  rep.tau_calibrated = !cfg.tau.has_value();
  rep.epsilon_n = cfg.epsilon_fn(static_cast<double>(cfg.n));
  rep.delta_n = ctx.delta_n;

  const Correlation& target = ctx.target_corr;
  const std::size_t nx = target.inputs_a(), na = target.outcomes_a();
  std::vector<std::size_t> counts(nx * na, 0), totals(nx, 0);
  std::size_t agree = 0, exceed = 0;
  double delta_sum = 0.0;
  for (const TrialResult& r : results) {
    if (r.rec.aborted) {
      ++rep.aborts;
      continue;
    }
    ++rep.accepted;
    if (r.rec.alice_index == r.rec.bob_index) ++agree;
    ++counts[r.rec.x * na + r.rec.a];
    ++totals[r.rec.x];
    delta_sum += r.rec.certified_delta;
    rep.delta_hat_max = std::max(rep.delta_hat_max, r.rec.certified_delta);
    if (r.rec.certified_delta > rep.delta_n) ++exceed;
  }
  rep.abort_rate = static_cast<double>(rep.aborts) / static_cast<double>(cfg.trials);
  rep.abort_ci = wilson_interval(rep.aborts, cfg.trials);
  if (rep.accepted > 0) {
    rep.agreement_rate = static_cast<double>(agree) / static_cast<double>(rep.accepted);
    rep.delta_hat_mean = delta_sum / static_cast<double>(rep.accepted);
  }
  rep.delta_exceed_rate = static_cast<double>(exceed) / static_cast<double>(cfg.trials);

  rep.max_bias = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t a = 0; a < na; ++a) {
      OutcomeBias ob;
      ob.x = x;
      ob.a = a;
      ob.target = target.alice_marginal(a, x);
      ob.count = counts[x * na + a];
      ob.total = totals[x];
      ob.estimate = ob.total ? static_cast<double>(ob.count) / static_cast<double>(ob.total) : 0.0;
      ob.bias = ob.total ? ob.estimate - ob.target : 0.0;
      const Interval w = wilson_interval(ob.count, ob.total);
      ob.bias_ci = {w.lo - ob.target, w.hi - ob.target};
      if (ob.total && ob.bias > rep.max_bias) {
        rep.max_bias = ob.bias;
        rep.max_bias_index = rep.marginal.size();
      }
      rep.marginal.push_back(ob);
    }
  if (rep.accepted == 0) rep.max_bias = 0.0;
  else rep.bias_ci_excludes_zero = rep.marginal[rep.max_bias_index].bias_ci.lo > 0.0;
  rep.horn = rep.bias_ci_excludes_zero ? Horn::bias : Horn::none;

  if (cfg.keep_trials)
    for (TrialResult& r : results) rep.records.push_back(std::move(r.rec));
  return rep;
}

}  // namespace

double ParameterCurve::operator()(double n) const {
  return shape == Shape::power ? scale * std::pow(n, -rate) : scale * std::exp(-rate * n);
}

std::string to_string(ParameterCurve::Shape s) { return s == ParameterCurve::Shape::power ? "power" : "exponential"; }

std::string to_string(Horn h) {
  switch (h) {
    case Horn::none: return "none";
    case Horn::bias: return "bias";
    case Horn::abort: return "abort";
    case Horn::both: return "both";
  }
  return "unknown";
}

void validate(const SimConfig& cfg) {
  if (cfg.n < 2) throw validation_error("simulation needs n >= 2 devices");
  if (cfg.trials < 1) throw validation_error("simulation needs at least one trial");
  if (cfg.tau && !(*cfg.tau > 0.0 && std::isfinite(*cfg.tau))) throw validation_error("tau must be positive and finite");
  validate(cfg.target);
  if (cfg.bob_test_count() > cfg.n - 1)
    throw validation_error("Bob may test at most n - 1 devices so that one remains for certification");
  const std::size_t cells = cfg.target.alice_inputs() * cfg.target.bob_inputs();
  if (!cfg.input_dist.empty()) {
    if (cfg.input_dist.size() != cells)
      throw validation_error("input distribution needs one weight per (x, y) pair");
    double sum = 0.0;
    for (double w : cfg.input_dist) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw validation_error("input distribution weights must be nonnegative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > linalg::kStructuralTol) throw validation_error("input distribution must sum to 1");
  }
  for (const ParameterCurve* c : {&cfg.epsilon_fn, &cfg.delta_fn})
    if (!(c->scale > 0.0) || !(c->rate > 0.0) || !std::isfinite(c->scale) || !std::isfinite(c->rate))
      throw validation_error("parameter curves need positive finite scale and rate");
  if (!(cfg.calibration_abort > 0.0 && cfg.calibration_abort < 1.0))
    throw validation_error("calibration abort target must lie in (0, 1)");
  if (cfg.calibration_trials < 1) throw validation_error("calibration needs at least one trial");
}

std::vector<DeviceSpec> Adversary::create_devices(const SimConfig& cfg, StreamRng&) const {
  return std::vector<DeviceSpec>(cfg.n, cfg.target);
}

std::vector<std::size_t> Adversary::choose_tests(const SimConfig& cfg, const TrialView&, StreamRng& rng) const {
  std::vector<std::size_t> all(cfg.n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return random_subset(std::move(all), cfg.bob_test_count(), rng);
}

std::vector<BoxTamper> Adversary::on_box_handover(std::size_t, const TrialView&) const { return {}; }

std::vector<DeviceSpec> FinalBoxSwapAdversary::create_devices(const SimConfig& cfg, StreamRng& rng) const {
  std::vector<DeviceSpec> devices(cfg.n, cfg.target);
  const std::size_t t = std::min(tampered_, cfg.n - cfg.bob_test_count());
  std::vector<std::size_t> all(cfg.n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t i : random_subset(std::move(all), t, rng))
    devices[i].alice_meas =
        constant_zero_family(cfg.target.alice_inputs(), cfg.target.alice_outcomes(), cfg.target.dim_a);
  return devices;
}

std::vector<std::size_t> FinalBoxSwapAdversary::choose_tests(const SimConfig& cfg, const TrialView& view,
                                                             StreamRng& rng) const {
  std::vector<std::size_t> clean;
  for (std::size_t i = 0; i < cfg.n; ++i)
    if (!alice_box_constant_zero((*view.devices)[i])) clean.push_back(i);
  return random_subset(std::move(clean), cfg.bob_test_count(), rng);
}

std::vector<BoxTamper> FinalBoxSwapAdversary::on_box_handover(std::size_t device, const TrialView& view) const {
  const DeviceSpec& dev = (*view.devices)[device];
  if (!alice_box_constant_zero(dev)) return {};
  return {BoxTamper{device, Side::bob_box, constant_zero_family(dev.bob_inputs(), dev.bob_outcomes(), dev.dim_b)}};
}

std::vector<DeviceSpec> RotatedDevicesAdversary::create_devices(const SimConfig& cfg, StreamRng&) const {
  DeviceSpec dev = cfg.target;
  const CMatrix ua = rotation(dev.dim_a, angle_), ub = rotation(dev.dim_b, -angle_);
  dev.state = linalg::tensor(ua, ub) * dev.state;
  for (auto& fam : dev.alice_meas)
    for (auto& m : fam) m = ua * m * ua.adjoint();
  for (auto& fam : dev.bob_meas)
    for (auto& m : fam) m = ub * m * ub.adjoint();
  return std::vector<DeviceSpec>(cfg.n, dev);
}

std::unique_ptr<Adversary> make_adversary(const std::string& name) {
  if (name == "honest") return std::make_unique<HonestAdversary>();
  if (name == "final-box-swap") return std::make_unique<FinalBoxSwapAdversary>();
  if (name == "rotated-devices") return std::make_unique<RotatedDevicesAdversary>();
  throw validation_error("unknown adversary '" + name + "'");
}

std::vector<std::string> adversary_names() { return {"honest", "final-box-swap", "rotated-devices"}; }

Interval wilson_interval(std::size_t successes, std::size_t total, double z) {
  if (total == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(total);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  return {std::clamp(centre - half, 0.0, 1.0), std::clamp(centre + half, 0.0, 1.0)};
}

double test_statistic(const std::vector<std::size_t>& counts, const Correlation& target) {
  if (counts.size() != target.table().size()) throw size_error("test statistic needs one count per table entry");
  const std::size_t cell = target.outcomes_a() * target.outcomes_b();
  double worst = 0.0;
  for (std::size_t base = 0; base < counts.size(); base += cell) {
    const std::size_t total = std::accumulate(counts.begin() + base, counts.begin() + base + cell, std::size_t{0});
    if (total == 0) continue;
    double l1 = 0.0;
    for (std::size_t k = 0; k < cell; ++k)
      l1 += std::abs(static_cast<double>(counts[base + k]) / static_cast<double>(total) - target.table()[base + k]);
    worst = std::max(worst, l1);
  }
  return worst;
}

double calibrate_tau(const SimConfig& cfg) {
  validate(cfg);
  const Correlation target = compute_correlation(cfg.target);
  const Context ctx{cfg, target, resolved_inputs(cfg), IsometryPair::identity(cfg.target.dim_a, cfg.target.dim_b),
                    cfg.delta_fn(static_cast<double>(cfg.n))};
  return calibrate(cfg, ctx);
}

SimReport run_honest(const SimConfig& cfg) { return run_adversarial(cfg, HonestAdversary()); }

SimReport run_adversarial(const SimConfig& cfg, const Adversary& adv) {
  validate(cfg);
  const Correlation target = compute_correlation(cfg.target);
  const Context ctx{cfg, target, resolved_inputs(cfg), IsometryPair::identity(cfg.target.dim_a, cfg.target.dim_b),
                    cfg.delta_fn(static_cast<double>(cfg.n))};
  const double tau = cfg.tau ? *cfg.tau : calibrate(cfg, ctx);
  SimReport rep = simulate(cfg, ctx, adv, tau);
  if (dynamic_cast<const HonestAdversary*>(&adv) == nullptr) {
    SimConfig base_cfg = cfg;
    base_cfg.keep_trials = false;
    const SimReport base = simulate(base_cfg, ctx, HonestAdversary(), tau);
    rep.baseline_abort_rate = base.abort_rate;
    rep.baseline_abort_ci = base.abort_ci;
    rep.abort_exceeds_baseline = rep.abort_ci.lo > base.abort_ci.hi;
    if (rep.abort_exceeds_baseline) rep.horn = rep.bias_ci_excludes_zero ? Horn::both : Horn::abort;
  }
  return rep;
}

void write_trials_csv(std::ostream& os, const SimReport& rep) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(10);
  os << "trial,aborted,aborted_by,bob_statistic,alice_statistic,alice_index,bob_index,x,a,certified_delta\n";
  for (const auto& r : rep.records) {
    os << r.trial << ',' << (r.aborted ? 1 : 0) << ',' << r.aborted_by << ',' << r.bob_statistic << ','
       << r.alice_statistic << ',';
    if (r.aborted) os << ",,,,";
    else os << r.alice_index << ',' << r.bob_index << ',' << r.x << ',' << r.a << ',';
    os << r.certified_delta << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace sampaudit::sim
