#include "sampaudit/cli/app.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "sampaudit/cheat_sdp.hpp"
#include "sampaudit/cli/documents.hpp"
#include "sampaudit/correlation.hpp"
#include "sampaudit/cutchoose_sim.hpp"

namespace sampaudit::cli {

using io::json;

namespace {

struct Options {
  std::optional<std::uint64_t> seed;
  double tol = kProductTol;
  std::string out;
  std::string format = "json";

  std::array<std::string, 3> files;
  std::optional<double> delta;
  std::optional<std::string> party;
  std::optional<std::size_t> outcome;
  std::string adversary = "honest";
  std::string trials_csv;
};

using Row = std::vector<std::string>;

struct Table {
  Row header;
  std::vector<Row> rows;
};

struct Result {
  json report;
  std::optional<Table> table;
  std::string raw_csv;  // used instead of table when set
  int code = kOk;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json num(double v) { return io::round10(v); }

json nums(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

json interval(const sim::Interval& i) { return json::array({num(i.lo), num(i.hi)}); }

Party parse_party(const std::string& s) {
  if (s == "alice") return Party::alice;
  if (s == "bob") return Party::bob;
  throw validation_error("--party must be alice or bob");
}

json witness_json(const NonProductWitness& w) {
  return {{"x", w.x}, {"y", w.y}, {"a", w.a}, {"b", w.b}, {"violation", num(w.violation)}};
}

Correlation correlation_of(const io::Document& doc) {
  if (doc.kind == io::Kind::device_spec) return compute_correlation(io::device_spec_from(doc));
  return io::distribution_from(doc).correlation(linalg::kStructuralTol);
}

Result cmd_correlation(const Options& opt) {
  const Correlation c = compute_correlation(io::device_spec_from(io::read_document(opt.files.at(0))));
  const std::size_t nx = c.inputs_a(), ny = c.inputs_b(), na = c.outcomes_a(), nb = c.outcomes_b();
  Result r;
  Table t{{"x", "y", "a", "b", "p"}, {}};
  json table = json::array();
  for (std::size_t x = 0; x < nx; ++x) {
    json tx = json::array();
    for (std::size_t y = 0; y < ny; ++y) {
      json ty = json::array();
      for (std::size_t a = 0; a < na; ++a) {
        json row = json::array();
        for (std::size_t b = 0; b < nb; ++b) {
          row.push_back(num(c.p(a, b, x, y)));
          t.rows.push_back({std::to_string(x), std::to_string(y), std::to_string(a), std::to_string(b), fmt(c.p(a, b, x, y))});
        }
        ty.push_back(row);
      }
      tx.push_back(ty);
    }
    table.push_back(tx);
  }
  json pa = json::array(), pb = json::array();
  for (std::size_t x = 0; x < nx; ++x) {
    json row = json::array();
    for (std::size_t a = 0; a < na; ++a) row.push_back(num(c.alice_marginal(a, x)));
    pa.push_back(row);
  }
  for (std::size_t y = 0; y < ny; ++y) {
    json row = json::array();
    for (std::size_t b = 0; b < nb; ++b) row.push_back(num(c.bob_marginal(b, y)));
    pb.push_back(row);
  }
  r.report = io::make_report("correlation", {{"inputs", {nx, ny}},
                                             {"outcomes", {na, nb}},
                                             {"table", table},
                                             {"alice_marginal", pa},
                                             {"bob_marginal", pb}});
  r.table = std::move(t);
  return r;
}

Result cmd_check_product(const Options& opt) {
  const auto doc = io::read_document(opt.files.at(0));
  const ProductTest test = is_product(correlation_of(doc), opt.tol);
  Result r;
  r.report = io::make_report("check-product", {{"product", test.product},
                                               {"tol", num(opt.tol)},
                                               {"witness", test.witness ? witness_json(*test.witness) : json(nullptr)}});
  Row row{test.product ? "true" : "false"};
  if (test.witness) {
    for (auto v : {test.witness->x, test.witness->y, test.witness->a, test.witness->b}) row.push_back(std::to_string(v));
    row.push_back(fmt(test.witness->violation));
  } else {
    row.insert(row.end(), 5, "");
  }
  r.table = Table{{"product", "x", "y", "a", "b", "violation"}, {row}};
  return r;
}

Result cmd_bias_floor(const Options& opt) {
  const auto dist = io::distribution_from(io::read_document(opt.files.at(0))).joint(linalg::kStructuralTol);
  const BiasFloor floor = bias_floor(dist, opt.tol);
  Result r;
  json roots = json::array();
  Table t{{"a", "b", "p_ab", "delta"}, {}};
  for (const auto& root : floor.roots) {
    roots.push_back({{"a", root.a}, {"b", root.b}, {"delta", num(root.delta)}});
    t.rows.push_back({std::to_string(root.a), std::to_string(root.b), fmt(dist(root.a, root.b)), fmt(root.delta)});
  }
  r.report = io::make_report("bias-floor", {{"delta_lb", num(floor.delta_lb)}, {"roots", roots}, {"tol", num(opt.tol)}});
  r.table = std::move(t);
  return r;
}

Result cmd_closeness(const Options& opt) {
  if (!opt.delta) throw validation_error("closeness requires --delta");
  const DeviceSpec cand = io::device_spec_from(io::read_document(opt.files.at(0)));
  const DeviceSpec target = io::device_spec_from(io::read_document(opt.files.at(1)));
  const IsometryPair iso = io::isometry_from(io::read_document(opt.files.at(2)));
  const ClosenessResult c = check_closeness(cand, target, iso, *opt.delta);
  Result r;
  r.report = io::make_report("closeness", {{"close", c.close},
                                           {"delta", num(*opt.delta)},
                                           {"max_distance", num(c.max_distance)},
                                           {"maximizer", {{"x", c.x}, {"y", c.y}, {"a", c.a}, {"b", c.b}}}});
  r.table = Table{{"close", "delta", "max_distance", "x", "y", "a", "b"},
                  {{c.close ? "true" : "false", fmt(*opt.delta), fmt(c.max_distance), std::to_string(c.x),
                    std::to_string(c.y), std::to_string(c.a), std::to_string(c.b)}}};
  return r;
}

Result cmd_cheat(const Options& opt) {
  const Protocol proto = io::protocol_from(io::read_document(opt.files.at(0)));
  std::vector<std::pair<Party, std::size_t>> jobs;
  std::vector<Party> parties{Party::alice, Party::bob};
  if (opt.party) parties = {parse_party(*opt.party)};
  for (Party p : parties) {
    const std::size_t k = proto.measurement(p).outcomes();
    if (opt.outcome) {
      if (*opt.outcome >= k) throw validation_error("--outcome is outside the " + to_string(p) + " alphabet");
      jobs.emplace_back(p, *opt.outcome);
    } else {
      for (std::size_t o = 0; o < k; ++o) jobs.emplace_back(p, o);
    }
  }
  Result r;
  json values = json::array();
  Table t{{"party", "outcome", "honest", "forcing", "gap", "iterations"}, {}};
  for (const auto& [p, o] : jobs) {
    const CheatSDPInstance inst = build_cheat_sdp(proto, p, o);
    const ForcingResult f = solve_instance(inst);
    values.push_back({{"party", to_string(p)},
                      {"outcome", o},
                      {"honest", num(inst.honest_value)},
                      {"forcing", num(f.value)},
                      {"gap", num(f.gap)},
                      {"iterations", f.iterations}});
    t.rows.push_back({to_string(p), std::to_string(o), fmt(inst.honest_value), fmt(f.value), fmt(f.gap),
                      std::to_string(f.iterations)});
  }
  r.report = io::make_report("cheat", {{"values", values}});
  r.table = std::move(t);
  return r;
}

json kitaev_json(const CheatReport& rep) {
  json joint = json::array();
  for (std::size_t a = 0; a < rep.joint.na; ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < rep.joint.nb; ++b) row.push_back(num(rep.joint(a, b)));
    joint.push_back(row);
  }
  json residuals = json::array();
  for (std::size_t a = 0; a < rep.joint.na; ++a)
    for (std::size_t b = 0; b < rep.joint.nb; ++b)
      residuals.push_back({{"a", a},
                           {"b", b},
                           {"residual", num(rep.residual(a, b))},
                           {"sqrt_p_ab", num(rep.forcing_floor[a * rep.joint.nb + b])}});
  return {{"joint", joint},
          {"honest_a", nums(rep.honest_a)},
          {"honest_b", nums(rep.honest_b)},
          {"forcing_a", nums(rep.forcing_a)},
          {"forcing_b", nums(rep.forcing_b)},
          {"residuals", residuals},
          {"min_residual", num(rep.min_residual)},
          {"consistent", rep.consistent},
          {"defects", rep.defects}};
}

Result cmd_kitaev(const Options& opt) {
  const CheatReport rep = kitaev_check(io::protocol_from(io::read_document(opt.files.at(0))));
  Result r;
  r.report = io::make_report("kitaev-check", kitaev_json(rep));
  Table t{{"a", "b", "p_ab", "forcing_a", "forcing_b", "residual", "sqrt_p_ab"}, {}};
  for (std::size_t a = 0; a < rep.joint.na; ++a)
    for (std::size_t b = 0; b < rep.joint.nb; ++b)
      t.rows.push_back({std::to_string(a), std::to_string(b), fmt(rep.joint(a, b)), fmt(rep.forcing_a[a]),
                        fmt(rep.forcing_b[b]), fmt(rep.residual(a, b)), fmt(rep.forcing_floor[a * rep.joint.nb + b])});
  r.table = std::move(t);
  if (!rep.consistent) r.code = kSolverFailure;
  return r;
}

Result cmd_audit(const Options& opt) {
  if (!opt.delta) throw validation_error("audit requires --delta");
  const AuditVerdict v = delta_security_audit(io::protocol_from(io::read_document(opt.files.at(0))), *opt.delta);
  Result r;
  r.report = io::make_report("audit", {{"passed", v.passed},
                                       {"delta", num(v.delta)},
                                       {"worst_margin", num(v.worst_margin)},
                                       {"worst_party", v.worst_party ? json(to_string(*v.worst_party)) : json(nullptr)},
                                       {"worst_outcome", v.worst_outcome},
                                       {"bias_floor", num(v.floor.delta_lb)},
                                       {"kitaev", kitaev_json(v.report)}});
  Table t{{"party", "outcome", "honest", "forcing", "margin", "abort"}, {}};
  auto rows = [&](Party p, const std::vector<double>& forcing, const std::vector<double>& honest,
                  std::optional<std::size_t> abort_outcome) {
    for (std::size_t o = 0; o < forcing.size(); ++o)
      t.rows.push_back({to_string(p), std::to_string(o), fmt(honest[o]), fmt(forcing[o]),
                        fmt(forcing[o] - honest[o] - v.delta), abort_outcome == o ? "true" : "false"});
  };
  rows(Party::alice, v.report.forcing_a, v.report.honest_a, v.report.abort_a);
  rows(Party::bob, v.report.forcing_b, v.report.honest_b, v.report.abort_b);
  r.table = std::move(t);
  r.code = v.passed ? kOk : kAuditFailed;
  return r;
}

Result cmd_multiparty(const Options& opt) {
  const auto dist = io::distribution_from(io::read_document(opt.files.at(0))).multiparty(linalg::kStructuralTol);
  const auto w = multiparty_nonproduct(dist, opt.tol);
  Result r;
  json partition = nullptr, witness = nullptr;
  Row row{w ? "true" : "false", "", "", "", "", ""};
  if (w) {
    partition = {{"alice", w->partition.alice}, {"bob", w->partition.bob}};
    witness = {{"a", w->witness.a}, {"b", w->witness.b}, {"violation", num(w->witness.violation)}};
    auto join = [](const std::vector<std::size_t>& v) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
      return s;
    };
    row = {"true", join(w->partition.alice), join(w->partition.bob), std::to_string(w->witness.a),
           std::to_string(w->witness.b), fmt(w->witness.violation)};
  }
  r.report = io::make_report("multiparty", {{"parties", dist.outcomes.size()},
                                            {"nonproduct", w.has_value()},
                                            {"partition", partition},
                                            {"witness", witness}});
  r.table = Table{{"nonproduct", "alice", "bob", "a", "b", "violation"}, {row}};
  return r;
}

Result cmd_simulate(const Options& opt) {
  if (!opt.seed) throw validation_error("simulate requires --seed");
  sim::SimConfig cfg = io::sim_config_from(io::read_document(opt.files.at(0)));
  cfg.seed = *opt.seed;
  cfg.keep_trials = opt.format == "csv" || !opt.trials_csv.empty();
  const auto adv = sim::make_adversary(opt.adversary);
  const sim::SimReport rep = sim::run_adversarial(cfg, *adv);

  json marginal = json::array();
  for (const auto& m : rep.marginal)
    marginal.push_back({{"x", m.x},
                        {"a", m.a},
                        {"target", num(m.target)},
                        {"count", m.count},
                        {"total", m.total},
                        {"estimate", num(m.estimate)},
                        {"bias", num(m.bias)},
                        {"bias_ci", interval(m.bias_ci)}});
  Result r;
  r.report = io::make_report(
      "simulate",
      {{"adversary", rep.adversary},
       {"n", rep.n},
       {"trials", rep.trials},
       {"seed", rep.seed},
       {"bob_tests", rep.bob_tests},
       {"tau", num(rep.tau)},
       {"tau_calibrated", rep.tau_calibrated},
       {"aborts", rep.aborts},
       {"abort_rate", num(rep.abort_rate)},
       {"abort_ci", interval(rep.abort_ci)},
       {"accepted", rep.accepted},
       {"agreement_rate", num(rep.agreement_rate)},
       {"epsilon_n", num(rep.epsilon_n)},
       {"delta_n", num(rep.delta_n)},
       {"delta_hat_mean", num(rep.delta_hat_mean)},
       {"delta_hat_max", num(rep.delta_hat_max)},
       {"delta_exceed_rate", num(rep.delta_exceed_rate)},
       {"marginal", marginal},
       {"max_bias", num(rep.max_bias)},
       {"bias_ci_excludes_zero", rep.bias_ci_excludes_zero},
       {"baseline_abort_rate", rep.baseline_abort_rate ? num(*rep.baseline_abort_rate) : json(nullptr)},
       {"baseline_abort_ci", rep.baseline_abort_ci ? interval(*rep.baseline_abort_ci) : json::array()},
       {"abort_exceeds_baseline", rep.abort_exceeds_baseline},
       {"horn", sim::to_string(rep.horn)}});
  if (cfg.keep_trials) {
    std::ostringstream csv;
    sim::write_trials_csv(csv, rep);
    r.raw_csv = csv.str();
    if (!opt.trials_csv.empty()) {
      std::ofstream f(opt.trials_csv);
      if (!f) throw validation_error("cannot write " + opt.trials_csv);
      f << r.raw_csv;
    }
  }
  return r;
}

// Text output: one "path: value" line per scalar, arrays of numbers on one line.
void render_text(const json& j, const std::string& prefix, std::ostream& os) {
  auto scalar = [](const json& v) -> std::string {
    if (v.is_number_float()) return fmt(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  for (const auto& item : j.items()) {
    const std::string key = prefix + item.key();
    const json& v = item.value();
    if (prefix.empty() && (key == "version" || key == "kind" || key == "report")) continue;
    if (v.is_object()) {
      render_text(v, key + ".", os);
    } else if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_primitive(); })) {
      os << key << ":";
      for (const auto& e : v) os << ' ' << scalar(e);
      os << '\n';
    } else if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        json wrapped = json::object();
        wrapped["[" + std::to_string(i) + "]"] = v[i];
        render_text(wrapped, key, os);
      }
    } else {
      os << key << ": " << scalar(v) << '\n';
    }
  }
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void render(const Result& r, const std::string& format, std::ostream& os) {
  if (format == "json") {
    os << r.report.dump(2) << '\n';
  } else if (format == "text") {
    os << "report: " << r.report["report"].get<std::string>() << '\n';
    render_text(r.report, "", os);
  } else if (!r.raw_csv.empty()) {
    os << r.raw_csv;
  } else if (r.table) {
    auto line = [&](const Row& row) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << '\n';
    };
    line(r.table->header);
    for (const auto& row : r.table->rows) line(row);
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Audit two-party quantum sampling and self-testing: correlations, product tests, bias floors, "
               "optimal cheating probabilities and cut-and-choose simulation.",
               "sampaudit"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--seed", opt.seed, "Random seed (required by simulate)");
  app.add_option("--tol", opt.tol, "Tolerance of product tests")->check(CLI::PositiveNumber);
  app.add_option("--out", opt.out, "Write the report to this file instead of standard output");
  app.add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"json", "text", "csv"}));

  struct Command {
    CLI::App* sub;
    Result (*fn)(const Options&);
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help, Result (*fn)(const Options&), std::vector<const char*> files) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    for (std::size_t i = 0; i < files.size(); ++i)
      sub->add_option(files[i], opt.files[i], std::string("Input document: ") + files[i])->required();
    commands.push_back({sub, fn});
    return sub;
  };
  add("correlation", "Correlation table and marginals of a device spec", cmd_correlation, {"spec"});
  add("check-product", "Test whether a distribution or device spec is product", cmd_check_product,
      {"document"});
  add("bias-floor", "Smallest bias any protocol sampling the distribution must allow", cmd_bias_floor, {"dist"});
  auto* closeness =
      add("closeness", "Check delta-closeness of a candidate spec to a target under given isometries", cmd_closeness,
          {"candidate", "target", "isometry"});
  closeness->add_option("--delta", opt.delta, "Closeness threshold")->required()->check(CLI::NonNegativeNumber);
  auto* cheat = add("cheat", "Optimal forcing probabilities of a protocol", cmd_cheat, {"protocol"});
  cheat->add_option("--party", opt.party, "Honest party whose output is forced")
      ->check(CLI::IsMember({"alice", "bob"}));
  cheat->add_option("--outcome", opt.outcome, "Outcome to force");
  add("kitaev-check", "Forcing probabilities against p*(a) p*(b) >= p(ab)", cmd_kitaev, {"protocol"});
  auto* audit = add("audit", "delta-security audit of a protocol", cmd_audit, {"protocol"});
  audit->add_option("--delta", opt.delta, "Allowed bias")->required()->check(CLI::NonNegativeNumber);
  add("multiparty", "Search bipartitions for a non-product cut", cmd_multiparty, {"dist"});
  auto* simulate = add("simulate", "Monte-Carlo cut-and-choose simulation", cmd_simulate, {"config"});
  simulate->add_option("--adversary", opt.adversary, "Adversary controlling Bob")
      ->check(CLI::IsMember(sim::adversary_names()));
  simulate->add_option("--trials-csv", opt.trials_csv, "Also write per-trial records to this CSV file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }

  try {
    Result result;
    for (const auto& c : commands)
      if (c.sub->parsed()) result = c.fn(opt);
    if (opt.out.empty()) {
      render(result, opt.format, out);
    } else {
      std::ofstream f(opt.out);
      if (!f) throw validation_error("cannot write " + opt.out);
      render(result, opt.format, f);
    }
    return result.code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == Error::Kind::solver ? kSolverFailure : kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace sampaudit::cli
