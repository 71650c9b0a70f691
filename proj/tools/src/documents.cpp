#include "sampaudit/cli/documents.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace sampaudit::io {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;

namespace {

const std::map<std::string, Kind>& kind_names() {
  static const std::map<std::string, Kind> names{{"device_spec", Kind::device_spec},
                                                 {"distribution", Kind::distribution},
                                                 {"protocol", Kind::protocol},
                                                 {"sim_config", Kind::sim_config},
                                                 {"isometry", Kind::isometry},
                                                 {"report", Kind::report}};
  return names;
}

void require_keys(const json& j, const std::string& where, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
  if (!j.is_object()) throw validation_error(where + ": expected an object");
  std::set<std::string> allowed{"version", "kind"};
  for (const char* k : required) {
    if (!j.contains(k)) throw validation_error(where + ": missing field '" + k + "'");
    allowed.insert(k);
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& item : j.items())
    if (!allowed.count(item.key())) throw validation_error(where + ": unknown field '" + item.key() + "'");
}

std::size_t size_from(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw validation_error(where + ": expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::size_t positive_from(const json& j, const std::string& where) {
  const std::size_t v = size_from(j, where);
  if (v == 0) throw validation_error(where + ": must be positive");
  return v;
}

double number_from(const json& j, const std::string& where) {
  if (!j.is_number()) throw validation_error(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw validation_error(where + ": not finite");
  return v;
}

Complex complex_from(const json& j, const std::string& where) {
  if (j.is_number()) return {number_from(j, where), 0.0};
  if (!j.is_array() || j.size() != 2) throw validation_error(where + ": expected [re, im]");
  return {number_from(j[0], where + "[0]"), number_from(j[1], where + "[1]")};
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

void flatten_numbers(const json& j, const std::string& where, std::vector<double>& out) {
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten_numbers(j[i], where + "[" + std::to_string(i) + "]", out);
  } else {
    out.push_back(number_from(j, where));
  }
}

Party party_from(const json& j, const std::string& where) {
  if (j == "alice") return Party::alice;
  if (j == "bob") return Party::bob;
  throw validation_error(where + ": expected \"alice\" or \"bob\"");
}

FinalMeasurement measurement_from(const json& j, const std::string& where) {
  require_keys(j, where, {"projectors"}, {"abort_outcome"});
  FinalMeasurement fm;
  if (!j["projectors"].is_array()) throw validation_error(where + ".projectors: expected an array");
  for (std::size_t i = 0; i < j["projectors"].size(); ++i)
    fm.projectors.push_back(matrix_from_json(j["projectors"][i], where + ".projectors[" + std::to_string(i) + "]"));
  if (j.contains("abort_outcome") && !j["abort_outcome"].is_null())
    fm.abort_outcome = size_from(j["abort_outcome"], where + ".abort_outcome");
  return fm;
}

json measurement_json(const FinalMeasurement& fm) {
  json proj = json::array();
  for (const auto& p : fm.projectors) proj.push_back(to_json(p));
  json j{{"projectors", proj}};
  j["abort_outcome"] = fm.abort_outcome ? json(*fm.abort_outcome) : json(nullptr);
  return j;
}

std::vector<std::vector<CMatrix>> families_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw validation_error(where + ": expected an array of measurement families");
  std::vector<std::vector<CMatrix>> fams;
  for (std::size_t x = 0; x < j.size(); ++x) {
    const std::string at = where + "[" + std::to_string(x) + "]";
    if (!j[x].is_array()) throw validation_error(at + ": expected an array of projectors");
    std::vector<CMatrix> fam;
    for (std::size_t a = 0; a < j[x].size(); ++a)
      fam.push_back(matrix_from_json(j[x][a], at + "[" + std::to_string(a) + "]"));
    fams.push_back(std::move(fam));
  }
  return fams;
}

json families_json(const std::vector<std::vector<CMatrix>>& fams) {
  json out = json::array();
  for (const auto& fam : fams) {
    json f = json::array();
    for (const auto& m : fam) f.push_back(to_json(m));
    out.push_back(f);
  }
  return out;
}

DeviceSpec device_spec_body(const json& j, const std::string& where) {
  require_keys(j, where, {"dim_a", "dim_b", "state", "alice_meas", "bob_meas"});
  DeviceSpec spec;
  spec.dim_a = positive_from(j["dim_a"], where + ".dim_a");
  spec.dim_b = positive_from(j["dim_b"], where + ".dim_b");
  spec.state = vector_from_json(j["state"], where + ".state");
  spec.alice_meas = families_from(j["alice_meas"], where + ".alice_meas");
  spec.bob_meas = families_from(j["bob_meas"], where + ".bob_meas");
  try {
    validate(spec);
  } catch (const Error& e) {
    throw validation_error(where + ": " + e.what());
  }
  return spec;
}

sim::ParameterCurve curve_from(const json& j, const std::string& where) {
  require_keys(j, where, {"shape", "scale", "rate"});
  sim::ParameterCurve c;
  if (j["shape"] == "power") c.shape = sim::ParameterCurve::Shape::power;
  else if (j["shape"] == "exponential") c.shape = sim::ParameterCurve::Shape::exponential;
  else throw validation_error(where + ".shape: expected \"power\" or \"exponential\"");
  c.scale = number_from(j["scale"], where + ".scale");
  c.rate = number_from(j["rate"], where + ".rate");
  return c;
}

// Report schema, version 1: required top-level fields and their JSON types.
enum class Type { number, integer, boolean, string, array, object, number_or_null, object_or_null, string_or_null };

bool has_type(const json& v, Type t) {
  switch (t) {
    case Type::number: return v.is_number();
    case Type::integer: return v.is_number_integer();
    case Type::boolean: return v.is_boolean();
    case Type::string: return v.is_string();
    case Type::array: return v.is_array();
    case Type::object: return v.is_object();
    case Type::number_or_null: return v.is_number() || v.is_null();
    case Type::object_or_null: return v.is_object() || v.is_null();
    case Type::string_or_null: return v.is_string() || v.is_null();
  }
  return false;
}

const std::map<std::string, std::vector<std::pair<std::string, Type>>>& report_schema() {
  using T = Type;
  static const std::map<std::string, std::vector<std::pair<std::string, Type>>> schema{
      {"correlation",
       {{"inputs", T::array}, {"outcomes", T::array}, {"table", T::array}, {"alice_marginal", T::array},
        {"bob_marginal", T::array}}},
      {"check-product", {{"product", T::boolean}, {"tol", T::number}, {"witness", T::object_or_null}}},
      {"bias-floor", {{"delta_lb", T::number}, {"roots", T::array}, {"tol", T::number}}},
      {"closeness",
       {{"close", T::boolean}, {"delta", T::number}, {"max_distance", T::number}, {"maximizer", T::object}}},
      {"cheat", {{"values", T::array}}},
      {"kitaev-check",
       {{"joint", T::array}, {"honest_a", T::array}, {"honest_b", T::array}, {"forcing_a", T::array},
        {"forcing_b", T::array}, {"residuals", T::array}, {"min_residual", T::number}, {"consistent", T::boolean},
        {"defects", T::array}}},
      {"audit",
       {{"passed", T::boolean}, {"delta", T::number}, {"worst_margin", T::number}, {"worst_party", T::string_or_null},
        {"worst_outcome", T::integer}, {"bias_floor", T::number}, {"kitaev", T::object}}},
      {"multiparty", {{"parties", T::integer}, {"nonproduct", T::boolean}, {"partition", T::object_or_null},
                      {"witness", T::object_or_null}}},
      {"simulate",
       {{"adversary", T::string}, {"n", T::integer}, {"trials", T::integer}, {"seed", T::integer},
        {"bob_tests", T::integer}, {"tau", T::number}, {"tau_calibrated", T::boolean}, {"aborts", T::integer},
        {"abort_rate", T::number}, {"abort_ci", T::array}, {"accepted", T::integer}, {"agreement_rate", T::number},
        {"epsilon_n", T::number}, {"delta_n", T::number}, {"delta_hat_mean", T::number},
        {"delta_hat_max", T::number}, {"delta_exceed_rate", T::number}, {"marginal", T::array},
        {"max_bias", T::number}, {"bias_ci_excludes_zero", T::boolean}, {"baseline_abort_rate", T::number_or_null},
        {"baseline_abort_ci", T::array}, {"abort_exceeds_baseline", T::boolean}, {"horn", T::string}}},
  };
  return schema;
}

}  // namespace

std::string to_string(Kind k) {
  for (const auto& [name, kind] : kind_names())
    if (kind == k) return name;
  return "unknown";
}

double round10(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return std::strtod(buf, nullptr);
}

Document parse_document(const json& j, std::filesystem::path origin) {
  if (!j.is_object()) throw validation_error("document: expected a JSON object");
  if (!j.contains("version")) throw validation_error("document: missing field 'version'");
  if (!j["version"].is_number_integer() || j["version"].get<long long>() != kSchemaVersion)
    throw validation_error("document: unsupported version " + j["version"].dump() + " (expected " +
                           std::to_string(kSchemaVersion) + ")");
  if (!j.contains("kind") || !j["kind"].is_string()) throw validation_error("document: missing field 'kind'");
  const auto it = kind_names().find(j["kind"].get<std::string>());
  if (it == kind_names().end()) throw validation_error("document: unknown kind '" + j["kind"].get<std::string>() + "'");
  return Document{it->second, j, std::move(origin)};
}

Document read_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw validation_error(path.string() + ": " + e.what());
  }
  try {
    return parse_document(j, path);
  } catch (const Error& e) {
    throw validation_error(path.string() + ": " + e.what());
  }
}

json to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_json(m(i, k)));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const CVector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

CMatrix matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw validation_error(where + ": expected a nonempty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw validation_error(where + "[0]: expected a nonempty row");
  const std::size_t cols = j[0].size();
  CMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string at = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) throw validation_error(at + ": rows must all have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = complex_from(j[r][c], at + "[" + std::to_string(c) + "]");
  }
  return m;
}

CVector vector_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw validation_error(where + ": expected a nonempty array");
  CVector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = complex_from(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Correlation DistributionDoc::correlation(double tol) const {
  if (outcomes.size() != 2) throw validation_error("distribution: a two-party table is required here");
  const auto [nx, ny] = inputs.value_or(std::pair<std::size_t, std::size_t>{1, 1});
  return Correlation(nx, ny, outcomes[0], outcomes[1], p, tol);
}

JointDistribution DistributionDoc::joint(double tol) const {
  if (outcomes.size() != 2) throw validation_error("distribution: a two-party table is required here");
  if (!single_input()) throw validation_error("distribution: a single-input table p(ab) is required here");
  JointDistribution d{outcomes[0], outcomes[1], p};
  validate(d, tol);
  return d;
}

MultipartyDist DistributionDoc::multiparty(double tol) const {
  if (!single_input()) throw validation_error("distribution: a single-input table is required here");
  MultipartyDist d{outcomes, p};
  validate(d, tol);
  return d;
}

DeviceSpec device_spec_from(const Document& doc) {
  if (doc.kind != Kind::device_spec) throw validation_error("expected a device_spec document, got " + to_string(doc.kind));
  return device_spec_body(doc.body, "device_spec");
}

DistributionDoc distribution_from(const Document& doc) {
  if (doc.kind != Kind::distribution)
    throw validation_error("expected a distribution document, got " + to_string(doc.kind));
  const json& j = doc.body;
  require_keys(j, "distribution", {"outcomes", "p"}, {"inputs"});
  DistributionDoc d;
  if (!j["outcomes"].is_array() || j["outcomes"].size() < 2)
    throw validation_error("distribution.outcomes: expected one outcome count per party (at least two)");
  for (std::size_t i = 0; i < j["outcomes"].size(); ++i)
    d.outcomes.push_back(positive_from(j["outcomes"][i], "distribution.outcomes[" + std::to_string(i) + "]"));
  std::size_t cells = 1;
  if (j.contains("inputs")) {
    if (d.outcomes.size() != 2) throw validation_error("distribution.inputs: only two-party tables take inputs");
    if (!j["inputs"].is_array() || j["inputs"].size() != 2)
      throw validation_error("distribution.inputs: expected [nx, ny]");
    d.inputs = std::pair{positive_from(j["inputs"][0], "distribution.inputs[0]"),
                         positive_from(j["inputs"][1], "distribution.inputs[1]")};
    cells = d.inputs->first * d.inputs->second;
  }
  for (auto o : d.outcomes) cells *= o;
  flatten_numbers(j["p"], "distribution.p", d.p);
  if (d.p.size() != cells)
    throw validation_error("distribution.p: expected " + std::to_string(cells) + " entries, got " +
                           std::to_string(d.p.size()));
  for (double v : d.p)
    if (v < 0.0) throw validation_error("distribution.p: probabilities must be nonnegative");
  return d;
}

Protocol protocol_from(const Document& doc) {
  if (doc.kind != Kind::protocol) throw validation_error("expected a protocol document, got " + to_string(doc.kind));
  const json& j = doc.body;
  require_keys(j, "protocol", {"dims", "first_mover", "rounds", "alice", "bob"});
  Protocol p;
  require_keys(j["dims"], "protocol.dims", {"a", "m", "b"});
  p.dims = {positive_from(j["dims"]["a"], "protocol.dims.a"), positive_from(j["dims"]["m"], "protocol.dims.m"),
            positive_from(j["dims"]["b"], "protocol.dims.b")};
  p.first_mover = party_from(j["first_mover"], "protocol.first_mover");
  if (!j["rounds"].is_array()) throw validation_error("protocol.rounds: expected an array");
  for (std::size_t t = 0; t < j["rounds"].size(); ++t) {
    const std::string at = "protocol.rounds[" + std::to_string(t) + "]";
    require_keys(j["rounds"][t], at, {"actor", "unitary"});
    p.rounds.push_back({party_from(j["rounds"][t]["actor"], at + ".actor"),
                        matrix_from_json(j["rounds"][t]["unitary"], at + ".unitary")});
  }
  p.alice = measurement_from(j["alice"], "protocol.alice");
  p.bob = measurement_from(j["bob"], "protocol.bob");
  try {
    validate(p);
  } catch (const Error& e) {
    throw validation_error(std::string("protocol: ") + e.what());
  }
  return p;
}

IsometryPair isometry_from(const Document& doc) {
  if (doc.kind != Kind::isometry) throw validation_error("expected an isometry document, got " + to_string(doc.kind));
  const json& j = doc.body;
  require_keys(j, "isometry", {"v_a", "v_b", "junk_dims", "junk"});
  IsometryPair iso;
  iso.v_a = matrix_from_json(j["v_a"], "isometry.v_a");
  iso.v_b = matrix_from_json(j["v_b"], "isometry.v_b");
  if (!j["junk_dims"].is_array() || j["junk_dims"].size() != 2)
    throw validation_error("isometry.junk_dims: expected [dim_a, dim_b]");
  iso.junk_dim_a = positive_from(j["junk_dims"][0], "isometry.junk_dims[0]");
  iso.junk_dim_b = positive_from(j["junk_dims"][1], "isometry.junk_dims[1]");
  iso.junk = vector_from_json(j["junk"], "isometry.junk");
  try {
    validate(iso);
  } catch (const Error& e) {
    throw validation_error(std::string("isometry: ") + e.what());
  }
  return iso;
}

sim::SimConfig sim_config_from(const Document& doc) {
  if (doc.kind != Kind::sim_config) throw validation_error("expected a sim_config document, got " + to_string(doc.kind));
  const json& j = doc.body;
  require_keys(j, "sim_config", {"n", "target", "trials"},
               {"tau", "input_dist", "seed", "bob_tests", "epsilon_fn", "delta_fn", "calibration_abort",
                "calibration_trials"});
  sim::SimConfig cfg;
  cfg.n = size_from(j["n"], "sim_config.n");
  cfg.trials = size_from(j["trials"], "sim_config.trials");
  const json& target = j["target"];
  if (target.is_string()) {
    const std::filesystem::path rel(target.get<std::string>());
    const auto path = rel.is_absolute() || doc.origin.empty() ? rel : doc.origin.parent_path() / rel;
    cfg.target = device_spec_from(read_document(path));
  } else {
    cfg.target = device_spec_from(parse_document(target, doc.origin));
  }
  if (j.contains("tau") && !j["tau"].is_null()) cfg.tau = number_from(j["tau"], "sim_config.tau");
  if (j.contains("input_dist")) flatten_numbers(j["input_dist"], "sim_config.input_dist", cfg.input_dist);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw validation_error("sim_config.seed: expected an unsigned integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("bob_tests")) cfg.bob_tests = size_from(j["bob_tests"], "sim_config.bob_tests");
  if (j.contains("epsilon_fn")) cfg.epsilon_fn = curve_from(j["epsilon_fn"], "sim_config.epsilon_fn");
  if (j.contains("delta_fn")) cfg.delta_fn = curve_from(j["delta_fn"], "sim_config.delta_fn");
  if (j.contains("calibration_abort"))
    cfg.calibration_abort = number_from(j["calibration_abort"], "sim_config.calibration_abort");
  if (j.contains("calibration_trials"))
    cfg.calibration_trials = size_from(j["calibration_trials"], "sim_config.calibration_trials");
  try {
    sim::validate(cfg);
  } catch (const Error& e) {
    throw validation_error(std::string("sim_config: ") + e.what());
  }
  return cfg;
}

json to_document(const DeviceSpec& spec) {
  return json{{"version", kSchemaVersion},          {"kind", "device_spec"},
              {"dim_a", spec.dim_a},                {"dim_b", spec.dim_b},
              {"state", to_json(spec.state)},       {"alice_meas", families_json(spec.alice_meas)},
              {"bob_meas", families_json(spec.bob_meas)}};
}

json to_document(const JointDistribution& dist) {
  json rows = json::array();
  for (std::size_t a = 0; a < dist.na; ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < dist.nb; ++b) row.push_back(dist(a, b));
    rows.push_back(row);
  }
  return json{{"version", kSchemaVersion}, {"kind", "distribution"}, {"outcomes", {dist.na, dist.nb}}, {"p", rows}};
}

json to_document(const Protocol& proto) {
  json rounds = json::array();
  for (const auto& mv : proto.rounds) rounds.push_back({{"actor", to_string(mv.actor)}, {"unitary", to_json(mv.unitary)}});
  return json{{"version", kSchemaVersion},
              {"kind", "protocol"},
              {"dims", {{"a", proto.dims.a}, {"m", proto.dims.m}, {"b", proto.dims.b}}},
              {"first_mover", to_string(proto.first_mover)},
              {"rounds", rounds},
              {"alice", measurement_json(proto.alice)},
              {"bob", measurement_json(proto.bob)}};
}

json to_document(const IsometryPair& iso) {
  return json{{"version", kSchemaVersion},
              {"kind", "isometry"},
              {"v_a", to_json(iso.v_a)},
              {"v_b", to_json(iso.v_b)},
              {"junk_dims", {iso.junk_dim_a, iso.junk_dim_b}},
              {"junk", to_json(iso.junk)}};
}

json make_report(const std::string& name, json body) {
  json j{{"version", kSchemaVersion}, {"kind", "report"}, {"report", name}};
  for (auto& item : body.items()) j[item.key()] = std::move(item.value());
  return j;
}

void validate_report(const json& j) {
  const Document doc = parse_document(j);
  if (doc.kind != Kind::report) throw validation_error("report: kind must be 'report'");
  if (!j.contains("report") || !j["report"].is_string()) throw validation_error("report: missing field 'report'");
  const auto name = j["report"].get<std::string>();
  const auto it = report_schema().find(name);
  if (it == report_schema().end()) throw validation_error("report: unknown report type '" + name + "'");
  for (const auto& [key, type] : it->second) {
    if (!j.contains(key)) throw validation_error("report " + name + ": missing field '" + key + "'");
    if (!has_type(j[key], type)) throw validation_error("report " + name + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace sampaudit::io
