#pragma once

// JSON documents read and written by the command-line tool.
//
// Every document is an object with "version" and "kind". Complex scalars are [re, im] (a bare
// number is read as a real scalar); matrices are row-major arrays of rows. Unknown keys are
// rejected so that typos fail loudly.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "sampaudit/correlation.hpp"
#include "sampaudit/cutchoose_sim.hpp"
#include "sampaudit/protocol.hpp"

namespace sampaudit::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Kind { device_spec, distribution, protocol, sim_config, isometry, report };

std::string to_string(Kind k);

struct Document {
  Kind kind = Kind::device_spec;
  json body;
  std::filesystem::path origin;  // file it was read from, for resolving relative references
};

/// Parses and checks the envelope (version and kind). Throws a validation error.
Document parse_document(const json& j, std::filesystem::path origin = {});
Document read_document(const std::filesystem::path& path);

/// Rounds to 10 significant digits, the precision of every number the tool prints.
double round10(double v);

json to_json(const linalg::CMatrix& m);
json to_json(const linalg::CVector& v);
linalg::CMatrix matrix_from_json(const json& j, const std::string& where);
linalg::CVector vector_from_json(const json& j, const std::string& where);

/// Probability table of two or more parties, optionally with inputs for two parties.
struct DistributionDoc {
  std::vector<std::size_t> outcomes;
  std::optional<std::pair<std::size_t, std::size_t>> inputs;
  std::vector<double> p;  // row-major, inputs (if any) most significant

  bool single_input() const { return !inputs || (inputs->first == 1 && inputs->second == 1); }
  Correlation correlation(double tol) const;
  JointDistribution joint(double tol) const;
  MultipartyDist multiparty(double tol) const;
};

DeviceSpec device_spec_from(const Document& doc);
DistributionDoc distribution_from(const Document& doc);
Protocol protocol_from(const Document& doc);
IsometryPair isometry_from(const Document& doc);
/// The target may be inline (a device_spec document) or a path relative to the config file.
sim::SimConfig sim_config_from(const Document& doc);

json to_document(const DeviceSpec& spec);
json to_document(const JointDistribution& dist);
json to_document(const Protocol& proto);
json to_document(const IsometryPair& iso);

/// Report envelope: {"version", "kind": "report", "report": name, ...body}.
json make_report(const std::string& name, json body);

/// Checks a report against the schema of its version: envelope plus the fields each report
/// type requires. Throws a validation error naming the first problem.
void validate_report(const json& j);

}  // namespace sampaudit::io
