#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sampaudit::cli {

enum ExitCode : int {
  kOk = 0,
  kInvalid = 1,      // usage errors and documents failing validation
  kSolverFailure = 2,
  kAuditFailed = 3,  // the protocol is not delta-secure
};

/// Runs the tool on argv (including the program name) and returns the exit code. Reports go to
/// out (or to --out), diagnostics to err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sampaudit::cli
