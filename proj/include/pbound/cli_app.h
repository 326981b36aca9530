#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace pbound {

enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 2,
  kExitInfeasible = 3,
  kExitVerification = 4,
};

/// Command-line overrides; each one replaces the matching model-file key.
struct CliOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> reps;
  std::optional<std::string> grid;
  std::optional<double> tol;
  std::optional<std::string> regime;
  bool auto_search = false;
};

struct CliResult {
  int exit_code = kExitOk;
  /// Report as indented JSON; empty when the run failed before a report.
  std::string report;
  /// Curve with header x[,phase],bound,estimate,std_error.
  std::string csv;
  /// Error or failure summary for stderr.
  std::string message;
};

/// `command` is one of bound, wcl-distance, verify. `model_text` holds the
/// model file contents.
CliResult run_command(const std::string& command, const std::string& model_text,
                      const CliOptions& options);

/// Full front end: parses argv, reads the model, writes the report and CSV.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace pbound
