#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "kirchhoff/config.hpp"

namespace kirchhoff::cli {

enum class Command { Solve, Sweep, Verify, Audit };

std::optional<Command> parse_command(std::string_view name);
const char* to_string(Command c);

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kHypothesisFailure = 2,
  kSolverFailure = 3,
};

struct RunOptions {
  /// Overrides the config's [run] out.
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> n;
  bool override_theory = false;
  /// Write the generated_at field. Off gives byte-identical reports.
  bool timestamp = true;
};

/// Runs one command and writes its artifacts into the output directory:
///   solve   report.json, solution.csv, trace.csv
///   sweep   report.json, scurve.csv
///   verify  report.json, solution.csv, trace.csv
///   audit   report.json
/// Returns an ExitCode. Progress lines go to `log`.
int run(Command command, RunConfig cfg, const RunOptions& opts, std::ostream& log);

}  // namespace kirchhoff::cli
