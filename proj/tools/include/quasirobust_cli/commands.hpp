#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "quasirobust/errors.hpp"
#include "quasirobust/robust.hpp"
#include "quasirobust_cli/instance.hpp"

namespace quasirobust::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitAssumption = 2,
  kExitNonConvergence = 3,
  kExitSchema = 4,
};

/// Run-block overrides taken from the command line.
struct CommandOptions {
  std::optional<double> x;
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;
  std::optional<bool> oracle;
  int jobs = 1;
  std::string report_path;
  std::string output_path;
};

/// QUASIROBUST_JOBS when set to a positive integer, else 1.
int default_jobs();

int exit_code_for(ErrorCode code);

SolverOptions solver_options(const RunBlock& run);

/// One named invariant of the verification suite.
struct Check {
  std::string name;
  enum class Status { Pass, Fail, Skip } status = Status::Skip;
  double measured = 0.0;
  double limit = 0.0;
  bool upper = true;  // measured <= limit when true, measured >= limit otherwise
  std::string note;

  double margin() const { return upper ? limit - measured : measured - limit; }
};

std::string sweep_csv(const SweepTable& table, int n_states);

int cmd_solve(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_verify(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& path, const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace quasirobust::cli
