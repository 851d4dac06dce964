#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "kolmo/bsde/train.hpp"
#include "kolmo/cli/config.hpp"
#include "kolmo/problems/pde_problem.hpp"

namespace kolmo::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitDiverged = 3,
  kExitTargetUnreached = 4,
};

/// Merges defaults, an optional --config file, KOLMO_* environment variables
/// and flags, in increasing precedence. `args` excludes the program name.
/// Throws ConfigError; `--help` output is signalled through HelpRequested.
RunConfig resolve_config(const std::vector<std::string>& args);

struct HelpRequested {
  std::string text;
};

/// Problem with the [problem] overrides and the N, T, steps, lr, lo, hi keys applied.
problems::PdeProblem make_problem(const RunConfig& config, int dim_override = 0);

/// Train config for `problem` with every [train] key applied. Validated.
bsde::TrainConfig make_train_config(const RunConfig& config, const problems::PdeProblem& problem, sde::Scheme scheme);

/// "0:10,1001:5" style schedule; "long" selects the stepwise long-run schedule.
std::vector<bsde::LrSegment> parse_schedule(const std::string& text, sde::Scheme scheme);

/// `<out>/<command>-<UTC timestamp>-<seed>`, suffixed with -2, -3, ... if taken.
std::filesystem::path make_run_dir(const std::filesystem::path& out, const std::string& command,
                                   std::uint64_t seed);

/// Runs a full command line and returns its exit code. Human-readable
/// progress goes to `out`; error messages go to `err`. The last line on `out`
/// of a command that writes files is `output <directory>`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kolmo::cli
