#pragma once

// The ferrosolve commands. Each returns the process exit code:
// 0 ok, 2 solver failure, 3 validation failure.

#include "ferro/errors.hpp"
#include "ferro/scenario.hpp"

#include <iosfwd>
#include <optional>
#include <string>

namespace ferro {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 2;
inline constexpr int kExitValidationFailure = 3;

struct CliOptions {
  std::string command;  // run | converge | check
  std::string scenario_path;
  std::optional<int> level;
  std::optional<std::pair<int, int>> levels;
  std::string out_dir = ".";
  bool override_coercivity = false;
};

/// "m0..m1" or "m". Throws ValidationError.
std::pair<int, int> parse_level_range(const std::string& text);

/// Non-empty when the configuration falls outside both existence theorems
/// (e.g. f not coercive while L is not positive definite).
std::optional<std::string> applicability_warning(const MaterialTensors& t,
                                                 const PotentialSpec& f,
                                                 const PotentialSpec& g);

/// Exit code for a library error (2 for solver failures, 3 otherwise).
int exit_code_for(const Error& e);

int cmd_run(const Scenario& s, const CliOptions& opt, std::ostream& out,
            std::ostream& err);
int cmd_converge(const Scenario& s, const CliOptions& opt, std::ostream& out,
                 std::ostream& err);
int cmd_check(const Scenario& s, const CliOptions& opt, std::ostream& out,
              std::ostream& err);

/// Loads the scenario, dispatches, and maps exceptions to exit codes with the
/// error text on `err`.
int run_cli(const CliOptions& opt, std::ostream& out, std::ostream& err);

}  // namespace ferro
