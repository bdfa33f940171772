#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "jobswitch/config.hpp"

namespace jobswitch::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitAcceptance = 4;

struct CommandOptions {
    RunConfig cfg = default_config();
    /// Output directory, used verbatim. Empty selects runs/<command>-<timestamp>.
    std::string out_dir;
    bool quiet = false;
    /// simulate: also write per_path.csv.
    bool per_path = false;
    /// verify: criteria to run; empty runs all.
    std::vector<int> criteria;
};

struct CommandResult {
    int exit_code = kExitOk;
    std::filesystem::path out_dir;
};

std::string default_out_dir(const std::string& command);

// Each command writes its outputs and manifest.json into the run directory, also on
// failure, and maps errors to exit codes: 2 invalid input, 3 numerical failure,
// 4 acceptance failure (verify only).
CommandResult cmd_solve_pde(const CommandOptions& o, std::ostream& log);
CommandResult cmd_solve_ie(const CommandOptions& o, std::ostream& log);
CommandResult cmd_strategy(const CommandOptions& o, std::ostream& log);
CommandResult cmd_simulate(const CommandOptions& o, std::ostream& log);
CommandResult cmd_verify(const CommandOptions& o, std::ostream& log);

}  // namespace jobswitch::cli
