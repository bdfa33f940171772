#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "jobswitch/config.hpp"

namespace jobswitch::acceptance {

struct Check {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string note;
};

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    double seconds = 0.0;
    std::vector<Check> checks;
    /// Informational lines that do not affect the verdict.
    std::vector<std::string> notes;
};

inline constexpr int kCriteria = 8;

/// Runs the acceptance criteria (all when `which` is empty) on the configured
/// parameters. Progress lines go to `log` when non-null.
std::vector<CriterionResult> run(const RunConfig& cfg, const std::vector<int>& which,
                                 std::ostream* log = nullptr);

/// "PASS [k] title" or "FAIL [k] title" followed by the failing checks.
std::string summary_line(const CriterionResult& r);
void print(const CriterionResult& r, std::ostream& out);

nlohmann::json to_json(const std::vector<CriterionResult>& rs);

}  // namespace jobswitch::acceptance
