// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jobswitch/acceptance.hpp"
#include "jobswitch/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"jobswitch acceptance criteria"};
    std::vector<int> criteria;
    std::string config;
    bool verbose = false;
    app.add_option("--criteria", criteria, "criteria to run (default all)")->delimiter(',');
    app.add_option("--config", config, "JSON config");
    app.add_flag("-v,--verbose", verbose, "progress output");
    CLI11_PARSE(app, argc, argv);

    const auto cfg = config.empty() ? jobswitch::default_config() : jobswitch::load_config(config);
    const auto results = jobswitch::acceptance::run(cfg, criteria, verbose ? &std::cerr : nullptr);
    bool ok = true;
    for (const auto& r : results) {
        jobswitch::acceptance::print(r, std::cout);
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}
