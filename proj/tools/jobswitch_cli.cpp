#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jobswitch/commands.hpp"
#include "jobswitch/errors.hpp"

using namespace jobswitch;

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string method;
    std::string grid;
    std::string boundaries;
    std::optional<int> paths;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<double> lambda0;
    std::optional<int> job;
    bool quiet = false;
    bool per_path = false;
    bool antithetic = false;
    std::vector<int> criteria;
};

// Flags override the config file; the file overrides built-in defaults.
cli::CommandOptions build_options(const Flags& f) {
    cli::CommandOptions o;
    o.cfg = f.config.empty() ? default_config() : load_config(f.config);
    if (!f.method.empty()) o.cfg.pde.method = obstacle::parse_method(f.method);
    if (!f.grid.empty()) apply_grid_flag(o.cfg, f.grid);
    if (!f.boundaries.empty()) {
        if (f.boundaries != "ie" && f.boundaries != "pde")
            throw ValidationError("--boundaries must be 'ie' or 'pde'");
        o.cfg.sim_boundaries = f.boundaries;
    }
    if (f.paths) o.cfg.sim.n_paths = o.cfg.duality.n_paths = *f.paths;
    if (f.steps) o.cfg.sim.n_steps = o.cfg.duality.n_steps = *f.steps;
    if (f.seed) o.cfg.sim.seed = o.cfg.duality.seed = *f.seed;
    if (f.threads) o.cfg.sim.threads = o.cfg.duality.threads = *f.threads;
    if (f.lambda0) o.cfg.sim.lambda0 = *f.lambda0;
    if (f.job) o.cfg.sim.job0 = *f.job;
    if (f.antithetic) o.cfg.sim.antithetic = o.cfg.duality.antithetic = true;
    o.out_dir = f.out;
    o.quiet = f.quiet;
    o.per_path = f.per_path;
    o.criteria = f.criteria;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal job switching with consumption and investment: solvers, strategies and Monte Carlo checks"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* s) {
        s->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
        s->add_option("--out", f.out, "output directory (default runs/<command>-<timestamp>)");
        s->add_flag("--quiet", f.quiet, "suppress progress output");
    };
    auto pde = [&](CLI::App* s) {
        s->add_option("--method", f.method, "obstacle solver: psor or penalty");
        s->add_option("--grid", f.grid, "PDE grid as nx,nt,n");
    };
    auto mc = [&](CLI::App* s) {
        s->add_option("--paths", f.paths, "Monte Carlo paths");
        s->add_option("--steps", f.steps, "time steps per path");
        s->add_option("--seed", f.seed, "random seed");
        s->add_option("--threads", f.threads, "worker threads (0 = all cores)");
    };

    auto* solve_pde = app.add_subcommand("solve-pde", "solve the double obstacle problem and check its invariants");
    common(solve_pde);
    pde(solve_pde);

    auto* solve_ie = app.add_subcommand("solve-ie", "solve the coupled boundary integral equations");
    common(solve_ie);

    auto* strat = app.add_subcommand("strategy", "wealth boundaries and the feedback strategy table");
    common(strat);

    auto* sim = app.add_subcommand("simulate", "Monte Carlo value of the switching rule");
    common(sim);
    pde(sim);
    mc(sim);
    sim->add_option("--boundaries", f.boundaries, "boundary source: ie or pde");
    sim->add_option("--lambda0", f.lambda0, "initial dual value");
    sim->add_option("--job", f.job, "initial job (0 or 1)");
    sim->add_flag("--antithetic", f.antithetic, "antithetic pairs");
    sim->add_flag("--per-path", f.per_path, "also write per_path.csv");

    auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
    common(verify);
    pde(verify);
    mc(verify);
    verify->add_option("--criteria", f.criteria, "criteria to run (default all)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitValidation;
    }

    cli::CommandOptions o;
    try {
        o = build_options(f);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitValidation;
    }

    cli::CommandResult res;
    if (*solve_pde) res = cli::cmd_solve_pde(o, std::cout);
    else if (*solve_ie) res = cli::cmd_solve_ie(o, std::cout);
    else if (*strat) res = cli::cmd_strategy(o, std::cout);
    else if (*sim) res = cli::cmd_simulate(o, std::cout);
    else res = cli::cmd_verify(o, std::cout);
    return res.exit_code;
}
