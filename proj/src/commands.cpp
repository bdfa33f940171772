#include "jobswitch/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "jobswitch/acceptance.hpp"
#include "jobswitch/errors.hpp"
#include "jobswitch/integral.hpp"
#include "jobswitch/manifest.hpp"
#include "jobswitch/obstacle.hpp"
#include "jobswitch/simulate.hpp"
#include "jobswitch/strategy.hpp"

namespace jobswitch::cli {

using nlohmann::json;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Fixed 12 significant digits; non-finite values print as empty fields.
std::string num(double v) {
    if (!std::isfinite(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

const char* flag_name(NodeFlag f) {
    switch (f) {
        case NodeFlag::ok: return "ok";
        case NodeFlag::capped: return "capped";
        case NodeFlag::edge: return "edge";
    }
    return "?";
}

struct Run {
    RunManifest manifest;
    std::ostream& log;
    bool quiet;

    void say(const std::string& s) const {
        if (!quiet) log << s << '\n';
    }
    std::ofstream open(const std::string& name) {
        manifest.add_file(name);
        std::ofstream f(manifest.path(name));
        if (!f) throw std::runtime_error("cannot write " + manifest.path(name).string());
        return f;
    }
};

// Shared driver: sets up the manifest, maps exceptions to exit codes, always writes it.
CommandResult drive(const std::string& name, const CommandOptions& o, std::ostream& log,
                    const std::function<int(Run&, std::string& stage)>& body) {
    CommandResult res;
    res.out_dir = o.out_dir.empty() ? std::filesystem::path(default_out_dir(name)) : std::filesystem::path(o.out_dir);
    Run run{RunManifest(name, res.out_dir), log, o.quiet};
    run.manifest.set_config(to_json(o.cfg));
    std::string stage = "validate";
    try {
        run.manifest.set_derived(to_json(validate(o.cfg.model)));
        res.exit_code = body(run, stage);
    } catch (const ValidationError& e) {
        run.manifest.fail(stage, e.what(), kExitValidation);
        log << "error: " << e.what() << '\n';
        res.exit_code = kExitValidation;
    } catch (const std::domain_error& e) {
        run.manifest.fail(stage, e.what(), kExitValidation);
        log << "error: " << e.what() << '\n';
        res.exit_code = kExitValidation;
    } catch (const std::exception& e) {
        run.manifest.fail(stage, e.what(), kExitNumerical);
        log << "error: " << e.what() << '\n';
        res.exit_code = kExitNumerical;
    }
    run.manifest.write();
    run.say("wrote " + res.out_dir.string());
    return res;
}

obstacle::Grid grid_for(const RunConfig& c) {
    obstacle::Grid g = c.grid;
    g.T = c.model.T;
    return g;
}

json invariants_json(const std::vector<obstacle::InvariantResult>& v) {
    json a = json::array();
    for (const auto& r : v) a.push_back({{"name", r.name}, {"passed", r.passed}, {"worst", r.worst}, {"note", r.note}});
    return a;
}

integral::IeSolution solve_ie_stage(Run& run, const Model& m, const RunConfig& c, std::string& stage) {
    stage = "solve_ie";
    Stopwatch sw;
    auto ie = integral::solve_boundaries_ie(m, c.ie);
    run.manifest.add_stage(stage, sw.seconds(),
                           {{"newton_tol", c.ie.newton_tol},
                            {"max_equation_residual", ie.stats.max_equation_residual},
                            {"nodes", ie.stats.nodes},
                            {"capped_nodes", ie.stats.capped_nodes},
                            {"edge_nodes", ie.stats.edge_nodes}});
    return ie;
}

}  // namespace

std::string default_out_dir(const std::string& command) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    localtime_r(&now, &tm);
    std::ostringstream os;
    os << "runs/" << command << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return os.str();
}

CommandResult cmd_solve_pde(const CommandOptions& o, std::ostream& log) {
    return drive("solve-pde", o, log, [&](Run& run, std::string& stage) {
        const Model m(o.cfg.model);
        const obstacle::Grid g = grid_for(o.cfg);
        obstacle::validate_grid(g, m.derived());
        stage = "solve_obstacle";
        run.say(std::string("solving obstacle problem (") + obstacle::method_name(o.cfg.pde.method) + ")");
        Stopwatch sw;
        const auto sol = obstacle::solve_obstacle(m, g, o.cfg.pde);
        run.manifest.add_stage(stage, sw.seconds(),
                               {{"method", obstacle::method_name(sol.method)},
                                {"final_eps", sol.final_eps},
                                {"sweep_tol", o.cfg.pde.sweep_tol},
                                {"max_residual", sol.stats.max_residual},
                                {"total_iterations", sol.stats.total_iterations}});

        stage = "invariants";
        Stopwatch sw2;
        obstacle::InvariantOptions iopt;
        const auto inv = obstacle::check_invariants(m, sol, iopt);
        const auto lb = obstacle::to_lambda_boundaries(sol.boundaries, g.T);
        const auto q = obstacle::recover_q01(m, g, lb.lambda0, lb.lambda1);
        const auto qb = obstacle::check_q_bounds(m, q);
        bool ok = true;
        for (const auto& r : inv) ok = ok && r.passed;
        for (const auto& r : qb) ok = ok && r.passed;
        {
            auto f = run.open("invariants.json");
            f << json{{"u", invariants_json(inv)}, {"q", invariants_json(qb)}, {"all_passed", ok}}.dump(2) << '\n';
        }
        run.manifest.add_stage(stage, sw2.seconds(),
                               {{"residual_tol", iopt.residual_tol}, {"all_passed", ok}});

        stage = "write";
        {
            auto f = run.open("u_surface.csv");
            f << "tau,x,value\n";
            for (int k = 0; k <= g.nt; k += o.cfg.surface_stride_t)
                for (int i = 0; i < g.nx; i += o.cfg.surface_stride_x)
                    f << num(g.tau(k)) << ',' << num(g.x(i)) << ',' << num(sol.u(k, i)) << '\n';
        }
        {
            auto f = run.open("pde_boundaries.csv");
            f << "tau,t,x0,x1,lambda0,lambda1\n";
            const auto& b = sol.boundaries;
            for (std::size_t k = 0; k < b.tau.size(); ++k) {
                f << num(b.tau[k]) << ',' << num(g.T - b.tau[k]) << ',' << num(b.x0[k]) << ','
                  << num(b.x1[k]) << ',' << num(std::exp(b.x0[k])) << ',' << num(std::exp(b.x1[k]))
                  << '\n';
            }
        }
        for (const auto& r : inv)
            if (!r.passed) run.say("invariant failed: " + r.name + " (worst " + num(r.worst) + ")");
        for (const auto& r : qb)
            if (!r.passed) run.say("invariant failed: " + r.name + " (worst " + num(r.worst) + ")");
        run.say(ok ? "all invariants passed" : "some invariants failed");
        if (!ok) {
            run.manifest.fail("invariants", "one or more invariants failed", kExitNumerical);
            return kExitNumerical;
        }
        return kExitOk;
    });
}

CommandResult cmd_solve_ie(const CommandOptions& o, std::ostream& log) {
    return drive("solve-ie", o, log, [&](Run& run, std::string& stage) {
        const Model m(o.cfg.model);
        integral::validate_config(o.cfg.ie, m);
        run.say("solving coupled integral equations");
        const auto ie = solve_ie_stage(run, m, o.cfg, stage);
        stage = "write";
        const auto& b = ie.boundaries;
        {
            auto f = run.open("ie_boundaries.csv");
            f << "t,lambda0,lambda1,flag0,flag1\n";
            for (std::size_t k = 0; k < b.lambda0.size(); ++k) {
                f << num(b.lambda0.times()[k]) << ',' << num(b.lambda0.values()[k]) << ','
                  << num(b.lambda1.values()[k]) << ',' << flag_name(b.lambda0.flags()[k]) << ','
                  << flag_name(b.lambda1.flags()[k]) << '\n';
            }
        }
        {
            json j;
            j["t"] = b.lambda0.times();
            j["lambda0"] = json::array();
            j["lambda1"] = json::array();
            for (std::size_t k = 0; k < b.lambda0.size(); ++k) {
                j["lambda0"].push_back(num_or_null(b.lambda0.values()[k]));
                j["lambda1"].push_back(b.lambda1.values()[k]);
            }
            j["stats"] = {{"nodes", ie.stats.nodes},
                          {"capped_nodes", ie.stats.capped_nodes},
                          {"edge_nodes", ie.stats.edge_nodes},
                          {"max_equation_residual", ie.stats.max_equation_residual}};
            auto f = run.open("ie_boundaries.json");
            f << j.dump(2) << '\n';
        }
        run.say("nodes " + std::to_string(ie.stats.nodes) + ", max equation residual " +
                num(ie.stats.max_equation_residual));
        return kExitOk;
    });
}

CommandResult cmd_strategy(const CommandOptions& o, std::ostream& log) {
    return drive("strategy", o, log, [&](Run& run, std::string& stage) {
        const Model m(o.cfg.model);
        integral::validate_config(o.cfg.ie, m);
        const auto ie = solve_ie_stage(run, m, o.cfg, stage);
        stage = "strategy";
        Stopwatch sw;
        const strategy::StrategySurface s(m, ie.boundaries, o.cfg.strategy);
        const double T = m.params().T;
        {
            auto f = run.open("wealth_boundaries.csv");
            f << "t,w0,w1\n";
            for (double t : ie.boundaries.lambda1.times()) {
                if (t >= T) continue;
                f << num(t) << ',' << num(s.w0(t)) << ',' << num(s.w1(t)) << '\n';
            }
        }
        int rows = 0, skipped = 0;
        {
            auto f = run.open("strategy_table.csv");
            f << "t,w,job,c,pi,region\n";
            for (double t : o.cfg.table_times) {
                if (!(t >= 0.0 && t < T)) throw ValidationError("strategy.table_times must lie in [0, T)");
                for (int j = 0; j < 2; ++j) {
                    for (double w : o.cfg.table_wealth) {
                        if (!(w > s.wealth_lower_bound(j, t))) {
                            ++skipped;
                            continue;
                        }
                        const auto pol = s.feedback(j, t, w);
                        f << num(t) << ',' << num(w) << ',' << j << ',' << num(pol.consumption) << ','
                          << num(pol.position) << ',' << strategy::region_name(s.classify_wealth(j, t, w))
                          << '\n';
                        ++rows;
                    }
                }
            }
        }
        run.manifest.add_stage(stage, sw.seconds(),
                               {{"wealth_tol", o.cfg.strategy.wealth_tol},
                                {"table_rows", rows},
                                {"inadmissible_points_skipped", skipped}});
        run.say("strategy table rows " + std::to_string(rows) + " (" + std::to_string(skipped) +
                " inadmissible points skipped)");
        return kExitOk;
    });
}

CommandResult cmd_simulate(const CommandOptions& o, std::ostream& log) {
    return drive("simulate", o, log, [&](Run& run, std::string& stage) {
        const Model m(o.cfg.model);
        const auto sc = simulate::resolve_config(o.cfg.sim, m);
        BoundaryPair b;
        if (o.cfg.sim_boundaries == "pde") {
            stage = "solve_obstacle";
            Stopwatch sw;
            const obstacle::Grid g = grid_for(o.cfg);
            obstacle::validate_grid(g, m.derived());
            const auto sol = obstacle::solve_obstacle(m, g, o.cfg.pde);
            b = obstacle::to_lambda_boundaries(sol.boundaries, g.T);
            run.manifest.add_stage(stage, sw.seconds(), {{"max_residual", sol.stats.max_residual}});
        } else {
            integral::validate_config(o.cfg.ie, m);
            b = solve_ie_stage(run, m, o.cfg, stage).boundaries;
        }
        stage = "simulate";
        run.say("simulating " + std::to_string(sc.n_paths) + " paths x " + std::to_string(sc.n_steps) + " steps");
        Stopwatch sw;
        const auto ens = simulate::simulate_dual(sc, m);
        const auto ex = simulate::run_switching(ens, b);
        auto rep = simulate::estimate_values(ex, m);
        const strategy::StrategySurface s(m, b, o.cfg.strategy);
        const double q = sc.job0 == 0 ? integral::q0_ie(m, sc.t0, sc.lambda0, b)
                                      : integral::q1_ie(m, sc.t0, sc.lambda0, b);
        simulate::compare(rep, q, q + m.q_r(sc.t0, sc.lambda0), s.wealth(sc.job0, sc.t0, sc.lambda0));
        run.manifest.add_stage(stage, sw.seconds(), {{"js_se", rep.js.se}, {"budget_residual", rep.budget_residual}});

        stage = "write";
        auto est = [](const simulate::Estimate& e) { return json{{"mean", e.mean}, {"se", e.se}}; };
        json j = {{"n_paths", rep.n_paths},
                  {"n_steps", rep.n_steps},
                  {"seed", rep.seed},
                  {"lambda0", rep.lambda0},
                  {"job0", rep.job0},
                  {"t0", sc.t0},
                  {"antithetic", rep.antithetic},
                  {"boundaries", o.cfg.sim_boundaries},
                  {"J_S", est(rep.js)},
                  {"J", est(rep.j_total)},
                  {"switching_cost_pv", est(rep.switching_cost)},
                  {"static_budget", est(rep.budget)},
                  {"mean_log_ratio_T", est(rep.log_ratio_T)},
                  {"mean_discounted_Y_T", est(rep.disc_y_T)},
                  {"mean_switches", rep.mean_switches},
                  {"max_switches", rep.max_switches},
                  {"zero_switch_paths", rep.zero_switch_paths},
                  {"flagged_double_crossings", rep.flagged_steps},
                  {"late_up_switches", rep.late_up_switches},
                  {"alternation_violations", rep.alternation_violations},
                  {"post_switch_violations", rep.post_switch_violations},
                  {"reference",
                   {{"Q_j", rep.q_ref}, {"Q_hat_j", rep.q_hat_ref}, {"wealth_j", rep.wealth_ref}}},
                  {"J_S_minus_Q_j", rep.js.mean - rep.q_ref},
                  {"J_minus_Q_hat_j", rep.j_total.mean - rep.q_hat_ref},
                  {"budget_residual", rep.budget_residual}};
        {
            auto f = run.open("sim_report.json");
            f << j.dump(2) << '\n';
        }
        if (o.per_path) {
            auto f = run.open("per_path.csv");
            f << "path_id,switch_times,n_switches,discounted_payoff\n";
            for (std::size_t k = 0; k < ex.paths.size(); ++k) {
                const auto& p = ex.paths[k];
                f << k << ',';
                for (std::size_t i = 0; i < p.switch_times.size(); ++i) f << (i ? ";" : "") << num(p.switch_times[i]);
                f << ',' << p.n_switches << ',' << num(p.js()) << '\n';
            }
        }
        run.say("J_S = " + num(rep.js.mean) + " +- " + num(rep.js.se) + " (reference " + num(rep.q_ref) + ")");
        return kExitOk;
    });
}

CommandResult cmd_verify(const CommandOptions& o, std::ostream& log) {
    return drive("verify", o, log, [&](Run& run, std::string& stage) {
        stage = "acceptance";
        Stopwatch sw;
        const auto results = acceptance::run(o.cfg, o.criteria, o.quiet ? nullptr : &log);
        bool ok = true;
        json stages = json::array();
        for (const auto& r : results) {
            ok = ok && r.passed;
            acceptance::print(r, log);
        }
        {
            auto f = run.open("acceptance.json");
            f << acceptance::to_json(results).dump(2) << '\n';
        }
        run.manifest.add_stage(stage, sw.seconds(), {{"all_passed", ok}});
        if (!ok) {
            run.manifest.fail("acceptance", "one or more criteria failed", kExitAcceptance);
            return kExitAcceptance;
        }
        return kExitOk;
    });
}

}  // namespace jobswitch::cli
