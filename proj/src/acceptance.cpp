#include "jobswitch/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "jobswitch/commands.hpp"
#include "jobswitch/errors.hpp"
#include "jobswitch/integral.hpp"
#include "jobswitch/manifest.hpp"
#include "jobswitch/obstacle.hpp"
#include "jobswitch/simulate.hpp"
#include "jobswitch/strategy.hpp"

namespace jobswitch::acceptance {

using nlohmann::json;

namespace {

double now() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(8);
    os << v;
    return os.str();
}

Check within(std::string name, double value, double target, double tol, std::string note = {}) {
    return {std::move(name), std::abs(value - target) <= tol, value, target, tol, std::move(note)};
}

Check at_most(std::string name, double value, double limit, std::string note = {}) {
    return {std::move(name), value <= limit, value, limit, 0.0, std::move(note)};
}

// Expensive shared objects, built on first use.
class Context {
public:
    Context(const RunConfig& cfg, std::ostream* log) : cfg_(cfg), m_(cfg.model), log_(log) {}

    const RunConfig& cfg() const { return cfg_; }
    const Model& model() const { return m_; }

    obstacle::Grid grid() const {
        obstacle::Grid g = cfg_.grid;
        g.T = m_.params().T;
        return g;
    }

    const obstacle::ObstacleSolution& psor() {
        if (!psor_) {
            say("solving obstacle problem (projected relaxation)");
            auto opt = cfg_.pde;
            opt.method = obstacle::Method::projected_relaxation;
            const double t0 = now();
            psor_ = obstacle::solve_obstacle(m_, grid(), opt);
            psor_seconds_ = now() - t0;
        }
        return *psor_;
    }
    double psor_seconds() { psor(); return psor_seconds_; }

    const BoundaryPair& pde_boundaries() {
        if (!lb_) lb_ = obstacle::to_lambda_boundaries(psor().boundaries, grid().T);
        return *lb_;
    }

    const obstacle::QSurfaces& q() {
        if (!q_) {
            say("recovering Q0, Q1 surfaces");
            q_ = obstacle::recover_q01(m_, grid(), pde_boundaries().lambda0, pde_boundaries().lambda1);
        }
        return *q_;
    }

    const integral::IeSolution& ie() {
        if (!ie_) {
            say("solving coupled integral equations");
            ie_ = integral::solve_boundaries_ie(m_, cfg_.ie);
        }
        return *ie_;
    }

    const strategy::StrategySurface& surface() {
        if (!surface_) surface_ = std::make_unique<strategy::StrategySurface>(m_, ie().boundaries, cfg_.strategy);
        return *surface_;
    }

    const strategy::PolicyTable& table() {
        if (!table_) table_ = std::make_unique<strategy::PolicyTable>(m_, q(), pde_boundaries());
        return *table_;
    }

    // Monte Carlo runs on the PDE boundaries, cached by (job, steps).
    const simulate::SimReport& mc(int job, int steps, double* seconds = nullptr) {
        const auto key = std::make_pair(job, steps);
        auto it = mc_.find(key);
        if (it == mc_.end()) {
            auto sc = cfg_.sim;
            sc.job0 = job;
            sc.n_steps = steps;
            sc.t0 = 0.0;
            sc.lambda0 = kLambda0;
            sc = simulate::resolve_config(sc, m_);
            say("simulating job " + std::to_string(job) + ", " + std::to_string(sc.n_paths) + " paths x " +
                std::to_string(steps) + " steps");
            const double t0 = now();
            const auto ens = simulate::simulate_dual(sc, m_);
            const auto ex = simulate::run_switching(ens, pde_boundaries());
            auto rep = simulate::estimate_values(ex, m_);
            const double secs = now() - t0;
            const double qref = q().value(job, 0.0, kLambda0);
            simulate::compare(rep, qref, qref + m_.q_r(0.0, kLambda0), surface().wealth(job, 0.0, kLambda0));
            it = mc_.emplace(key, std::make_pair(rep, secs)).first;
        }
        if (seconds) *seconds = it->second.second;
        return it->second.first;
    }

    void say(const std::string& s) const {
        if (log_) *log_ << "  .. " << s << '\n' << std::flush;
    }

    static constexpr double kLambda0 = 0.725;

private:
    RunConfig cfg_;
    Model m_;
    std::ostream* log_;
    std::optional<obstacle::ObstacleSolution> psor_;
    double psor_seconds_ = 0.0;
    std::optional<BoundaryPair> lb_;
    std::optional<obstacle::QSurfaces> q_;
    std::optional<integral::IeSolution> ie_;
    std::unique_ptr<strategy::StrategySurface> surface_;
    std::unique_ptr<strategy::PolicyTable> table_;
    std::map<std::pair<int, int>, std::pair<simulate::SimReport, double>> mc_;
};

void derived_constants(Context& cx, CriterionResult& r) {
    const auto& d = cx.model().derived();
    r.checks.push_back(within("T1", d.T1, 4.38026, 1e-5));
    r.checks.push_back(within("X1", d.X1, -0.35066, 1e-5));
    r.checks.push_back(within("X2", d.X2, -0.29267, 1e-5));
    r.checks.push_back(within("K", d.K, 0.0233333, 1e-7));
}

void obstacle_invariants(Context& cx, CriterionResult& r) {
    const auto& sol = cx.psor();
    const auto inv = obstacle::check_invariants(cx.model(), sol);
    for (const auto& v : inv) r.checks.push_back({v.name, v.passed, v.worst, 0.0, 0.0, v.note});
    r.checks.push_back(at_most("runtime_seconds", cx.psor_seconds(), 60.0));
}

void cross_validation(Context& cx, CriterionResult& r) {
    const auto& psor = cx.psor();
    auto opt = cx.cfg().pde;
    opt.method = obstacle::Method::penalty;
    if (opt.eps_sequence.empty() || opt.eps_sequence.back() != 1e-6) opt.eps_sequence.push_back(1e-6);
    cx.say("solving obstacle problem (penalty)");
    const auto pen = obstacle::solve_obstacle(cx.model(), cx.grid(), opt);
    double diff = 0.0;
    for (std::size_t k = 0; k < psor.u.rows(); ++k)
        for (std::size_t i = 0; i < psor.u.cols(); ++i) diff = std::max(diff, std::abs(psor.u(k, i) - pen.u(k, i)));
    r.checks.push_back(at_most("penalty_vs_projected_max_norm", diff, 5e-4,
                               "penalty eps " + fmt(pen.final_eps)));

    const double T = cx.model().params().T;
    const double S = T - cx.model().derived().T1;
    const auto& pde = cx.pde_boundaries();
    const auto& ie = cx.ie().boundaries;
    double d1 = 0.0, d0 = 0.0;
    int n1 = 0, n0 = 0;
    for (double t : pde.lambda1.times()) {
        if (t >= 0.5 && t <= T - 0.5) {
            d1 = std::max(d1, std::abs(std::log(pde.lambda1(t)) - std::log(ie.lambda1(t))));
            ++n1;
        }
        if (t >= 0.5 && t <= S - 0.5) {
            d0 = std::max(d0, std::abs(std::log(pde.lambda0(t)) - std::log(ie.lambda0(t))));
            ++n0;
        }
    }
    r.checks.push_back(at_most("lambda1_pde_vs_ie_max_abs_log", d1, 0.02, std::to_string(n1) + " times"));
    r.checks.push_back(at_most("lambda0_pde_vs_ie_max_abs_log", d0, 0.02, std::to_string(n0) + " times"));
}

void closed_form_anchors(Context& cx, CriterionResult& r) {
    const auto& m = cx.model();
    const auto& p = m.params();
    const double T = p.T;
    const double S = T - m.derived().T1;
    // Job 0 never switches up once fewer than T1 years remain.
    auto late_q0 = [&](double t, double lambda) {
        return p.eps0 * annuity_factor(p.r, T - t) * lambda - p.L0 * annuity_factor(p.beta, T - t);
    };
    const auto& b = cx.ie().boundaries;
    std::mt19937_64 rng(20240917);
    std::uniform_real_distribution<double> ut(S, T), ul(std::log(0.05), std::log(20.0));
    double worst = 0.0, worst_pde = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double t = ut(rng), lambda = std::exp(ul(rng));
        const double exact = late_q0(t, lambda);
        worst = std::max(worst, std::abs(integral::q0_ie(m, t, lambda, b) - exact));
        worst_pde = std::max(worst_pde, std::abs(cx.q().value(0, t, lambda) - exact));
    }
    r.checks.push_back(at_most("q0_representation_vs_closed_form_20_samples", worst, 1e-6));
    r.notes.push_back("PDE surface vs closed form at the same samples: max abs " + fmt(worst_pde));

    r.checks.push_back(within("q0_at_T_minus_T1_lambda_1", integral::q0_ie(m, S, 1.0, b), -0.81129, 2e-5));
    r.notes.push_back("closed form at (T-T1, 1): " + fmt(late_q0(S, 1.0)));

    // Approach the endpoint along the solver's refined nodes.
    const auto& s = cx.surface();
    std::vector<std::pair<double, double>> seq;
    for (double t : b.lambda0.times())
        if (t < S && S - t < 0.5 && std::isfinite(b.lambda0(t))) seq.emplace_back(S - t, s.w0(t));
    std::sort(seq.begin(), seq.end());
    if (seq.empty()) {
        r.checks.push_back({"w0_endpoint_limit", false, NAN, -1.28571, 1e-2, "no grid nodes below T-T1"});
    } else {
        std::ostringstream os;
        os << "delta, w0:";
        for (std::size_t i = 0; i < seq.size(); i += std::max<std::size_t>(1, seq.size() / 6))
            os << ' ' << fmt(seq[i].first) << ", " << fmt(seq[i].second) << ';';
        r.checks.push_back(within("w0_endpoint_limit", seq.front().second, -1.28571, 1e-2,
                                  "smallest delta " + fmt(seq.front().first)));
        r.notes.push_back(os.str());
    }
}

void derivative_limits(Context& cx, CriterionResult& r) {
    const auto& s = cx.surface();
    const double w1 = s.wealth(1, 0.0, 1e3), w0 = s.wealth(0, 0.0, 1e3);
    r.checks.push_back(within("W1_at_t0_lambda_1e3", w1, -18.1427, 0.01 * 18.1427));
    r.checks.push_back(within("W0_at_t0_lambda_1e3", w0, -15.1427, 0.01 * 15.1427));
    const auto& p = cx.model().params();
    const double lim1 = -p.eps1 * annuity_factor(p.r, p.T);
    r.notes.push_back("large-lambda limits -eps1 a(T) = " + fmt(lim1) + " and " + fmt(lim1 + p.zeta0) +
                      "; W1(0, 1e12) = " + fmt(s.wealth(1, 0.0, 1e12)) + ", W0(0, 1e12) = " +
                      fmt(s.wealth(0, 0.0, 1e12)));
}

void monte_carlo(Context& cx, CriterionResult& r) {
    cx.table();
    cx.surface();
    double mc_seconds = 0.0;
    for (int j = 0; j < 2; ++j) {
        double secs = 0.0;
        const auto& rep = cx.mc(j, cx.cfg().sim.n_steps, &secs);
        mc_seconds += secs;
        const double q = rep.q_ref;
        r.checks.push_back(within("J_S_vs_Q" + std::to_string(j), rep.js.mean, q,
                                  3 * rep.js.se + 0.01 * (1 + std::abs(q)), "se " + fmt(rep.js.se)));
        r.checks.push_back(within("static_budget_residual_job" + std::to_string(j), rep.budget.mean,
                                  rep.wealth_ref, 3 * rep.budget.se, "se " + fmt(rep.budget.se)));
    }
    auto pc = cx.cfg().duality;
    cx.say("closed-loop primal simulation at wealth " + fmt(pc.wealth) + ", job " + std::to_string(pc.job0));
    const double t0 = now();
    const auto gap = simulate::verify_duality(cx.model(), cx.surface(), cx.table(), pc);
    mc_seconds += now() - t0;
    r.checks.push_back(at_most("duality_gap", std::abs(gap.gap), 3 * gap.v_primal.se + 0.01 * std::abs(gap.v_dual),
                               "dual " + fmt(gap.v_dual) + ", primal " + fmt(gap.v_primal.mean) + " (se " +
                                   fmt(gap.v_primal.se) + ")"));
    r.checks.push_back(at_most("runtime_seconds", mc_seconds, 120.0));
    // Wealth along the executed paths should track the wealth surface at the Euler
    // method's strong order.
    const double dt = (cx.model().params().T - pc.t0) / pc.n_steps;
    double worst = 0.0;
    for (double e : gap.spot_errors) worst = std::max(worst, e);
    r.notes.push_back("max wealth-identity spot error " + fmt(worst) + " (sqrt(dt) = " + fmt(std::sqrt(dt)) + ")");
    r.notes.push_back("clamped lookups " + std::to_string(gap.clamped_lookups) + ", nonpositive terminal wealth " +
                      std::to_string(gap.nonpositive_terminal));
}

void structural(Context& cx, CriterionResult& r) {
    const int steps = cx.cfg().sim.n_steps;
    int late = 0, alt = 0, post = 0;
    for (int j = 0; j < 2; ++j) {
        const auto& a = cx.mc(j, steps);
        const auto& b = cx.mc(j, 2 * steps);
        late += a.late_up_switches + b.late_up_switches;
        alt += a.alternation_violations + b.alternation_violations;
        post += a.post_switch_violations + b.post_switch_violations;
        const double rel = std::abs(b.mean_switches - a.mean_switches) / std::max(a.mean_switches, 1e-300);
        r.checks.push_back(at_most("mean_switch_count_relative_change_job" + std::to_string(j), rel, 0.10,
                                   fmt(a.mean_switches) + " at " + std::to_string(steps) + " steps, " +
                                       fmt(b.mean_switches) + " at " + std::to_string(2 * steps)));
    }
    r.checks.push_back(at_most("up_switches_after_T_minus_T1", late, 0));
    r.checks.push_back(at_most("alternation_violations", alt, 0));
    r.checks.push_back(at_most("post_switch_region_violations", post, 0));
}

void determinism(Context& cx, CriterionResult& r) {
    const auto base = std::filesystem::temp_directory_path() /
                      ("jobswitch-determinism-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    std::string hashes[2];
    const int threads[2] = {1, 3};
    for (int k = 0; k < 2; ++k) {
        cli::CommandOptions o;
        o.cfg = cx.cfg();
        o.cfg.sim.n_paths = std::min(o.cfg.sim.n_paths, 20000);
        o.cfg.sim.threads = threads[k];
        o.out_dir = (base / ("run" + std::to_string(k))).string();
        o.quiet = true;
        std::ostringstream sink;
        const auto res = cli::cmd_simulate(o, sink);
        if (res.exit_code != cli::kExitOk) {
            r.checks.push_back({"simulate_run_" + std::to_string(k), false, double(res.exit_code), 0, 0, sink.str()});
            return;
        }
        hashes[k] = sha256_file(res.out_dir / "sim_report.json");
    }
    std::error_code ec;
    std::filesystem::remove_all(base, ec);
    r.checks.push_back({"sim_report_hash_equal", hashes[0] == hashes[1], 0, 0, 0,
                        "threads 1 vs 3, sha256 " + hashes[0].substr(0, 16)});
}

struct Criterion {
    const char* title;
    void (*fn)(Context&, CriterionResult&);
};

constexpr Criterion kTable[kCriteria] = {
    {"derived constants", derived_constants},
    {"obstacle solution invariants", obstacle_invariants},
    {"method cross-validation", cross_validation},
    {"closed-form anchors", closed_form_anchors},
    {"derivative limits", derivative_limits},
    {"Monte Carlo verification", monte_carlo},
    {"structural Monte Carlo checks", structural},
    {"determinism", determinism},
};

}  // namespace

std::vector<CriterionResult> run(const RunConfig& cfg, const std::vector<int>& which, std::ostream* log) {
    std::vector<int> ids = which;
    if (ids.empty())
        for (int k = 1; k <= kCriteria; ++k) ids.push_back(k);
    for (int k : ids)
        if (k < 1 || k > kCriteria) throw ValidationError("unknown criterion " + std::to_string(k));

    Context cx(cfg, log);
    std::vector<CriterionResult> out;
    for (int k : ids) {
        CriterionResult r;
        r.id = k;
        r.title = kTable[k - 1].title;
        if (log) *log << "[" << k << "] " << r.title << '\n' << std::flush;
        const double t0 = now();
        try {
            kTable[k - 1].fn(cx, r);
        } catch (const std::exception& e) {
            r.checks.push_back({"exception", false, 0, 0, 0, e.what()});
        }
        r.seconds = now() - t0;
        r.passed = !r.checks.empty() &&
                   std::all_of(r.checks.begin(), r.checks.end(), [](const Check& c) { return c.passed; });
        out.push_back(std::move(r));
    }
    return out;
}

std::string summary_line(const CriterionResult& r) {
    return std::string(r.passed ? "PASS" : "FAIL") + " [" + std::to_string(r.id) + "] " + r.title;
}

void print(const CriterionResult& r, std::ostream& out) {
    out << summary_line(r) << '\n';
    for (const auto& c : r.checks) {
        if (c.passed) continue;
        out << "    " << c.name << ": " << fmt(c.value);
        if (c.tolerance > 0) out << " vs " << fmt(c.target) << " +- " << fmt(c.tolerance);
        else out << " (limit " << fmt(c.target) << ")";
        if (!c.note.empty()) out << "  " << c.note;
        out << '\n';
    }
    for (const auto& n : r.notes) out << "    note: " << n << '\n';
}

json to_json(const std::vector<CriterionResult>& rs) {
    json a = json::array();
    for (const auto& r : rs) {
        json checks = json::array();
        for (const auto& c : r.checks) {
            checks.push_back({{"name", c.name},
                              {"passed", c.passed},
                              {"value", std::isfinite(c.value) ? json(c.value) : json(nullptr)},
                              {"target", c.target},
                              {"tolerance", c.tolerance},
                              {"note", c.note}});
        }
        a.push_back({{"id", r.id}, {"title", r.title}, {"passed", r.passed}, {"checks", checks}, {"notes", r.notes}});
    }
    bool all = std::all_of(rs.begin(), rs.end(), [](const CriterionResult& r) { return r.passed; });
    return {{"criteria", a}, {"all_passed", all}};
}

}  // namespace jobswitch::acceptance
