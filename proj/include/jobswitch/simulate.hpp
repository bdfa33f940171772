#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "jobswitch/boundary_curve.hpp"
#include "jobswitch/model.hpp"
#include "jobswitch/strategy.hpp"

namespace jobswitch::simulate {

struct SimConfig {
    int n_paths = 100000;
    int n_steps = 3000;
    std::uint64_t seed = 20240917;
    /// Initial dual value; NaN selects sqrt(e^{X1} e^{X2}).
    double lambda0 = std::numeric_limits<double>::quiet_NaN();
    int job0 = 0;
    bool antithetic = false;
    /// Start time of the simulation; values are discounted to this time.
    double t0 = 0.0;
    /// Worker threads; 0 uses the hardware concurrency.
    int threads = 0;
};

/// Validates and returns the config with lambda0 resolved.
SimConfig resolve_config(const SimConfig& c, const Model& m);

/// Lazily generated dual paths Y_t = lambda0 e^{beta t} H_t on the step grid.
/// Path k is a pure function of (seed, k, n_steps) and never stored in bulk.
class DualPathEnsemble {
public:
    DualPathEnsemble(const Model& m, const SimConfig& c);

    const SimConfig& config() const { return c_; }
    const Model& model() const { return m_; }
    double dt() const { return dt_; }
    double time(int n) const { return c_.t0 + n * dt_; }

    /// Standard normals driving path k (negated for the odd member of an antithetic pair).
    void normals(std::size_t k, std::vector<double>& z) const;
    /// Y at steps 0..n_steps for path k, scaled by lambda.
    void path(std::size_t k, double lambda, std::vector<double>& y) const;
    void path(std::size_t k, std::vector<double>& y) const { path(k, c_.lambda0, y); }

private:
    Model m_;
    SimConfig c_;
    double dt_;
};

inline DualPathEnsemble simulate_dual(const SimConfig& c, const Model& m) {
    return DualPathEnsemble(m, c);
}

struct PathResult {
    std::vector<double> switch_times;
    int n_switches = 0;
    double running = 0.0;      ///< discounted sum of eps * Y - L over the job path
    double cost = 0.0;         ///< discounted switching costs zeta * Y at switch times
    double conjugate = 0.0;    ///< unconstrained part: running and terminal conjugate utility
    double budget = 0.0;       ///< static budget left side under the optimal policy
    double log_ratio_T = 0.0;  ///< ln(Y_T / lambda0)
    double disc_y_T = 0.0;     ///< e^{-beta (T - t0)} Y_T / lambda0
    bool flagged = false;      ///< path lay beyond the other boundary right after a switch
    bool late_up_switch = false;
    bool alternation_ok = true;
    bool post_switch_ok = true;
    double js() const { return running - cost; }
};

struct ExecutedStrategies {
    SimConfig config;
    std::vector<PathResult> paths;
};

/// Executes the boundary rule on every path: 0 -> 1 when Y >= Lambda0, 1 -> 0 when
/// Y <= Lambda1, checked at step times only, at most one switch per step.
ExecutedStrategies run_switching(const DualPathEnsemble& e, const BoundaryPair& b);

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

struct SimReport {
    int n_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    double lambda0 = 0.0;
    int job0 = 0;
    bool antithetic = false;
    Estimate js;
    Estimate j_total;
    Estimate switching_cost;
    Estimate budget;
    Estimate log_ratio_T;
    Estimate disc_y_T;
    double mean_switches = 0.0;
    int max_switches = 0;
    int zero_switch_paths = 0;
    int flagged_steps = 0;
    int late_up_switches = 0;
    int alternation_violations = 0;
    int post_switch_violations = 0;
    // Comparison fields, NaN until filled by compare().
    double q_ref = std::numeric_limits<double>::quiet_NaN();
    double q_hat_ref = std::numeric_limits<double>::quiet_NaN();
    double wealth_ref = std::numeric_limits<double>::quiet_NaN();
    double budget_residual = std::numeric_limits<double>::quiet_NaN();
};

/// Sample means and standard errors. With antithetics the errors use pair means.
SimReport estimate_values(const ExecutedStrategies& x, const Model& m);

/// Fills the comparison fields from reference values at (t0, lambda0).
void compare(SimReport& r, double q_ref, double q_hat_ref, double wealth_ref);

struct PrimalConfig {
    double wealth = 5.0;
    int job0 = 0;
    double t0 = 0.0;
    int n_paths = 100000;
    int n_steps = 3000;
    std::uint64_t seed = 20240917;
    bool antithetic = false;
    int threads = 0;
    int spot_checks = 10;
};

struct GapReport {
    double lambda_star = 0.0;
    double v_dual = 0.0;
    Estimate v_primal;
    double gap = 0.0;  ///< v_dual - v_primal
    double mean_switches = 0.0;
    int clamped_lookups = 0;
    int nonpositive_terminal = 0;
    /// Mean over paths of |W - wealth(job, t, Y*)| / (1 + |W|), one entry per spot time.
    std::vector<double> spot_times;
    std::vector<double> spot_errors;
};

/// Closed-loop primal simulation of the feedback policy (consumption, risky position and
/// switching from the tabulated surfaces), with wealth evolved by its Euler dynamics.
/// The dual value comes from the integral-representation surfaces.
GapReport verify_duality(const Model& m, const strategy::StrategySurface& s,
                         const strategy::PolicyTable& table, const PrimalConfig& c);

/// Static partition of [0, n) over worker threads; results must go to fixed slots.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f);

}  // namespace jobswitch::simulate
