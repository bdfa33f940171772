#include "jobswitch/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

#include "jobswitch/errors.hpp"
#include "jobswitch/philox.hpp"

namespace jobswitch::simulate {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sample mean and standard error; with antithetics, consecutive pairs are averaged first.
template <class F>
Estimate estimate(std::size_t n, bool antithetic, F&& value) {
    const std::size_t step = antithetic ? 2 : 1;
    const std::size_t m = n / step;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double x = 0.0;
        for (std::size_t k = 0; k < step; ++k) x += value(i * step + k);
        x /= static_cast<double>(step);
        const double d = x - mean;
        mean += d / static_cast<double>(i + 1);
        m2 += d * (x - mean);
    }
    Estimate e;
    e.mean = mean;
    e.se = m > 1 ? std::sqrt(m2 / static_cast<double>(m - 1) / static_cast<double>(m)) : 0.0;
    return e;
}

}  // namespace

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& f) {
    std::size_t nt = threads > 0 ? static_cast<std::size_t>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min(nt, std::max<std::size_t>(n, 1));
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (std::size_t w = 0; w < nt; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w * n / nt; i < (w + 1) * n / nt; ++i) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

SimConfig resolve_config(const SimConfig& c, const Model& m) {
    SimConfig out = c;
    if (c.n_paths < 1) throw ValidationError("n_paths must be >= 1");
    if (c.n_steps < 10) throw ValidationError("n_steps must be >= 10");
    if (c.job0 != 0 && c.job0 != 1) throw ValidationError("job0 must be 0 or 1");
    if (c.antithetic && c.n_paths % 2 != 0)
        throw ValidationError("antithetic sampling needs an even n_paths");
    if (!(c.t0 >= 0.0 && c.t0 < m.params().T)) throw ValidationError("t0 must lie in [0, T)");
    if (std::isnan(c.lambda0)) {
        out.lambda0 = std::exp(0.5 * (m.derived().X1 + m.derived().X2));
    } else if (!(c.lambda0 > 0.0) || std::isinf(c.lambda0)) {
        throw ValidationError("lambda0 must be positive and finite");
    }
    return out;
}

DualPathEnsemble::DualPathEnsemble(const Model& m, const SimConfig& c)
    : m_(m), c_(resolve_config(c, m)), dt_((m.params().T - c_.t0) / c_.n_steps) {}

void DualPathEnsemble::normals(std::size_t k, std::vector<double>& z) const {
    const std::size_t stream = c_.antithetic ? k / 2 : k;
    const double sign = c_.antithetic && (k % 2 == 1) ? -1.0 : 1.0;
    NormalStream gen(c_.seed, stream);
    z.resize(static_cast<std::size_t>(c_.n_steps));
    for (double& v : z) v = sign * gen.next();
}

void DualPathEnsemble::path(std::size_t k, double lambda, std::vector<double>& y) const {
    std::vector<double> z;
    normals(k, z);
    const auto& p = m_.params();
    const double th = m_.derived().theta;
    const double drift = (p.beta - p.r - 0.5 * th * th) * dt_;
    const double vol = th * std::sqrt(dt_);
    y.resize(z.size() + 1);
    // Unit path first so that scaling by lambda is exact multiplication.
    double lng = 0.0;
    y[0] = lambda;
    for (std::size_t n = 0; n < z.size(); ++n) {
        lng += drift - vol * z[n];
        y[n + 1] = lambda * std::exp(lng);
    }
}

ExecutedStrategies run_switching(const DualPathEnsemble& e, const BoundaryPair& b) {
    const SimConfig& c = e.config();
    const Model& m = e.model();
    const auto& p = m.params();
    if (!b.lambda0.covers(c.t0, p.T) || !b.lambda1.covers(c.t0, p.T))
        throw ValidationError("run_switching: boundary curves must cover [t0, T]");
    const int N = c.n_steps;
    const double dt = e.dt();
    const double S = p.T - m.derived().T1;
    std::vector<double> l0(N + 1), l1(N + 1), disc(N + 1);
    for (int n = 0; n <= N; ++n) {
        const double t = e.time(n);
        l0[n] = b.lambda0(std::min(t, p.T));
        l1[n] = b.lambda1(std::min(t, p.T));
        disc[n] = std::exp(-p.beta * (t - c.t0));
    }
    const double eps[2] = {p.eps0, p.eps1};
    const double L[2] = {p.L0, p.L1};
    const double zeta[2] = {p.zeta0, p.zeta1};

    ExecutedStrategies out;
    out.config = c;
    out.paths.resize(static_cast<std::size_t>(c.n_paths));
    const double th = m.derived().theta;
    const double drift = (p.beta - p.r - 0.5 * th * th) * dt;
    const double vol = th * std::sqrt(dt);
    const double g = p.gamma;
    const double conj = g / (1.0 - g);
    const double lam_pow = std::pow(c.lambda0, -1.0 / g);
    parallel_for(out.paths.size(), c.threads, [&](std::size_t k) {
        std::vector<double> z;
        e.normals(k, z);
        PathResult& r = out.paths[k];
        int job = c.job0;
        int last_dir = 0;
        // CRRA in closed form: I1(y) = y^{-1/gamma}, conjugate gamma/(1-gamma) y I1(y).
        double lng = 0.0;
        double yn = c.lambda0, in = lam_pow;
        double cj_prev = disc[0] * conj * yn * in;
        double bc_prev = disc[0] * yn / c.lambda0 * in;
        for (int n = 0; n < N; ++n) {
            const double t = e.time(n);
            int dir = 0;
            if (job == 0 && yn >= l0[n]) dir = +1;
            else if (job == 1 && yn <= l1[n]) dir = -1;
            if (dir != 0) {
                if (dir == +1 && t >= S) r.late_up_switch = true;
                if (dir == last_dir) r.alternation_ok = false;
                last_dir = dir;
                r.cost += disc[n] * zeta[job] * yn;
                r.budget += disc[n] * yn / c.lambda0 * zeta[job];
                job = 1 - job;
                r.switch_times.push_back(t);
                ++r.n_switches;
                if (job == 1 && !(yn >= l0[n])) r.post_switch_ok = false;
                if (job == 0 && !(yn <= l1[n])) r.post_switch_ok = false;
                // A second crossing in the same step is not executed.
                if ((job == 0 && yn >= l0[n]) || (job == 1 && yn <= l1[n])) r.flagged = true;
            }
            lng += drift - vol * z[n];
            const double y1 = c.lambda0 * std::exp(lng);
            const double i1 = lam_pow * std::exp(-lng / g);
            const double ya = disc[n] * yn, yb = disc[n + 1] * y1;
            r.running += eps[job] * 0.5 * (ya + yb) * dt - L[job] * (disc[n] - disc[n + 1]) / p.beta;
            const double cj = conj * yb * i1;
            const double bc = yb / c.lambda0 * i1;
            r.conjugate += 0.5 * (cj + cj_prev) * dt;
            r.budget += 0.5 * (bc + bc_prev) * dt - eps[job] * 0.5 * (ya + yb) / c.lambda0 * dt;
            cj_prev = cj;
            bc_prev = bc;
            yn = y1;
        }
        r.conjugate += disc[N] * m.conjugate_u2(yn);
        r.budget += disc[N] * yn / c.lambda0 * m.inverse_marginal_2(yn);
        r.log_ratio_T = lng;
        r.disc_y_T = disc[N] * yn / c.lambda0;
    });
    return out;
}

SimReport estimate_values(const ExecutedStrategies& x, const Model&) {
    const auto& c = x.config;
    const auto& P = x.paths;
    const std::size_t n = P.size();
    SimReport r;
    r.n_paths = c.n_paths;
    r.n_steps = c.n_steps;
    r.seed = c.seed;
    r.lambda0 = c.lambda0;
    r.job0 = c.job0;
    r.antithetic = c.antithetic;
    r.js = estimate(n, c.antithetic, [&](std::size_t i) { return P[i].js(); });
    r.j_total = estimate(n, c.antithetic, [&](std::size_t i) { return P[i].js() + P[i].conjugate; });
    r.switching_cost = estimate(n, c.antithetic, [&](std::size_t i) { return P[i].cost; });
    r.budget = estimate(n, c.antithetic, [&](std::size_t i) { return P[i].budget; });
    r.log_ratio_T = estimate(n, c.antithetic, [&](std::size_t i) { return P[i].log_ratio_T; });
    r.disc_y_T = estimate(n, c.antithetic, [&](std::size_t i) { return P[i].disc_y_T; });
    double total = 0.0;
    for (const auto& p : P) {
        total += p.n_switches;
        r.max_switches = std::max(r.max_switches, p.n_switches);
        r.zero_switch_paths += p.n_switches == 0;
        r.flagged_steps += p.flagged;
        r.late_up_switches += p.late_up_switch;
        r.alternation_violations += !p.alternation_ok;
        r.post_switch_violations += !p.post_switch_ok;
    }
    r.mean_switches = n ? total / static_cast<double>(n) : 0.0;
    return r;
}

void compare(SimReport& r, double q_ref, double q_hat_ref, double wealth_ref) {
    r.q_ref = q_ref;
    r.q_hat_ref = q_hat_ref;
    r.wealth_ref = wealth_ref;
    r.budget_residual = r.budget.mean - wealth_ref;
}

GapReport verify_duality(const Model& m, const strategy::StrategySurface& s,
                         const strategy::PolicyTable& table, const PrimalConfig& c) {
    const auto& p = m.params();
    if (c.job0 != 0 && c.job0 != 1) throw ValidationError("job0 must be 0 or 1");
    if (c.n_paths < 1 || c.n_steps < 10) throw ValidationError("n_paths >= 1 and n_steps >= 10 required");
    if (c.antithetic && c.n_paths % 2 != 0)
        throw ValidationError("antithetic sampling needs an even n_paths");
    GapReport g;
    g.lambda_star = s.lambda_from_wealth(c.job0, c.t0, c.wealth);
    g.v_dual = s.q_hat(c.job0, c.t0, g.lambda_star) + g.lambda_star * c.wealth;

    SimConfig sc;
    sc.n_paths = c.n_paths;
    sc.n_steps = c.n_steps;
    sc.seed = c.seed;
    sc.lambda0 = g.lambda_star;
    sc.job0 = c.job0;
    sc.antithetic = c.antithetic;
    sc.t0 = c.t0;
    sc.threads = c.threads;
    const DualPathEnsemble ens(m, sc);
    const int N = c.n_steps;
    const double dt = ens.dt();
    const double th = m.derived().theta;
    const double drift = (p.beta - p.r - 0.5 * th * th) * dt;
    const BoundaryPair& b = table.boundaries();
    std::vector<double> l0(N + 1), l1(N + 1), disc(N + 1);
    std::vector<std::size_t> rows(N + 1);
    for (int n = 0; n <= N; ++n) {
        const double t = ens.time(n);
        l0[n] = b.lambda0(std::min(t, p.T));
        l1[n] = b.lambda1(std::min(t, p.T));
        disc[n] = std::exp(-p.beta * (t - c.t0));
        rows[n] = table.row_for(t);
    }
    std::vector<int> spot_steps;
    for (int k = 1; k <= c.spot_checks; ++k) spot_steps.push_back(k * N / std::max(1, c.spot_checks));
    for (int n : spot_steps) g.spot_times.push_back(ens.time(n));

    struct Out {
        double v = 0.0;
        int switches = 0;
        int clamped = 0;
        bool nonpositive = false;
        std::vector<double> spot;
    };
    std::vector<Out> res(static_cast<std::size_t>(c.n_paths));
    const double eps[2] = {p.eps0, p.eps1};
    const double L[2] = {p.L0, p.L1};
    const double zeta[2] = {p.zeta0, p.zeta1};
    // Paths advance in blocks that share each table row, which keeps the table in cache.
    constexpr std::size_t kBlock = 64;
    const std::size_t n_blocks = (res.size() + kBlock - 1) / kBlock;
    const double sqdt = std::sqrt(dt);
    parallel_for(n_blocks, c.threads, [&](std::size_t blk) {
        const std::size_t first = blk * kBlock;
        const std::size_t count = std::min(kBlock, res.size() - first);
        std::vector<std::vector<double>> z(count);
        std::vector<double> w(count, c.wealth), lny(count, std::log(g.lambda_star));
        std::vector<int> job(count, c.job0);
        std::vector<std::size_t> hint(count, 0);
        for (std::size_t b = 0; b < count; ++b) ens.normals(first + b, z[b]);
        std::size_t next_spot = 0;
        for (int n = 0; n < N; ++n) {
            const bool spot = next_spot < spot_steps.size() && spot_steps[next_spot] == n;
            for (std::size_t b = 0; b < count; ++b) {
                Out& o = res[first + b];
                auto lk = table.lookup(job[b], rows[n], w[b], hint[b]);
                const bool up = job[b] == 0 && lk.lambda >= l0[n];
                const bool down = job[b] == 1 && lk.lambda <= l1[n];
                if (up || down) {
                    w[b] -= zeta[job[b]];
                    job[b] = 1 - job[b];
                    ++o.switches;
                    lk = table.lookup(job[b], rows[n], w[b], hint[b]);
                }
                o.clamped += lk.clamped;
                if (spot) {
                    o.spot.push_back(std::abs(w[b] - table.wealth(job[b], rows[n], std::exp(lny[b]))) /
                                     (1.0 + std::abs(w[b])));
                }
                // CRRA: c = lambda^{-1/gamma} and U1(c) = c lambda / (1 - gamma).
                const double cons = std::exp(-lk.log_lambda / p.gamma);
                o.v += disc[n] * (cons * lk.lambda / (1.0 - p.gamma) - L[job[b]]) * dt;
                const double dB = sqdt * z[b][n];
                w[b] += (p.r * w[b] + (p.mu - p.r) * lk.position - cons + eps[job[b]]) * dt +
                        p.sigma * lk.position * dB;
                lny[b] += drift - th * dB;
            }
            next_spot += spot;
        }
        for (std::size_t b = 0; b < count; ++b) {
            Out& o = res[first + b];
            if (next_spot < spot_steps.size())
                o.spot.push_back(std::abs(w[b] - table.wealth(job[b], rows[N], std::exp(lny[b]))) /
                                 (1.0 + std::abs(w[b])));
            double wT = w[b];
            if (wT <= 0.0) {
                o.nonpositive = true;
                wT = std::numeric_limits<double>::min();
            }
            o.v += disc[N] * m.bequest_utility(wT);
        }
    });
    g.v_primal = estimate(res.size(), c.antithetic, [&](std::size_t i) { return res[i].v; });
    g.gap = g.v_dual - g.v_primal.mean;
    double sw = 0.0;
    g.spot_errors.assign(spot_steps.size(), 0.0);
    for (const auto& o : res) {
        sw += o.switches;
        g.clamped_lookups += o.clamped;
        g.nonpositive_terminal += o.nonpositive;
        for (std::size_t i = 0; i < o.spot.size() && i < g.spot_errors.size(); ++i)
            g.spot_errors[i] += o.spot[i] / static_cast<double>(res.size());
    }
    g.mean_switches = sw / static_cast<double>(res.size());
    return g;
}

}  // namespace jobswitch::simulate
