#include "jobswitch/obstacle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "jobswitch/errors.hpp"

namespace jobswitch::obstacle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Stencil {
    double lower;  // coefficient of u_{i-1}
    double diag;
    double upper;  // coefficient of u_{i+1}
};

// Implicit Euler row for u - dt*(D u_xx + C u_x - r u), constant over the grid.
Stencil u_stencil(const Model& m, const Grid& g) {
    const auto& p = m.params();
    const double th = m.derived().theta;
    const double D = 0.5 * th * th;
    const double C = p.beta - p.r + 0.5 * th * th;
    const double dt = g.dt();
    const double dx = g.dx();
    return {-dt * (D / (dx * dx) - C / (2.0 * dx)), 1.0 + dt * (2.0 * D / (dx * dx) + p.r),
            -dt * (D / (dx * dx) + C / (2.0 * dx))};
}

// Solves a tridiagonal system in place; sub/sup may vary per row.
void thomas(std::span<const double> sub, std::span<double> diag, std::span<const double> sup,
            std::span<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// Quintic with g(0)=1, g(1)=0 and zero curvature at both ends; g' <= 0 on [0,1].
double quintic(double s) { return (1.0 - s) * (1.0 - s) * (1.0 - s) * (1.0 + s); }
double quintic_d(double s) { return (1.0 - s) * (1.0 - s) * (-2.0 - 4.0 * s); }

}  // namespace

const char* method_name(Method m) {
    return m == Method::penalty ? "penalty" : "projected_relaxation";
}

Method parse_method(const std::string& s) {
    if (s == "penalty") return Method::penalty;
    if (s == "projected_relaxation" || s == "psor" || s == "projected") return Method::projected_relaxation;
    throw ValidationError("unknown method '" + s + "' (expected projected_relaxation or penalty)");
}

void validate_grid(const Grid& g, const DerivedConstants& d) {
    if (g.nx < 3) throw ValidationError("grid: nx must be >= 3");
    if (g.nt < 1) throw ValidationError("grid: nt must be >= 1");
    if (!(g.T > 0.0)) throw ValidationError("grid: T must be positive");
    const double need = std::max(std::abs(d.X1), std::abs(d.X2)) + 5.0;
    if (g.n_trunc < need) {
        std::ostringstream os;
        os << "grid: n must be >= max(|X1|,|X2|) + 5 = " << need;
        throw ValidationError(os.str());
    }
}

namespace {

double lower_term(double xi, double eps, double scale) {
    if (xi <= 0.0) return scale * (1.0 - 2.0 * xi / eps);
    if (xi >= eps) return 0.0;
    return scale * quintic(xi / eps);
}

double lower_term_d(double xi, double eps, double scale) {
    if (xi <= 0.0) return -2.0 * scale / eps;
    if (xi >= eps) return 0.0;
    return scale * quintic_d(xi / eps) / eps;
}

}  // namespace

double penalty_lower(double xi, double eps, double L1, double n) {
    return lower_term(xi, eps, L1 * std::exp(n));
}

double penalty_lower_d(double xi, double eps, double L1, double n) {
    return lower_term_d(xi, eps, L1 * std::exp(n));
}

double penalty_upper(double xi, double eps, double delta_eps) {
    if (xi >= 0.0) return -delta_eps * (1.0 + 2.0 * xi / eps);
    if (xi <= -eps) return 0.0;
    return -delta_eps * quintic(-xi / eps);
}

double penalty_upper_d(double xi, double eps, double delta_eps) {
    if (xi >= 0.0) return -2.0 * delta_eps / eps;
    if (xi <= -eps) return 0.0;
    return delta_eps * quintic_d(-xi / eps) / eps;
}

bool in_contact(double u, double obstacle) {
    return std::abs(u - obstacle) <= 1e-9 * (1.0 + std::abs(obstacle));
}

namespace {

int psor_step(const Stencil& st, std::span<const double> rhs, std::span<double> u, double lo,
              double hi, double omega, const SolverOptions& opt) {
    const std::size_t n = u.size();
    for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
        double change = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double gs = (rhs[i] - st.lower * u[i - 1] - st.upper * u[i + 1]) / st.diag;
            const double v = std::clamp(u[i] + omega * (gs - u[i]), lo, hi);
            change = std::max(change, std::abs(v - u[i]));
            u[i] = v;
        }
        if (change <= opt.sweep_tol) return sweep;
    }
    throw NumericalError("projected relaxation did not converge within max_sweeps");
}

int penalty_step(const Model& m, const Grid& g, const Stencil& st, std::span<const double> rhs,
                 std::span<double> u, double eps, const SolverOptions& opt) {
    const auto& p = m.params();
    const std::size_t n = u.size();
    const double dt = g.dt();
    const double de = m.delta_eps();
    const double scale = p.L1 * std::exp(g.n_trunc);
    std::vector<double> res(n), sub(n, st.lower), diag(n), sup(n, st.upper), trial(n), trial_res(n),
        step(n);
    sub[n - 1] = 0.0;
    sup[0] = 0.0;

    auto residual = [&](std::span<const double> v, std::span<double> out) {
        double worst = 0.0;
        out[0] = out[n - 1] = 0.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            out[i] = st.lower * v[i - 1] + st.diag * v[i] + st.upper * v[i + 1] - rhs[i] -
                     dt * (lower_term(v[i] + p.zeta1, eps, scale) +
                           penalty_upper(v[i] - p.zeta0, eps, de));
            worst = std::max(worst, std::abs(out[i]));
        }
        return worst;
    };

    double norm = residual(u, res);
    for (int it = 1; it <= opt.max_newton; ++it) {
        diag[0] = diag[n - 1] = 1.0;
        for (std::size_t i = 1; i + 1 < n; ++i)
            diag[i] = st.diag - dt * (lower_term_d(u[i] + p.zeta1, eps, scale) +
                                      penalty_upper_d(u[i] - p.zeta0, eps, de));
        std::copy(res.begin(), res.end(), step.begin());
        thomas(sub, diag, sup, step);
        double step_norm = 0.0;
        for (double s : step) step_norm = std::max(step_norm, std::abs(s));

        double alpha = 1.0;
        double trial_norm = 0.0;
        for (int halving = 0;; ++halving) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] - alpha * step[i];
            trial_norm = residual(trial, trial_res);
            // Full steps first: with a monotone penalty and an M-matrix Jacobian the undamped
            // iteration converges; damping is only a fallback once progress stalls.
            if (it <= 50 || trial_norm <= norm || alpha * step_norm <= opt.newton_tol) break;
            if (halving == 40) throw NumericalError("penalty Newton: step halving exhausted");
            alpha *= 0.5;
        }
        std::copy(trial.begin(), trial.end(), u.begin());
        std::swap(res, trial_res);
        norm = trial_norm;
        if (alpha * step_norm <= opt.newton_tol) return it;
    }
    throw NumericalError("penalty Newton did not converge within max_newton iterations");
}

}  // namespace

ObstacleSolution solve_obstacle(const Model& m, const Grid& g, const SolverOptions& opt) {
    validate_grid(g, m.derived());
    if (opt.method == Method::penalty && opt.eps_sequence.empty())
        throw ValidationError("penalty method needs a non-empty eps sequence");
    const auto start = std::chrono::steady_clock::now();
    const auto& p = m.params();
    const Stencil st = u_stencil(m, g);
    const std::size_t nx = static_cast<std::size_t>(g.nx);
    const double dt = g.dt();

    double omega = opt.omega;
    if (omega <= 0.0) {
        const double rho = (std::abs(st.lower) + std::abs(st.upper)) / st.diag *
                           std::cos(std::numbers::pi / (g.nx - 1));
        omega = 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
    }

    ObstacleSolution sol;
    sol.grid = g;
    sol.method = opt.method;
    sol.final_eps = opt.method == Method::penalty ? opt.eps_sequence.back() : 0.0;
    sol.u = Surface(g.nt + 1, nx, 0.0);
    sol.residual = Surface(g.nt + 1, nx, 0.0);

    std::vector<double> src(nx), rhs(nx);
    for (std::size_t i = 0; i < nx; ++i)
        src[i] = dt * (m.delta_eps() - m.delta_L() * std::exp(-g.x(static_cast<int>(i))));

    for (int k = 1; k <= g.nt; ++k) {
        const double tau = g.tau(k);
        auto prev = sol.u.row(k - 1);
        auto cur = sol.u.row(k);
        std::copy(prev.begin(), prev.end(), cur.begin());
        cur[0] = m.varphi_minus_n(tau, g.n_trunc);
        cur[nx - 1] = m.varphi_plus(tau);
        for (std::size_t i = 0; i < nx; ++i) rhs[i] = prev[i] + src[i];

        int iters = 0;
        if (opt.method == Method::projected_relaxation) {
            iters = psor_step(st, rhs, cur, -p.zeta1, p.zeta0, omega, opt);
        } else {
            for (double eps : opt.eps_sequence) iters += penalty_step(m, g, st, rhs, cur, eps, opt);
        }
        sol.stats.total_iterations += iters;
        sol.stats.max_iterations_per_step = std::max(sol.stats.max_iterations_per_step, iters);

        auto res = sol.residual.row(k);
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            const double F =
                (st.lower * cur[i - 1] + st.diag * cur[i] + st.upper * cur[i + 1] - rhs[i]) / dt;
            res[i] = std::abs(std::min(cur[i] + p.zeta1, std::max(cur[i] - p.zeta0, F)));
            sol.stats.max_residual = std::max(sol.stats.max_residual, res[i]);
        }
    }
    sol.boundaries = extract_free_boundaries(m, sol);
    sol.stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

FreeBoundaries extract_free_boundaries(const Model& m, const ObstacleSolution& sol) {
    const auto& p = m.params();
    const Grid& g = sol.grid;
    const std::size_t nx = static_cast<std::size_t>(g.nx);
    FreeBoundaries fb;
    fb.tau.resize(g.nt + 1);
    fb.x0.assign(g.nt + 1, kInf);
    fb.x1.assign(g.nt + 1, -kInf);
    for (int k = 0; k <= g.nt; ++k) {
        fb.tau[k] = g.tau(k);
        if (k == 0) continue;
        auto u = sol.u.row(k);
        std::size_t n_low = 0;
        while (n_low < nx && in_contact(u[n_low], -p.zeta1)) ++n_low;
        std::size_t n_high = 0;
        while (n_high < nx && in_contact(u[nx - 1 - n_high], p.zeta0)) ++n_high;
        for (std::size_t i = n_low; i + n_high < nx; ++i) {
            if (in_contact(u[i], -p.zeta1) || in_contact(u[i], p.zeta0)) {
                std::ostringstream os;
                os << "non-connected contact set at tau = " << g.tau(k) << ", x = "
                   << g.x(static_cast<int>(i));
                throw NumericalError(os.str());
            }
        }
        // Contact is quadratic at a smooth-fit boundary, so sqrt(u - obstacle) is close to
        // linear on the waiting side; extrapolate it to zero inside the bracketing cell.
        const double dx = g.dx();
        if (n_low > 0) {
            const std::size_t i = n_low - 1;
            double x = g.x(static_cast<int>(i));
            if (i + 2 < nx) {
                const double a = std::sqrt(std::max(0.0, u[i + 1] + p.zeta1));
                const double b = std::sqrt(std::max(0.0, u[i + 2] + p.zeta1));
                if (b > a) x = std::clamp(x + dx - dx * a / (b - a), x, x + dx);
            }
            fb.x1[k] = x;
        }
        if (n_high > 0) {
            const std::size_t i = nx - n_high;
            double x = g.x(static_cast<int>(i));
            if (i >= 2) {
                const double a = std::sqrt(std::max(0.0, p.zeta0 - u[i - 1]));
                const double b = std::sqrt(std::max(0.0, p.zeta0 - u[i - 2]));
                if (b > a) x = std::clamp(x - dx + dx * a / (b - a), x - dx, x);
            }
            fb.x0[k] = x;
        }
    }
    return fb;
}

BoundaryPair to_lambda_boundaries(const FreeBoundaries& fb, double T) {
    const std::size_t n = fb.tau.size();
    std::vector<double> t(n), l0(n), l1(n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = n - 1 - j;
        t[j] = T - fb.tau[k];
        l0[j] = std::isinf(fb.x0[k]) ? BoundaryCurve::absent : std::exp(fb.x0[k]);
        l1[j] = std::isinf(fb.x1[k]) ? 0.0 : std::exp(fb.x1[k]);
    }
    t.back() = T;
    return {BoundaryCurve(t, l0), BoundaryCurve(std::move(t), std::move(l1))};
}

namespace {

// Solves lo*q[i-1] + di*q[i] + up*q[i+1] = rhs[i] for l < i < r with q[l], q[r] given.
void solve_segment(double lo, double di, double up, std::span<const double> rhs, std::size_t l,
                   std::size_t r, double ql, double qr, std::span<double> q) {
    q[l] = ql;
    q[r] = qr;
    if (r <= l + 1) return;
    const std::size_t n = r - l - 1;
    std::vector<double> sub(n, lo), diag(n, di), sup(n, up), b(n);
    for (std::size_t k = 0; k < n; ++k) b[k] = rhs[l + 1 + k];
    b[0] -= lo * ql;
    b[n - 1] -= up * qr;
    thomas(sub, diag, sup, b);
    std::copy(b.begin(), b.end(), q.begin() + static_cast<std::ptrdiff_t>(l + 1));
}

}  // namespace

QSurfaces recover_q01(const Model& m, const Grid& g, const BoundaryCurve& lambda0,
                      const BoundaryCurve& lambda1) {
    validate_grid(g, m.derived());
    if (!lambda0.covers(0.0, g.T) || !lambda1.covers(0.0, g.T))
        throw ValidationError("recover_q01: boundary curves must cover [0, T]");
    const auto& p = m.params();
    const double th = m.derived().theta;
    const double D = 0.5 * th * th;
    const double C = p.beta - p.r - 0.5 * th * th;
    const double dt = g.dt();
    const double dx = g.dx();
    const std::size_t nx = static_cast<std::size_t>(g.nx);
    const double lo = -dt * (D / (dx * dx) - C / (2.0 * dx));
    const double di = 1.0 + dt * (2.0 * D / (dx * dx) + p.beta);
    const double up = -dt * (D / (dx * dx) + C / (2.0 * dx));

    QSurfaces out{g, Surface(g.nt + 1, nx, 0.0), Surface(g.nt + 1, nx, 0.0)};
    std::vector<double> lam(nx), rhs0(nx), rhs1(nx), zero(nx, 0.0);
    std::vector<double> a0(nx), b0(nx), a1(nx), b1(nx);
    for (std::size_t i = 0; i < nx; ++i) lam[i] = std::exp(g.x(static_cast<int>(i)));

    for (int k = 1; k <= g.nt; ++k) {
        const double tau = g.tau(k);
        const double t = g.T - tau;
        const double a = annuity_factor(p.r, tau);
        const double b = annuity_factor(p.beta, tau);
        const double L0t = lambda0(t);
        const double L1t = lambda1(t);
        auto p0 = out.q0.row(k - 1);
        auto p1 = out.q1.row(k - 1);
        for (std::size_t i = 0; i < nx; ++i) {
            rhs0[i] = p0[i] + dt * (p.eps0 * lam[i] - p.L0);
            rhs1[i] = p1[i] + dt * (p.eps1 * lam[i] - p.L1);
        }

        // Switching regions as node ranges: [0, i1] for job 1, [i0, nx-1] for job 0.
        std::size_t i1 = 0;
        while (i1 + 1 < nx && lam[i1 + 1] <= L1t) ++i1;
        std::size_t i0 = nx - 1;
        bool has_sr0 = false;
        if (std::isfinite(L0t)) {
            for (std::size_t i = 0; i < nx; ++i)
                if (lam[i] >= L0t) {
                    i0 = i;
                    has_sr0 = true;
                    break;
                }
        }
        const double q0_left = p.eps0 * lam[0] * a - p.L0 * b;
        const double q1_right = p.eps1 * lam[nx - 1] * a - p.L1 * b;
        const double q0_right = tau <= m.derived().T1 ? p.eps0 * lam[nx - 1] * a - p.L0 * b
                                                      : q1_right - m.varphi_plus(tau) * lam[nx - 1];

        // Q0 on [0, i0] is affine in its right value R, Q1 on [i1, nx-1] in its left value S.
        solve_segment(lo, di, up, rhs0, 0, i0, q0_left, 0.0, a0);
        solve_segment(lo, di, up, zero, 0, i0, 0.0, 1.0, b0);
        solve_segment(lo, di, up, rhs1, i1, nx - 1, 0.0, q1_right, a1);
        solve_segment(lo, di, up, zero, i1, nx - 1, 1.0, 0.0, b1);
        // Contact identities close the system: S = Q0(i1) - zeta1*lam, R = Q1(i0) - zeta0*lam.
        double R, S;
        if (has_sr0) {
            const double sa = a0[i1] - p.zeta1 * lam[i1], sb = b0[i1];
            const double rc = a1[i0] - p.zeta0 * lam[i0], rd = b1[i0];
            S = (sa + sb * rc) / (1.0 - sb * rd);
            R = rc + S * rd;
        } else {
            R = q0_right;
            S = a0[i1] + R * b0[i1] - p.zeta1 * lam[i1];
        }
        auto q0 = out.q0.row(k);
        auto q1 = out.q1.row(k);
        for (std::size_t i = 0; i <= i0; ++i) q0[i] = a0[i] + R * b0[i];
        for (std::size_t i = i1; i < nx; ++i) q1[i] = a1[i] + S * b1[i];
        for (std::size_t i = 0; i < i1; ++i) q1[i] = q0[i] - p.zeta1 * lam[i];
        for (std::size_t i = i0 + 1; i < nx; ++i) q0[i] = q1[i] - p.zeta0 * lam[i];
        if (has_sr0) q0[i0] = q1[i0] - p.zeta0 * lam[i0];
    }
    return out;
}

namespace {

struct Interp {
    std::size_t k;
    double wk;
    std::size_t i;
    double wi;
};

Interp locate(const Grid& g, double t, double lambda) {
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    const double tau = std::clamp(g.T - t, 0.0, g.T);
    const double x = std::log(lambda);
    if (x < -g.n_trunc - 1e-12 || x > g.n_trunc + 1e-12)
        throw ValidationError("lambda outside the truncated grid");
    double fk = tau / g.dt();
    double fi = (std::clamp(x, -g.n_trunc, g.n_trunc) + g.n_trunc) / g.dx();
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(fk), g.nt - 1);
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(fi), g.nx - 2);
    return {k, fk - k, i, fi - i};
}

double bilinear(const Surface& s, const Interp& ip) {
    const double a = s(ip.k, ip.i) * (1 - ip.wi) + s(ip.k, ip.i + 1) * ip.wi;
    const double b = s(ip.k + 1, ip.i) * (1 - ip.wi) + s(ip.k + 1, ip.i + 1) * ip.wi;
    return a * (1 - ip.wk) + b * ip.wk;
}

}  // namespace

double QSurfaces::value(int j, double t, double lambda) const {
    return bilinear(j == 0 ? q0 : q1, locate(grid, t, lambda));
}

double QSurfaces::dlambda(int j, double t, double lambda) const {
    const double h = grid.dx();
    const double x = std::log(lambda);
    return (value(j, t, std::exp(x + h)) - value(j, t, std::exp(x - h))) / (2.0 * h) / lambda;
}

double QSurfaces::dlambda2(int j, double t, double lambda) const {
    const double h = grid.dx();
    const double x = std::log(lambda);
    const double qp = value(j, t, std::exp(x + h));
    const double q = value(j, t, lambda);
    const double qm = value(j, t, std::exp(x - h));
    const double qxx = (qp - 2.0 * q + qm) / (h * h);
    const double qx = (qp - qm) / (2.0 * h);
    return (qxx - qx) / (lambda * lambda);
}

std::vector<InvariantResult> check_invariants(const Model& m, const ObstacleSolution& sol,
                                              const InvariantOptions& opt) {
    const auto& p = m.params();
    const auto& d = m.derived();
    const Grid& g = sol.grid;
    const std::size_t nx = static_cast<std::size_t>(g.nx);
    const double dt = g.dt();
    std::vector<InvariantResult> out;

    auto add = [&](std::string name, bool ok, double worst, std::string note = {}) {
        out.push_back({std::move(name), ok, worst, std::move(note)});
    };

    double init = 0.0;
    for (double v : sol.u.row(0)) init = std::max(init, std::abs(v));
    add("initial_slice_zero", init == 0.0, init);

    double bound_viol = 0.0, mono_viol = 0.0, edge_viol = 0.0, res_worst = 0.0;
    double dtau_up = 0.0, dtau_lo = 0.0, upper_early = 0.0;
    double cone_lo = 0.0, cone_hi = 0.0;
    for (int k = 1; k <= g.nt; ++k) {
        const double tau = g.tau(k);
        const double tau_prev = g.tau(k - 1);
        const double hi = m.varphi_plus(tau);
        auto u = sol.u.row(k);
        auto up = sol.u.row(k - 1);
        edge_viol = std::max({edge_viol, std::abs(u[0] - m.varphi_minus_n(tau, g.n_trunc)),
                              std::abs(u[nx - 1] - hi)});
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = g.x(static_cast<int>(i));
            bound_viol = std::max({bound_viol, -p.zeta1 - u[i], u[i] - hi});
            if (i + 1 < nx) mono_viol = std::max(mono_viol, u[i] - u[i + 1]);
            res_worst = std::max(res_worst, sol.residual(k, i));
            if (tau <= d.T1 && in_contact(u[i], p.zeta0)) upper_early = std::max(upper_early, 1.0);
            if (i == 0 || i + 1 == nx) continue;
            const double ut = (u[i] - up[i]) / dt;
            dtau_up = std::max(dtau_up, ut - m.delta_eps() * std::exp(-p.r * tau_prev));
            dtau_lo = std::max(dtau_lo, -p.L1 * std::exp(-p.beta * tau_prev - x) - ut);
            if (std::abs(x) <= 0.5 * g.n_trunc) {
                const double ux = (u[i + 1] - u[i - 1]) / (2.0 * g.dx());
                if (ux > 1e-10) {
                    cone_lo = std::max(cone_lo, -tau * ut / ux);
                    cone_hi = std::max(cone_hi, tau * ut / (std::exp(x) * ux));
                }
            }
        }
    }
    const double res_tol = sol.method == Method::penalty ? std::max(opt.residual_tol, 10.0 * sol.final_eps)
                                                         : opt.residual_tol;
    add("bounds_lower_zeta1_upper_varphi_plus", bound_viol <= 1e-12, std::max(0.0, bound_viol));
    add("monotone_in_x", mono_viol <= opt.monotone_tol, std::max(0.0, mono_viol));
    add("dtau_upper_bound", dtau_up <= opt.dtau_tol, std::max(0.0, dtau_up));
    add("dtau_lower_bound", dtau_lo <= opt.dtau_tol, std::max(0.0, dtau_lo));
    add("complementarity_residual", res_worst <= res_tol, res_worst);
    add("upper_contact_empty_before_T1", upper_early == 0.0, upper_early);
    add("edge_values_match_dirichlet_data", edge_viol <= 1e-14, edge_viol);
    add("cone_constant_finite", std::isfinite(cone_lo) && std::isfinite(cone_hi),
        std::max(cone_lo, cone_hi), "measured C on |x| <= n/2");

    double x1_viol = -kInf, x0_viol = -kInf;
    for (std::size_t k = 1; k < sol.boundaries.tau.size(); ++k) {
        if (std::isfinite(sol.boundaries.x1[k])) x1_viol = std::max(x1_viol, sol.boundaries.x1[k] - d.X1);
        if (std::isfinite(sol.boundaries.x0[k])) x0_viol = std::max(x0_viol, d.X2 - sol.boundaries.x0[k]);
    }
    add("x1_below_X1", x1_viol < 0.0, x1_viol);
    add("x0_above_X2", x0_viol < 0.0, x0_viol);
    return out;
}

std::vector<InvariantResult> check_q_bounds(const Model& m, const QSurfaces& q) {
    const auto& p = m.params();
    const Grid& g = q.grid;
    double lower = 0.0, upper = 0.0;
    for (int k = 0; k <= g.nt; ++k) {
        const double tau = g.tau(k);
        const double t = g.T - tau;
        const double a = annuity_factor(p.r, tau);
        const double b = annuity_factor(p.beta, tau);
        const double growth = std::exp(std::max(p.eps1 - p.r, 0.0) * g.T - (p.eps1 - p.r) * t);
        for (int i = 0; i < g.nx; ++i) {
            const double lam = std::exp(g.x(i));
            const double n0 = p.eps0 * a * lam - p.L0 * b;
            const double n1 = p.eps1 * a * lam - p.L1 * b;
            lower = std::max({lower, (n0 - q.q0(k, i)) / (1.0 + std::abs(n0)),
                              (n1 - q.q1(k, i)) / (1.0 + std::abs(n1))});
            upper = std::max({upper, q.q0(k, i) - growth * lam, q.q1(k, i) - growth * lam});
        }
    }
    return {{"q_at_least_never_switch_value", lower <= 1e-3, lower, "relative shortfall, tolerance 1e-3"},
            {"q_below_growth_bound", upper <= 0.0, upper, {}}};
}

}  // namespace jobswitch::obstacle
