#include "jobswitch/integral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "jobswitch/errors.hpp"
#include "jobswitch/normal.hpp"
#include "sqrt_rule.hpp"

namespace jobswitch::integral {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Drift of ln(lambda / boundary) per unit time in d+ (sign > 0) or d- (sign < 0).
double d_drift(const Model& m, int sign) {
    const auto& p = m.params();
    const double th = m.derived().theta;
    return p.beta - p.r + (sign > 0 ? 0.5 : -0.5) * th * th;
}

// N(d) or N(-d) with the degenerate limits resolved.
double signed_cdf(double log_ratio, double drift_u, double vol, bool negate) {
    double d;
    if (vol == 0.0) {
        d = log_ratio > 0.0 ? kInf : (log_ratio < 0.0 ? -kInf : 0.0);
    } else {
        d = (log_ratio + drift_u) / vol;
    }
    return norm_cdf(negate ? -d : d);
}

double log_ratio(double lambda, double boundary) {
    if (std::isinf(boundary)) return -kInf;
    if (boundary == 0.0) return kInf;
    return std::log(lambda / boundary);
}

// Integral over s in [t, end] of e^{-rate (s - t)} N(+-d(s - t, lambda / Lambda(s))).
double boundary_integral(const Model& m, double t, double lambda, double end,
                         const BoundaryCurve& curve, int sign, double rate, bool negate) {
    if (end <= t) return 0.0;
    static const detail::SqrtRule rule(64, 24);
    const double th = m.derived().theta;
    const double drift = d_drift(m, sign);
    const double vmax = std::sqrt(end - t);
    std::size_t hint = 0;
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
        const double v = vmax * rule.x[q];
        const double u = v * v;
        const double boundary = curve.at(std::min(t + u, end), hint);
        sum += rule.w[q] * 2.0 * v *
               std::exp(-rate * u) * signed_cdf(log_ratio(lambda, boundary), drift * u, th * v, negate);
    }
    return vmax * sum;
}

double q0_rep(const Model& m, double t, double lambda, const BoundaryCurve& lambda0) {
    const auto& p = m.params();
    const double tau = p.T - t;
    double v = p.eps0 * annuity_factor(p.r, tau) * lambda - p.L0 * annuity_factor(p.beta, tau);
    const double S = p.T - m.derived().T1;
    if (t < S) {
        v += (m.delta_eps() - p.r * p.zeta0) * lambda *
                 boundary_integral(m, t, lambda, S, lambda0, +1, p.r, false) -
             m.delta_L() * boundary_integral(m, t, lambda, S, lambda0, -1, p.beta, false);
    }
    return v;
}

double q1_rep(const Model& m, double t, double lambda, const BoundaryCurve& lambda1) {
    const auto& p = m.params();
    const double tau = p.T - t;
    return p.eps1 * annuity_factor(p.r, tau) * lambda - p.L1 * annuity_factor(p.beta, tau) -
           (m.delta_eps() + p.r * p.zeta1) * lambda *
               boundary_integral(m, t, lambda, p.T, lambda1, +1, p.r, true) +
           m.delta_L() * boundary_integral(m, t, lambda, p.T, lambda1, -1, p.beta, true);
}

void require_cover(const BoundaryPair& b, double t, double T) {
    if (!b.lambda0.covers(t, T) || !b.lambda1.covers(t, T))
        throw ValidationError("boundary curves must cover [t, T]");
}

}  // namespace

double d_pm(const Model& m, int sign, double u, double ratio) {
    if (!(u > 0.0)) throw std::domain_error("d_pm: elapsed time must be positive");
    if (!(ratio > 0.0)) throw std::domain_error("d_pm: ratio must be positive");
    return (std::log(ratio) + d_drift(m, sign) * u) / (m.derived().theta * std::sqrt(u));
}

double cdf_d(const Model& m, int sign, double u, double ratio) {
    const double lr = ratio == 0.0 ? -kInf : (std::isinf(ratio) ? kInf : std::log(ratio));
    return signed_cdf(lr, d_drift(m, sign) * u, m.derived().theta * std::sqrt(std::max(u, 0.0)),
                      false);
}

void validate_config(const IeSolverConfig& c, const Model& m) {
    const auto& p = m.params();
    const double min_cap = 1e6 * std::exp(m.derived().X2);
    if (c.nt_ie < 50) throw ValidationError("nt_ie must be >= 50");
    if (!(c.lambda_cap >= min_cap)) throw ValidationError("lambda_cap must be >= 1e6 * e^{X2}");
    if (!(c.endpoint_offset > 0.0) || c.endpoint_offset > p.T / c.nt_ie)
        throw ValidationError("endpoint_offset must lie in (0, T / nt_ie]");
    if (!(c.newton_tol > 0.0) || c.max_newton_iters < 1)
        throw ValidationError("newton_tol must be positive and max_newton_iters >= 1");
}

double q0_ie(const Model& m, double t, double lambda, const BoundaryPair& b) {
    if (!(lambda > 0.0)) throw std::domain_error("lambda must be positive");
    require_cover(b, t, m.params().T);
    if (lambda >= b.lambda0(t)) return q1_rep(m, t, lambda, b.lambda1) - m.params().zeta0 * lambda;
    return q0_rep(m, t, lambda, b.lambda0);
}

double q1_ie(const Model& m, double t, double lambda, const BoundaryPair& b) {
    if (!(lambda > 0.0)) throw std::domain_error("lambda must be positive");
    require_cover(b, t, m.params().T);
    if (lambda <= b.lambda1(t)) return q0_rep(m, t, lambda, b.lambda0) - m.params().zeta1 * lambda;
    return q1_rep(m, t, lambda, b.lambda1);
}

namespace {

// Node grid: uniform step plus geometric refinement towards T - T1 and T.
std::vector<double> ie_nodes(double T, double S, int nt, double delta) {
    const double h = T / nt;
    std::vector<double> t;
    for (int k = 0; k <= nt; ++k) t.push_back(k * h);
    t.push_back(S);
    for (double end : {S, T}) {
        for (double off = 0.5 * h; off > delta; off *= 0.5) t.push_back(end - off);
        t.push_back(end - delta);
    }
    std::sort(t.begin(), t.end());
    std::vector<double> out;
    for (double v : t) {
        if (v < 0.0 || v > T) continue;
        if (!out.empty() && v - out.back() < 0.5 * delta) {
            // Keep the exact anchors S and T when a uniform node collides with them.
            if (v == S || v == T) out.back() = v;
            continue;
        }
        out.push_back(v);
    }
    out.front() = 0.0;
    out.back() = T;
    return out;
}

class Recursion {
public:
    Recursion(const Model& m, const IeSolverConfig& c) : m_(m), c_(c) {
        const auto& p = m.params();
        S_ = p.T - m.derived().T1;
        t_ = ie_nodes(p.T, S_, c.nt_ie, c.endpoint_offset);
        n_ = t_.size();
        m0_ = static_cast<std::size_t>(std::find(t_.begin(), t_.end(), S_) - t_.begin());
        l0_.assign(n_, kInf);
        l1_.assign(n_, 0.0);
        lnl0_.assign(n_, kInf);
        lnl1_.assign(n_, -kInf);
        flag0_.assign(n_, NodeFlag::ok);
        flag1_.assign(n_, NodeFlag::ok);
        dp_ = d_drift(m, +1);
        dm_ = d_drift(m, -1);
    }

    IeSolution run() {
        const auto start = std::chrono::steady_clock::now();
        const auto& d = m_.derived();
        double y1 = std::log(0.5 * std::exp(d.X1));
        double y0 = std::log(2.0 * std::exp(d.X2));
        bool first0 = true;
        for (std::size_t k = n_ - 1; k-- > 0;) {
            prepare(k);
            y1 = solve(k, 1, y1, -700.0, d.X1);
            l1_[k] = std::exp(y1);
            lnl1_[k] = y1;
            if (k < m0_) {
                // The Lambda0 search restarts from the seed until a first root exists.
                const double guess = first0 ? std::log(2.0 * std::exp(d.X2)) : y0;
                const double y = solve(k, 0, guess, d.X2, std::log(c_.lambda_cap));
                if (std::isfinite(y)) {
                    y0 = y;
                    first0 = false;
                    l0_[k] = std::exp(y);
                    lnl0_[k] = y;
                }
            }
        }
        IeSolution out;
        out.boundaries.lambda0 = BoundaryCurve(t_, l0_, flag0_);
        out.boundaries.lambda1 = BoundaryCurve(t_, l1_, flag1_);
        stats_.nodes = static_cast<int>(n_);
        for (std::size_t k = 0; k < n_; ++k) {
            stats_.capped_nodes += flag0_[k] == NodeFlag::capped;
            stats_.edge_nodes += (flag0_[k] == NodeFlag::edge) + (flag1_[k] == NodeFlag::edge);
        }
        stats_.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.stats = stats_;
        return out;
    }

private:
    // Per-node constants of the quadrature over later nodes.
    void prepare(std::size_t k) {
        const auto& p = m_.params();
        const double th = m_.derived().theta;
        const std::size_t len = n_ - k;
        u_.resize(len);
        w_.resize(len);
        er_.resize(len);
        eb_.resize(len);
        vol_.resize(len);
        for (std::size_t j = 0; j < len; ++j) {
            const double u = t_[k + j] - t_[k];
            u_[j] = u;
            er_[j] = std::exp(-p.r * u);
            eb_[j] = std::exp(-p.beta * u);
            vol_[j] = th * std::sqrt(u);
        }
        k_ = k;
    }

    // Trapezoid over nodes k..last of e^{-rate u} N(+-d). The node-k term is supplied.
    double sum(double lnlam, std::size_t last, const std::vector<double>& lnb, double drift,
               const std::vector<double>& disc, bool negate, double first_value) const {
        double total = 0.0;
        double prev = disc[0] * first_value;
        for (std::size_t j = 1; j + k_ <= last; ++j) {
            const double lb = lnb[k_ + j];
            double f;
            if (std::isinf(lb)) {
                const bool big = lb < 0.0;  // boundary 0: ratio infinite
                f = negate ? (big ? 0.0 : 1.0) : (big ? 1.0 : 0.0);
            } else {
                const double d = (lnlam - lb + drift * u_[j]) / vol_[j];
                f = norm_cdf(negate ? -d : d);
            }
            f *= disc[j];
            total += 0.5 * (f + prev) * (u_[j] - u_[j - 1]);
            prev = f;
        }
        return total;
    }

    double q0_node(double lnlam, bool self) const {
        const auto& p = m_.params();
        const double lam = std::exp(lnlam);
        const double tau = p.T - t_[k_];
        double v = p.eps0 * annuity_factor(p.r, tau) * lam - p.L0 * annuity_factor(p.beta, tau);
        if (k_ < m0_) {
            const double e = self ? 0.5 : 0.0;
            v += (m_.delta_eps() - p.r * p.zeta0) * lam * sum(lnlam, m0_, lnl0_, dp_, er_, false, e) -
                 m_.delta_L() * sum(lnlam, m0_, lnl0_, dm_, eb_, false, e);
        }
        return v;
    }

    double q1_node(double lnlam, bool self) const {
        const auto& p = m_.params();
        const double lam = std::exp(lnlam);
        const double tau = p.T - t_[k_];
        const double e = self ? 0.5 : 0.0;
        return p.eps1 * annuity_factor(p.r, tau) * lam - p.L1 * annuity_factor(p.beta, tau) -
               (m_.delta_eps() + p.r * p.zeta1) * lam * sum(lnlam, n_ - 1, lnl1_, dp_, er_, true, e) +
               m_.delta_L() * sum(lnlam, n_ - 1, lnl1_, dm_, eb_, true, e);
    }

    // Boundary equation divided by lambda; zero at the boundary value.
    double G(int which, double y) {
        ++stats_.total_evaluations;
        const auto& p = m_.params();
        if (which == 1) {
            const double P = q1_node(y, true) - q0_node(y, false);
            return P / std::exp(y) + p.zeta1;
        }
        const double P = q1_node(y, false) - q0_node(y, true);
        return P / std::exp(y) - p.zeta0;
    }

    double solve(std::size_t k, int which, double guess, double lo, double hi) {
        auto& flags = which == 1 ? flag1_ : flag0_;
        guess = std::clamp(guess, lo, hi);
        const double g0 = G(which, guess);
        if (g0 == 0.0) return guess;
        // Expand symmetrically until the sign changes.
        double a = guess, b = guess, ga = g0, gb = g0;
        bool found = false;
        for (double step = 0.02; !found; step *= 2.0) {
            const bool can_down = a > lo, can_up = b < hi;
            if (!can_down && !can_up) break;
            if (can_down) {
                const double y = std::max(lo, guess - step);
                const double g = G(which, y);
                if ((g < 0) != (g0 < 0)) {
                    b = a;
                    gb = ga;
                    a = y;
                    ga = g;
                    found = true;
                    break;
                }
                a = y;
                ga = g;
            }
            if (can_up) {
                const double y = std::min(hi, guess + step);
                const double g = G(which, y);
                if ((g < 0) != (g0 < 0)) {
                    a = b;
                    ga = gb;
                    b = y;
                    gb = g;
                    found = true;
                    break;
                }
                b = y;
                gb = g;
            }
        }
        if (!found) {
            if (which == 0) {
                flags[k] = NodeFlag::capped;
                return kInf;
            }
            std::ostringstream os;
            os << "no bracket for Lambda1 at node t = " << t_[k];
            throw NumericalError(os.str());
        }
        // Safeguarded Newton on [a, b] with a finite-difference slope.
        double y = std::abs(ga) < std::abs(gb) ? a : b;
        double gy = std::abs(ga) < std::abs(gb) ? ga : gb;
        for (int it = 0; it < c_.max_newton_iters; ++it) {
            const double h = 1e-7;
            const double slope = (G(which, y + h) - gy) / h;
            double next = slope != 0.0 ? y - gy / slope : 0.5 * (a + b);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            const double gn = G(which, next);
            if ((gn < 0) == (ga < 0)) {
                a = next;
                ga = gn;
            } else {
                b = next;
                gb = gn;
            }
            const double moved = std::abs(next - y);
            y = next;
            gy = gn;
            if (gn == 0.0 || moved <= c_.newton_tol || b - a <= c_.newton_tol) break;
            if (it + 1 == c_.max_newton_iters) {
                std::ostringstream os;
                os << "Newton did not converge for Lambda" << which << " at node t = " << t_[k];
                throw NumericalError(os.str());
            }
        }
        if (y - lo <= 1e-12 || hi - y <= 1e-12) flags[k] = NodeFlag::edge;
        stats_.max_equation_residual = std::max(stats_.max_equation_residual, std::abs(gy));
        return y;
    }

    const Model& m_;
    IeSolverConfig c_;
    double S_ = 0.0;
    std::vector<double> t_;
    std::size_t n_ = 0;
    std::size_t m0_ = 0;
    std::size_t k_ = 0;
    double dp_ = 0.0, dm_ = 0.0;
    std::vector<double> l0_, l1_, lnl0_, lnl1_;
    std::vector<NodeFlag> flag0_, flag1_;
    std::vector<double> u_, w_, er_, eb_, vol_;
    IeStats stats_;
};

}  // namespace

IeSolution solve_boundaries_ie(const Model& m, const IeSolverConfig& c) {
    validate_config(c, m);
    return Recursion(m, c).run();
}

}  // namespace jobswitch::integral
