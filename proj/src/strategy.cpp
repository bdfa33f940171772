#include "jobswitch/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "jobswitch/errors.hpp"
#include "jobswitch/integral.hpp"
#include "jobswitch/normal.hpp"
#include "sqrt_rule.hpp"

namespace jobswitch::strategy {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string region_name(Region r) {
    switch (r) {
        case Region::WR0: return "WR0";
        case Region::SR0: return "SR0";
        case Region::WR1: return "WR1";
        case Region::SR1: return "SR1";
    }
    return "?";
}

StrategySurface::StrategySurface(const Model& m, BoundaryPair b, StrategyOptions opt)
    : m_(m), b_(std::move(b)), opt_(opt) {
    const double T = m_.params().T;
    if (!b_.lambda0.covers(0.0, T) || !b_.lambda1.covers(0.0, T))
        throw ValidationError("strategy: boundary curves must cover [0, T]");
    if (opt_.v_panels < 1 || opt_.geometric_panels < 0 || opt_.max_bisection < 1)
        throw ValidationError("strategy: invalid quadrature or bisection options");
    const detail::SqrtRule rule(opt_.v_panels, opt_.geometric_panels);
    gl_x_ = rule.x;
    gl_w_ = rule.w;
}

StrategySurface::Derivs StrategySurface::integral_derivs(int j, double t, double lambda) const {
    const auto& p = m_.params();
    const double th = m_.derived().theta;
    const double end = j == 0 ? p.T - m_.derived().T1 : p.T;
    Derivs out;
    if (t >= end) return out;
    const BoundaryCurve& curve = j == 0 ? b_.lambda0 : b_.lambda1;
    const double c = j == 0 ? m_.delta_eps() - p.r * p.zeta0 : m_.delta_eps() + p.r * p.zeta1;
    const double dL = m_.delta_L();
    const double drift_p = p.beta - p.r + 0.5 * th * th;
    const double lnlam = std::log(lambda);
    const double vmax = std::sqrt(end - t);
    std::size_t hint = 0;
    for (std::size_t q = 0; q < gl_x_.size(); ++q) {
        const double v = vmax * gl_x_[q];
        const double wq = vmax * gl_w_[q];
        const double u = v * v;
        const double boundary = curve.at(std::min(t + u, end), hint);
        const double er = std::exp(-p.r * u);
        const double eb = std::exp(-p.beta * u);
        double N;  // N(d+) for job 0, N(-d+) for job 1
        double dp, dm, np, nm;
        if (std::isinf(boundary) || boundary == 0.0) {
            const bool above = boundary == 0.0;  // lambda / boundary infinite
            N = j == 0 ? (above ? 1.0 : 0.0) : (above ? 0.0 : 1.0);
            np = nm = dp = dm = 0.0;
        } else {
            dp = (lnlam - std::log(boundary) + drift_p * u) / (th * v);
            dm = dp - th * v;
            N = norm_cdf(j == 0 ? dp : -dp);
            np = norm_pdf(dp);
            nm = norm_pdf(dm);
        }
        const double sgn = j == 0 ? 1.0 : -1.0;
        // ds = 2 v dv removes the 1/sqrt(s - t) singularity.
        out.d1 += wq * (2.0 * v * sgn * c * er * N + 2.0 * c * er * np / th -
                        2.0 * dL * eb * nm / (lambda * th));
        out.d2 += wq * 2.0 / (th * th * v) * (-c * er * np * dm + dL * eb * nm * dp / lambda);
    }
    return out;
}

bool StrategySurface::own_side(int j, double t, double lambda) const {
    // Boundary points belong to the waiting side for surface evaluation.
    return j == 0 ? lambda <= b_.lambda0(t) : lambda >= b_.lambda1(t);
}

double StrategySurface::q_hat(int j, double t, double lambda) const {
    const double q = j == 0 ? integral::q0_ie(m_, t, lambda, b_) : integral::q1_ie(m_, t, lambda, b_);
    return m_.q_r(t, lambda) + q;
}

double StrategySurface::wealth(int j, double t, double lambda) const {
    if (!(lambda > 0.0)) throw std::domain_error("wealth: lambda must be positive");
    const auto& p = m_.params();
    if (!own_side(j, t, lambda))
        return wealth(1 - j, t, lambda) + (j == 0 ? p.zeta0 : p.zeta1);
    const double eps = j == 0 ? p.eps0 : p.eps1;
    return -m_.q_r_dlambda(t, lambda) - eps * annuity_factor(p.r, p.T - t) -
           integral_derivs(j, t, lambda).d1;
}

double StrategySurface::investment(int j, double t, double lambda) const {
    if (!(lambda > 0.0)) throw std::domain_error("investment: lambda must be positive");
    if (!own_side(j, t, lambda)) return investment(1 - j, t, lambda);
    const auto& p = m_.params();
    const double th = m_.derived().theta;
    return th / p.sigma * (lambda * m_.q_r_dlambda2(t, lambda) + integral_derivs(j, t, lambda).d2);
}

double StrategySurface::w0(double t) const {
    const double l0 = b_.lambda0(t);
    if (std::isinf(l0)) return -kInf;
    return wealth(0, t, l0);
}

double StrategySurface::w1(double t) const {
    const double l1 = b_.lambda1(t);
    if (!(l1 > 0.0)) return kInf;
    return wealth(1, t, l1);
}

double StrategySurface::wealth_lower_bound(int j, double t) const {
    const auto& p = m_.params();
    const double a = annuity_factor(p.r, p.T - t);
    if (j == 1) return -p.eps1 * a;
    return t < p.T - m_.derived().T1 ? -p.eps1 * a + p.zeta0 : -p.eps0 * a;
}

double StrategySurface::lambda_from_wealth(int j, double t, double w) const {
    const double bound = wealth_lower_bound(j, t);
    if (!(w > bound)) {
        std::ostringstream os;
        os << "wealth " << w << " is not above the admissible bound " << bound << " for job " << j
           << " at t = " << t;
        throw std::domain_error(os.str());
    }
    double lo = opt_.bracket_lo, hi = opt_.bracket_hi;
    // wealth decreases in lambda: small lambda gives large wealth.
    for (int i = 0; wealth(j, t, lo) < w; ++i) {
        if (i > 300) throw NumericalError("lambda_from_wealth: lower bracket expansion failed");
        lo /= 10.0;
    }
    for (int i = 0; wealth(j, t, hi) > w; ++i) {
        if (i > 300) throw NumericalError("lambda_from_wealth: upper bracket expansion failed");
        hi *= 10.0;
    }
    const double tol = opt_.wealth_tol * (1.0 + std::abs(w));
    double a = std::log(lo), b = std::log(hi);
    double best = 0.5 * (a + b), best_err = kInf;
    for (int it = 0; it < opt_.max_bisection; ++it) {
        const double mid = 0.5 * (a + b);
        const double err = wealth(j, t, std::exp(mid)) - w;
        if (std::abs(err) < best_err) {
            best = mid;
            best_err = std::abs(err);
        }
        if (best_err <= tol || mid == a || mid == b) break;
        (err > 0.0 ? a : b) = mid;
    }
    return std::exp(best);
}

Region StrategySurface::classify_lambda(int j, double t, double lambda) const {
    if (j == 0) return lambda >= b_.lambda0(t) ? Region::SR0 : Region::WR0;
    return lambda <= b_.lambda1(t) ? Region::SR1 : Region::WR1;
}

Region StrategySurface::classify_wealth(int j, double t, double w) const {
    if (j == 0) return w <= w0(t) ? Region::SR0 : Region::WR0;
    return w >= w1(t) ? Region::SR1 : Region::WR1;
}

Policy StrategySurface::feedback(int j, double t, double w) const {
    Policy out;
    out.lambda = lambda_from_wealth(j, t, w);
    out.consumption = m_.inverse_marginal_1(out.lambda);
    out.position = investment(j, t, out.lambda);
    const Region r = classify_wealth(j, t, w);
    out.switch_now = r == Region::SR0 || r == Region::SR1;
    out.job_after = out.switch_now ? 1 - j : j;
    out.wealth_after = out.switch_now ? w - (j == 0 ? m_.params().zeta0 : m_.params().zeta1) : w;
    return out;
}

PolicyTable::PolicyTable(const Model& m, const obstacle::QSurfaces& q, BoundaryPair b)
    : m_(m), g_(q.grid), b_(std::move(b)) {
    const std::size_t nx = q.q0.cols();
    if (nx < 5) throw ValidationError("policy table: grid too small");
    rows_ = q.q0.rows();
    cols_ = nx - 2;
    const double dx = g_.dx();
    const double scale = m_.derived().theta / m_.params().sigma;
    for (int j = 0; j < 2; ++j) {
        const Surface& Q = j == 0 ? q.q0 : q.q1;
        w_[j].assign(rows_ * cols_, 0.0);
        pi_[j].assign(rows_ * cols_, 0.0);
        for (std::size_t k = 0; k < rows_; ++k) {
            const double t = time_of(k);
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                const double lam = std::exp(g_.x(static_cast<int>(i)));
                const double qx = (Q(k, i + 1) - Q(k, i - 1)) / (2.0 * dx);
                const double qxx = (Q(k, i + 1) - 2.0 * Q(k, i) + Q(k, i - 1)) / (dx * dx);
                const std::size_t at = k * cols_ + (i - 1);
                w_[j][at] = -m_.q_r_dlambda(t, lam) - qx / lam;
                pi_[j][at] = scale * (lam * m_.q_r_dlambda2(t, lam) + (qxx - qx) / lam);
            }
        }
    }
}

double PolicyTable::time_of(std::size_t row) const {
    return m_.params().T - g_.tau(static_cast<int>(row));
}

std::size_t PolicyTable::row_for(double t) const {
    const double k = std::round((m_.params().T - t) / g_.dt());
    return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(g_.nt)));
}

PolicyTable::Lookup PolicyTable::lookup(int j, std::size_t row, double w, std::size_t& hint) const {
    const double* W = w_[j].data() + row * cols_;
    const double* P = pi_[j].data() + row * cols_;
    auto col = [&](std::size_t i) { return W[i]; };
    const std::size_t n = cols_;
    Lookup out;
    auto finish = [&](double fi, std::size_t i0) {
        out.log_lambda = g_.x(1) + fi * g_.dx();
        out.lambda = std::exp(out.log_lambda);
        const double f = fi - static_cast<double>(i0);
        out.position = i0 + 1 < n ? P[i0] + f * (P[i0 + 1] - P[i0]) : P[i0];
        hint = i0;
        return out;
    };
    if (w >= col(0)) {
        out.clamped = w > col(0);
        return finish(0.0, 0);
    }
    if (w <= col(n - 1)) {
        out.clamped = w < col(n - 1);
        return finish(static_cast<double>(n - 1), n - 1);
    }
    // Bracket lo < hi with col(lo) >= w > col(hi) by galloping from the hint; the column decreases.
    std::size_t lo = std::min(hint, n - 2), hi;
    std::size_t step = 1;
    if (col(lo) >= w) {
        hi = lo + 1;
        while (col(hi) >= w) {
            lo = hi;
            hi = std::min(n - 1, hi + step);
            step *= 2;
        }
    } else {
        hi = lo;
        lo = hi >= step ? hi - step : 0;
        while (col(lo) < w) {
            hi = lo;
            step *= 2;
            lo = lo >= step ? lo - step : 0;
        }
    }
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (col(mid) >= w ? lo : hi) = mid;
    }
    const double f = (col(lo) - w) / (col(lo) - col(hi));
    return finish(static_cast<double>(lo) + f, lo);
}

double PolicyTable::wealth(int j, std::size_t row, double lambda) const {
    const double* W = w_[j].data() + row * cols_;
    const double fi = (std::log(lambda) - g_.x(1)) / g_.dx();
    const double c = std::clamp(fi, 0.0, static_cast<double>(cols_ - 1));
    const std::size_t i = std::min(static_cast<std::size_t>(c), cols_ - 2);
    const double f = c - static_cast<double>(i);
    return W[i] + f * (W[i + 1] - W[i]);
}

}  // namespace jobswitch::strategy
