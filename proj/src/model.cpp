#include "jobswitch/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "jobswitch/errors.hpp"

namespace jobswitch {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError("parameter check failed: " + what);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace

double annuity_factor(double k, double s) {
    if (std::abs(k * s) < 1e-12) return s;
    return -std::expm1(-k * s) / k;
}

DerivedConstants validate(const ModelParams& p) {
    const double fields[] = {p.beta, p.r,     p.mu, p.sigma, p.eps0,  p.eps1,   p.L0,
                             p.L1,   p.zeta0, p.zeta1, p.T,  p.gamma, p.T_death};
    for (double f : fields) require(std::isfinite(f), "all fields must be finite");
    require(p.sigma > 0.0, "sigma > 0");
    require(p.r > 0.0, "r > 0");
    require(p.gamma > 0.0, "gamma > 0");
    require(p.gamma != 1.0, "gamma != 1");
    require(p.T > 0.0, "T > 0");
    require(p.T_death > p.T, "T_death > T");
    require(p.L0 > 0.0, "L0 > 0");
    require(p.L0 < p.L1, "L0 < L1");
    require(p.eps0 >= 0.0, "eps0 >= 0");
    require(p.eps0 < p.eps1, "eps0 < eps1");
    require(p.zeta1 > 0.0, "zeta1 > 0");
    require(p.zeta0 > 0.0, "zeta0 > 0");
    const double de = p.eps1 - p.eps0;
    require(de - p.r * p.zeta0 > 0.0, "eps1 - eps0 - r*zeta0 > 0 (X2 undefined otherwise)");
    const double zeta0_bound = -std::expm1(-p.r * p.T) * de / p.r;
    require(p.zeta0 < zeta0_bound,
            "zeta0 < (1 - exp(-r T)) (eps1 - eps0) / r = " + fmt(zeta0_bound));

    DerivedConstants d;
    d.theta = (p.mu - p.r) / p.sigma;
    d.T1 = -std::log1p(-p.r * p.zeta0 / de) / p.r;
    d.X1 = std::log((p.L1 - p.L0) / (de + p.r * p.zeta1));
    d.X2 = std::log((p.L1 - p.L0) / (de - p.r * p.zeta0));
    d.K = p.r + (p.beta - p.r) / p.gamma +
          ((p.gamma - 1.0) / (p.gamma * p.gamma)) * (d.theta * d.theta / 2.0);
    d.bequest_coef = annuity_factor(d.K, p.T_death - p.T);
    require(d.T1 > 0.0, "T1 > 0");
    require(d.T1 < p.T, "T1 < T (T1 = " + fmt(d.T1) + ")");
    require(d.X1 < d.X2, "X1 < X2");
    require(d.bequest_coef > 0.0, "bequest coefficient > 0");
    return d;
}

Model::Model(const ModelParams& p) : p_(p), d_(validate(p)) {}

static void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw std::domain_error(std::string(name) + " must be positive");
}

double Model::utility(double c) const {
    require_positive(c, "consumption");
    return std::pow(c, 1.0 - p_.gamma) / (1.0 - p_.gamma);
}

double Model::conjugate_u1(double lambda) const {
    require_positive(lambda, "lambda");
    const double g = p_.gamma;
    return g / (1.0 - g) * std::pow(lambda, (g - 1.0) / g);
}

double Model::inverse_marginal_1(double y) const {
    require_positive(y, "y");
    return std::pow(y, -1.0 / p_.gamma);
}

double Model::inverse_marginal_2(double y) const {
    require_positive(y, "y");
    return d_.bequest_coef * std::pow(y, -1.0 / p_.gamma);
}

double Model::conjugate_u2(double lambda) const {
    return d_.bequest_coef * conjugate_u1(lambda);
}

double Model::bequest_utility(double w) const {
    require_positive(w, "terminal wealth");
    const double g = p_.gamma;
    return std::pow(d_.bequest_coef, g) * std::pow(w, 1.0 - g) / (1.0 - g);
}

double Model::merton_coef(double t) const { return annuity_factor(d_.K, p_.T_death - t); }

double Model::q_r(double t, double lambda) const { return merton_coef(t) * conjugate_u1(lambda); }

double Model::q_r_dlambda(double t, double lambda) const {
    require_positive(lambda, "lambda");
    return -merton_coef(t) * std::pow(lambda, -1.0 / p_.gamma);
}

double Model::q_r_dlambda2(double t, double lambda) const {
    require_positive(lambda, "lambda");
    return merton_coef(t) / p_.gamma * std::pow(lambda, -1.0 / p_.gamma - 1.0);
}

double Model::varphi_plus(double tau) const {
    if (tau > d_.T1) return p_.zeta0;
    return delta_eps() * annuity_factor(p_.r, tau);
}

double Model::varphi_minus_n(double tau, double n) const {
    const double kink = p_.zeta1 * std::exp(-n) / p_.L1;
    if (tau <= kink) return -p_.L1 * std::exp(n) * tau;
    return -p_.zeta1;
}

namespace {

// Composite Simpson with panel doubling until two successive levels agree.
template <class F>
double simpson_adaptive(F&& f, double a, double b, const QuadratureOptions& opt, const char* what) {
    if (b <= a) return 0.0;
    int n = 1 << opt.min_level;
    auto eval = [&](int panels) {
        const double h = (b - a) / panels;
        double s = f(a) + f(b);
        for (int i = 1; i < panels; ++i) s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
        return s * h / 3.0;
    };
    double prev = eval(n);
    for (int level = opt.min_level + 1; level <= opt.max_level; ++level) {
        n *= 2;
        const double cur = eval(n);
        if (cur == prev || std::abs(cur - prev) <= opt.rel_tol * std::abs(cur)) return cur;
        prev = cur;
    }
    throw NumericalError(std::string("quadrature did not converge: ") + what);
}

}  // namespace

double q_r_quadrature(const Model& m, double t, double lambda, const ConjugateFn& u1_conj,
                      const ConjugateFn& u2_conj, const QuadratureOptions& opt) {
    if (!(lambda > 0.0)) throw std::domain_error("lambda must be positive");
    const auto& p = m.params();
    const double theta = m.derived().theta;
    const double drift = p.beta - p.r - 0.5 * theta * theta;
    const double horizon = p.T - t;
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

    // E[g(Y_s)] with ln Y_s ~ N(ln lambda + drift s, theta^2 s), in standard-normal units.
    auto expect = [&](double s, const ConjugateFn& g, double time) {
        if (s <= 0.0) return g(time, lambda);
        const double sd = theta * std::sqrt(s);
        const double mean = std::log(lambda) + drift * s;
        auto integrand = [&](double z) {
            return g(time, std::exp(mean + sd * z)) * std::exp(-0.5 * z * z) * inv_sqrt_2pi;
        };
        return simpson_adaptive(integrand, -opt.sd_cutoff, opt.sd_cutoff, opt, "inner lognormal");
    };

    auto running = [&](double s) { return std::exp(-p.beta * s) * expect(s, u1_conj, t + s); };
    const double run = simpson_adaptive(running, 0.0, horizon, opt, "outer time");
    const double term = std::exp(-p.beta * horizon) * expect(horizon, u2_conj, p.T);
    return run + term;
}

}  // namespace jobswitch
