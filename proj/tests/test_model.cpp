#include <doctest.h>

#include <cmath>
#include <string>

#include "jobswitch/errors.hpp"
#include "jobswitch/model.hpp"

using namespace jobswitch;
using doctest::Approx;

namespace {

// Bisection on the recoup condition (eps1 - eps0) (1 - e^{-r s}) / r = zeta0.
double recoup_horizon(const ModelParams& p) {
    double lo = 0.0, hi = p.T;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double gain = (p.eps1 - p.eps0) * (1.0 - std::exp(-p.r * mid)) / p.r;
        (gain < p.zeta0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Golden-section maximum of u(c) - lambda c over log c.
double conjugate_by_search(const Model& m, double lambda) {
    auto f = [&](double lc) { return m.utility(std::exp(lc)) - lambda * std::exp(lc); };
    double a = -20, b = 20;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int i = 0; i < 200; ++i) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (f(c) > f(d)) b = d;
        else a = c;
    }
    return f(0.5 * (a + b));
}

}  // namespace

TEST_CASE("derived constants on the reference parameters") {
    const ModelParams p;
    const auto d = validate(p);
    CHECK(d.theta == Approx(0.3).epsilon(1e-15));
    CHECK(d.T1 == Approx(recoup_horizon(p)).epsilon(1e-12));
    CHECK(d.T1 == Approx(4.3802622658).epsilon(1e-10));
    CHECK(d.X1 == Approx(std::log(0.5 / 0.71)).epsilon(1e-14));
    CHECK(d.X2 == Approx(std::log(0.5 / 0.67)).epsilon(1e-14));
    CHECK(std::abs(d.X1 - (-0.35066)) < 1e-5);
    CHECK(std::abs(d.X2 - (-0.29267)) < 1e-5);
    // r + (beta - r)/gamma + (gamma - 1)/gamma^2 theta^2 / 2 = 0.01 + 0.01/3 + 0.01
    CHECK(d.K == Approx(0.07 / 3.0).epsilon(1e-14));
    const Model m(p);
    CHECK(m.merton_coef(0.0) == Approx(29.5113).epsilon(2e-6));
    CHECK(d.bequest_coef == Approx((1 - std::exp(-20 * 0.07 / 3)) / (0.07 / 3)).epsilon(1e-13));
}

TEST_CASE("annuity factor is continuous at zero rate") {
    CHECK(annuity_factor(0.0, 3.0) == 3.0);
    CHECK(annuity_factor(1e-14, 3.0) == Approx(3.0).epsilon(1e-12));
    CHECK(annuity_factor(0.01, 30.0) == Approx((1 - std::exp(-0.3)) / 0.01).epsilon(1e-14));
}

TEST_CASE("parameter validation names the violated condition") {
    auto expect_msg = [](ModelParams p, const std::string& needle) {
        try {
            validate(p);
            FAIL("expected ValidationError for " << needle);
        } catch (const ValidationError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, std::string(e.what()));
        }
    };
    ModelParams p;
    p.gamma = 1.0;
    expect_msg(p, "gamma != 1");
    p = {};
    p.zeta0 = 80.0;
    expect_msg(p, "eps1 - eps0 - r*zeta0");
    p = {};
    p.zeta0 = 25.0;
    expect_msg(p, "zeta0 <");
    p = {};
    p.T_death = p.T;
    expect_msg(p, "T_death > T");
    p = {};
    p.L1 = 0.4;
    expect_msg(p, "L0 < L1");
    p = {};
    p.sigma = NAN;
    expect_msg(p, "finite");
}

TEST_CASE("conjugate utilities match a direct maximisation") {
    const Model m{ModelParams{}};
    for (double lambda : {0.1, 0.725, 1.0, 7.5}) {
        CHECK(m.conjugate_u1(lambda) == Approx(conjugate_by_search(m, lambda)).epsilon(1e-9));
        // u'(I(y)) = y
        const double c = m.inverse_marginal_1(lambda);
        CHECK(std::pow(c, -m.params().gamma) == Approx(lambda).epsilon(1e-13));
    }
    // Bequest: U2(w) = A^gamma u(w), so I2 = A I1 and the conjugate scales by A.
    const double A = m.derived().bequest_coef;
    CHECK(m.conjugate_u2(0.5) == Approx(A * m.conjugate_u1(0.5)).epsilon(1e-14));
    const double w = m.inverse_marginal_2(0.5);
    const double h = 1e-6 * w;
    const double du = (m.bequest_utility(w + h) - m.bequest_utility(w - h)) / (2 * h);
    CHECK(du == Approx(0.5).epsilon(1e-7));
    CHECK_THROWS_AS(m.utility(0.0), std::domain_error);
    CHECK_THROWS_AS(m.conjugate_u1(-1.0), std::domain_error);
}

TEST_CASE("unconstrained dual value against quadrature of its expectation") {
    const Model m{ModelParams{}};
    auto u1 = [&](double, double y) { return m.conjugate_u1(y); };
    auto u2 = [&](double, double y) { return m.conjugate_u2(y); };
    for (double t : {0.0, 12.0, 29.0}) {
        for (double lambda : {0.2, 1.0, 4.0}) {
            const double quad = q_r_quadrature(m, t, lambda, u1, u2);
            CHECK(m.q_r(t, lambda) == Approx(quad).epsilon(1e-7));
        }
    }
}

TEST_CASE("unconstrained dual derivatives against finite differences") {
    const Model m{ModelParams{}};
    for (double lambda : {0.3, 1.0, 3.0}) {
        const double h = 1e-4 * lambda;
        const double d1 = (m.q_r(5, lambda + h) - m.q_r(5, lambda - h)) / (2 * h);
        const double d2 = (m.q_r(5, lambda + h) - 2 * m.q_r(5, lambda) + m.q_r(5, lambda - h)) / (h * h);
        CHECK(m.q_r_dlambda(5, lambda) == Approx(d1).epsilon(1e-8));
        CHECK(m.q_r_dlambda2(5, lambda) == Approx(d2).epsilon(1e-5));
    }
}

TEST_CASE("Dirichlet data") {
    const Model m{ModelParams{}};
    const double T1 = m.derived().T1;
    // The upper datum reaches zeta0 exactly at T1 and stays there.
    CHECK(m.varphi_plus(T1 * (1 - 1e-12)) == Approx(3.0).epsilon(1e-9));
    CHECK(m.varphi_plus(T1 + 1) == 3.0);
    CHECK(m.varphi_plus(0.0) == 0.0);
    // Lower datum: linear descent to -zeta1 then flat.
    const double kink = std::exp(-12.0);
    CHECK(m.varphi_minus_n(0.5 * kink, 12.0) == Approx(-0.5).epsilon(1e-12));
    CHECK(m.varphi_minus_n(1.0, 12.0) == -1.0);
}
