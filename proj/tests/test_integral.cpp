#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "jobswitch/errors.hpp"
#include "jobswitch/integral.hpp"
#include "jobswitch/normal.hpp"

using namespace jobswitch;
using namespace jobswitch::integral;
using doctest::Approx;

namespace {

const Model& model() {
    static const Model m{ModelParams{}};
    return m;
}

const IeSolution& solution() {
    static const IeSolution s = solve_boundaries_ie(model());
    return s;
}

double late_q0(double t, double lambda) {
    const auto& p = model().params();
    return p.eps0 * annuity_factor(p.r, p.T - t) * lambda - p.L0 * annuity_factor(p.beta, p.T - t);
}

}  // namespace

TEST_CASE("d_pm frozen values and limits") {
    // (beta - r + theta^2/2) / theta at u = 1, ratio = 1.
    CHECK(d_pm(model(), +1, 1.0, 1.0) == Approx(0.055 / 0.3).epsilon(1e-14));
    CHECK(d_pm(model(), +1, 1.0, 1.0) == Approx(0.183333).epsilon(2e-6));
    CHECK(d_pm(model(), -1, 1.0, 1.0) == Approx(0.055 / 0.3 - 0.3).epsilon(1e-14));
    CHECK(cdf_d(model(), +1, 0.0, 2.0) == 1.0);
    CHECK(cdf_d(model(), +1, 0.0, 0.5) == 0.0);
    CHECK(cdf_d(model(), +1, 0.0, 1.0) == 0.5);
    CHECK(cdf_d(model(), -1, 2.0, 1.3) == Approx(norm_cdf(d_pm(model(), -1, 2.0, 1.3))).epsilon(1e-15));
}

TEST_CASE("solver configuration validation") {
    IeSolverConfig c;
    CHECK_NOTHROW(validate_config(c, model()));
    c.nt_ie = 10;
    CHECK_THROWS_AS(validate_config(c, model()), ValidationError);
    c = {};
    c.endpoint_offset = 0.0;
    CHECK_THROWS_AS(validate_config(c, model()), ValidationError);
    c = {};
    c.lambda_cap = 10.0;
    CHECK_THROWS_AS(validate_config(c, model()), ValidationError);
    c = {};
    c.newton_tol = -1.0;
    CHECK_THROWS_AS(validate_config(c, model()), ValidationError);
}

TEST_CASE("integral-equation boundaries") {
    const auto& s = solution();
    const auto& d = model().derived();
    const double S = 30.0 - d.T1;
    CHECK(s.stats.max_equation_residual <= 1e-9);
    CHECK(s.stats.capped_nodes == 0);
    const auto& l0 = s.boundaries.lambda0;
    const auto& l1 = s.boundaries.lambda1;
    CHECK(l1.covers(0.0, 30.0));
    for (std::size_t k = 0; k < l1.size(); ++k) {
        const double t = l1.times()[k];
        CHECK(l1.values()[k] <= std::exp(d.X1) * (1 + 1e-12));
        if (t >= S) CHECK(std::isinf(l0.values()[k]));
        else CHECK(l0.values()[k] >= std::exp(d.X2) * (1 - 1e-12));
    }
    // Too close to T the cost zeta1 cannot be recouped: Lambda1 falls to 0. Lambda0 blows up at T - T1.
    CHECK(l1(30.0) == 0.0);
    CHECK(l1(29.0) < l1(20.0));
    CHECK(l0(S - 1e-9) > 1e8);
}

TEST_CASE("integral-equation boundaries converge under refinement") {
    IeSolverConfig c;
    c.nt_ie = 500;
    const auto coarse = solve_boundaries_ie(model(), c);
    const auto& fine = solution();
    double d1 = 0.0, d0 = 0.0;
    for (double t = 0.0; t <= 29.0; t += 0.25) {
        d1 = std::max(d1, std::abs(std::log(coarse.boundaries.lambda1(t) / fine.boundaries.lambda1(t))));
        if (t < 25.0) d0 = std::max(d0, std::abs(std::log(coarse.boundaries.lambda0(t) / fine.boundaries.lambda0(t))));
    }
    CHECK(d1 < 2e-3);
    CHECK(d0 < 5e-3);
}

TEST_CASE("Q0 representation reproduces the closed form after T - T1") {
    const auto& b = solution().boundaries;
    const double S = 30.0 - model().derived().T1;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ut(S, 30.0), ul(-3.0, 3.0);
    for (int k = 0; k < 20; ++k) {
        const double t = ut(rng), lam = std::exp(ul(rng));
        CHECK(std::abs(q0_ie(model(), t, lam, b) - late_q0(t, lam)) <= 1e-6);
    }
    // Frozen from the closed form in extended precision.
    CHECK(q0_ie(model(), S, 1.0, b) == Approx(-0.8112245).epsilon(2e-7));
}

TEST_CASE("contact identities and value matching") {
    const auto& b = solution().boundaries;
    const auto& p = model().params();
    for (double t : {1.0, 10.0, 20.0}) {
        const double l1 = b.lambda1(t), l0 = b.lambda0(t);
        // Below Lambda1, Q1 = Q0 - zeta1 lambda.
        CHECK(q1_ie(model(), t, 0.5 * l1, b) ==
              Approx(q0_ie(model(), t, 0.5 * l1, b) - p.zeta1 * 0.5 * l1).epsilon(1e-12));
        // Above Lambda0, Q0 = Q1 - zeta0 lambda.
        CHECK(q0_ie(model(), t, 2 * l0, b) ==
              Approx(q1_ie(model(), t, 2 * l0, b) - p.zeta0 * 2 * l0).epsilon(1e-12));
        // Continuity across each boundary. Off the solver nodes the two representations
        // differ by the solver's discretization error.
        CHECK(q1_ie(model(), t, l1 * (1 + 1e-7), b) == Approx(q1_ie(model(), t, l1 * (1 - 1e-7), b)).epsilon(1e-3));
        CHECK(q0_ie(model(), t, l0 * (1 + 1e-7), b) == Approx(q0_ie(model(), t, l0 * (1 - 1e-7), b)).epsilon(1e-3));
    }
    CHECK_THROWS_AS(q0_ie(model(), -1.0, 1.0, b), ValidationError);
}

TEST_CASE("switching values are bounded by the never-switch and upper-obstacle values") {
    const auto& b = solution().boundaries;
    const auto& p = model().params();
    for (double t : {0.0, 8.0, 16.0, 24.0})
        for (double lam : {0.2, 0.7, 1.0, 3.0}) {
            const double a = annuity_factor(p.r, p.T - t), bb = annuity_factor(p.beta, p.T - t);
            CHECK(q0_ie(model(), t, lam, b) >= p.eps0 * a * lam - p.L0 * bb - 1e-9);
            CHECK(q1_ie(model(), t, lam, b) >= p.eps1 * a * lam - p.L1 * bb - 1e-9);
            // Difference stays between the obstacles.
            const double u = (q1_ie(model(), t, lam, b) - q0_ie(model(), t, lam, b)) / lam;
            CHECK(u >= -p.zeta1 - 1e-9);
            CHECK(u <= p.zeta0 + 1e-9);
        }
}
