#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "jobswitch/errors.hpp"
#include "jobswitch/integral.hpp"
#include "jobswitch/obstacle.hpp"
#include "jobswitch/simulate.hpp"
#include "jobswitch/strategy.hpp"

using namespace jobswitch;
using namespace jobswitch::strategy;
using doctest::Approx;

namespace {

const Model& model() {
    static const Model m{ModelParams{}};
    return m;
}

const StrategySurface& surface() {
    static const StrategySurface s(model(), integral::solve_boundaries_ie(model()).boundaries);
    return s;
}

struct Pde {
    obstacle::Grid g{12.0, 1001, 1500, 30.0};
    BoundaryPair lb;
    obstacle::QSurfaces q;
    Pde() {
        const auto sol = obstacle::solve_obstacle(model(), g);
        lb = obstacle::to_lambda_boundaries(sol.boundaries, g.T);
        q = obstacle::recover_q01(model(), g, lb.lambda0, lb.lambda1);
    }
};

const Pde& pde() {
    static const Pde p;
    return p;
}

// lambda* minimises q_hat + lambda w: compare against nearby lambdas.
bool is_dual_minimiser(int j, double t, double w, double lam) {
    const auto& s = surface();
    auto f = [&](double l) { return s.q_hat(j, t, l) + l * w; };
    const double f0 = f(lam);
    for (double k : {0.8, 0.95, 1.05, 1.25})
        if (f(k * lam) < f0 - 1e-9 * (1 + std::abs(f0))) return false;
    return true;
}

}  // namespace

TEST_CASE("wealth is the negative lambda-derivative of the total dual value") {
    const auto& s = surface();
    for (int j = 0; j < 2; ++j)
        for (double t : {0.0, 7.0, 18.0, 27.0})
            for (double lam : {0.05, 0.3, 0.8, 2.0, 6.0}) {
                if (s.classify_lambda(j, t, lam) != (j == 0 ? Region::WR0 : Region::WR1)) continue;
                const double h = 1e-4 * lam;
                const double fd = -(s.q_hat(j, t, lam + h) - s.q_hat(j, t, lam - h)) / (2 * h);
                CHECK_MESSAGE(s.wealth(j, t, lam) == Approx(fd).epsilon(1e-6), "j=" << j << " t=" << t << " lam=" << lam);
                const double w1 = s.wealth(j, t, lam + h), w0 = s.wealth(j, t, lam - h);
                const double pos = model().derived().theta / model().params().sigma * lam * -(w1 - w0) / (2 * h);
                CHECK_MESSAGE(s.investment(j, t, lam) == Approx(pos).epsilon(1e-5), "j=" << j << " t=" << t << " lam=" << lam);
            }
}

TEST_CASE("wealth is strictly decreasing in lambda") {
    const auto& s = surface();
    for (int j = 0; j < 2; ++j)
        for (double t : {0.0, 12.0, 26.0, 29.5}) {
            double prev = INFINITY;
            for (double x = -6; x <= 6; x += 0.05) {
                const double w = s.wealth(j, t, std::exp(x));
                CHECK(w < prev);
                prev = w;
            }
            CHECK(prev > s.wealth_lower_bound(j, t));
        }
}

TEST_CASE("lambda_from_wealth inverts wealth and solves the dual minimisation") {
    const auto& s = surface();
    for (int j = 0; j < 2; ++j)
        for (double t : {0.0, 15.0, 28.0})
            for (double w : {0.5, 5.0, 20.0, 60.0}) {
                if (!(w > s.wealth_lower_bound(j, t))) continue;
                const double lam = s.lambda_from_wealth(j, t, w);
                CHECK(s.wealth(j, t, lam) == Approx(w).epsilon(1e-8));
                CHECK(is_dual_minimiser(j, t, w, lam));
            }
    CHECK(s.lambda_from_wealth(0, 0.0, 5.0) == Approx(1.34928456).epsilon(1e-7));
    CHECK_THROWS_AS(s.lambda_from_wealth(1, 0.0, s.wealth_lower_bound(1, 0.0) - 1.0), std::domain_error);
}

TEST_CASE("wealth boundaries and regions") {
    const auto& s = surface();
    const double S = 30.0 - model().derived().T1;
    CHECK(s.w0(0.0) == Approx(5.079).epsilon(2e-4));
    CHECK(s.w1(0.0) == Approx(32.26).epsilon(2e-4));
    CHECK(std::isinf(s.w0(S + 1.0)));
    CHECK(s.w1(29.9) < s.w1(29.99));
    CHECK(s.w1(29.99) < s.w1(29.999));
    CHECK(s.w1(29.999) > 100.0);
    CHECK(std::abs(s.w0(S - 1e-10) - (-0.3 * annuity_factor(0.01, model().derived().T1))) < 1e-2);
    // (5, job 0) lies above w0(0) = 5.079 in lambda, i.e. below in wealth: switch up now.
    CHECK(s.classify_wealth(0, 0.0, 5.0) == Region::SR0);
    CHECK(s.classify_wealth(0, 0.0, 6.0) == Region::WR0);
    CHECK(s.classify_wealth(1, 0.0, 40.0) == Region::SR1);
    CHECK(s.classify_wealth(1, 0.0, 20.0) == Region::WR1);
    const auto pol = s.feedback(0, 0.0, 5.0);
    CHECK(pol.switch_now);
    CHECK(pol.job_after == 1);
    CHECK(pol.wealth_after == Approx(5.0 - model().params().zeta0));
    CHECK(pol.consumption == Approx(model().inverse_marginal_1(pol.lambda)).epsilon(1e-12));
    CHECK(region_name(Region::WR1) == "WR1");
}

TEST_CASE("integral surfaces agree with the finite-difference surfaces") {
    const auto& s = surface();
    const auto& p = pde();
    const auto& m = model();
    const double k = m.derived().theta / m.params().sigma;
    double ew = 0, epi = 0;
    for (int j = 0; j < 2; ++j)
        for (double t : {2.0, 10.0, 20.0})
            for (double lam : {0.2, 0.6, 1.0, 1.5}) {
                if (s.classify_lambda(j, t, lam) != (j == 0 ? Region::WR0 : Region::WR1)) continue;
                const double w_pde = -m.q_r_dlambda(t, lam) - p.q.dlambda(j, t, lam);
                const double pi_pde = k * lam * (m.q_r_dlambda2(t, lam) + p.q.dlambda2(j, t, lam));
                ew = std::max(ew, std::abs(s.wealth(j, t, lam) - w_pde) / std::abs(w_pde));
                epi = std::max(epi, std::abs(s.investment(j, t, lam) - pi_pde) / std::abs(pi_pde));
            }
    CHECK(ew < 2e-3);
    CHECK(epi < 3e-2);
}

TEST_CASE("policy table lookups invert the tabulated wealth") {
    const auto& p = pde();
    const PolicyTable tab(model(), p.q, p.lb);
    for (double t : {0.0, 10.0, 25.0}) {
        const auto row = tab.row_for(t);
        CHECK(std::abs(tab.time_of(row) - t) <= 0.5 * p.g.dt() + 1e-12);
        for (int j = 0; j < 2; ++j)
            for (double lam : {0.3, 0.7, 1.2}) {
                const double w = tab.wealth(j, row, lam);
                const auto l = tab.lookup(j, row, w);
                CHECK_FALSE(l.clamped);
                CHECK(l.lambda == Approx(lam).epsilon(1e-3));
                CHECK(std::exp(l.log_lambda) == Approx(l.lambda).epsilon(1e-12));
            }
    }
    CHECK(tab.lookup(0, 0, 1e9).clamped);
}

TEST_CASE("closed-loop primal value matches the dual value at (w, j) = (5, 0)") {
    const auto& p = pde();
    const PolicyTable tab(model(), p.q, p.lb);
    simulate::PrimalConfig c;
    c.n_paths = 4000;
    c.n_steps = 600;
    c.threads = 1;
    const auto r = simulate::verify_duality(model(), surface(), tab, c);
    CHECK(r.lambda_star == Approx(surface().lambda_from_wealth(1, 0.0, 5.0 - model().params().zeta0)).epsilon(1e-9));
    CHECK(std::abs(r.gap) <= 3 * r.v_primal.se + 0.01 * std::abs(r.v_dual));
    CHECK(r.nonpositive_terminal == 0);
    // Euler wealth tracks the wealth surface at strong order 1/2.
    for (double e : r.spot_errors) CHECK(e < std::sqrt(30.0 / c.n_steps));
}
