#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "jobswitch/errors.hpp"
#include "jobswitch/obstacle.hpp"

using namespace jobswitch;
using namespace jobswitch::obstacle;
using doctest::Approx;

namespace {

const Model& model() {
    static const Model m{ModelParams{}};
    return m;
}

Grid coarse(int nx = 401, int nt = 600) { return Grid{12.0, nx, nt, 30.0}; }

const ObstacleSolution& coarse_psor() {
    static const ObstacleSolution s = solve_obstacle(model(), coarse());
    return s;
}

double interp_x1(const FreeBoundaries& b, double tau) {
    const auto it = std::lower_bound(b.tau.begin(), b.tau.end(), tau - 1e-12);
    return b.x1[it - b.tau.begin()];
}

}  // namespace

TEST_CASE("grid validation") {
    const auto& d = model().derived();
    CHECK_NOTHROW(validate_grid(coarse(), d));
    CHECK_THROWS_AS(validate_grid(Grid{12.0, 2, 10, 30.0}, d), ValidationError);
    CHECK_THROWS_AS(validate_grid(Grid{12.0, 101, 0, 30.0}, d), ValidationError);
    // The truncation must enclose both thresholds.
    CHECK_THROWS_AS(validate_grid(Grid{0.2, 101, 10, 30.0}, d), ValidationError);
    CHECK(parse_method("penalty") == Method::penalty);
    CHECK(parse_method("psor") == Method::projected_relaxation);
    CHECK_THROWS_AS(parse_method("multigrid"), ValidationError);
}

TEST_CASE("projected relaxation satisfies every invariant on a coarse grid") {
    const auto& s = coarse_psor();
    for (const auto& r : check_invariants(model(), s)) CHECK_MESSAGE(r.passed, r.name << " worst " << r.worst);
    CHECK(s.stats.max_residual <= 1e-7);
}

TEST_CASE("penalty and projected solutions agree") {
    SolverOptions opt;
    opt.method = Method::penalty;
    const auto pen = solve_obstacle(model(), coarse(), opt);
    CHECK(pen.final_eps == 1e-6);
    const auto& ps = coarse_psor();
    double diff = 0.0;
    for (std::size_t k = 0; k < ps.u.rows(); ++k)
        for (std::size_t i = 0; i < ps.u.cols(); ++i) diff = std::max(diff, std::abs(ps.u(k, i) - pen.u(k, i)));
    CHECK(diff <= 5e-4);
}

TEST_CASE("free boundaries respect their thresholds and the critical horizon") {
    const auto& s = coarse_psor();
    const auto& d = model().derived();
    const auto& b = s.boundaries;
    for (std::size_t k = 1; k < b.tau.size(); ++k) {
        CHECK(b.x1[k] <= d.X1 + 1e-12);
        if (b.tau[k] <= d.T1) CHECK(std::isinf(b.x0[k]));
        else if (std::isfinite(b.x0[k])) CHECK(b.x0[k] >= d.X2 - 1e-12);
    }
    // Upper contact appears once the horizon is long enough.
    CHECK(std::isfinite(b.x0.back()));
    const auto lb = to_lambda_boundaries(b, 30.0);
    CHECK(lb.lambda1.front_time() == Approx(0.0));
    CHECK(lb.lambda1(0.0) == Approx(std::exp(b.x1.back())).epsilon(1e-12));
}

TEST_CASE("lower free boundary converges under grid refinement") {
    // Successive differences at a fixed horizon shrink by at least half each doubling.
    const double tau = 15.0;
    double x[3];
    int n = 0;
    for (auto [nx, nt] : {std::pair{201, 300}, std::pair{401, 600}, std::pair{801, 1200}}) {
        const auto s = solve_obstacle(model(), coarse(nx, nt));
        x[n++] = interp_x1(s.boundaries, tau);
    }
    const double d1 = std::abs(x[1] - x[0]), d2 = std::abs(x[2] - x[1]);
    CHECK(d2 < 0.6 * d1);
    CHECK(d2 < 1e-2);
}

TEST_CASE("recovered Q surfaces are consistent with the difference solution") {
    const auto& s = coarse_psor();
    const auto lb = to_lambda_boundaries(s.boundaries, 30.0);
    const auto q = recover_q01(model(), coarse(), lb.lambda0, lb.lambda1);
    for (const auto& r : check_q_bounds(model(), q)) CHECK_MESSAGE(r.passed, r.name << " worst " << r.worst);
    const auto g = coarse();
    // (Q1 - Q0) / lambda = u wherever both live on the grid.
    double worst = 0.0;
    for (std::size_t k = 0; k < q.q0.rows(); k += 20)
        for (std::size_t i = 50; i + 50 < q.q0.cols(); i += 7) {
            const double lam = std::exp(g.x(int(i)));
            worst = std::max(worst, std::abs((q.q1(k, i) - q.q0(k, i)) / lam - s.u(k, i)) / (1 + std::abs(s.u(k, i))));
        }
    CHECK(worst < 1e-3);
    // Late region: job 0 never switches, Q0 is the pure annuity value.
    const auto& p = model().params();
    for (double t : {27.0, 29.0})
        for (double lam : {0.5, 1.0, 2.0}) {
            const double exact = p.eps0 * annuity_factor(p.r, 30 - t) * lam - p.L0 * annuity_factor(p.beta, 30 - t);
            CHECK(q.value(0, t, lam) == Approx(exact).epsilon(2e-3));
        }
}
