#include <doctest.h>

#include <cmath>
#include <vector>

#include "jobswitch/errors.hpp"
#include "jobswitch/integral.hpp"
#include "jobswitch/philox.hpp"
#include "jobswitch/simulate.hpp"

using namespace jobswitch;
using namespace jobswitch::simulate;
using doctest::Approx;

namespace {

const Model& model() {
    static const Model m{ModelParams{}};
    return m;
}

const BoundaryPair& ie_boundaries() {
    static const BoundaryPair b = integral::solve_boundaries_ie(model()).boundaries;
    return b;
}

SimConfig small(int paths = 4000, int steps = 300) {
    SimConfig c;
    c.n_paths = paths;
    c.n_steps = steps;
    c.lambda0 = 0.725;
    c.threads = 1;
    return c;
}

// Boundaries no path can reach.
BoundaryPair never_switch() {
    return {BoundaryCurve({0.0, 30.0}, {1e300, 1e300}), BoundaryCurve({0.0, 30.0}, {1e-300, 1e-300})};
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal streams have unit moments and independent streams") {
    NormalStream a(1, 0), b(1, 1);
    double s = 0, s2 = 0, sab = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = a.next(), y = b.next();
        s += x;
        s2 += x * x;
        sab += x * y;
    }
    CHECK(std::abs(s / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sab / n) < 4.0 / std::sqrt(n));
    NormalStream a2(1, 0);
    NormalStream c(2, 0);
    CHECK(a2.next() != c.next());
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(resolve_config(small(0), model()), ValidationError);
    auto c = small();
    c.job0 = 2;
    CHECK_THROWS_AS(resolve_config(c, model()), ValidationError);
    c = small();
    c.lambda0 = -1;
    CHECK_THROWS_AS(resolve_config(c, model()), ValidationError);
    c = small();
    c.antithetic = true;
    c.n_paths = 11;
    CHECK_THROWS_AS(resolve_config(c, model()), ValidationError);
    c = small();
    c.lambda0 = NAN;
    const auto& d = model().derived();
    CHECK(resolve_config(c, model()).lambda0 == Approx(std::exp(0.5 * (d.X1 + d.X2))).epsilon(1e-14));
}

TEST_CASE("dual paths: log drift, martingale property and lambda scaling") {
    const auto c = resolve_config(small(20000, 50), model());
    const DualPathEnsemble e(model(), c);
    const double T = 30.0, beta = 0.02, r = 0.01, theta = 0.3;
    std::vector<double> y, y2;
    double sl = 0, sl2 = 0, sh = 0, sh2 = 0;
    for (int k = 0; k < c.n_paths; ++k) {
        e.path(k, y);
        const double l = std::log(y.back() / c.lambda0);
        const double h = std::exp(-beta * T) * y.back() / c.lambda0;
        sl += l;
        sl2 += l * l;
        sh += h;
        sh2 += h * h;
    }
    const double n = c.n_paths;
    const double ml = sl / n, se_l = std::sqrt((sl2 / n - ml * ml) / n);
    const double mh = sh / n, se_h = std::sqrt((sh2 / n - mh * mh) / n);
    CHECK(std::abs(ml - (beta - r - 0.5 * theta * theta) * T) < 4 * se_l);
    CHECK(std::abs(mh - std::exp(-r * T)) < 4 * se_h);
    e.path(17, 1.0, y);
    e.path(17, 2.5, y2);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y2[i] == Approx(2.5 * y[i]).epsilon(1e-14));
    CHECK(y.front() == 1.0);
}

TEST_CASE("antithetic pairs share a stream with opposite signs") {
    auto c = small(10, 20);
    c.antithetic = true;
    const DualPathEnsemble e(model(), resolve_config(c, model()));
    std::vector<double> z0, z1;
    e.normals(4, z0);
    e.normals(5, z1);
    for (std::size_t i = 0; i < z0.size(); ++i) CHECK(z1[i] == -z0[i]);
}

TEST_CASE("never switching earns the annuity value") {
    for (int j = 0; j < 2; ++j) {
        auto c = small(20000, 200);
        c.job0 = j;
        const auto e = simulate_dual(resolve_config(c, model()), model());
        const auto x = run_switching(e, never_switch());
        const auto r = estimate_values(x, model());
        const auto& p = model().params();
        const double eps = j ? p.eps1 : p.eps0, L = j ? p.L1 : p.L0;
        const double exact = eps * annuity_factor(p.r, p.T) * 0.725 - L * annuity_factor(p.beta, p.T);
        CHECK(r.zero_switch_paths == c.n_paths);
        CHECK(r.switching_cost.mean == 0.0);
        // Trapezoid time stepping adds an O(dt^2) bias on top of the noise.
        CHECK(std::abs(r.js.mean - exact) < 4 * r.js.se + 1e-3);
    }
}

TEST_CASE("standard error halves when paths quadruple") {
    const auto r1 = estimate_values(run_switching(simulate_dual(resolve_config(small(2000), model()), model()), ie_boundaries()), model());
    const auto r4 = estimate_values(run_switching(simulate_dual(resolve_config(small(8000), model()), model()), ie_boundaries()), model());
    CHECK(r4.js.se / r1.js.se == Approx(0.5).epsilon(0.15));
}

TEST_CASE("switching value near the dual value with structural guarantees") {
    for (int j = 0; j < 2; ++j) {
        auto c = small(20000, 1500);
        c.job0 = j;
        const auto e = simulate_dual(resolve_config(c, model()), model());
        auto r = estimate_values(run_switching(e, ie_boundaries()), model());
        const double q = j ? integral::q1_ie(model(), 0, 0.725, ie_boundaries())
                           : integral::q0_ie(model(), 0, 0.725, ie_boundaries());
        CHECK(std::abs(r.js.mean - q) <= 3 * r.js.se + 0.01 * (1 + std::abs(q)));
        CHECK(r.late_up_switches == 0);
        CHECK(r.alternation_violations == 0);
        CHECK(r.post_switch_violations == 0);
        CHECK(r.mean_switches > 0.3);
        compare(r, q, q + model().q_r(0, 0.725), 0.0);
        CHECK(r.q_ref == q);
    }
}

TEST_CASE("results do not depend on the thread count") {
    auto c1 = small(3000, 300);
    auto c3 = c1;
    c3.threads = 3;
    const auto x1 = run_switching(simulate_dual(resolve_config(c1, model()), model()), ie_boundaries());
    const auto x3 = run_switching(simulate_dual(resolve_config(c3, model()), model()), ie_boundaries());
    REQUIRE(x1.paths.size() == x3.paths.size());
    for (std::size_t k = 0; k < x1.paths.size(); ++k) {
        CHECK(x1.paths[k].js() == x3.paths[k].js());
        CHECK(x1.paths[k].switch_times == x3.paths[k].switch_times);
    }
}

TEST_CASE("parallel_for propagates exceptions") {
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw NumericalError("x"); }), NumericalError);
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) CHECK(h == 1);
}
