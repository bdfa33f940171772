#include <doctest.h>

#include <cmath>

#include "jobswitch/boundary_curve.hpp"
#include "jobswitch/errors.hpp"

using namespace jobswitch;
using doctest::Approx;

TEST_CASE("log-linear interpolation between positive nodes") {
    const BoundaryCurve c({0.0, 1.0, 2.0}, {1.0, 4.0, 2.0});
    CHECK(c(0.5) == Approx(2.0).epsilon(1e-14));
    CHECK(c(1.5) == Approx(std::sqrt(8.0)).epsilon(1e-14));
    CHECK(c(1.0) == 4.0);
    CHECK(c.covers(0.0, 2.0));
    CHECK_FALSE(c.covers(-0.1, 2.0));
    CHECK_THROWS_AS(c(2.5), ValidationError);
}

TEST_CASE("absent and zero nodes") {
    const double inf = BoundaryCurve::absent;
    const BoundaryCurve c({0.0, 1.0, 2.0, 3.0}, {2.0, inf, 0.0, 1.0});
    CHECK(std::isinf(c(0.5)));
    CHECK(std::isinf(c(1.0)));
    // Next to a zero the curve is linear in lambda.
    CHECK(c(2.5) == Approx(0.5).epsilon(1e-14));
    CHECK(c(2.0) == 0.0);
}

TEST_CASE("hinted evaluation matches plain evaluation on sweeps in both directions") {
    std::vector<double> t, v;
    for (int k = 0; k <= 50; ++k) {
        t.push_back(0.1 * k * k);
        v.push_back(std::exp(std::sin(0.3 * k)));
    }
    const BoundaryCurve c(t, v);
    std::size_t hint = 0;
    for (double s = 0.0; s <= 250.0; s += 0.37) CHECK(c.at(s, hint) == c(s));
    for (double s = 250.0; s >= 0.0; s -= 0.53) CHECK(c.at(s, hint) == c(s));
}

TEST_CASE("construction rejects malformed curves") {
    CHECK_THROWS_AS(BoundaryCurve({0.0, 1.0}, {1.0}), ValidationError);
    CHECK_THROWS_AS(BoundaryCurve({1.0, 0.0}, {1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(BoundaryCurve({0.0, 1.0}, {1.0, -1.0}), ValidationError);
}
