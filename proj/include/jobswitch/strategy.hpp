#pragma once

#include <string>
#include <vector>

#include "jobswitch/boundary_curve.hpp"
#include "jobswitch/model.hpp"
#include "jobswitch/obstacle.hpp"
#include "jobswitch/surface.hpp"

namespace jobswitch::strategy {

enum class Region { WR0, SR0, WR1, SR1 };
std::string region_name(Region r);

struct StrategyOptions {
    /// Quadratic-graded panels on the substituted variable v = sqrt(s - t).
    int v_panels = 64;
    /// Extra geometric panels inside the first graded panel.
    int geometric_panels = 24;
    double bracket_lo = 1e-8;
    double bracket_hi = 1e8;
    int max_bisection = 200;
    double wealth_tol = 1e-9;
};

struct Policy {
    double lambda = 0.0;
    double consumption = 0.0;
    double position = 0.0;  ///< dollar amount in the risky asset
    bool switch_now = false;
    int job_after = 0;
    double wealth_after = 0.0;
};

/// Primal-facing surfaces built from the integral representations.
/// Immutable after construction; every evaluator is const and thread-safe.
class StrategySurface {
public:
    StrategySurface(const Model& m, BoundaryPair b, StrategyOptions opt = {});

    const Model& model() const { return m_; }
    const BoundaryPair& boundaries() const { return b_; }

    /// Total dual value: unconstrained part plus the switching part.
    double q_hat(int j, double t, double lambda) const;
    /// Wealth -d/dlambda of q_hat.
    double wealth(int j, double t, double lambda) const;
    /// Risky dollar position (theta / sigma) lambda d2/dlambda2 of q_hat.
    double investment(int j, double t, double lambda) const;

    /// Wealth boundaries; w0 is -inf where Lambda0 is absent and w1(T) is +inf.
    double w0(double t) const;
    double w1(double t) const;

    /// Infimum of admissible wealth for job j at time t (the large-lambda limit).
    double wealth_lower_bound(int j, double t) const;

    /// Unique lambda with wealth(j, t, lambda) = w. Throws std::domain_error when w is
    /// not above wealth_lower_bound, NumericalError when the bracket cannot be built.
    double lambda_from_wealth(int j, double t, double w) const;

    Region classify_lambda(int j, double t, double lambda) const;
    Region classify_wealth(int j, double t, double w) const;

    Policy feedback(int j, double t, double w) const;

private:
    struct Derivs {
        double d1 = 0.0;  ///< d/dlambda of the switching integral term
        double d2 = 0.0;  ///< lambda d2/dlambda2 of the same term
    };
    Derivs integral_derivs(int j, double t, double lambda) const;
    bool own_side(int j, double t, double lambda) const;

    Model m_;
    BoundaryPair b_;
    StrategyOptions opt_;
    std::vector<double> gl_x_, gl_w_;
};

/// Tabulated wealth and investment on the PDE grid for fast closed-loop simulation.
/// Wealth columns are inverted by binary search; lambda is interpolated in log.
class PolicyTable {
public:
    PolicyTable(const Model& m, const obstacle::QSurfaces& q, BoundaryPair b);

    struct Lookup {
        double lambda = 0.0;
        double log_lambda = 0.0;
        double position = 0.0;
        bool clamped = false;  ///< wealth outside the tabulated range
    };

    /// Row nearest to time t; lookups use that row only.
    std::size_t row_for(double t) const;
    /// Inverts the wealth column of one row. `hint` is a column index carried between
    /// calls along a path; the search starts there.
    Lookup lookup(int j, std::size_t row, double w, std::size_t& hint) const;
    Lookup lookup(int j, std::size_t row, double w) const {
        std::size_t h = cols_ / 2;
        return lookup(j, row, w, h);
    }
    double wealth(int j, std::size_t row, double lambda) const;

    const BoundaryPair& boundaries() const { return b_; }
    double time_of(std::size_t row) const;

private:
    Model m_;
    obstacle::Grid g_;
    BoundaryPair b_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    // Row-major (index k * cols_ + i); simulations step blocks of paths through shared rows.
    std::vector<double> w_[2];
    std::vector<double> pi_[2];
};

}  // namespace jobswitch::strategy
