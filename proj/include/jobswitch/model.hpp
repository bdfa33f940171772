#pragma once

#include <functional>

namespace jobswitch {

/// Market, preference, job and horizon constants.
struct ModelParams {
    double beta = 0.02;    ///< subjective discount rate
    double r = 0.01;       ///< risk-free rate
    double mu = 0.07;      ///< risky drift
    double sigma = 0.2;    ///< risky volatility
    double eps0 = 0.3;     ///< income rate in job 0
    double eps1 = 1.0;     ///< income rate in job 1
    double L0 = 0.5;       ///< labor disutility in job 0
    double L1 = 1.0;       ///< labor disutility in job 1
    double zeta0 = 3.0;    ///< cost of switching 0 -> 1
    double zeta1 = 1.0;    ///< cost of switching 1 -> 0
    double T = 30.0;       ///< mandatory retirement date
    double gamma = 3.0;    ///< relative risk aversion
    double T_death = 50.0; ///< expected death time, must exceed T
};

struct DerivedConstants {
    double theta = 0.0;         ///< Sharpe ratio (mu - r) / sigma
    double T1 = 0.0;            ///< residual horizon below which switching up never pays
    double X1 = 0.0;            ///< log-dual threshold bounding the 1 -> 0 boundary
    double X2 = 0.0;            ///< log-dual threshold bounding the 0 -> 1 boundary
    double K = 0.0;             ///< Merton coefficient
    double bequest_coef = 0.0;  ///< A = (1 - exp(-K (T_death - T))) / K
};

/// Checks every standing assumption and returns the derived constants.
/// Throws ValidationError naming the violated inequality.
DerivedConstants validate(const ModelParams& p);

/// (1 - exp(-k s)) / k, continuous at k = 0.
double annuity_factor(double k, double s);

/// A validated parameter set together with its derived constants.
class Model {
public:
    explicit Model(const ModelParams& p);

    const ModelParams& params() const { return p_; }
    const DerivedConstants& derived() const { return d_; }

    double delta_eps() const { return p_.eps1 - p_.eps0; }
    double delta_L() const { return p_.L1 - p_.L0; }

    // CRRA machinery; arguments must be positive.
    double utility(double c) const;
    double conjugate_u1(double lambda) const;
    double inverse_marginal_1(double y) const;
    double inverse_marginal_2(double y) const;
    double conjugate_u2(double lambda) const;
    double bequest_utility(double w) const;

    /// Merton annuity coefficient (1 - exp(-K (T_death - t))) / K.
    double merton_coef(double t) const;

    /// Closed-form unconstrained dual value.
    double q_r(double t, double lambda) const;
    double q_r_dlambda(double t, double lambda) const;
    double q_r_dlambda2(double t, double lambda) const;

    /// Upper Dirichlet datum at x = n.
    double varphi_plus(double tau) const;
    /// Lower Dirichlet datum at x = -n.
    double varphi_minus_n(double tau, double n) const;

private:
    ModelParams p_;
    DerivedConstants d_;
};

/// Conjugate utility as a function of (time, dual argument).
using ConjugateFn = std::function<double(double, double)>;

struct QuadratureOptions {
    double rel_tol = 1e-9;
    int min_level = 4;      ///< initial panels = 2^min_level
    int max_level = 14;
    double sd_cutoff = 8.0;
};

/// Lognormal quadrature of the unconstrained dual value for arbitrary conjugates.
/// Throws NumericalError when refinement does not reach rel_tol.
double q_r_quadrature(const Model& m, double t, double lambda, const ConjugateFn& u1_conj,
                      const ConjugateFn& u2_conj, const QuadratureOptions& opt = {});

}  // namespace jobswitch
