#pragma once

#include <string>
#include <vector>

#include "jobswitch/boundary_curve.hpp"
#include "jobswitch/model.hpp"
#include "jobswitch/surface.hpp"

namespace jobswitch::obstacle {

/// Uniform grid on [0, T] x [-n, n] in residual horizon tau and log-dual x.
struct Grid {
    double n_trunc = 12.0;
    int nx = 2001;
    int nt = 3000;
    double T = 30.0;

    double dt() const { return T / nt; }
    double dx() const { return 2.0 * n_trunc / (nx - 1); }
    double x(int i) const { return -n_trunc + i * dx(); }
    double tau(int k) const { return k * dt(); }
};

/// Throws ValidationError when the grid is unusable for the model.
void validate_grid(const Grid& g, const DerivedConstants& d);

enum class Method { projected_relaxation, penalty };

const char* method_name(Method m);
Method parse_method(const std::string& s);

struct SolverOptions {
    Method method = Method::projected_relaxation;
    /// Relaxation stops when a sweep moves no node by more than this.
    double sweep_tol = 1e-13;
    int max_sweeps = 20000;
    /// Over-relaxation factor; 0 selects the Jacobi-based optimum.
    double omega = 0.0;
    /// Decreasing penalty parameters, each level warm-starting the next.
    std::vector<double> eps_sequence = {1e-2, 1e-3, 1e-4, 1e-6};
    double newton_tol = 1e-11;
    int max_newton = 200;
};

struct SolveStats {
    long total_iterations = 0;
    int max_iterations_per_step = 0;
    double max_residual = 0.0;
    double seconds = 0.0;
};

/// Free-boundary abscissae per time slice; +inf (x0) or -inf (x1) when absent.
struct FreeBoundaries {
    std::vector<double> tau;
    std::vector<double> x0;
    std::vector<double> x1;
};

struct ObstacleSolution {
    Grid grid;
    Method method = Method::projected_relaxation;
    double final_eps = 0.0;  ///< penalty parameter of the reported solution
    Surface u;               ///< u(tau_k, x_i), rows indexed by k
    Surface residual;        ///< complementarity residual per node
    FreeBoundaries boundaries;
    SolveStats stats;
};

/// Penalty terms and their derivatives.
double penalty_lower(double xi, double eps, double L1, double n);
double penalty_lower_d(double xi, double eps, double L1, double n);
double penalty_upper(double xi, double eps, double delta_eps);
double penalty_upper_d(double xi, double eps, double delta_eps);

/// Implicit Euler march of the double obstacle problem from tau = 0 to T.
/// Throws NumericalError on non-convergence.
ObstacleSolution solve_obstacle(const Model& m, const Grid& g, const SolverOptions& opt = {});

/// Contact test used by extraction and the invariant checks.
bool in_contact(double u, double obstacle);

/// Extracts x0, x1 per slice. Throws NumericalError on a non-connected contact set.
FreeBoundaries extract_free_boundaries(const Model& m, const ObstacleSolution& sol);

/// Time-reverses and exponentiates the x-curves.
BoundaryPair to_lambda_boundaries(const FreeBoundaries& fb, double T);

/// Q0 and Q1 node surfaces on the same grid, rows indexed by tau.
struct QSurfaces {
    Grid grid;
    Surface q0;
    Surface q1;

    /// Bilinear interpolation in (tau, x); j selects the job.
    double value(int j, double t, double lambda) const;
    double dlambda(int j, double t, double lambda) const;
    double dlambda2(int j, double t, double lambda) const;
};

QSurfaces recover_q01(const Model& m, const Grid& g, const BoundaryCurve& lambda0,
                      const BoundaryCurve& lambda1);

struct InvariantResult {
    std::string name;
    bool passed = false;
    double worst = 0.0;  ///< worst violation, or the measured quantity when noted
    std::string note;
};

struct InvariantOptions {
    double residual_tol = 1e-7;
    double monotone_tol = 1e-12;
    double dtau_tol = 1e-6;
};

std::vector<InvariantResult> check_invariants(const Model& m, const ObstacleSolution& sol,
                                              const InvariantOptions& opt = {});

std::vector<InvariantResult> check_q_bounds(const Model& m, const QSurfaces& q);

}  // namespace jobswitch::obstacle
