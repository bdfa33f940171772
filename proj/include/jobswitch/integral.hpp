#pragma once

#include <string>

#include "jobswitch/boundary_curve.hpp"
#include "jobswitch/model.hpp"

namespace jobswitch::integral {

/// d+ (sign > 0) or d- (sign < 0) for elapsed time u > 0 and ratio lambda / boundary > 0.
double d_pm(const Model& m, int sign, double u, double ratio);

/// N(d) including the limits u -> 0 (ratio compared with 1) and ratio in {0, +inf}.
double cdf_d(const Model& m, int sign, double u, double ratio);

struct IeSolverConfig {
    int nt_ie = 1000;
    double newton_tol = 1e-10;
    int max_newton_iters = 100;
    /// Search ceiling for Lambda0; a node whose root lies above it is stored as absent and flagged.
    double lambda_cap = 1e15;
    /// Smallest distance of a solved node from T - T1 and from T. The grid is refined
    /// geometrically (halving) from the uniform step down to this offset.
    double endpoint_offset = 1e-11;
};

void validate_config(const IeSolverConfig& c, const Model& m);

/// Value representation of Q0. Outside its validity region (lambda >= Lambda0(t)) the
/// contact identity Q0 = Q1 - zeta0 * lambda is used.
double q0_ie(const Model& m, double t, double lambda, const BoundaryPair& b);

/// Value representation of Q1. For lambda <= Lambda1(t), Q1 = Q0 - zeta1 * lambda.
double q1_ie(const Model& m, double t, double lambda, const BoundaryPair& b);

struct IeStats {
    int nodes = 0;
    int capped_nodes = 0;
    int edge_nodes = 0;
    int total_evaluations = 0;
    double max_equation_residual = 0.0;
    double seconds = 0.0;
};

struct IeSolution {
    BoundaryPair boundaries;
    IeStats stats;
};

/// Backward recursive integration of the coupled boundary equations.
/// Throws NumericalError naming the node when no bracket is found.
IeSolution solve_boundaries_ie(const Model& m, const IeSolverConfig& c = {});

}  // namespace jobswitch::integral
