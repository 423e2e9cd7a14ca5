#pragma once

#include <span>
#include <vector>

#include "ubeta/space.hpp"

namespace ubeta {

struct ExteriorProblemSpec {
    const Space* space = nullptr;
    std::vector<char> omega_c;        // obstacle complement (bounded), value 1 on its boundary
    double r_out = 0.0;               // truncation radius; infinity allowed on radial backend
    double tol = 1e-10;
    int max_iter = 200000;
};

struct ExteriorResult {
    ScalarField u;
    std::vector<char> solved_region;  // vertices where the field was solved (Omega minus shell)
    VertexId center = 0;              // reference vertex of Omega^c
    int iterations = 0;
    double residual = 0.0;
    bool truncation_tight = false;    // |u| next to the shell above threshold
};

/// Solves problem (P) on the truncated graph: u = 1 on the boundary layer of
/// Omega^c, u = 0 on the shell {point distance >= r_out} and on the space
/// boundary, discrete-harmonic in between. Radial backends are solved in
/// closed form (a + b r^{2-N}); r_out = infinity gives the exact decaying
/// solution.
ExteriorResult solve_exterior(const ExteriorProblemSpec& spec);

/// Richardson extrapolation of the exterior solution over increasing
/// truncation radii (error is linear in r^{2-N}); the returned mask covers
/// the smallest truncation.
ExteriorResult solve_exterior_extrapolated(const Space& s, const std::vector<char>& omega_c,
                                           std::span<const double> r_outs, double tol = 1e-10);

struct CapacityResult {
    ScalarField potential;
    double capacity = 0.0;
    int iterations = 0;
    double residual = 0.0;
    std::vector<char> active_set;
    std::vector<char> e_set;
    std::vector<char> b_set;
    double tol = 0.0;
};

/// Minimizer of the Dirichlet energy over {u = 0 outside B, u >= 1 on E} by
/// projected Gauss-Seidel with over-relaxation; capacity is its energy.
CapacityResult solve_obstacle(const Space& s, const std::vector<char>& e_set,
                              const std::vector<char>& b_set, double tol = 1e-8,
                              int max_iter = 200000, double omega = 0.0,
                              bool warm_start = true);

struct ComparisonCheck {
    bool holds = false;
    double worst_violation = 0.0;
    std::vector<VertexId> not_superharmonic;  // diagnostic when the precondition fails
};

/// Prop-style comparison: v superharmonic on B with v >= 1 on E implies
/// u <= v. Reports max(u - v) over B.
ComparisonCheck comparison_check(const Space& s, const CapacityResult& u, const ScalarField& v,
                                 double tol);

struct LiftCheck {
    bool agrees = false;
    double max_diff = 0.0;
};

/// Re-solves the obstacle problem with E = {u > m} and compares against
/// min(u/m, 1).
LiftCheck lift_check(const Space& s, const CapacityResult& u, double m, double tol);

struct CapFatPoint {
    double s = 0.0;
    double ratio = 0.0;
    bool skipped = false;  // below mesh resolution
};

/// Cap(B_s(x) cap E, B_2s(x)) / Cap(B_s(x), B_2s(x)) along sGrid.
std::vector<CapFatPoint> cap_fat_ratio(const Space& sp, const std::vector<char>& e_set, VertexId x,
                                       std::span<const double> s_grid, double tol = 1e-8);

/// Interior corkscrew test: for each s, search for a ball of radius
/// lambda * s inside B_s(x) cap E.
std::vector<std::pair<double, bool>> corkscrew_check(const Space& sp, const std::vector<char>& e_set,
                                                     VertexId x, double lambda,
                                                     std::span<const double> r_grid);

struct WienerLevel {
    double radius = 0.0;
    double sup_one_minus_u = 0.0;
    double cap_ratio = 0.0;  // Cap(E cap B_j, B_{j-1}) / Cap(B_j, B_{j-1})
};

struct WienerFit {
    double alpha = 0.0;      // fitted Hoelder exponent of 1 - u near x
    double c = 0.0;          // fitted prefactor
    double wiener_c = 0.0;   // largest C making 1-u <= exp(-C sum a_j) levelwise
    bool bound_holds = false;
    bool flat = false;       // u == 1 near x; exponent unconstrained
    std::vector<WienerLevel> levels;
};

/// Dyadic decay fit of 1 - u near a boundary point x, plus the levelwise
/// capacity-sum bound evaluated with cap_fat_ratio data.
WienerFit wiener_decay_fit(const Space& sp, const ScalarField& u, VertexId x, double r0,
                           int levels, const std::vector<char>& e_set, double tol = 1e-8);

}  // namespace ubeta
