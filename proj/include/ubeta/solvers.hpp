#pragma once

#include <vector>

#include "ubeta/space.hpp"

namespace ubeta {

struct SolveReport {
    int iterations = 0;
    double residual = 0.0;  // weighted max norm of the graph Laplacian residual
    bool converged = false;
};

/// Solves the discrete Dirichlet problem sum_y w_xy (u_y - u_x) = -rhs_x on
/// free vertices, with u fixed elsewhere, by Jacobi-preconditioned conjugate
/// gradients. `u` carries the boundary data in and the solution out.
/// Convergence is max_x |residual_x| / mu(x) <= tol.
SolveReport solve_dirichlet(const Space& s, const std::vector<char>& free_mask,
                            std::vector<double>& u, double tol, int max_iter,
                            const std::vector<double>* rhs = nullptr);

/// Projected SOR for the one-sided obstacle u >= 1 on `constrained`, harmonic
/// on the rest of the free set, Dirichlet data fixed off the free set.
/// Terminates when the complementarity residual (weighted max norm) <= tol.
SolveReport psor_obstacle(const Space& s, const std::vector<char>& free_mask,
                          const std::vector<char>& constrained, std::vector<double>& u,
                          double tol, int max_iter, double omega = 0.0);

/// Primal active-set solve of the same obstacle problem via exact Dirichlet
/// reductions; cross-check oracle for small instances.
SolveReport active_set_obstacle(const Space& s, const std::vector<char>& free_mask,
                                const std::vector<char>& constrained, std::vector<double>& u,
                                double tol, int max_iter);

/// Weighted max norm of the Laplacian residual over `check` vertices.
double laplacian_residual(const Space& s, const std::vector<double>& u,
                          const std::vector<char>& check,
                          const std::vector<double>* rhs = nullptr);

}  // namespace ubeta
