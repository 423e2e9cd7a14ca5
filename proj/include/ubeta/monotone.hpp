#pragma once

#include <span>
#include <vector>

#include "ubeta/space.hpp"

namespace ubeta {

enum class LevelEstimator { cut_edge, mollified };

/// Sublevel set {u < t}.
std::vector<char> level_set(const ScalarField& u, double t);

/// Perimeter of {u < t}: coarea-consistent cut-edge sum
/// sum over crossing edges of w |Du| / |grad u|(crossing), which reduces to
/// w * l per cut face on graded lattices and measures Euclidean area on
/// oblique levels. Radial backends evaluate m_Z r_t^{N-1} exactly.
double perimeter(const ScalarField& u, double t);

/// The monotone level functional
///   U_beta(t) = t^{-beta (N-1)/(N-2)} * integral |grad u|^{beta+1} dPer({u<t}).
/// cut_edge integrates over crossing edges; mollified uses a hat kernel of
/// half-width eps on vertices (coarea form with f = |grad u|^{beta+2}).
double u_beta(const ScalarField& u, double beta, double t, LevelEstimator est,
              double eps = 0.0);

struct DerivativeEstimate {
    double flux = 0.0;           // level integral of <grad u, grad g>/|grad u|
    std::size_t excluded = 0;    // vertices skipped for |grad u| below the floor
};

/// Flux form of U_beta'(t) with g = |grad u|^beta / u^{beta (N-1)/(N-2)}.
DerivativeEstimate u_beta_derivative(const ScalarField& u, double beta, double t, double eps);

/// Second-order lower bound
///   (C_{beta,N} / t^2) * integral over {u<t} of u^2 |grad |grad v|^{beta/2}|^2 dm,
/// v = u^{1/(2-N)}; exactly 0 at beta = (N-2)/(N-1).
double second_order_lower_bound(const ScalarField& u, double beta, double t);

struct MonotoneReport {
    double beta = 0.0;
    std::vector<double> t_grid;
    std::vector<double> u;            // U_beta per t
    std::vector<double> uprime_flux;  // flux estimator per t
    std::vector<double> uprime_fd;    // centered finite differences of U
    std::vector<double> lower_bound;  // second-order bound per t
    bool monotone = false;
    bool uprime_t2_monotone = false;  // t -> U'(t) t^2 non-decreasing within slack
    double slack = 0.0;
    double sup_below_half = 0.0;      // sup of U over tGrid intersect (0, 1/2)
    double estimator_disagreement = 0.0;
};

MonotoneReport monotonicity_report(const ScalarField& u, double beta, std::span<const double> t_grid);

struct DecayCheck {
    bool lower_ok = false;
    bool upper_ok = false;
    bool grad_ok = false;
    double delta = 0.0;      // d(x0, {u <= 1/2}) ^ 1
    double grad_c = 0.0;     // fitted constant of |grad u|/u <= C/d
    double upper_c2 = 0.0;   // fitted constant of the integral upper bound
    double worst_lower_margin = 0.0;  // min over vertices of u / lower bound
};

/// Pointwise decay diagnostics for an exterior solution around x0. The
/// profile radii/masses come from bishop_gromov-style sampling around x0.
DecayCheck decay_check(const ScalarField& u, VertexId x0, const std::vector<char>& region,
                       double grad_ceiling = 2.0, double upper_ceiling = 1e6);

/// (4/beta) (beta - (N-2)/(N-1)); zero exactly at beta = (N-2)/(N-1).
double harmonic_exponent_constant(double beta, double n_dim);

}  // namespace ubeta
