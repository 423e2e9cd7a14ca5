#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ubeta/space.hpp"

namespace ubeta {

/// Heat semigroup of the weighted graph Laplacian. Spectral data is built
/// once (under the size cap) and shared read-only afterwards; larger graphs
/// use implicit time stepping.
class HeatKernelEngine {
public:
    enum class Method { eigendecomposition, stepping };

    HeatKernelEngine(const Space& s, Method method, std::size_t spectral_cap = 4000,
                     std::vector<char> dirichlet_mask = {});
    ~HeatKernelEngine();
    HeatKernelEngine(HeatKernelEngine&&) noexcept;
    HeatKernelEngine& operator=(HeatKernelEngine&&) noexcept;

    const Space& space() const { return *space_; }
    Method method() const { return method_; }
    bool killed() const { return !dirichlet_.empty(); }

    /// p_t(x, .) as a density with respect to the vertex measure.
    ScalarField kernel(double t, VertexId x) const;
    double kernel_value(double t, VertexId x, VertexId y) const;

    /// integral over t in [t_lo, t_hi] of (p_t(x,.) - equilibrium) dt, plus an
    /// analytic tail beyond t_hi from the fitted spectral decay. The
    /// equilibrium density is 1/m(X) for the free semigroup and 0 when killed.
    struct TimeIntegral {
        ScalarField g;
        double equilibrium_density = 0.0;
        double tail_rate = 0.0;  // fitted slowest decay rate
        double t_hi = 0.0;
    };
    TimeIntegral integrate_kernel(VertexId x, double t_lo, double t_hi) const;

    double equilibrium_density() const;

private:
    struct Impl;
    const Space* space_;
    Method method_;
    std::vector<char> dirichlet_;
    std::unique_ptr<Impl> impl_;
};

struct GreenResult {
    ScalarField g;
    VertexId pole = 0;
    int iterations = 0;
    double residual = 0.0;
};

/// Dirichlet-shell Green function: solves L G = -delta_x / mu(x) with G = 0
/// on {point distance >= shell_radius} and the space boundary.
GreenResult green_shell(const Space& s, VertexId pole, double shell_radius, double tol = 1e-10,
                        int max_iter = 200000);

/// Radial-model Green profile (exact): G(r) = (r^{2-N} - R^{2-N}) / ((N-2) m_Z)
/// for the cone model; shell at R.
ScalarField green_shell_radial(const Space& s, double shell_radius);

/// Quasi Green function: the kernel time integral from eps on.
HeatKernelEngine::TimeIntegral quasi_green(const HeatKernelEngine& engine, VertexId x, double eps,
                                           double t_max);

enum class Parabolicity { nonparabolic, parabolic, inconclusive };

struct ParabolicityReport {
    Parabolicity classification = Parabolicity::inconclusive;
    double integral = 0.0;        // int_1^sMax s / m(B_s) ds
    double growth_exponent = 0.0; // fitted lambda of m(B_s) ~ s^lambda
    double tail_ratio = 0.0;      // ratio of the last two dyadic integral increments
};

/// Classifies by the convergence behaviour of int s/m(B_s) ds: volume growth
/// exponent with a +-0.3 margin, dyadic tail decay as the borderline
/// tie-break (exponent 2 itself diverges).
ParabolicityReport nonparabolic_test(const Space& s, VertexId center, double s_max,
                                     double margin = 0.3);

struct SandwichReport {
    double c_fit = 1.0;
    bool holds = false;
    std::vector<double> lower;  // integral bound per y
    std::vector<double> upper;
};

/// Two-sided Green sandwich: smallest C >= 1 with C^{-1} I(d) <= G <= C I(d),
/// I(d) = int_d^infty s/m(B_s) ds (trapezoid plus fitted power-law tail).
SandwichReport green_sandwich_check(const Space& s, VertexId x, const ScalarField& g,
                                    std::span<const VertexId> y_grid, double ceiling = 25.0);

struct GreenExteriorResult {
    ScalarField u;             // lambda * G
    double lambda = 0.0;
    double harmonic_residual = 0.0;
    double min_on_boundary = 0.0;  // of lambda * G over the obstacle boundary layer
};

/// Cor-style solution of (P) from a Green function: lambda = 1/min over the
/// obstacle boundary of G.
GreenExteriorResult green_as_exterior_solution(const Space& s, const ScalarField& g,
                                               const std::vector<char>& omega_c, VertexId pole);

/// Adaptive Simpson quadrature of t -> f(t) on [t_lo, t_hi] after the
/// substitution t = e^tau; oracle route for kernel time integrals.
double integrate_log_time(const std::function<double(double)>& f, double t_lo, double t_hi,
                          double tol = 1e-10);

}  // namespace ubeta
