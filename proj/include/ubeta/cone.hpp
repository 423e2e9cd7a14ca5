#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ubeta/space.hpp"

namespace ubeta {

/// sqrt(s^2 + t^2 - 2 s t cos(d_Z ^ pi)).
double cone_distance(double t, double s, double d_z);

/// t^{N-1}.
double cone_measure_density(double t, double n_dim);

struct RigidityResidual {
    double laplacian_sup = 0.0;  // sup |Delta U - N| over the trimmed region
    double laplacian_l2 = 0.0;   // measure-weighted rms
    double eikonal_sup = 0.0;    // sup ||grad sqrt(2U)|^2 - 1|
    double eikonal_l2 = 0.0;
    double c0 = 0.0;             // fitted normalization (region mean of |grad v|^2)
    std::size_t region_size = 0;
    std::size_t trimmed = 0;     // vertices dropped for contaminated stencils
};

/// Residuals of the cone equations Delta U = N, |grad sqrt(2U)|^2 = 1 for
/// U = v^2 / (2 C0), v = u^{1/(2-N)}. When `field_is_cone_potential` the
/// field is taken as U directly and C0 = 1.
RigidityResidual rigidity_residual(const Space& s, const ScalarField& u,
                                   const std::vector<char>& region, double n_dim,
                                   bool field_is_cone_potential = false);

struct CosineCheckResult {
    double max_residual = 0.0;  // worst relative residual over accepted pairs
    std::size_t pairs_checked = 0;
    std::size_t pairs_skipped = 0;  // beyond the locality radius
};

/// Splitting identity on the exact N-dimensional model: random local pairs
/// x, y with U = |p|^2/2, Pr the radial projection to {U = T}.
CosineCheckResult cosine_check_exact(int n_dim, double level, std::size_t pair_count,
                                     double max_separation, std::uint64_t seed = 0);

/// Splitting identity on a charted graph carrying a cone potential field:
///   d(x,y)^2 = 2u(x) + 2u(y) - 4 sqrt(u(x)u(y)) (1 - d(Pr x, Pr y)^2 / (4T)).
CosineCheckResult cosine_check(const Space& s, const ScalarField& cone_u, double level,
                               std::size_t pair_count, double locality_radius,
                               std::uint64_t seed = 0);

struct CrossSectionSample {
    double level = 0.0;
    double bandwidth = 0.0;
    std::vector<VertexId> band;
    struct Pair {
        VertexId a = 0;
        VertexId b = 0;
        double ambient = 0.0;     // d
        double intrinsic = 0.0;   // d' within the band
        double rescaled = 0.0;    // d' / sqrt(2T)
    };
    std::vector<Pair> pairs;
    bool connected = true;
};

/// Level-band sample of {U = T} with intrinsic (in-band shortest path)
/// distances.
CrossSectionSample cross_section(const Space& s, const ScalarField& cone_u, double level,
                                 std::size_t sample_count, std::uint64_t seed = 0);

struct DdPrimeCheck {
    double c_fit = 1.0;
    bool holds = false;
};

/// Two-sided comparison d <= d' <= c d over the sampled pairs.
DdPrimeCheck dd_prime_check(const CrossSectionSample& sample);

struct KatoCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Matrix form of the refined Kato inequality:
///   (t+n)/(t+n-1) |A v|^2 <= |v|^2 (tr A)^2 / t + |v|^2 |A|_HS^2.
/// A is symmetrized first (with `symmetrized` reporting whether that changed it).
KatoCheck kato_check(std::span<const double> a, std::size_t n, std::span<const double> v, double t,
                     bool* symmetrized = nullptr);

struct KatoSearch {
    double worst_ratio = 0.0;     // min rhs/lhs over raw random trials (>= 1 iff inequality holds)
    double sharpest_ratio = 0.0;  // after local refinement around the incumbent
    std::size_t trials = 0;
    std::size_t violations = 0;
};

/// Random sweep over Gaussian symmetric matrices and unit vectors, then a
/// local random-restart polish of the incumbent to expose near-equality.
KatoSearch kato_search(std::size_t n, std::size_t trials, std::span<const double> t_grid,
                       std::uint64_t seed = 0, bool refine = true);

}  // namespace ubeta
