#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ubeta {

/// Thrown when an operation's stated preconditions are violated.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when an iterative solver fails to reach its tolerance.
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using VertexId = std::int64_t;

enum class Backend { graph, radial };

struct Vertex {
    std::vector<double> pos;  // optional; empty for abstract graphs
    double measure = 0.0;
};

struct Edge {
    VertexId a = 0;
    VertexId b = 0;           // each undirected edge stored once
    double weight = 0.0;
    double length = 0.0;
};

/// Structured-grid metadata attached by the builders. Flow integration and
/// exact point metrics need to know how vertex indices map to coordinates;
/// abstract graphs have kind == none and fall back to shortest paths.
struct Chart {
    enum class Kind { none, lattice, cone, cylinder, radial };
    Kind kind = Kind::none;
    // Per-axis sorted coordinate arrays. Vertex index is row-major with the
    // last axis fastest. lattice: N spatial axes. cone: {radius, arc on Z}.
    // cylinder: {axial position, arc}. radial: {radius}.
    std::vector<std::vector<double>> axes;
    bool wrap_last = false;    // last axis periodic (cone over a full circle, cylinder)
    double wrap_period = 0.0;  // total arc length of the periodic axis

    std::size_t axis_count() const { return axes.size(); }
    std::size_t index_of(std::span<const std::size_t> multi) const;
    std::vector<std::size_t> multi_of(std::size_t index) const;
};

/// A metric measure space: a weighted graph (vertices with measures, edges
/// with weights and lengths) or an analytic radial model of an N-cone.
/// Immutable after finalize(); safe to share across threads.
class Space {
public:
    Backend backend = Backend::graph;
    double dim = 0.0;                 // dimension parameter N
    std::string label;
    double cross_section_mass = 0.0;  // radial backend: m_Z(Z)
    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    Chart chart;

    struct Half {
        VertexId to;
        double weight;
        double length;
    };

    Space() = default;
    Space(Space&& other) noexcept { *this = std::move(other); }
    Space& operator=(Space&& other) noexcept {
        if (this != &other) {
            backend = other.backend;
            dim = other.dim;
            label = std::move(other.label);
            cross_section_mass = other.cross_section_mass;
            vertices = std::move(other.vertices);
            edges = std::move(other.edges);
            chart = std::move(other.chart);
            adj_offsets_ = std::move(other.adj_offsets_);
            adj_ = std::move(other.adj_);
            boundary_ = std::move(other.boundary_);
            total_mass_ = other.total_mass_;
            dist_cache_ = std::move(other.dist_cache_);
        }
        return *this;
    }
    Space(const Space&) = delete;
    Space& operator=(const Space&) = delete;

    /// Builds adjacency and validates invariants (positivity, connectivity).
    void finalize();

    std::size_t size() const { return vertices.size(); }
    double measure(VertexId v) const { return vertices[static_cast<std::size_t>(v)].measure; }
    double total_mass() const { return total_mass_; }
    std::span<const Half> neighbors(VertexId v) const;
    std::size_t degree(VertexId v) const;
    bool is_boundary(VertexId v) const { return boundary_[static_cast<std::size_t>(v)] != 0; }
    const std::vector<char>& boundary_mask() const { return boundary_; }

    /// Shortest-path distance over edge lengths; infinity if disconnected.
    /// Distances are cached per source under a lock.
    double geodesic_distance(VertexId a, VertexId b) const;
    std::shared_ptr<const std::vector<double>> geodesic_from(VertexId source) const;

    /// Shortest-path distances restricted to a vertex subset (no caching).
    std::vector<double> geodesic_from_restricted(VertexId source, const std::vector<char>& allowed) const;

    /// Point metric used for balls and decay radii: exact chart metric when a
    /// chart is present (lattice/cylinder/cone/radial), Euclidean when raw
    /// positions exist, shortest paths otherwise.
    double point_distance(VertexId a, VertexId b) const;
    bool has_point_metric() const;

    VertexId nearest_vertex(std::span<const double> pos) const;

    /// Radial backend: sample radii (ascending) and their index range.
    double r_min() const;
    double r_max() const;

    void set_boundary(std::vector<char> mask) { boundary_ = std::move(mask); }

    static constexpr double infinite_distance = 1e300;

private:
    std::vector<std::size_t> adj_offsets_;
    std::vector<Half> adj_;
    std::vector<char> boundary_;
    double total_mass_ = 0.0;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<VertexId, std::shared_ptr<const std::vector<double>>> dist_cache_;
};

/// Analytic radial profile: value, first and (optional) second derivative as
/// functions of the radius. Attached to fields produced by radial solvers.
struct RadialProfile {
    std::function<double(double)> value;
    std::function<double(double)> deriv;
    std::function<double(double)> second;  // may be null
};

/// Real values over a space's vertices with a domain mask. On radial
/// backends an analytic profile may accompany the samples.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Space& s);
    ScalarField(const Space& s, double fill);

    const Space& space() const { return *space_; }
    bool attached() const { return space_ != nullptr; }

    double operator[](VertexId v) const { return values_[static_cast<std::size_t>(v)]; }
    double& operator[](VertexId v) { return values_[static_cast<std::size_t>(v)]; }
    bool defined(VertexId v) const { return mask_[static_cast<std::size_t>(v)] != 0; }
    void set_defined(VertexId v, bool on) { mask_[static_cast<std::size_t>(v)] = on ? 1 : 0; }
    void set(VertexId v, double x) {
        values_[static_cast<std::size_t>(v)] = x;
        mask_[static_cast<std::size_t>(v)] = 1;
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }
    const std::vector<char>& mask() const { return mask_; }
    std::vector<char>& mask() { return mask_; }

    /// Vertices whose full stencil (self and all neighbors) is defined.
    std::vector<char> stencil_interior() const;

    std::optional<RadialProfile> profile;

private:
    const Space* space_ = nullptr;
    std::vector<double> values_;
    std::vector<char> mask_;
};

// ---- canonical example builders -------------------------------------------

/// Cubic lattice patch of R^N centered at the origin: spacing h, coordinates
/// -extent..extent per axis, nearest-neighbor edges with weight h^{N-2},
/// measure h^N, length h.
Space build_lattice(int n_dim, double extent, double h,
                    std::size_t vertex_budget = (std::size_t{1} << 22));

struct ConeCrossSection {
    enum class Kind { circle, sphere, graph };
    Kind kind = Kind::circle;
    double circle_angle = 0.0;    // total angle in (0, 2*pi]
    double sphere_factor = 0.0;   // sphere radius factor in (0, 1]
    const Space* graph = nullptr; // custom cross-section graph

    static ConeCrossSection circle(double angle);
    static ConeCrossSection sphere(double factor);
    static ConeCrossSection custom(const Space& z);
};

/// Euclidean N-cone over a cross-section, truncated to radii [r_min, r_max].
/// Graph backend: product mesh of geometric radial shells and cross-section
/// samples approximating measure t^{N-1} dt x m_Z and the cone metric.
/// Radial backend (homogeneous cross-sections): stores m_Z(Z) and the sample
/// radii only.
Space build_cone(double n_dim, const ConeCrossSection& cs, double r_min, double r_max,
                 int radial_steps, Backend backend = Backend::graph,
                 int cross_section_samples = 0);

/// Flat product R x S^1 patch with spacing ~h.
Space build_cylinder(double circumference, double length, double h,
                     std::size_t vertex_budget = (std::size_t{1} << 22));

// ---- measure / distance primitives ----------------------------------------

/// Mass of the closed ball of radius r around `center` in the point metric.
double ball_mass(const Space& s, VertexId center, double r);

/// (r, m(B_r)/r^N) along r_grid. Radii beyond the safe extent are flagged by
/// the returned `contaminated` bits rather than rejected.
struct VolumeProfilePoint {
    double r;
    double ratio;
    bool contaminated;
};
std::vector<VolumeProfilePoint> bishop_gromov_profile(const Space& s, VertexId center,
                                                      std::span<const double> r_grid);

double avr_estimate(const Space& s, VertexId center);

/// Largest radius around `center` free of boundary contamination.
double safe_extent(const Space& s, VertexId center);

// ---- differential primitives ----------------------------------------------

/// (1/mu(x)) sum_y w_xy (f(y)-f(x)); defined on the stencil interior.
ScalarField laplacian(const Space& s, const ScalarField& f);

/// sqrt( sum_y w_xy (f(y)-f(x))^2 / (2 mu(x)) ).
ScalarField gradient_norm(const Space& s, const ScalarField& f);

/// sum over undirected edges (within `region` when given) of w (f(a)-f(b))^2.
/// Equals the integral of |grad f|^2 dm on the whole graph.
double dirichlet_energy(const Space& s, const ScalarField& f,
                        const std::vector<char>* region = nullptr);

/// Discrete inner product of gradients at x: sum_y w_xy (u_y-u_x)(g_y-g_x) / (2 mu(x)).
double grad_inner(const Space& s, const ScalarField& u, const ScalarField& g, VertexId x);

// ---- misc helpers ----------------------------------------------------------

std::vector<char> ball_set(const Space& s, VertexId center, double r);

}  // namespace ubeta
