#pragma once

#include <cstdint>
#include <vector>

#include "ubeta/space.hpp"

namespace ubeta {

/// A continuous position in a space's chart coordinates (radial: {r};
/// lattice: N coordinates; cone/cylinder: {radial or axial, arc}).
struct ChartPoint {
    std::vector<double> coords;
};

/// Exact distance between chart points under the chart metric.
double chart_point_distance(const Space& s, const ChartPoint& a, const ChartPoint& b);

/// Multilinear interpolation of a vertex field at a chart point.
double chart_value(const Space& s, const ScalarField& f, const ChartPoint& p);

struct Trajectory {
    VertexId start = 0;
    std::vector<double> times;
    std::vector<ChartPoint> points;
    std::vector<double> u_values;
    int steps = 0;
    int rejected = 0;
    bool exited = false;    // left the region before t_end
    bool stagnated = false; // |grad u| below the floor
    double exit_time = 0.0;
};

/// Integrates the flow of -grad u from a vertex by adaptive 4th/5th order
/// Runge-Kutta: scalar ODE on radial backends, multilinear chart
/// interpolation on structured graphs. Negative t_end integrates backwards.
/// Stops when u leaves (u_stop_lo, u_stop_hi) or the position leaves the chart.
Trajectory integrate_flow(const Space& s, const ScalarField& u, VertexId start, double t_end,
                          double rel_tol = 0.0, double u_stop_lo = -1e300,
                          double u_stop_hi = 1e300);

/// Flows x onto the level set {u = level}: F_{(1/2) log(u(x)/T)}(x).
ChartPoint projection(const Space& s, const ScalarField& u, double level, VertexId x,
                      double rel_tol = 0.0);

struct PushforwardCheck {
    double ratio = 0.0;     // m(A_{e^{2t} a, b}) / m(A_{a, e^{-2t} b})
    double expected = 0.0;  // e^{N t}
    std::size_t upper_count = 0;
    std::size_t lower_count = 0;
};

/// Annulus-mass scaling under the flow, by direct vertex-measure sums on
/// u-level annuli A_{alpha,beta} = {alpha < u < beta}.
PushforwardCheck measure_pushforward_check(const Space& s, const ScalarField& u, double t, double a,
                                           double b);

struct DisintegrationHistogram {
    std::vector<double> bin_edges;
    std::vector<double> density;    // measure-weighted, normalized
    std::vector<double> reference;  // c r^{N/2-1}, normalized on the annulus
    double ks_distance = 0.0;
    double empty_fraction = 0.0;
};

/// Histogram of the field's pushforward of the measure on {a < u < b}
/// against the r^{N/2-1} density, with the Kolmogorov-Smirnov distance of the
/// weighted empirical CDF.
DisintegrationHistogram disintegration_histogram(const Space& s, const ScalarField& u, double a,
                                                 double b, std::size_t bins);

}  // namespace ubeta
