#include "ubeta/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ubeta {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStagnationFloor = 1e-12;

double sq(double x) { return x * x; }

double wrap_gap(double a, double b, double period) {
    double d = std::abs(a - b);
    d = std::fmod(d, period);
    return std::min(d, period - d);
}

// cell lookup on a sorted axis: returns i with axis[i] <= x < axis[i+1];
// -1 when outside (unless the axis wraps)
std::ptrdiff_t locate(const std::vector<double>& axis, double x) {
    if (x < axis.front() || x > axis.back()) return -1;
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    std::ptrdiff_t i = std::distance(axis.begin(), it) - 1;
    if (i == static_cast<std::ptrdiff_t>(axis.size()) - 1) --i;
    return i;
}

struct Interpolant {
    const Space& s;
    const ScalarField& f;

    // multilinear value and chart-coordinate gradient; false when outside
    bool eval(const std::vector<double>& p, double& value, std::vector<double>* grad) const {
        const Chart& ch = s.chart;
        const std::size_t dims = ch.axes.size();
        std::vector<std::size_t> base(dims);
        std::vector<double> frac(dims), width(dims);
        for (std::size_t k = 0; k < dims; ++k) {
            const auto& ax = ch.axes[k];
            const bool wrap = ch.wrap_last && k + 1 == dims;
            double x = p[k];
            if (wrap) {
                x = std::fmod(x, ch.wrap_period);
                if (x < 0.0) x += ch.wrap_period;
                auto it = std::upper_bound(ax.begin(), ax.end(), x);
                std::ptrdiff_t i = std::distance(ax.begin(), it) - 1;
                if (i < 0) i = static_cast<std::ptrdiff_t>(ax.size()) - 1;
                base[k] = static_cast<std::size_t>(i);
                double lo = ax[base[k]];
                double hi = base[k] + 1 < ax.size() ? ax[base[k] + 1] : ax.front() + ch.wrap_period;
                width[k] = hi - lo;
                double dx = x - lo;
                if (dx < 0.0) dx += ch.wrap_period;
                frac[k] = dx / width[k];
            } else {
                auto i = locate(ax, x);
                if (i < 0) return false;
                base[k] = static_cast<std::size_t>(i);
                width[k] = ax[base[k] + 1] - ax[base[k]];
                frac[k] = (x - ax[base[k]]) / width[k];
            }
        }
        // accumulate over the 2^dims cell corners
        double val = 0.0;
        std::vector<double> g(dims, 0.0);
        const std::size_t corners = std::size_t{1} << dims;
        std::vector<std::size_t> multi(dims);
        for (std::size_t c = 0; c < corners; ++c) {
            double w = 1.0;
            for (std::size_t k = 0; k < dims; ++k) {
                bool hi = (c >> k) & 1u;
                std::size_t idx = base[k] + (hi ? 1 : 0);
                if (idx >= ch.axes[k].size()) {
                    if (ch.wrap_last && k + 1 == dims)
                        idx = 0;
                    else
                        return false;
                }
                multi[k] = idx;
                w *= hi ? frac[k] : (1.0 - frac[k]);
            }
            const auto vid = static_cast<VertexId>(ch.index_of(multi));
            if (!f.defined(vid)) return false;
            double fv = f[vid];
            val += w * fv;
            for (std::size_t k = 0; k < dims; ++k) {
                double gw = 1.0;
                for (std::size_t j = 0; j < dims; ++j) {
                    bool hi = (c >> j) & 1u;
                    if (j == k)
                        gw *= hi ? 1.0 : -1.0;
                    else
                        gw *= hi ? frac[j] : (1.0 - frac[j]);
                }
                g[k] += gw * fv / width[k];
            }
        }
        value = val;
        if (grad) *grad = g;
        return true;
    }
};

// contravariant metric factors: velocity_k = -g^{kk} (partial_k u)
void contravariant(const Space& s, const std::vector<double>& p, std::vector<double>& grad) {
    switch (s.chart.kind) {
        case Chart::Kind::cone: {
            double r = p[0];
            if (r > 0.0) grad[1] /= r * r;
            break;
        }
        default:
            break;  // lattice, cylinder: identity metric in chart coordinates
    }
}

}  // namespace

double chart_point_distance(const Space& s, const ChartPoint& a, const ChartPoint& b) {
    switch (s.chart.kind) {
        case Chart::Kind::radial:
            return std::abs(a.coords[0] - b.coords[0]);
        case Chart::Kind::lattice: {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.coords.size(); ++k) acc += sq(a.coords[k] - b.coords[k]);
            return std::sqrt(acc);
        }
        case Chart::Kind::cone: {
            double dz = s.chart.wrap_last ? wrap_gap(a.coords[1], b.coords[1], s.chart.wrap_period)
                                          : std::abs(a.coords[1] - b.coords[1]);
            double c = std::cos(std::min(dz, kPi));
            double t = a.coords[0], u = b.coords[0];
            return std::sqrt(std::max(0.0, t * t + u * u - 2.0 * t * u * c));
        }
        case Chart::Kind::cylinder: {
            double dx = a.coords[0] - b.coords[0];
            double darc = wrap_gap(a.coords[1], b.coords[1], s.chart.wrap_period);
            return std::sqrt(dx * dx + darc * darc);
        }
        case Chart::Kind::none:
            break;
    }
    throw PreconditionError("chart_point_distance: space has no chart");
}

double chart_value(const Space& s, const ScalarField& f, const ChartPoint& p) {
    if (s.backend == Backend::radial && f.profile) return f.profile->value(p.coords[0]);
    Interpolant interp{s, f};
    double v = 0.0;
    if (!interp.eval(p.coords, v, nullptr))
        throw PreconditionError("chart_value: point outside the chart");
    return v;
}

Trajectory integrate_flow(const Space& s, const ScalarField& u, VertexId start, double t_end,
                          double rel_tol, double u_stop_lo, double u_stop_hi) {
    const bool radial = s.backend == Backend::radial && u.profile.has_value();
    if (!radial && s.chart.kind == Chart::Kind::none)
        throw PreconditionError("integrate_flow: graph backend requires a structured chart");
    if (rel_tol <= 0.0) rel_tol = radial ? 1e-8 : 1e-5;

    Trajectory traj;
    traj.start = start;

    std::vector<double> pos;
    if (radial) {
        pos = {s.vertices[static_cast<std::size_t>(start)].pos[0]};
    } else {
        auto multi = s.chart.multi_of(static_cast<std::size_t>(start));
        pos.resize(multi.size());
        for (std::size_t k = 0; k < multi.size(); ++k) pos[k] = s.chart.axes[k][multi[k]];
    }

    Interpolant interp{s, u};
    auto velocity = [&](const std::vector<double>& p, std::vector<double>& v, double& uval) -> bool {
        if (radial) {
            double r = p[0];
            if (r < s.r_min() || r > s.r_max()) return false;
            uval = u.profile->value(r);
            v = {-u.profile->deriv(r)};
            return true;
        }
        std::vector<double> grad;
        if (!interp.eval(p, uval, &grad)) return false;
        contravariant(s, p, grad);
        v.resize(grad.size());
        for (std::size_t k = 0; k < grad.size(); ++k) v[k] = -grad[k];
        return true;
    };

    const double dir = t_end >= 0.0 ? 1.0 : -1.0;
    const double horizon = std::abs(t_end);
    double t = 0.0;
    double dt = std::min(0.01, horizon > 0.0 ? horizon / 8.0 : 0.01);
    std::vector<double> v0, vtmp, udummy_grad;
    double uval = 0.0;
    if (!velocity(pos, v0, uval)) throw PreconditionError("integrate_flow: start outside the region");
    traj.times.push_back(0.0);
    traj.points.push_back({pos});
    traj.u_values.push_back(uval);

    // Cash-Karp RK45 tableau
    static const double ca[6] = {0.0, 1.0 / 5, 3.0 / 10, 3.0 / 5, 1.0, 7.0 / 8};
    static const double cb[6][5] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {3.0 / 10, -9.0 / 10, 6.0 / 5},
        {-11.0 / 54, 5.0 / 2, -70.0 / 27, 35.0 / 27},
        {1631.0 / 55296, 175.0 / 512, 575.0 / 13824, 44275.0 / 110592, 253.0 / 4096}};
    static const double c5[6] = {37.0 / 378, 0.0, 250.0 / 621, 125.0 / 594, 0.0, 512.0 / 1771};
    static const double c4[6] = {2825.0 / 27648, 0.0,           18575.0 / 48384,
                                 13525.0 / 55296, 277.0 / 14336, 1.0 / 4};

    const std::size_t dims = pos.size();
    std::vector<std::vector<double>> k(6, std::vector<double>(dims));
    std::vector<double> trial(dims), p5(dims), p4(dims);

    int guard = 0;
    while (t < horizon * (1.0 - 1e-14)) {
        if (++guard > 2000000) throw SolverError("integrate_flow: step guard exceeded");
        dt = std::min(dt, horizon - t);
        bool ok = true;
        double utrial = 0.0;
        for (int stage = 0; stage < 6 && ok; ++stage) {
            for (std::size_t d0 = 0; d0 < dims; ++d0) {
                double acc = pos[d0];
                for (int j = 0; j < stage; ++j) acc += dir * dt * cb[stage][j] * k[j][d0];
                trial[d0] = acc;
            }
            (void)ca;
            ok = velocity(trial, k[static_cast<std::size_t>(stage)], utrial);
        }
        if (ok) {
            double err = 0.0;
            double scale = 0.0;
            for (std::size_t d0 = 0; d0 < dims; ++d0) {
                double acc5 = pos[d0], acc4 = pos[d0];
                for (int j = 0; j < 6; ++j) {
                    acc5 += dir * dt * c5[j] * k[j][d0];
                    acc4 += dir * dt * c4[j] * k[j][d0];
                }
                p5[d0] = acc5;
                p4[d0] = acc4;
                err += sq(acc5 - acc4);
                scale += sq(std::max(std::abs(pos[d0]), 1.0));
            }
            err = std::sqrt(err / scale);
            if (err > rel_tol) {
                ++traj.rejected;
                dt *= std::max(0.2, 0.9 * std::pow(rel_tol / err, 0.25));
                continue;
            }
            double unew = 0.0;
            std::vector<double> vnew;
            if (!velocity(p5, vnew, unew)) {
                // stepping out of the region: shrink toward the boundary
                if (dt < 1e-12) {
                    traj.exited = true;
                    traj.exit_time = dir * t;
                    break;
                }
                ++traj.rejected;
                dt *= 0.5;
                continue;
            }
            pos = p5;
            t += dt;
            ++traj.steps;
            traj.times.push_back(dir * t);
            traj.points.push_back({pos});
            traj.u_values.push_back(unew);
            if (unew <= u_stop_lo || unew >= u_stop_hi) {
                traj.exited = true;
                traj.exit_time = dir * t;
                break;
            }
            double vmag = 0.0;
            for (double c : vnew) vmag += c * c;
            if (std::sqrt(vmag) < kStagnationFloor) {
                traj.stagnated = true;
                break;
            }
            if (err > 0.0) dt *= std::min(5.0, 0.9 * std::pow(rel_tol / err, 0.2));
        } else {
            if (dt < 1e-12) {
                traj.exited = true;
                traj.exit_time = dir * t;
                break;
            }
            ++traj.rejected;
            dt *= 0.5;
        }
    }
    return traj;
}

ChartPoint projection(const Space& s, const ScalarField& u, double level, VertexId x,
                      double rel_tol) {
    double ux;
    if (s.backend == Backend::radial && u.profile)
        ux = u.profile->value(s.vertices[static_cast<std::size_t>(x)].pos[0]);
    else
        ux = u[x];
    if (!(ux > 0.0) || !(level > 0.0))
        throw PreconditionError("projection: field and level must be positive");
    double t_flow = 0.5 * std::log(ux / level);
    if (std::abs(t_flow) < 1e-15) {
        ChartPoint p;
        if (s.backend == Backend::radial)
            p.coords = {s.vertices[static_cast<std::size_t>(x)].pos[0]};
        else {
            auto multi = s.chart.multi_of(static_cast<std::size_t>(x));
            for (std::size_t k = 0; k < multi.size(); ++k) p.coords.push_back(s.chart.axes[k][multi[k]]);
        }
        return p;
    }
    auto traj = integrate_flow(s, u, x, t_flow, rel_tol);
    if (traj.exited || traj.points.empty())
        throw SolverError("projection: flow exited the region before reaching the level");
    return traj.points.back();
}

PushforwardCheck measure_pushforward_check(const Space& s, const ScalarField& u, double t, double a,
                                           double b) {
    if (!(a > 0.0) || !(b > a)) throw PreconditionError("measure_pushforward_check: need 0 < a < b");
    if (!(t > 0.0)) throw PreconditionError("measure_pushforward_check: t must be positive");
    const double e2t = std::exp(2.0 * t);
    PushforwardCheck out;
    out.expected = std::exp(s.dim * t);
    double upper = 0.0, lower = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!u.defined(x)) continue;
        double ux = u[x];
        if (ux > e2t * a && ux < b) {
            upper += s.measure(x);
            ++out.upper_count;
        }
        if (ux > a && ux < b / e2t) {
            lower += s.measure(x);
            ++out.lower_count;
        }
    }
    if (out.upper_count < 50 || out.lower_count < 50)
        throw PreconditionError("measure_pushforward_check: annuli under-resolved (< 50 vertices)");
    out.ratio = upper / lower;
    return out;
}

DisintegrationHistogram disintegration_histogram(const Space& s, const ScalarField& u, double a,
                                                 double b, std::size_t bins) {
    if (!(b > a) || bins < 4) throw PreconditionError("disintegration_histogram: bad annulus or bins");
    DisintegrationHistogram out;
    out.bin_edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k)
        out.bin_edges[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(bins);
    out.density.assign(bins, 0.0);
    out.reference.assign(bins, 0.0);

    std::vector<std::pair<double, double>> samples;  // (u, measure)
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!u.defined(x)) continue;
        double ux = u[x];
        if (ux <= a || ux >= b) continue;
        samples.emplace_back(ux, s.measure(x));
        total += s.measure(x);
        auto k = static_cast<std::size_t>((ux - a) / (b - a) * static_cast<double>(bins));
        if (k >= bins) k = bins - 1;
        out.density[k] += s.measure(x);
    }
    if (samples.empty()) throw PreconditionError("disintegration_histogram: empty annulus");

    const double nh = s.dim / 2.0;
    const double norm = std::pow(b, nh) - std::pow(a, nh);
    std::size_t empties = 0;
    for (std::size_t k = 0; k < bins; ++k) {
        double lo = out.bin_edges[k], hi = out.bin_edges[k + 1];
        out.reference[k] = (std::pow(hi, nh) - std::pow(lo, nh)) / norm;
        out.density[k] /= total;
        if (out.density[k] == 0.0) ++empties;
    }
    out.empty_fraction = static_cast<double>(empties) / static_cast<double>(bins);
    if (out.empty_fraction > 0.10)
        throw PreconditionError("disintegration_histogram: more than 10% empty bins");

    // KS distance of the weighted empirical CDF against (r^{N/2}-a^{N/2})/norm
    std::sort(samples.begin(), samples.end());
    double acc = 0.0, ks = 0.0;
    for (const auto& [uv, w] : samples) {
        double model = (std::pow(uv, nh) - std::pow(a, nh)) / norm;
        ks = std::max(ks, std::abs(acc - model));  // left limit
        acc += w / total;
        ks = std::max(ks, std::abs(acc - model));
    }
    out.ks_distance = ks;
    return out;
}

}  // namespace ubeta
