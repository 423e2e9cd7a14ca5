#include "ubeta/monotone.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

namespace ubeta {

namespace {

constexpr double kGradFloor = 1e-12;
constexpr double kUFloor = 1e-14;

double kappa(double n) { return (n - 1.0) / (n - 2.0); }

double hat(double s, double eps) {
    double a = std::abs(s) / eps;
    return a >= 1.0 ? 0.0 : (1.0 - a) / eps;
}

struct RadialLevel {
    double r = 0.0;
    double grad = 0.0;
    double per = 0.0;
};

// level radius of a decreasing radial profile: u(r) = t
double radial_level_radius(const Space& s, const RadialProfile& p, double t) {
    double lo = s.r_min(), hi = s.r_max();
    double ulo = p.value(lo), uhi = p.value(hi);
    if (!((t <= ulo && t >= uhi) || (t >= ulo && t <= uhi)))
        throw PreconditionError("level outside the radial field's range");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double um = p.value(mid);
        bool left = (ulo >= uhi) ? (um >= t) : (um <= t);
        if (left)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

RadialLevel radial_level(const ScalarField& u, double t) {
    const Space& s = u.space();
    RadialLevel out;
    out.r = radial_level_radius(s, *u.profile, t);
    out.grad = std::abs(u.profile->deriv(out.r));
    out.per = s.cross_section_mass * std::pow(out.r, s.dim - 1.0);
    return out;
}

// numerical derivative of a profile-composed function
template <typename F>
double num_deriv(F&& f, double r) {
    double h = std::max(1e-7, 1e-6 * r);
    return (f(r + h) - f(r - h)) / (2.0 * h);
}

// radial shell density m_Z r^{N-1}
double shell_density(const Space& s, double r) {
    return s.cross_section_mass * std::pow(r, s.dim - 1.0);
}

int env_threads() {
    if (const char* env = std::getenv("UBETA_THREADS")) {
        int k = std::atoi(env);
        if (k >= 1) return k;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

template <typename Fn>
void parallel_for_index(std::size_t count, Fn&& fn) {
    int workers = std::min<std::size_t>(env_threads(), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> futs;
    std::size_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        futs.push_back(std::async(std::launch::async, [lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        }));
    }
    for (auto& f : futs) f.get();
}

}  // namespace

double harmonic_exponent_constant(double beta, double n_dim) {
    if (!(beta > 0.0)) throw PreconditionError("harmonic_exponent_constant: beta must be positive");
    return 4.0 / beta * (beta - (n_dim - 2.0) / (n_dim - 1.0));
}

std::vector<char> level_set(const ScalarField& u, double t) {
    std::vector<char> out(u.space().size(), 0);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (u.defined(static_cast<VertexId>(i)) && u[static_cast<VertexId>(i)] < t) ? 1 : 0;
    return out;
}

double perimeter(const ScalarField& u, double t) {
    const Space& s = u.space();
    if (s.backend == Backend::radial && u.profile) return radial_level(u, t).per;
    ScalarField g = gradient_norm(s, u);
    double acc = 0.0;
    for (const auto& e : s.edges) {
        if (!u.defined(e.a) || !u.defined(e.b)) continue;
        double ua = u[e.a], ub = u[e.b];
        bool cross = (ua < t && t <= ub) || (ub < t && t <= ua);
        if (!cross) continue;
        if (!g.defined(e.a) || !g.defined(e.b)) continue;
        double lo = std::min(ua, ub), hi = std::max(ua, ub);
        double theta = (t - lo) / (hi - lo);
        double ga = ua < ub ? g[e.a] : g[e.b];
        double gb = ua < ub ? g[e.b] : g[e.a];
        if (ga < kGradFloor || gb < kGradFloor) continue;
        double gc = 1.0 / ((1.0 - theta) / ga + theta / gb);
        acc += e.weight * std::abs(ub - ua) / gc;
    }
    return acc;
}

double u_beta(const ScalarField& u, double beta, double t, LevelEstimator est, double eps) {
    if (!(beta > -2.0)) throw PreconditionError("u_beta: beta <= -2");
    const Space& s = u.space();
    const double k = kappa(s.dim);
    const double scale = std::pow(t, -beta * k);

    if (s.backend == Backend::radial && u.profile) {
        auto lev = radial_level(u, t);
        return scale * std::pow(lev.grad, beta + 1.0) * lev.per;
    }

    ScalarField g = gradient_norm(s, u);
    if (est == LevelEstimator::cut_edge) {
        double acc = 0.0;
        for (const auto& e : s.edges) {
            if (!u.defined(e.a) || !u.defined(e.b)) continue;
            double ua = u[e.a], ub = u[e.b];
            bool cross = (ua < t && t <= ub) || (ub < t && t <= ua);
            if (!cross) continue;
            if (!g.defined(e.a) || !g.defined(e.b)) continue;
            double lo = std::min(ua, ub), hi = std::max(ua, ub);
            double theta = (t - lo) / (hi - lo);
            double ga = ua < ub ? g[e.a] : g[e.b];
            double gb = ua < ub ? g[e.b] : g[e.a];
            if (ga < kGradFloor || gb < kGradFloor) continue;
            double gc = 1.0 / ((1.0 - theta) / ga + theta / gb);
            acc += e.weight * std::abs(ub - ua) * std::pow(gc, beta);
        }
        return scale * acc;
    }
    if (!(eps > 0.0)) throw PreconditionError("u_beta: mollified estimator needs eps > 0");
    double min_spacing = std::numeric_limits<double>::max();
    for (const auto& e : s.edges) {
        if (!u.defined(e.a) || !u.defined(e.b)) continue;
        double du = std::abs(u[e.a] - u[e.b]);
        if (du > 0.0) min_spacing = std::min(min_spacing, du);
    }
    if (eps < min_spacing)
        throw PreconditionError("u_beta: mollifier width below grid resolution");
    auto interior = u.stencil_interior();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!interior[i]) continue;
        const auto v = static_cast<VertexId>(i);
        double w = hat(u[v] - t, eps);
        if (w == 0.0) continue;
        acc += s.measure(v) * w * std::pow(g[v], beta + 2.0);
    }
    return scale * acc;
}

DerivativeEstimate u_beta_derivative(const ScalarField& u, double beta, double t, double eps) {
    const Space& s = u.space();
    const double k = kappa(s.dim);
    DerivativeEstimate out;

    if (s.backend == Backend::radial && u.profile) {
        const auto& p = *u.profile;
        auto lev = radial_level(u, t);
        auto gfun = [&](double r) {
            return std::pow(std::abs(p.deriv(r)), beta) / std::pow(std::max(p.value(r), kUFloor), beta * k);
        };
        // grad u / |grad u| = -e_r for a decaying profile
        double sgn = p.deriv(lev.r) < 0.0 ? -1.0 : 1.0;
        out.flux = sgn * num_deriv(gfun, lev.r) * lev.per;
        return out;
    }

    if (!(eps > 0.0)) throw PreconditionError("u_beta_derivative: needs eps > 0");
    ScalarField g = gradient_norm(s, u);
    ScalarField gfield(s);
    auto interior = u.stencil_interior();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!interior[i] || !g.defined(static_cast<VertexId>(i))) continue;
        const auto v = static_cast<VertexId>(i);
        if (g[v] < kGradFloor) {
            ++out.excluded;
            continue;
        }
        double uv = std::max(u[v], kUFloor);
        gfield.set(v, std::pow(g[v], beta) / std::pow(uv, beta * k));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        if (!gfield.defined(v)) continue;
        double w = hat(u[v] - t, eps);
        if (w == 0.0) continue;
        // full gradient stencil for g required
        bool ok = true;
        for (const auto& h : s.neighbors(v))
            if (!gfield.defined(h.to)) {
                ok = false;
                break;
            }
        if (!ok) {
            ++out.excluded;
            continue;
        }
        acc += s.measure(v) * w * grad_inner(s, u, gfield, v);
    }
    out.flux = acc;
    return out;
}

double second_order_lower_bound(const ScalarField& u, double beta, double t) {
    const Space& s = u.space();
    const double n = s.dim;
    if (!(n > 2.0)) throw PreconditionError("second_order_lower_bound: N <= 2");
    const double beta_min = (n - 2.0) / (n - 1.0);
    if (beta < beta_min - 1e-12)
        throw PreconditionError("second_order_lower_bound: beta below (N-2)/(N-1)");
    if (std::abs(beta - beta_min) < 1e-12) return 0.0;  // taken to be 0 at the endpoint
    const double c = harmonic_exponent_constant(beta, n);
    const double expo = 1.0 / (2.0 - n);

    if (s.backend == Backend::radial && u.profile) {
        const auto& p = *u.profile;
        auto vprime = [&](double r) {
            double uv = std::max(p.value(r), kUFloor);
            return expo * std::pow(uv, expo - 1.0) * p.deriv(r);
        };
        auto w = [&](double r) { return std::pow(std::abs(vprime(r)), beta / 2.0); };
        double r_t = radial_level_radius(s, p, t);
        double lo = r_t, hi = s.r_max();
        if (!(hi > lo)) return 0.0;
        int steps = 256;
        double acc = 0.0;
        for (int i = 0; i < steps; ++i) {
            double a = lo + (hi - lo) * i / steps;
            double b = lo + (hi - lo) * (i + 1) / steps;
            auto f = [&](double r) {
                double wp = num_deriv(w, r);
                return shell_density(s, r) * std::pow(std::max(p.value(r), kUFloor), 2.0) * wp * wp;
            };
            acc += 0.5 * (f(a) + f(b)) * (b - a);
        }
        return c / (t * t) * acc;
    }

    ScalarField v(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!u.defined(x)) continue;
        v.set(x, std::pow(std::max(u[x], kUFloor), expo));
    }
    ScalarField gv = gradient_norm(s, v);
    ScalarField w(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (gv.defined(x)) w.set(x, std::pow(gv[x], beta / 2.0));
    }
    ScalarField gw = gradient_norm(s, w);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!gw.defined(x) || !u.defined(x)) continue;
        if (u[x] >= t) continue;
        acc += s.measure(x) * u[x] * u[x] * gw[x] * gw[x];
    }
    return c / (t * t) * acc;
}

MonotoneReport monotonicity_report(const ScalarField& u, double beta, std::span<const double> t_grid) {
    if (t_grid.size() < 5) throw PreconditionError("monotonicity_report: grid too coarse (< 5 points)");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw PreconditionError("monotonicity_report: tGrid must be increasing");
    const Space& s = u.space();
    double umin = std::numeric_limits<double>::max(), umax = -umin;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        if (!u.defined(v)) continue;
        umin = std::min(umin, u[v]);
        umax = std::max(umax, u[v]);
    }
    if (!(t_grid.front() > umin && t_grid.back() < umax))
        throw PreconditionError("monotonicity_report: tGrid outside the interior of the field's range");

    MonotoneReport rep;
    rep.beta = beta;
    rep.t_grid.assign(t_grid.begin(), t_grid.end());
    const std::size_t m = t_grid.size();
    rep.u.assign(m, 0.0);
    rep.uprime_flux.assign(m, 0.0);
    rep.uprime_fd.assign(m, 0.0);
    rep.lower_bound.assign(m, 0.0);
    std::vector<double> u_moll(m, 0.0);
    const double eps = 2.0 * (t_grid[1] - t_grid[0]);

    parallel_for_index(m, [&](std::size_t i) {
        double t = rep.t_grid[i];
        rep.u[i] = u_beta(u, beta, t, LevelEstimator::cut_edge);
        u_moll[i] = (s.backend == Backend::radial && u.profile)
                        ? rep.u[i]
                        : u_beta(u, beta, t, LevelEstimator::mollified, eps);
        rep.uprime_flux[i] = u_beta_derivative(u, beta, t, eps).flux;
        rep.lower_bound[i] = second_order_lower_bound(u, beta, t);
    });

    for (std::size_t i = 0; i < m; ++i) {
        if (i == 0)
            rep.uprime_fd[i] = (rep.u[1] - rep.u[0]) / (rep.t_grid[1] - rep.t_grid[0]);
        else if (i + 1 == m)
            rep.uprime_fd[i] = (rep.u[m - 1] - rep.u[m - 2]) / (rep.t_grid[m - 1] - rep.t_grid[m - 2]);
        else
            rep.uprime_fd[i] = (rep.u[i + 1] - rep.u[i - 1]) / (rep.t_grid[i + 1] - rep.t_grid[i - 1]);
    }

    std::vector<double> diffs;
    for (std::size_t i = 0; i < m; ++i) diffs.push_back(std::abs(rep.u[i] - u_moll[i]));
    std::sort(diffs.begin(), diffs.end());
    rep.estimator_disagreement = diffs[m / 2];
    std::vector<double> us = rep.u;
    std::sort(us.begin(), us.end());
    double median_u = us[m / 2];
    rep.slack = std::max(0.02 * median_u, 10.0 * rep.estimator_disagreement);

    rep.monotone = true;
    for (std::size_t i = 0; i + 1 < m; ++i)
        if (rep.u[i + 1] < rep.u[i] - rep.slack) rep.monotone = false;

    rep.uprime_t2_monotone = true;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        double a = rep.uprime_flux[i] * rep.t_grid[i] * rep.t_grid[i];
        double b = rep.uprime_flux[i + 1] * rep.t_grid[i + 1] * rep.t_grid[i + 1];
        if (b < a - rep.slack) rep.uprime_t2_monotone = false;
    }

    rep.sup_below_half = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        if (rep.t_grid[i] < 0.5) rep.sup_below_half = std::max(rep.sup_below_half, rep.u[i]);
    return rep;
}

DecayCheck decay_check(const ScalarField& u, VertexId x0, const std::vector<char>& region,
                       double grad_ceiling, double upper_ceiling) {
    const Space& s = u.space();
    const double n = s.dim;
    DecayCheck out;

    auto dist = [&](VertexId x) {
        if (s.backend == Backend::radial) return s.vertices[static_cast<std::size_t>(x)].pos[0];
        return s.point_distance(x0, x);
    };

    double delta = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!u.defined(x) || !region[i]) continue;
        if (u[x] <= 0.5) delta = std::min(delta, dist(x));
    }
    if (delta == std::numeric_limits<double>::max())
        throw PreconditionError("decay_check: {u <= 1/2} is empty within the region");
    out.delta = std::min(delta, 1.0);

    // pointwise lower bound (delta^{N-2}/2) d^{2-N}
    double worst_margin = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!region[i] || !u.defined(x)) continue;
        double d = dist(x);
        if (!(d > 0.0)) continue;
        double bound = 0.5 * std::pow(out.delta, n - 2.0) * std::pow(d, 2.0 - n);
        if (bound <= 0.0) continue;
        worst_margin = std::min(worst_margin, u[x] / bound);
    }
    out.worst_lower_margin = worst_margin;
    out.lower_ok = worst_margin >= 1.0;

    // gradient constant of |grad u| / u <= C / d
    ScalarField g = gradient_norm(s, u);
    double c = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!region[i] || !g.defined(x) || !u.defined(x)) continue;
        if (u[x] <= kUFloor) continue;
        c = std::max(c, g[x] / u[x] * dist(x));
    }
    out.grad_c = c;
    out.grad_ok = c <= grad_ceiling;

    // integral upper bound with the ball-mass profile around x0
    double d_max = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (region[i]) d_max = std::max(d_max, dist(static_cast<VertexId>(i)));
    VertexId center = s.backend == Backend::radial ? VertexId{0} : x0;
    const int samples = 32;
    std::vector<double> rs(samples), ms(samples);
    for (int k = 0; k < samples; ++k) {
        rs[static_cast<std::size_t>(k)] = d_max * (k + 1) / samples;
        ms[static_cast<std::size_t>(k)] =
            s.backend == Backend::radial
                ? s.cross_section_mass * std::pow(rs[static_cast<std::size_t>(k)], n) / n
                : ball_mass(s, center, rs[static_cast<std::size_t>(k)]);
    }
    double m1 = s.backend == Backend::radial ? s.cross_section_mass / n : ball_mass(s, center, 1.0);
    // power-law fit on the upper half for the tail
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int k2 = 0;
    for (int k = samples / 2; k < samples; ++k) {
        double lx = std::log(rs[static_cast<std::size_t>(k)]);
        double ly = std::log(ms[static_cast<std::size_t>(k)]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++k2;
    }
    double lambda = n, cpow = ms.back() / std::pow(rs.back(), n);
    if (k2 >= 2) {
        double det = k2 * sxx - sx * sx;
        lambda = (k2 * sxy - sx * sy) / det;
        cpow = std::exp((sxx * sy - sx * sxy) / det);
    }
    auto upper_integral = [&](double d) {
        double acc = 0.0;
        for (int k = 1; k < samples; ++k) {
            double a = rs[static_cast<std::size_t>(k - 1)], b = rs[static_cast<std::size_t>(k)];
            if (b <= d) continue;
            double lo = std::max(a, d);
            double fa = a * m1 / ms[static_cast<std::size_t>(k - 1)];
            double fb = b * m1 / ms[static_cast<std::size_t>(k)];
            double flo = fa + (fb - fa) * (lo - a) / (b - a);
            acc += 0.5 * (flo + fb) * (b - lo);
        }
        if (lambda > 2.0)
            acc += m1 * std::pow(d_max, 2.0 - lambda) / (cpow * (lambda - 2.0));
        return acc;
    };
    double c2 = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!region[i] || !u.defined(x)) continue;
        double d = dist(x);
        if (!(d > 0.0)) continue;
        double bound = upper_integral(d);
        if (bound > 0.0) c2 = std::max(c2, u[x] / bound);
    }
    out.upper_c2 = c2;
    out.upper_ok = c2 > 0.0 && c2 <= upper_ceiling;
    return out;
}

}  // namespace ubeta
