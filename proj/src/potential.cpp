#include "ubeta/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ubeta/solvers.hpp"

namespace ubeta {

namespace {

VertexId centroid_vertex(const Space& s, const std::vector<char>& set) {
    // measure-weighted representative: vertex of the set minimizing the
    // largest point distance to the rest of the set
    std::vector<VertexId> members;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i]) members.push_back(static_cast<VertexId>(i));
    if (members.empty()) throw PreconditionError("empty vertex set");
    if (members.size() == 1) return members[0];
    VertexId best = members[0];
    double best_ecc = std::numeric_limits<double>::max();
    for (VertexId c : members) {
        double ecc = 0.0;
        for (VertexId m : members) ecc = std::max(ecc, s.point_distance(c, m));
        if (ecc < best_ecc) {
            best_ecc = ecc;
            best = c;
        }
    }
    return best;
}

double set_diameter(const Space& s, const std::vector<char>& set) {
    double d = 0.0;
    std::vector<VertexId> members;
    for (std::size_t i = 0; i < set.size(); ++i)
        if (set[i]) members.push_back(static_cast<VertexId>(i));
    for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b)
            d = std::max(d, s.point_distance(members[a], members[b]));
    return d;
}

}  // namespace

ExteriorResult solve_exterior(const ExteriorProblemSpec& spec) {
    const Space& s = *spec.space;
    const auto n = s.size();
    if (spec.omega_c.size() != n) throw PreconditionError("solve_exterior: omega_c mask size mismatch");
    std::size_t obstacle_count = 0;
    for (char c : spec.omega_c) obstacle_count += c ? 1 : 0;
    if (obstacle_count == 0) throw PreconditionError("solve_exterior: empty obstacle");
    if (obstacle_count == n) throw PreconditionError("solve_exterior: obstacle covers the space (empty Omega)");

    ExteriorResult out;
    out.center = centroid_vertex(s, spec.omega_c);

    if (s.backend == Backend::radial) {
        // closed form a + b r^{2-N} with u = 1 at the obstacle radius and
        // u = 0 at r_out (exact decaying solution when r_out = infinity)
        const double nd = s.dim;
        if (!(nd > 2.0)) throw PreconditionError("solve_exterior: radial backend requires N > 2");
        double r_obs = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (spec.omega_c[i]) r_obs = std::max(r_obs, s.vertices[i].pos[0]);
        const double p = 2.0 - nd;
        const bool truncated = std::isfinite(spec.r_out);
        const double denom = truncated ? (std::pow(r_obs, p) - std::pow(spec.r_out, p)) : std::pow(r_obs, p);
        const double shift = truncated ? std::pow(spec.r_out, p) : 0.0;
        RadialProfile prof;
        prof.value = [p, denom, shift, r_obs](double r) {
            if (r <= r_obs) return 1.0;
            return (std::pow(r, p) - shift) / denom;
        };
        prof.deriv = [p, denom, r_obs](double r) {
            if (r <= r_obs) return 0.0;
            return p * std::pow(r, p - 1.0) / denom;
        };
        prof.second = [p, denom, r_obs](double r) {
            if (r <= r_obs) return 0.0;
            return p * (p - 1.0) * std::pow(r, p - 2.0) / denom;
        };
        out.u = ScalarField(s);
        out.u.profile = prof;
        out.solved_region.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            double r = s.vertices[i].pos[0];
            out.u.set(static_cast<VertexId>(i), std::clamp(prof.value(r), 0.0, 1.0));
            out.solved_region[i] = (!spec.omega_c[i] && (!truncated || r < spec.r_out)) ? 1 : 0;
        }
        out.iterations = 0;
        out.residual = 0.0;
        return out;
    }

    if (!(spec.r_out > 0.0) || !std::isfinite(spec.r_out))
        throw PreconditionError("solve_exterior: graph backend needs a finite truncation radius");
    const double diam = set_diameter(s, spec.omega_c);
    if (!(spec.r_out > diam)) throw PreconditionError("solve_exterior: truncation radius inside the obstacle");

    std::vector<double> u(n, 0.0);
    std::vector<char> free_mask(n, 0);
    std::vector<char> shell(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<VertexId>(i);
        if (spec.omega_c[i]) continue;
        bool on_shell = s.point_distance(out.center, v) >= spec.r_out || s.is_boundary(v);
        shell[i] = on_shell ? 1 : 0;
        free_mask[i] = on_shell ? 0 : 1;
    }
    // Dirichlet 1 on the obstacle boundary layer (and, harmlessly, all of it)
    for (std::size_t i = 0; i < n; ++i)
        if (spec.omega_c[i]) u[i] = 1.0;

    auto rep = solve_dirichlet(s, free_mask, u, spec.tol, spec.max_iter);
    if (!rep.converged)
        throw SolverError("solve_exterior: linear solve did not reach tolerance (residual " +
                          std::to_string(rep.residual) + ")");

    out.u = ScalarField(s);
    for (std::size_t i = 0; i < n; ++i) {
        double x = std::clamp(u[i], 0.0, 1.0);
        out.u.set(static_cast<VertexId>(i), x);
    }
    out.solved_region = free_mask;
    out.iterations = rep.iterations;
    out.residual = rep.residual;

    // truncation diagnostic: solution next to the shell should be small
    double worst_inner = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!shell[i]) continue;
        for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
            if (free_mask[static_cast<std::size_t>(h.to)])
                worst_inner = std::max(worst_inner, u[static_cast<std::size_t>(h.to)]);
    }
    out.truncation_tight = worst_inner > 0.05;
    return out;
}

ExteriorResult solve_exterior_extrapolated(const Space& s, const std::vector<char>& omega_c,
                                           std::span<const double> r_outs, double tol) {
    if (r_outs.size() < 2) throw PreconditionError("extrapolation needs at least two truncation radii");
    std::vector<double> rs(r_outs.begin(), r_outs.end());
    std::sort(rs.begin(), rs.end());
    const double p = 2.0 - s.dim;

    ExteriorProblemSpec spec;
    spec.space = &s;
    spec.omega_c = omega_c;
    spec.tol = tol;

    // fit u(x; R) = u_inf(x) + c(x) R^{2-N} by least squares over the radii
    std::vector<ExteriorResult> sols;
    for (double r : rs) {
        spec.r_out = r;
        sols.push_back(solve_exterior(spec));
    }
    ExteriorResult out;
    out.center = sols.front().center;
    out.solved_region = sols.front().solved_region;  // smallest common region
    out.iterations = 0;
    out.residual = 0.0;
    for (const auto& so : sols) {
        out.iterations += so.iterations;
        out.residual = std::max(out.residual, so.residual);
    }
    const auto n = s.size();
    out.u = ScalarField(s);
    const std::size_t k = rs.size();
    double sx = 0.0, sxx = 0.0;
    std::vector<double> xs(k);
    for (std::size_t j = 0; j < k; ++j) {
        xs[j] = std::pow(rs[j], p);
        sx += xs[j];
        sxx += xs[j] * xs[j];
    }
    const double det = static_cast<double>(k) * sxx - sx * sx;
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<VertexId>(i);
        if (omega_c[i]) {
            out.u.set(v, 1.0);
            continue;
        }
        if (!out.solved_region[i]) continue;
        double sy = 0.0, sxy = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double y = sols[j].u[v];
            sy += y;
            sxy += xs[j] * y;
        }
        double intercept = (sxx * sy - sx * sxy) / det;
        out.u.set(v, std::clamp(intercept, 0.0, 1.0));
    }
    return out;
}

CapacityResult solve_obstacle(const Space& s, const std::vector<char>& e_set,
                              const std::vector<char>& b_set, double tol, int max_iter,
                              double omega, bool warm_start) {
    const auto n = s.size();
    if (e_set.size() != n || b_set.size() != n) throw PreconditionError("solve_obstacle: mask size mismatch");
    std::size_t ecount = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (e_set[i] && !b_set[i]) throw PreconditionError("solve_obstacle: E not contained in B");
        ecount += e_set[i] ? 1 : 0;
    }
    if (ecount == 0) throw PreconditionError("solve_obstacle: empty E");

    // Dirichlet zero set: complement of B, the inner boundary layer of B, and
    // the space boundary (the trace of the ambient truncation).
    std::vector<char> free_mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!b_set[i]) continue;
        const auto v = static_cast<VertexId>(i);
        bool dirichlet = s.is_boundary(v);
        if (!dirichlet)
            for (const auto& h : s.neighbors(v))
                if (!b_set[static_cast<std::size_t>(h.to)]) {
                    dirichlet = true;
                    break;
                }
        if (dirichlet && e_set[i])
            throw PreconditionError("solve_obstacle: E touches the Dirichlet boundary of B");
        free_mask[i] = dirichlet ? 0 : 1;
    }

    std::vector<double> u(n, 0.0);
    if (warm_start) {
        // harmonic extension of the fully active obstacle; PSOR then certifies
        // (and if necessary repairs) complementarity
        std::vector<char> lin_free = free_mask;
        for (std::size_t i = 0; i < n; ++i)
            if (e_set[i]) {
                u[i] = 1.0;
                lin_free[i] = 0;
            }
        solve_dirichlet(s, lin_free, u, tol * 1e-2, max_iter);
    }
    auto rep = psor_obstacle(s, free_mask, e_set, u, tol, max_iter, omega);
    if (!rep.converged)
        throw SolverError("solve_obstacle: PSOR did not reach tolerance (residual " +
                          std::to_string(rep.residual) + ")");

    CapacityResult out;
    out.potential = ScalarField(s, 0.0);
    for (std::size_t i = 0; i < n; ++i) out.potential[static_cast<VertexId>(i)] = u[i];
    out.iterations = rep.iterations;
    out.residual = rep.residual;
    out.e_set = e_set;
    out.b_set = b_set;
    out.tol = tol;
    out.active_set.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        out.active_set[i] = (e_set[i] || u[i] >= 1.0) ? 1 : 0;  // ties resolved as active
    out.capacity = dirichlet_energy(s, out.potential, nullptr);
    return out;
}

ComparisonCheck comparison_check(const Space& s, const CapacityResult& u, const ScalarField& v,
                                 double tol) {
    ComparisonCheck out;
    const auto n = s.size();
    const double superharmonic_slack = std::max(tol, 10.0 * u.tol);
    for (std::size_t i = 0; i < n; ++i) {
        if (!u.b_set[i]) continue;
        if (u.e_set[i] && v[static_cast<VertexId>(i)] < 1.0 - 1e-12)
            throw PreconditionError("comparison_check: v < 1 on E");
        const auto x = static_cast<VertexId>(i);
        double acc = 0.0;
        for (const auto& h : s.neighbors(x)) acc += h.weight * (v[h.to] - v[x]);
        if (acc / s.measure(x) > superharmonic_slack) out.not_superharmonic.push_back(x);
    }
    if (!out.not_superharmonic.empty()) return out;  // diagnostic: precondition failed
    double worst = -std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < n; ++i) {
        if (!u.b_set[i]) continue;
        worst = std::max(worst, u.potential[static_cast<VertexId>(i)] - v[static_cast<VertexId>(i)]);
    }
    out.worst_violation = std::max(0.0, worst);
    out.holds = out.worst_violation <= std::max(tol, 10.0 * u.tol);
    return out;
}

LiftCheck lift_check(const Space& s, const CapacityResult& u, double m, double tol) {
    if (!(m > 0.0) || m > 1.0) throw PreconditionError("lift_check: m outside (0, 1]");
    const auto n = s.size();
    std::vector<char> e_lift(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        e_lift[i] = (u.b_set[i] && u.potential[static_cast<VertexId>(i)] > m) ? 1 : 0;
    auto lifted = solve_obstacle(s, e_lift, u.b_set, std::min(tol, u.tol));
    LiftCheck out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!u.b_set[i]) continue;
        double expect = std::min(u.potential[static_cast<VertexId>(i)] / m, 1.0);
        out.max_diff = std::max(out.max_diff, std::abs(lifted.potential[static_cast<VertexId>(i)] - expect));
    }
    out.agrees = out.max_diff <= 10.0 * std::max(tol, u.tol);
    return out;
}

std::vector<CapFatPoint> cap_fat_ratio(const Space& sp, const std::vector<char>& e_set, VertexId x,
                                       std::span<const double> s_grid, double tol) {
    // mesh resolution: shortest incident edge at x
    double h = std::numeric_limits<double>::max();
    for (const auto& e : sp.neighbors(x)) h = std::min(h, e.length);
    std::vector<CapFatPoint> out;
    for (double s : s_grid) {
        CapFatPoint pt;
        pt.s = s;
        if (s < 3.0 * h) {
            pt.skipped = true;
            out.push_back(pt);
            continue;
        }
        auto b2 = ball_set(sp, x, 2.0 * s);
        auto bs = ball_set(sp, x, s);
        std::vector<char> es(sp.size(), 0);
        std::size_t inner = 0;
        for (std::size_t i = 0; i < sp.size(); ++i) {
            es[i] = (bs[i] && e_set[i]) ? 1 : 0;
            inner += es[i] ? 1 : 0;
        }
        if (inner == 0) {
            pt.ratio = 0.0;
            out.push_back(pt);
            continue;
        }
        double denom = solve_obstacle(sp, bs, b2, tol).capacity;
        double numer = solve_obstacle(sp, es, b2, tol).capacity;
        pt.ratio = denom > 0.0 ? numer / denom : 0.0;
        out.push_back(pt);
    }
    return out;
}

std::vector<std::pair<double, bool>> corkscrew_check(const Space& sp, const std::vector<char>& e_set,
                                                     VertexId x, double lambda,
                                                     std::span<const double> r_grid) {
    if (!(lambda > 0.0) || lambda >= 1.0) throw PreconditionError("corkscrew_check: lambda outside (0,1)");
    std::vector<std::pair<double, bool>> out;
    for (double s : r_grid) {
        bool found = false;
        for (std::size_t i = 0; i < sp.size() && !found; ++i) {
            if (!e_set[i]) continue;
            const auto y = static_cast<VertexId>(i);
            if (sp.point_distance(x, y) > s - lambda * s) continue;  // B_{lambda s}(y) inside B_s(x)
            bool inside = true;
            for (std::size_t j = 0; j < sp.size(); ++j) {
                if (e_set[j]) continue;
                if (sp.point_distance(y, static_cast<VertexId>(j)) <= lambda * s) {
                    inside = false;
                    break;
                }
            }
            found = inside;
        }
        out.emplace_back(s, found);
    }
    return out;
}

WienerFit wiener_decay_fit(const Space& sp, const ScalarField& u, VertexId x, double r0, int levels,
                           const std::vector<char>& e_set, double tol) {
    WienerFit out;
    if (levels < 3) throw PreconditionError("wiener_decay_fit: fewer than 3 dyadic levels");
    double h = std::numeric_limits<double>::max();
    for (const auto& e : sp.neighbors(x)) h = std::min(h, e.length);

    std::vector<double> radii;
    for (int i = 0; i < levels; ++i) {
        double r = r0 * std::pow(0.5, i);
        if (r < 2.0 * h) break;
        radii.push_back(r);
    }
    if (radii.size() < 3) throw PreconditionError("wiener_decay_fit: fewer than 3 usable dyadic levels");

    auto ratios = cap_fat_ratio(sp, e_set, x, radii, tol);

    double sup0 = 0.0;
    for (std::size_t lev = 0; lev < radii.size(); ++lev) {
        WienerLevel wl;
        wl.radius = radii[lev];
        double sup = 0.0;
        for (std::size_t i = 0; i < sp.size(); ++i) {
            if (!u.defined(static_cast<VertexId>(i))) continue;
            if (sp.point_distance(x, static_cast<VertexId>(i)) > radii[lev]) continue;
            sup = std::max(sup, 1.0 - u[static_cast<VertexId>(i)]);
        }
        wl.sup_one_minus_u = sup;
        wl.cap_ratio = ratios[lev].skipped ? 0.0 : ratios[lev].ratio;
        out.levels.push_back(wl);
        sup0 = std::max(sup0, sup);
    }
    if (sup0 < 1e-12) {
        out.flat = true;
        out.bound_holds = true;
        return out;
    }

    // least squares on log(sup) vs log(radius)
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t k = 0;
    for (const auto& wl : out.levels) {
        if (wl.sup_one_minus_u <= 0.0) continue;
        double lx = std::log(wl.radius);
        double ly = std::log(wl.sup_one_minus_u);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++k;
    }
    if (k < 3) throw PreconditionError("wiener_decay_fit: fewer than 3 positive levels");
    double det = static_cast<double>(k) * sxx - sx * sx;
    out.alpha = (static_cast<double>(k) * sxy - sx * sy) / det;
    out.c = std::exp((sxx * sy - sx * sxy) / det);

    // levelwise bound 1 - u <= exp(-C sum_{j<=i} a_j); report the largest C
    // that works at every level (the capacity sums run coarse-to-fine)
    double cmax = std::numeric_limits<double>::max();
    double acc = 0.0;
    for (const auto& wl : out.levels) {
        acc += wl.cap_ratio;
        if (wl.sup_one_minus_u <= 0.0 || acc <= 0.0) continue;
        cmax = std::min(cmax, -std::log(wl.sup_one_minus_u) / acc);
    }
    out.wiener_c = (cmax == std::numeric_limits<double>::max()) ? 0.0 : cmax;
    out.bound_holds = out.wiener_c > 0.0;
    return out;
}

}  // namespace ubeta
