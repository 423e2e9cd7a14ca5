#include "ubeta/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ubeta {

namespace {

// A u at free vertices, A = graph stiffness sum_y w (u_x - u_y); Dirichlet
// values read straight from u.
void apply_stiffness(const Space& s, const std::vector<char>& free_mask,
                     const std::vector<double>& u, std::vector<double>& out) {
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!free_mask[i]) {
            out[i] = 0.0;
            continue;
        }
        double acc = 0.0;
        double ui = u[i];
        for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
            acc += h.weight * (ui - u[static_cast<std::size_t>(h.to)]);
        out[i] = acc;
    }
}

double default_omega(const Space& s) {
    // SOR relaxation from the mesh aspect when a chart is present; the exact
    // optimum only matters for large structured problems.
    if (s.chart.kind == Chart::Kind::lattice || s.chart.kind == Chart::Kind::cylinder ||
        s.chart.kind == Chart::Kind::cone) {
        double best = 0.0;
        for (const auto& ax : s.chart.axes) {
            if (ax.size() < 2) continue;
            best = std::max(best, static_cast<double>(ax.size()));
        }
        if (best > 1.0) {
            double h_over_l = 1.0 / best;
            return 2.0 / (1.0 + std::sin(std::numbers::pi * h_over_l));
        }
    }
    return 1.6;
}

}  // namespace

double laplacian_residual(const Space& s, const std::vector<double>& u,
                          const std::vector<char>& check, const std::vector<double>* rhs) {
    double worst = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!check[i]) continue;
        double acc = 0.0;
        for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
            acc += h.weight * (u[static_cast<std::size_t>(h.to)] - u[i]);
        if (rhs) acc += (*rhs)[i];
        worst = std::max(worst, std::abs(acc) / s.measure(static_cast<VertexId>(i)));
    }
    return worst;
}

SolveReport solve_dirichlet(const Space& s, const std::vector<char>& free_mask,
                            std::vector<double>& u, double tol, int max_iter,
                            const std::vector<double>* rhs) {
    const std::size_t n = s.size();
    std::size_t nfree = 0;
    for (char c : free_mask) nfree += c ? 1 : 0;
    if (nfree == 0) return {0, 0.0, true};

    std::vector<double> diag(n, 0.0), r(n, 0.0), z(n, 0.0), p(n, 0.0), ap(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!free_mask[i]) continue;
        double d = 0.0;
        for (const auto& h : s.neighbors(static_cast<VertexId>(i))) d += h.weight;
        diag[i] = d;
    }

    // r = b - A u, b folding in Dirichlet data and optional rhs
    apply_stiffness(s, free_mask, u, ap);
    for (std::size_t i = 0; i < n; ++i) {
        if (!free_mask[i]) continue;
        r[i] = -ap[i];
        if (rhs) r[i] += (*rhs)[i];
    }

    auto weighted_max = [&](const std::vector<double>& v) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (free_mask[i]) worst = std::max(worst, std::abs(v[i]) / s.measure(static_cast<VertexId>(i)));
        return worst;
    };

    double rz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!free_mask[i]) continue;
        z[i] = r[i] / diag[i];
        p[i] = z[i];
        rz += r[i] * z[i];
    }

    SolveReport rep;
    rep.residual = weighted_max(r);
    if (rep.residual <= tol) {
        rep.converged = true;
        return rep;
    }
    double best = rep.residual;
    int checks_since_improve = 0;
    for (int it = 1; it <= max_iter; ++it) {
        apply_stiffness(s, free_mask, p, ap);
        double pap = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (free_mask[i]) pap += p[i] * ap[i];
        if (!(pap > 0.0)) break;
        double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i]) continue;
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rep.iterations = it;
        if (it % 8 == 0 || it == max_iter) {
            rep.residual = weighted_max(r);
            if (rep.residual <= tol) {
                rep.converged = true;
                return rep;
            }
            if (rep.residual < 0.9 * best) {
                best = rep.residual;
                checks_since_improve = 0;
            } else if (++checks_since_improve >= 12) {
                break;  // double-precision floor reached
            }
        }
        double rz_new = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i]) continue;
            z[i] = r[i] / diag[i];
            rz_new += r[i] * z[i];
        }
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i)
            if (free_mask[i]) p[i] = z[i] + beta * p[i];
    }
    rep.residual = weighted_max(r);
    rep.converged = rep.residual <= tol;
    return rep;
}

SolveReport psor_obstacle(const Space& s, const std::vector<char>& free_mask,
                          const std::vector<char>& constrained, std::vector<double>& u,
                          double tol, int max_iter, double omega) {
    const std::size_t n = s.size();
    if (omega <= 0.0) omega = default_omega(s);
    std::vector<double> diag(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!free_mask[i]) continue;
        double d = 0.0;
        for (const auto& h : s.neighbors(static_cast<VertexId>(i))) d += h.weight;
        diag[i] = d;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (free_mask[i] && constrained[i]) u[i] = std::max(u[i], 1.0);

    SolveReport rep;
    for (int sweep = 1; sweep <= max_iter; ++sweep) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i]) continue;
            double acc = 0.0;
            for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
                acc += h.weight * u[static_cast<std::size_t>(h.to)];
            double gs = acc / diag[i];
            double next = u[i] + omega * (gs - u[i]);
            if (constrained[i]) next = std::max(next, 1.0);
            u[i] = next;
        }
        rep.iterations = sweep;
        if (sweep % 16 == 0 || sweep == max_iter) {
            // complementarity residual in the weighted max norm:
            //   free & unconstrained (or inactive): |L u|
            //   active (u == 1):                    max(0, L u)  (supersolution side)
            double worst = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!free_mask[i]) continue;
                double acc = 0.0;
                for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
                    acc += h.weight * (u[static_cast<std::size_t>(h.to)] - u[i]);
                double lu = acc / s.measure(static_cast<VertexId>(i));
                double res;
                if (constrained[i] && u[i] <= 1.0 + 1e-300) {
                    res = std::max(0.0, lu);
                    res = std::max(res, std::max(0.0, 1.0 - u[i]));
                } else {
                    res = std::abs(lu);
                }
                worst = std::max(worst, res);
            }
            rep.residual = worst;
            if (worst <= tol) {
                rep.converged = true;
                break;
            }
        }
    }
    // clamped projection is part of the solver contract
    for (std::size_t i = 0; i < n; ++i)
        if (free_mask[i]) u[i] = std::clamp(u[i], 0.0, 1.0);
    return rep;
}

SolveReport active_set_obstacle(const Space& s, const std::vector<char>& free_mask,
                                const std::vector<char>& constrained, std::vector<double>& u,
                                double tol, int max_iter) {
    const std::size_t n = s.size();
    std::vector<char> active = constrained;  // start fully active
    SolveReport rep;
    for (int round = 0; round < 64; ++round) {
        std::vector<char> solve_free(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i]) continue;
            if (active[i])
                u[i] = 1.0;
            else
                solve_free[i] = 1;
        }
        auto lin = solve_dirichlet(s, solve_free, u, tol, max_iter);
        rep.iterations += lin.iterations;
        rep.residual = lin.residual;
        bool changed = false;
        // release active vertices with negative multiplier (subharmonic there)
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i] || !active[i]) continue;
            double acc = 0.0;
            for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
                acc += h.weight * (u[static_cast<std::size_t>(h.to)] - u[i]);
            if (acc > tol * s.measure(static_cast<VertexId>(i))) {
                active[i] = 0;
                changed = true;
            }
        }
        // re-activate violated constraints
        for (std::size_t i = 0; i < n; ++i) {
            if (!free_mask[i] || active[i] || !constrained[i]) continue;
            if (u[i] < 1.0 - 1e-14) {
                active[i] = 1;
                changed = true;
            }
        }
        if (!changed) {
            rep.converged = lin.converged;
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (free_mask[i]) u[i] = std::clamp(u[i], 0.0, 1.0);
    return rep;
}

}  // namespace ubeta
