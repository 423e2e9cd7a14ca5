#include "ubeta/cone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ubeta/flow.hpp"
#include "ubeta/monotone.hpp"

namespace ubeta {

namespace {

constexpr double kPi = std::numbers::pi;

double sq(double x) { return x * x; }

}  // namespace

double cone_distance(double t, double s, double d_z) {
    if (t < 0.0 || s < 0.0 || d_z < 0.0) throw PreconditionError("cone_distance: negative argument");
    double c = std::cos(std::min(d_z, kPi));
    return std::sqrt(std::max(0.0, t * t + s * s - 2.0 * t * s * c));
}

double cone_measure_density(double t, double n_dim) { return std::pow(t, n_dim - 1.0); }

RigidityResidual rigidity_residual(const Space& s, const ScalarField& u,
                                   const std::vector<char>& region, double n_dim,
                                   bool field_is_cone_potential) {
    RigidityResidual out;

    if (s.backend == Backend::radial && u.profile) {
        const auto& p = *u.profile;
        const double expo = 1.0 / (2.0 - n_dim);
        double c0 = 1.0;
        std::vector<double> radii;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (region[i] && !s.is_boundary(static_cast<VertexId>(i)))
                radii.push_back(s.vertices[i].pos[0]);
        if (radii.empty()) throw PreconditionError("rigidity_residual: empty region");
        auto vfun = [&](double r) {
            return field_is_cone_potential ? r : std::pow(std::max(p.value(r), 1e-300), expo);
        };
        auto vprime = [&](double r) {
            if (field_is_cone_potential) return 1.0;
            double uv = std::max(p.value(r), 1e-300);
            return expo * std::pow(uv, expo - 1.0) * p.deriv(r);
        };
        if (!field_is_cone_potential) {
            double acc = 0.0, mass = 0.0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (!region[i] || s.is_boundary(static_cast<VertexId>(i))) continue;
                acc += s.vertices[i].measure * sq(vprime(s.vertices[i].pos[0]));
                mass += s.vertices[i].measure;
            }
            c0 = acc / mass;
        }
        out.c0 = c0;
        // U = v^2 / (2 c0): Delta U = (v v'' + v'^2 + (N-1)/r v v') / c0
        double h = 1e-6;
        double mass = 0.0, l2a = 0.0, l2b = 0.0;
        for (double r : radii) {
            double v = vfun(r);
            double vp = vprime(r);
            double vpp = (vprime(r + h * r) - vprime(r - h * r)) / (2.0 * h * r);
            double lap = (v * vpp + vp * vp + (n_dim - 1.0) / r * v * vp) / c0;
            double eik = vp * vp / c0;  // |grad sqrt(2U)|^2 = v'^2 / c0
            double ra = std::abs(lap - n_dim);
            double rb = std::abs(eik - 1.0);
            out.laplacian_sup = std::max(out.laplacian_sup, ra);
            out.eikonal_sup = std::max(out.eikonal_sup, rb);
            l2a += ra * ra;
            l2b += rb * rb;
            mass += 1.0;
            ++out.region_size;
        }
        out.laplacian_l2 = std::sqrt(l2a / mass);
        out.eikonal_l2 = std::sqrt(l2b / mass);
        return out;
    }

    if (region.size() != s.size()) throw PreconditionError("rigidity_residual: region mask size mismatch");
    const double expo = 1.0 / (2.0 - n_dim);
    if (!field_is_cone_potential && !(n_dim > 2.0))
        throw PreconditionError("rigidity_residual: substitution path needs N > 2");

    ScalarField v(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!u.defined(x)) continue;
        if (u[x] <= 0.0 && !field_is_cone_potential)
            throw PreconditionError("rigidity_residual: field must be positive on the region");
        v.set(x, field_is_cone_potential ? std::sqrt(2.0 * std::max(u[x], 0.0))
                                         : std::pow(std::max(u[x], 1e-14), expo));
    }
    ScalarField gv = gradient_norm(s, v);

    // fit c0 on the region (trimmed to clean gradient stencils)
    double acc = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!region[i] || !gv.defined(x)) continue;
        acc += s.measure(x) * sq(gv[x]);
        mass += s.measure(x);
    }
    if (!(mass > 0.0)) throw PreconditionError("rigidity_residual: empty region after trimming");
    out.c0 = field_is_cone_potential ? 1.0 : acc / mass;

    ScalarField cone_u(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (v.defined(x)) cone_u.set(x, sq(v[x]) / (2.0 * out.c0));
    }
    ScalarField lap = laplacian(s, cone_u);
    ScalarField root(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (cone_u.defined(x)) root.set(x, std::sqrt(2.0 * std::max(cone_u[x], 0.0)));
    }
    ScalarField groot = gradient_norm(s, root);

    double l2a = 0.0, l2b = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!region[i]) continue;
        if (!lap.defined(x) || !groot.defined(x)) {
            ++out.trimmed;
            continue;
        }
        double ra = std::abs(lap[x] - n_dim);
        double rb = std::abs(sq(groot[x]) - 1.0);
        out.laplacian_sup = std::max(out.laplacian_sup, ra);
        out.eikonal_sup = std::max(out.eikonal_sup, rb);
        double w = s.measure(x);
        l2a += w * ra * ra;
        l2b += w * rb * rb;
        wsum += w;
        ++out.region_size;
    }
    if (!(wsum > 0.0)) throw PreconditionError("rigidity_residual: region fully trimmed");
    out.laplacian_l2 = std::sqrt(l2a / wsum);
    out.eikonal_l2 = std::sqrt(l2b / wsum);
    return out;
}

CosineCheckResult cosine_check_exact(int n_dim, double level, std::size_t pair_count,
                                     double max_separation, std::uint64_t seed) {
    if (n_dim < 2) throw PreconditionError("cosine_check_exact: N < 2");
    if (!(level > 0.0)) throw PreconditionError("cosine_check_exact: level must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.8, 2.2);
    CosineCheckResult out;
    const double root_level = std::sqrt(2.0 * level);
    for (std::size_t k = 0; k < pair_count; ++k) {
        std::vector<double> x(static_cast<std::size_t>(n_dim)), y(static_cast<std::size_t>(n_dim));
        double nx = 0.0;
        for (auto& c : x) {
            c = gauss(rng);
            nx += c * c;
        }
        nx = std::sqrt(nx);
        double rx = root_level * unif(rng);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] *= rx / nx;
        double sep = max_separation * unif(rng) / 2.2;
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            y[i] = x[i] + sep * gauss(rng);
            d2 += sq(y[i] - x[i]);
        }
        double ry = 0.0;
        for (double c : y) ry += c * c;
        ry = std::sqrt(ry);
        if (!(ry > 0.0)) {
            ++out.pairs_skipped;
            continue;
        }
        if (std::sqrt(d2) > max_separation) {
            ++out.pairs_skipped;
            continue;
        }
        double ux = rx * rx / 2.0;
        double uy = ry * ry / 2.0;
        // projections to the level sphere of radius sqrt(2T)
        double dpr2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            dpr2 += sq(root_level * (x[i] / rx - y[i] / ry));
        double rhs = 2.0 * ux + 2.0 * uy - 4.0 * std::sqrt(ux * uy) * (1.0 - dpr2 / (4.0 * level));
        double res = std::abs(d2 - rhs) / std::max(d2, 1e-30);
        out.max_residual = std::max(out.max_residual, res);
        ++out.pairs_checked;
    }
    return out;
}

CosineCheckResult cosine_check(const Space& s, const ScalarField& cone_u, double level,
                               std::size_t pair_count, double locality_radius, std::uint64_t seed) {
    CosineCheckResult out;
    std::mt19937_64 rng(seed);
    std::vector<VertexId> candidates;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!cone_u.defined(x) || s.is_boundary(x)) continue;
        candidates.push_back(x);
    }
    if (candidates.size() < 2) throw PreconditionError("cosine_check: not enough interior vertices");
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    std::size_t attempts = 0;
    while (out.pairs_checked < pair_count && attempts < 100 * pair_count) {
        ++attempts;
        VertexId a = candidates[pick(rng)];
        VertexId b = candidates[pick(rng)];
        if (a == b) continue;
        double d = s.point_distance(a, b);
        if (d > locality_radius) {
            ++out.pairs_skipped;
            continue;
        }
        double dpr;
        try {
            ChartPoint pa = projection(s, cone_u, level, a);
            ChartPoint pb = projection(s, cone_u, level, b);
            dpr = chart_point_distance(s, pa, pb);
        } catch (const SolverError&) {
            ++out.pairs_skipped;
            continue;
        }
        double ua = cone_u[a], ub = cone_u[b];
        double rhs = 2.0 * ua + 2.0 * ub -
                     4.0 * std::sqrt(ua * ub) * (1.0 - dpr * dpr / (4.0 * level));
        double res = std::abs(d * d - rhs) / std::max(d * d, 1e-30);
        out.max_residual = std::max(out.max_residual, res);
        ++out.pairs_checked;
    }
    return out;
}

CrossSectionSample cross_section(const Space& s, const ScalarField& cone_u, double level,
                                 std::size_t sample_count, std::uint64_t seed) {
    CrossSectionSample out;
    out.level = level;
    // band half-width: 1.5x the typical per-edge variation at the level
    std::vector<double> dus;
    for (const auto& e : s.edges) {
        if (!cone_u.defined(e.a) || !cone_u.defined(e.b)) continue;
        double ua = cone_u[e.a], ub = cone_u[e.b];
        if ((ua - level) * (ub - level) <= 0.0) dus.push_back(std::abs(ua - ub));
    }
    if (dus.empty()) throw PreconditionError("cross_section: level not crossed by any edge");
    std::sort(dus.begin(), dus.end());
    out.bandwidth = 1.5 * dus[dus.size() / 2];

    std::vector<char> in_band(s.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto x = static_cast<VertexId>(i);
        if (!cone_u.defined(x)) continue;
        if (std::abs(cone_u[x] - level) <= out.bandwidth) {
            in_band[i] = 1;
            out.band.push_back(x);
        }
    }
    if (out.band.size() < 20) throw PreconditionError("cross_section: level band under-resolved (< 20 vertices)");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, out.band.size() - 1);
    const double root2t = std::sqrt(2.0 * level);
    for (std::size_t k = 0; k < sample_count; ++k) {
        VertexId a = out.band[pick(rng)];
        VertexId b = out.band[pick(rng)];
        if (a == b) continue;
        auto dist = s.geodesic_from_restricted(a, in_band);
        double dp = dist[static_cast<std::size_t>(b)];
        if (dp >= Space::infinite_distance) {
            out.connected = false;
            continue;
        }
        CrossSectionSample::Pair pr;
        pr.a = a;
        pr.b = b;
        pr.ambient = s.point_distance(a, b);
        pr.intrinsic = dp;
        pr.rescaled = dp / root2t;
        out.pairs.push_back(pr);
    }
    return out;
}

DdPrimeCheck dd_prime_check(const CrossSectionSample& sample) {
    DdPrimeCheck out;
    bool ok = true;
    for (const auto& p : sample.pairs) {
        if (!(p.ambient > 0.0)) continue;
        out.c_fit = std::max(out.c_fit, p.intrinsic / p.ambient);
        if (p.intrinsic < p.ambient - 1e-9 * std::max(1.0, p.ambient)) ok = false;
    }
    out.holds = ok && sample.connected && std::isfinite(out.c_fit);
    return out;
}

KatoCheck kato_check(std::span<const double> a, std::size_t n, std::span<const double> v, double t,
                     bool* symmetrized) {
    if (n == 0) throw PreconditionError("kato_check: n = 0");
    if (a.size() != n * n || v.size() != n) throw PreconditionError("kato_check: size mismatch");
    if (!(t > 0.0)) throw PreconditionError("kato_check: t must be positive");
    std::vector<double> sym(n * n);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            sym[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
            if (std::abs(a[i * n + j] - a[j * n + i]) > 1e-14) changed = true;
        }
    if (symmetrized) *symmetrized = changed;

    double av2 = 0.0, tr = 0.0, hs2 = 0.0, v2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row += sym[i * n + j] * v[j];
            hs2 += sq(sym[i * n + j]);
        }
        av2 += row * row;
        tr += sym[i * n + i];
        v2 += v[i] * v[i];
    }
    KatoCheck out;
    const double nd = static_cast<double>(n);
    out.lhs = (t + nd) / (t + nd - 1.0) * av2;
    out.rhs = v2 * tr * tr / t + v2 * hs2;
    out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
    return out;
}

KatoSearch kato_search(std::size_t n, std::size_t trials, std::span<const double> t_grid,
                       std::uint64_t seed, bool refine) {
    if (n == 0) throw PreconditionError("kato_search: n = 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    KatoSearch out;
    out.worst_ratio = std::numeric_limits<double>::max();

    std::vector<double> a(n * n), v(n), best_a, best_v;
    double best_t = t_grid.empty() ? 1.0 : t_grid[0];

    auto ratio_of = [&](const std::vector<double>& mat, const std::vector<double>& vec, double t) {
        auto chk = kato_check(mat, n, vec, t);
        return chk.lhs > 0.0 ? chk.rhs / chk.lhs : std::numeric_limits<double>::max();
    };

    for (std::size_t k = 0; k < trials; ++k) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double g = gauss(rng);
                a[i * n + j] = g;
                a[j * n + i] = g;
            }
        double nv = 0.0;
        for (auto& c : v) {
            c = gauss(rng);
            nv += c * c;
        }
        nv = std::sqrt(nv);
        for (auto& c : v) c /= nv;
        for (double t : t_grid) {
            auto chk = kato_check(a, n, v, t);
            ++out.trials;
            if (!chk.holds) ++out.violations;
            if (chk.lhs > 0.0) {
                double ratio = chk.rhs / chk.lhs;
                if (ratio < out.worst_ratio) {
                    out.worst_ratio = ratio;
                    best_a = a;
                    best_v = v;
                    best_t = t;
                }
            }
        }
    }
    out.sharpest_ratio = out.worst_ratio;
    if (refine && !best_a.empty()) {
        // random-restart polish around the incumbent
        std::vector<double> cur_a = best_a, cur_v = best_v;
        double cur = out.worst_ratio;
        double step = 0.3;
        for (int round = 0; round < 4000; ++round) {
            std::vector<double> na = cur_a, nv2 = cur_v;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i; j < n; ++j) {
                    double g = na[i * n + j] + step * gauss(rng);
                    na[i * n + j] = g;
                    na[j * n + i] = g;
                }
            double nn = 0.0;
            for (auto& c : nv2) {
                c += step * gauss(rng);
                nn += c * c;
            }
            nn = std::sqrt(nn);
            if (!(nn > 0.0)) continue;
            for (auto& c : nv2) c /= nn;
            double r = ratio_of(na, nv2, best_t);
            if (r < cur) {
                cur = r;
                cur_a = na;
                cur_v = nv2;
            }
            if (round % 400 == 399) step *= 0.5;
        }
        out.sharpest_ratio = cur;
    }
    return out;
}

}  // namespace ubeta
