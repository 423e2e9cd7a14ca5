#include "ubeta/green.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef UBETA_HAVE_EIGEN
#include <Eigen/Dense>
#endif

#include "ubeta/solvers.hpp"

namespace ubeta {

namespace {

// stiffness application with killed vertices clamped to zero:
// (A u)_x = sum_y w (u_x - u_y)
void stiffness(const Space& s, const std::vector<char>& live, const std::vector<double>& u,
               std::vector<double>& out) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!live[i]) {
            out[i] = 0.0;
            continue;
        }
        double acc = 0.0;
        for (const auto& h : s.neighbors(static_cast<VertexId>(i))) {
            double uy = live[static_cast<std::size_t>(h.to)] ? u[static_cast<std::size_t>(h.to)] : 0.0;
            acc += h.weight * (u[i] - uy);
        }
        out[i] = acc;
    }
}

// One implicit theta-step of the heat equation M dp/dt = -A p:
// (M + theta dt A) p_new = (M - (1-theta) dt A) p, solved by CG.
class ImplicitStepper {
public:
    ImplicitStepper(const Space& s, const std::vector<char>& live) : s_(s), live_(live) {
        const auto n = s.size();
        deg_.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (!live_[i]) continue;
            double d = 0.0;
            for (const auto& h : s.neighbors(static_cast<VertexId>(i))) d += h.weight;
            deg_[i] = d;
        }
        r_.assign(n, 0.0);
        z_.assign(n, 0.0);
        q_.assign(n, 0.0);
        ap_.assign(n, 0.0);
        rhs_.assign(n, 0.0);
    }

    void step(std::vector<double>& p, double dt, double theta) {
        const auto n = s_.size();
        stiffness(s_, live_, p, ap_);
        for (std::size_t i = 0; i < n; ++i) {
            rhs_[i] = live_[i] ? s_.measure(static_cast<VertexId>(i)) * p[i] - (1.0 - theta) * dt * ap_[i] : 0.0;
        }
        auto apply = [&](const std::vector<double>& v, std::vector<double>& o) {
            stiffness(s_, live_, v, o);
            for (std::size_t i = 0; i < n; ++i)
                if (live_[i]) o[i] = s_.measure(static_cast<VertexId>(i)) * v[i] + theta * dt * o[i];
        };
        apply(p, ap_);
        double rz = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!live_[i]) {
                r_[i] = z_[i] = q_[i] = 0.0;
                continue;
            }
            r_[i] = rhs_[i] - ap_[i];
            double diag = s_.measure(static_cast<VertexId>(i)) + theta * dt * deg_[i];
            z_[i] = r_[i] / diag;
            q_[i] = z_[i];
            rz += r_[i] * z_[i];
        }
        for (int it = 0; it < 4000 && rz > 1e-30; ++it) {
            apply(q_, ap_);
            double qaq = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (live_[i]) qaq += q_[i] * ap_[i];
            if (!(qaq > 0.0)) break;
            double alpha = rz / qaq;
            double rz_new = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!live_[i]) continue;
                p[i] += alpha * q_[i];
                r_[i] -= alpha * ap_[i];
                double diag = s_.measure(static_cast<VertexId>(i)) + theta * dt * deg_[i];
                z_[i] = r_[i] / diag;
                rz_new += r_[i] * z_[i];
            }
            double beta = rz_new / rz;
            rz = rz_new;
            for (std::size_t i = 0; i < n; ++i)
                if (live_[i]) q_[i] = z_[i] + beta * q_[i];
        }
    }

    /// Advance from time `from` > 0 to `to` with Crank-Nicolson on a
    /// geometrically growing grid; from == 0 starts with smoothing
    /// backward-Euler half steps.
    void evolve(std::vector<double>& p, double from, double to, double dt0) {
        double now = from;
        if (from <= 0.0) {
            step(p, dt0 / 2.0, 1.0);
            step(p, dt0 / 2.0, 1.0);
            now = dt0;
        }
        while (now < to * (1.0 - 1e-12)) {
            double dt = std::min(std::max(dt0, 0.08 * now), to - now);
            step(p, dt, 0.5);
            now += dt;
        }
    }

private:
    const Space& s_;
    const std::vector<char>& live_;
    std::vector<double> deg_, r_, z_, q_, ap_, rhs_;
};

}  // namespace

struct HeatKernelEngine::Impl {
    std::vector<char> live;
    double live_mass = 0.0;

#ifdef UBETA_HAVE_EIGEN
    Eigen::VectorXd eigenvalues;   // ascending, >= 0
    Eigen::MatrixXd eigenvectors;  // columns, in sqrt(mu)-coordinates
    std::vector<std::size_t> live_index;
    std::vector<std::ptrdiff_t> dense_of;
#endif
};

HeatKernelEngine::~HeatKernelEngine() = default;
HeatKernelEngine::HeatKernelEngine(HeatKernelEngine&&) noexcept = default;
HeatKernelEngine& HeatKernelEngine::operator=(HeatKernelEngine&&) noexcept = default;

HeatKernelEngine::HeatKernelEngine(const Space& s, Method method, std::size_t spectral_cap,
                                   std::vector<char> dirichlet_mask)
    : space_(&s), method_(method), dirichlet_(std::move(dirichlet_mask)), impl_(new Impl) {
    impl_->live.assign(s.size(), 1);
    if (!dirichlet_.empty()) {
        if (dirichlet_.size() != s.size())
            throw PreconditionError("heat kernel: dirichlet mask size mismatch");
        for (std::size_t i = 0; i < s.size(); ++i) impl_->live[i] = dirichlet_[i] ? 0 : 1;
    }
    impl_->live_mass = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (impl_->live[i]) impl_->live_mass += s.measure(static_cast<VertexId>(i));

    if (method_ == Method::eigendecomposition) {
        if (s.size() > spectral_cap)
            throw PreconditionError("heat kernel: spectral method above the size cap");
#ifdef UBETA_HAVE_EIGEN
        std::size_t m = 0;
        impl_->dense_of.assign(s.size(), -1);
        for (std::size_t i = 0; i < s.size(); ++i)
            if (impl_->live[i]) {
                impl_->dense_of[i] = static_cast<std::ptrdiff_t>(m++);
                impl_->live_index.push_back(i);
            }
        Eigen::MatrixXd sym = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!impl_->live[i]) continue;
            const auto r = impl_->dense_of[i];
            double diag = 0.0;
            double mi = s.measure(static_cast<VertexId>(i));
            for (const auto& h : s.neighbors(static_cast<VertexId>(i))) {
                diag += h.weight;
                const auto j = static_cast<std::size_t>(h.to);
                if (!impl_->live[j]) continue;
                double mj = s.measure(h.to);
                sym(r, impl_->dense_of[j]) = -h.weight / std::sqrt(mi * mj);
            }
            sym(r, r) = diag / mi;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        if (es.info() != Eigen::Success) throw SolverError("heat kernel: eigendecomposition failed");
        impl_->eigenvalues = es.eigenvalues();
        impl_->eigenvectors = es.eigenvectors();
        for (Eigen::Index k = 0; k < impl_->eigenvalues.size(); ++k)
            if (impl_->eigenvalues[k] < 0.0 && impl_->eigenvalues[k] > -1e-10) impl_->eigenvalues[k] = 0.0;
#else
        throw SolverError("heat kernel: spectral method unavailable without Eigen");
#endif
    }
}

double HeatKernelEngine::equilibrium_density() const {
    return killed() ? 0.0 : 1.0 / impl_->live_mass;
}

ScalarField HeatKernelEngine::kernel(double t, VertexId x) const {
    if (!(t > 0.0)) throw PreconditionError("heat kernel: t must be positive");
    const Space& s = *space_;
    if (!impl_->live[static_cast<std::size_t>(x)])
        throw PreconditionError("heat kernel: source vertex is killed");
    ScalarField out(s, 0.0);

    if (method_ == Method::eigendecomposition) {
#ifdef UBETA_HAVE_EIGEN
        const auto rx = impl_->dense_of[static_cast<std::size_t>(x)];
        const double sx = std::sqrt(s.measure(x));
        const auto m = static_cast<Eigen::Index>(impl_->live_index.size());
        Eigen::VectorXd coef(m);
        for (Eigen::Index k = 0; k < m; ++k)
            coef[k] = std::exp(-impl_->eigenvalues[k] * t) * impl_->eigenvectors(rx, k);
        Eigen::VectorXd vals = impl_->eigenvectors * coef;
        for (std::size_t r = 0; r < impl_->live_index.size(); ++r) {
            const auto i = impl_->live_index[r];
            out[static_cast<VertexId>(i)] =
                vals[static_cast<Eigen::Index>(r)] / (sx * std::sqrt(s.measure(static_cast<VertexId>(i))));
        }
        return out;
#endif
    }

    std::vector<double> p(s.size(), 0.0);
    p[static_cast<std::size_t>(x)] = 1.0 / s.measure(x);
    ImplicitStepper stepper(s, impl_->live);
    stepper.evolve(p, 0.0, t, t / 512.0);
    for (std::size_t i = 0; i < s.size(); ++i)
        if (impl_->live[i]) out[static_cast<VertexId>(i)] = p[i];
    return out;
}

double HeatKernelEngine::kernel_value(double t, VertexId x, VertexId y) const {
    return kernel(t, x)[y];
}

HeatKernelEngine::TimeIntegral HeatKernelEngine::integrate_kernel(VertexId x, double t_lo,
                                                                  double t_hi) const {
    if (!(t_lo > 0.0) || !(t_hi > t_lo)) throw PreconditionError("integrate_kernel: need 0 < t_lo < t_hi");
    const Space& s = *space_;
    TimeIntegral out;
    out.g = ScalarField(s, 0.0);
    out.equilibrium_density = equilibrium_density();
    out.t_hi = t_hi;

    if (method_ == Method::eigendecomposition) {
#ifdef UBETA_HAVE_EIGEN
        const auto rx = impl_->dense_of[static_cast<std::size_t>(x)];
        const double sx = std::sqrt(s.measure(x));
        const auto m = static_cast<Eigen::Index>(impl_->live_index.size());
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
        double slowest = std::numeric_limits<double>::max();
        for (Eigen::Index k = 0; k < m; ++k) {
            double lam = impl_->eigenvalues[k];
            if (lam <= 1e-12) continue;  // equilibrium mode removed
            slowest = std::min(slowest, lam);
            coef[k] = std::exp(-lam * t_lo) / lam * impl_->eigenvectors(rx, k);  // exact tail included
        }
        Eigen::VectorXd vals = impl_->eigenvectors * coef;
        for (std::size_t r = 0; r < impl_->live_index.size(); ++r) {
            const auto i = impl_->live_index[r];
            out.g[static_cast<VertexId>(i)] =
                vals[static_cast<Eigen::Index>(r)] / (sx * std::sqrt(s.measure(static_cast<VertexId>(i))));
        }
        out.tail_rate = slowest == std::numeric_limits<double>::max() ? 0.0 : slowest;
        return out;
#endif
    }

    // stepping path: trapezoid in t over equilibrium-removed snapshots on a
    // geometric grid, then a fitted exponential tail beyond t_hi
    const double eq = out.equilibrium_density;
    const double ratio = 1.1;
    std::vector<double> grid{t_lo};
    while (grid.back() * ratio < t_hi) grid.push_back(grid.back() * ratio);
    grid.push_back(t_hi);

    std::vector<double> p(s.size(), 0.0);
    p[static_cast<std::size_t>(x)] = 1.0 / s.measure(x);
    ImplicitStepper stepper(s, impl_->live);
    stepper.evolve(p, 0.0, grid[0], grid[0] / 64.0);

    std::vector<double> prev(s.size(), 0.0), cur(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) prev[i] = impl_->live[i] ? p[i] - eq : 0.0;
    double prev_norm = 0.0;
    for (double v : prev) prev_norm = std::max(prev_norm, std::abs(v));
    double last_rate = 0.0;

    for (std::size_t gi = 1; gi < grid.size(); ++gi) {
        stepper.evolve(p, grid[gi - 1], grid[gi], grid[gi - 1] / 64.0);
        double dt = grid[gi] - grid[gi - 1];
        double cn = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            cur[i] = impl_->live[i] ? p[i] - eq : 0.0;
            out.g[static_cast<VertexId>(i)] += 0.5 * dt * (prev[i] + cur[i]);
            cn = std::max(cn, std::abs(cur[i]));
        }
        if (prev_norm > 0.0 && cn > 0.0 && cn < prev_norm) last_rate = std::log(prev_norm / cn) / dt;
        prev_norm = cn;
        std::swap(prev, cur);
    }
    out.tail_rate = last_rate;
    if (last_rate > 0.0)
        for (std::size_t i = 0; i < s.size(); ++i) out.g[static_cast<VertexId>(i)] += prev[i] / last_rate;
    return out;
}

HeatKernelEngine::TimeIntegral quasi_green(const HeatKernelEngine& engine, VertexId x, double eps,
                                           double t_max) {
    if (!(eps > 0.0) || !(t_max > eps)) throw PreconditionError("quasi_green: need 0 < eps < tMax");
    return engine.integrate_kernel(x, eps, t_max);
}

GreenResult green_shell(const Space& s, VertexId pole, double shell_radius, double tol, int max_iter) {
    const auto n = s.size();
    std::vector<char> free_mask(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = static_cast<VertexId>(i);
        bool on_shell = s.point_distance(pole, v) >= shell_radius || s.is_boundary(v);
        free_mask[i] = on_shell ? 0 : 1;
    }
    if (!free_mask[static_cast<std::size_t>(pole)])
        throw PreconditionError("green_shell: pole lies on the shell");
    std::vector<double> rhs(n, 0.0);
    rhs[static_cast<std::size_t>(pole)] = 1.0;  // unit charge: stiffness rhs of L G = -delta/mu
    std::vector<double> g(n, 0.0);
    auto rep = solve_dirichlet(s, free_mask, g, tol, max_iter, &rhs);
    if (!rep.converged)
        throw SolverError("green_shell: linear solve did not reach tolerance (residual " +
                          std::to_string(rep.residual) + ")");
    GreenResult out;
    out.g = ScalarField(s, 0.0);
    for (std::size_t i = 0; i < n; ++i) out.g[static_cast<VertexId>(i)] = g[i];
    out.pole = pole;
    out.iterations = rep.iterations;
    out.residual = rep.residual;
    return out;
}

ScalarField green_shell_radial(const Space& s, double shell_radius) {
    if (s.backend != Backend::radial) throw PreconditionError("green_shell_radial: radial backend only");
    const double nd = s.dim;
    if (!(nd > 2.0)) throw PreconditionError("green_shell_radial: N > 2 required");
    const double mz = s.cross_section_mass;
    const double p = 2.0 - nd;
    RadialProfile prof;
    prof.value = [p, mz, nd, shell_radius](double r) {
        return (std::pow(r, p) - std::pow(shell_radius, p)) / ((nd - 2.0) * mz);
    };
    prof.deriv = [p, mz, nd](double r) { return p * std::pow(r, p - 1.0) / ((nd - 2.0) * mz); };
    prof.second = [p, mz, nd](double r) { return p * (p - 1.0) * std::pow(r, p - 2.0) / ((nd - 2.0) * mz); };
    ScalarField out(s);
    out.profile = prof;
    for (std::size_t i = 0; i < s.size(); ++i)
        out.set(static_cast<VertexId>(i), std::max(0.0, prof.value(s.vertices[i].pos[0])));
    return out;
}

namespace {

struct MassProfile {
    std::vector<double> s;
    std::vector<double> m;
    double lambda = 0.0;  // fitted growth exponent on the upper half of the range
    double c = 0.0;
};

MassProfile mass_profile(const Space& sp, VertexId center, double s_max, int points) {
    MassProfile out;
    for (int i = 1; i <= points; ++i) {
        double r = s_max * static_cast<double>(i) / points;
        out.s.push_back(r);
        out.m.push_back(ball_mass(sp, center, r));
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < out.s.size(); ++i) {
        if (out.s[i] < 0.5 * s_max || out.m[i] <= 0.0) continue;
        double lx = std::log(out.s[i]);
        double ly = std::log(out.m[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++k;
    }
    if (k >= 2) {
        double det = static_cast<double>(k) * sxx - sx * sx;
        out.lambda = (static_cast<double>(k) * sxy - sx * sy) / det;
        out.c = std::exp((sxx * sy - sx * sxy) / det);
    }
    return out;
}

double integral_s_over_m(const MassProfile& prof, double from, double to) {
    double acc = 0.0;
    for (std::size_t i = 1; i < prof.s.size(); ++i) {
        double a = prof.s[i - 1], b = prof.s[i];
        if (b <= from || a >= to) continue;
        double lo = std::max(a, from), hi = std::min(b, to);
        double fa = a / prof.m[i - 1], fb = b / prof.m[i];
        double flo = fa + (fb - fa) * (lo - a) / (b - a);
        double fhi = fa + (fb - fa) * (hi - a) / (b - a);
        acc += 0.5 * (flo + fhi) * (hi - lo);
    }
    return acc;
}

}  // namespace

ParabolicityReport nonparabolic_test(const Space& sp, VertexId center, double s_max, double margin) {
    double h_local = std::numeric_limits<double>::max();
    for (const auto& e : sp.neighbors(center)) h_local = std::min(h_local, e.length);
    if (s_max < 4.0 * h_local)
        throw PreconditionError("nonparabolic_test: sMax below 4 ball radii of resolution");
    if (s_max > safe_extent(sp, center) * 1.0001)
        throw PreconditionError("nonparabolic_test: sMax exceeds the safe extent");

    auto prof = mass_profile(sp, center, s_max, 48);
    ParabolicityReport out;
    out.integral = integral_s_over_m(prof, std::min(1.0, 0.25 * s_max), s_max);
    out.growth_exponent = prof.lambda;
    double j1 = integral_s_over_m(prof, 0.25 * s_max, 0.5 * s_max);
    double j2 = integral_s_over_m(prof, 0.5 * s_max, s_max);
    out.tail_ratio = j1 > 0.0 ? (j2 / 2.0) / j1 : 0.0;  // per unit dyadic window

    if (prof.lambda > 2.0 + margin)
        out.classification = Parabolicity::nonparabolic;
    else if (prof.lambda < 2.0 - margin)
        out.classification = Parabolicity::parabolic;
    else if (out.tail_ratio >= 0.8)
        out.classification = Parabolicity::parabolic;  // borderline growth: the integral diverges
    else if (out.tail_ratio > 0.0 && out.tail_ratio <= 0.6)
        out.classification = Parabolicity::nonparabolic;
    else
        out.classification = Parabolicity::inconclusive;
    return out;
}

SandwichReport green_sandwich_check(const Space& sp, VertexId x, const ScalarField& g,
                                    std::span<const VertexId> y_grid, double ceiling) {
    const double s_max = safe_extent(sp, x);
    auto prof = mass_profile(sp, x, s_max, 48);
    if (!(prof.lambda > 2.0))
        throw PreconditionError("green_sandwich_check: space does not look nonparabolic");
    SandwichReport out;
    double c = 1.0;
    for (VertexId y : y_grid) {
        double d = sp.point_distance(x, y);
        if (!(d > 0.0)) continue;
        double bound = integral_s_over_m(prof, d, s_max);
        bound += std::pow(s_max, 2.0 - prof.lambda) / (prof.c * (prof.lambda - 2.0));
        double gv = g[y];
        out.lower.push_back(bound);
        out.upper.push_back(bound);
        if (gv > 0.0 && bound > 0.0) c = std::max(c, std::max(gv / bound, bound / gv));
    }
    out.c_fit = c;
    out.holds = c <= ceiling;
    return out;
}

GreenExteriorResult green_as_exterior_solution(const Space& sp, const ScalarField& g,
                                               const std::vector<char>& omega_c, VertexId pole) {
    if (!omega_c[static_cast<std::size_t>(pole)])
        throw PreconditionError("green_as_exterior_solution: pole must lie in Omega^c");
    double min_g = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < sp.size(); ++i) {
        if (!omega_c[i]) continue;
        bool boundary_layer = false;
        for (const auto& h : sp.neighbors(static_cast<VertexId>(i)))
            if (!omega_c[static_cast<std::size_t>(h.to)]) {
                boundary_layer = true;
                break;
            }
        if (boundary_layer) min_g = std::min(min_g, g[static_cast<VertexId>(i)]);
    }
    if (!(min_g > 0.0) || min_g == std::numeric_limits<double>::max())
        throw PreconditionError("green_as_exterior_solution: G not positive on the obstacle boundary");
    GreenExteriorResult out;
    out.lambda = 1.0 / min_g;
    out.u = ScalarField(sp, 0.0);
    for (std::size_t i = 0; i < sp.size(); ++i)
        out.u[static_cast<VertexId>(i)] = out.lambda * g[static_cast<VertexId>(i)];

    double worst = 0.0;
    double min_bd = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < sp.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        if (omega_c[i]) {
            bool boundary_layer = false;
            for (const auto& h : sp.neighbors(v))
                if (!omega_c[static_cast<std::size_t>(h.to)]) {
                    boundary_layer = true;
                    break;
                }
            if (boundary_layer) min_bd = std::min(min_bd, out.u[v]);
            continue;
        }
        if (v == pole || sp.is_boundary(v)) continue;
        if (out.u[v] <= 0.0) continue;  // beyond the shell
        bool next_to_shell = false;
        for (const auto& h : sp.neighbors(v))
            if (out.u[h.to] <= 0.0 || sp.is_boundary(h.to)) {
                next_to_shell = true;
                break;
            }
        if (next_to_shell) continue;
        double acc = 0.0;
        for (const auto& h : sp.neighbors(v)) acc += h.weight * (out.u[h.to] - out.u[v]);
        worst = std::max(worst, std::abs(acc) / sp.measure(v));
    }
    out.harmonic_residual = worst;
    out.min_on_boundary = min_bd;
    return out;
}

double integrate_log_time(const std::function<double(double)>& f, double t_lo, double t_hi,
                          double tol) {
    if (!(t_lo > 0.0) || !(t_hi > t_lo)) throw PreconditionError("integrate_log_time: need 0 < t_lo < t_hi");
    auto g = [&](double tau) {
        double t = std::exp(tau);
        return f(t) * t;
    };
    struct Rec {
        double a, b, fa, fm, fb, whole;
    };
    auto simpson = [](double a, double b, double fa, double fm, double fb) {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    };
    double a0 = std::log(t_lo), b0 = std::log(t_hi);
    std::vector<Rec> stack;
    double fa = g(a0), fb = g(b0), fm = g(0.5 * (a0 + b0));
    stack.push_back({a0, b0, fa, fm, fb, simpson(a0, b0, fa, fm, fb)});
    double acc = 0.0;
    int guard = 0;
    while (!stack.empty()) {
        if (++guard > 200000) throw SolverError("integrate_log_time: quadrature did not converge");
        Rec r = stack.back();
        stack.pop_back();
        double m = 0.5 * (r.a + r.b);
        double fl = g(0.5 * (r.a + m));
        double fr = g(0.5 * (m + r.b));
        double left = simpson(r.a, m, r.fa, fl, r.fm);
        double right = simpson(m, r.b, r.fm, fr, r.fb);
        if (std::abs(left + right - r.whole) < 15.0 * tol * std::max(1.0, std::abs(left + right)) ||
            r.b - r.a < 1e-12) {
            acc += left + right + (left + right - r.whole) / 15.0;
        } else {
            stack.push_back({r.a, m, r.fa, fl, r.fm, left});
            stack.push_back({m, r.b, r.fm, fr, r.fb, right});
        }
    }
    return acc;
}

}  // namespace ubeta
