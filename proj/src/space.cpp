#include "ubeta/space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace ubeta {

namespace {

constexpr double kPi = std::numbers::pi;

double sq(double x) { return x * x; }

double wrap_gap(double a, double b, double period) {
    double d = std::abs(a - b);
    return std::min(d, period - d);
}

}  // namespace

// ---- Chart ------------------------------------------------------------------

std::size_t Chart::index_of(std::span<const std::size_t> multi) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < axes.size(); ++k) idx = idx * axes[k].size() + multi[k];
    return idx;
}

std::vector<std::size_t> Chart::multi_of(std::size_t index) const {
    std::vector<std::size_t> multi(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
        multi[k] = index % axes[k].size();
        index /= axes[k].size();
    }
    return multi;
}

// ---- Space ------------------------------------------------------------------

void Space::finalize() {
    const std::size_t n = vertices.size();
    if (n == 0) throw PreconditionError("space has no vertices");
    total_mass_ = 0.0;
    for (const auto& v : vertices) {
        if (!(v.measure > 0.0)) throw PreconditionError("vertex measures must be strictly positive");
        total_mass_ += v.measure;
    }
    std::vector<std::size_t> deg(n, 0);
    for (const auto& e : edges) {
        if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(e.a) >= n || static_cast<std::size_t>(e.b) >= n)
            throw PreconditionError("edge endpoint out of range");
        if (e.a == e.b) throw PreconditionError("self-loop edge");
        if (!(e.weight > 0.0) || !(e.length > 0.0))
            throw PreconditionError("edge weights and lengths must be strictly positive");
        ++deg[static_cast<std::size_t>(e.a)];
        ++deg[static_cast<std::size_t>(e.b)];
    }
    adj_offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) adj_offsets_[i + 1] = adj_offsets_[i] + deg[i];
    adj_.assign(adj_offsets_[n], Half{});
    std::vector<std::size_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
    for (const auto& e : edges) {
        adj_[cursor[static_cast<std::size_t>(e.a)]++] = Half{e.b, e.weight, e.length};
        adj_[cursor[static_cast<std::size_t>(e.b)]++] = Half{e.a, e.weight, e.length};
    }
    if (boundary_.size() != n) {
        // Structural default: a vertex is boundary if its degree is below the
        // maximum degree in the graph. Matches every builder's mesh layout.
        std::size_t dmax = 0;
        for (std::size_t i = 0; i < n; ++i) dmax = std::max(dmax, deg[i]);
        boundary_.assign(n, 0);
        for (std::size_t i = 0; i < n; ++i) boundary_[i] = deg[i] < dmax ? 1 : 0;
    }
    // connectivity (graph backend invariant)
    if (n > 1) {
        std::vector<char> seen(n, 0);
        std::vector<VertexId> stack{0};
        seen[0] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            VertexId v = stack.back();
            stack.pop_back();
            for (const auto& h : neighbors(v)) {
                if (!seen[static_cast<std::size_t>(h.to)]) {
                    seen[static_cast<std::size_t>(h.to)] = 1;
                    ++reached;
                    stack.push_back(h.to);
                }
            }
        }
        if (reached != n) throw PreconditionError("space must be connected");
    }
    dist_cache_.clear();
}

std::span<const Space::Half> Space::neighbors(VertexId v) const {
    const auto i = static_cast<std::size_t>(v);
    return {adj_.data() + adj_offsets_[i], adj_offsets_[i + 1] - adj_offsets_[i]};
}

std::size_t Space::degree(VertexId v) const {
    const auto i = static_cast<std::size_t>(v);
    return adj_offsets_[i + 1] - adj_offsets_[i];
}

std::shared_ptr<const std::vector<double>> Space::geodesic_from(VertexId source) const {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = dist_cache_.find(source);
        if (it != dist_cache_.end()) return it->second;
    }
    auto dist = std::make_shared<std::vector<double>>(size(), infinite_distance);
    using Item = std::pair<double, VertexId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    (*dist)[static_cast<std::size_t>(source)] = 0.0;
    pq.emplace(0.0, source);
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > (*dist)[static_cast<std::size_t>(v)]) continue;
        for (const auto& h : neighbors(v)) {
            double nd = d + h.length;
            if (nd < (*dist)[static_cast<std::size_t>(h.to)]) {
                (*dist)[static_cast<std::size_t>(h.to)] = nd;
                pq.emplace(nd, h.to);
            }
        }
    }
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto [it, _] = dist_cache_.emplace(source, std::move(dist));
    return it->second;
}

double Space::geodesic_distance(VertexId a, VertexId b) const {
    if (a == b) return 0.0;
    return (*geodesic_from(a))[static_cast<std::size_t>(b)];
}

std::vector<double> Space::geodesic_from_restricted(VertexId source, const std::vector<char>& allowed) const {
    std::vector<double> dist(size(), infinite_distance);
    if (!allowed[static_cast<std::size_t>(source)]) return dist;
    using Item = std::pair<double, VertexId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(source)] = 0.0;
    pq.emplace(0.0, source);
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(v)]) continue;
        for (const auto& h : neighbors(v)) {
            if (!allowed[static_cast<std::size_t>(h.to)]) continue;
            double nd = d + h.length;
            if (nd < dist[static_cast<std::size_t>(h.to)]) {
                dist[static_cast<std::size_t>(h.to)] = nd;
                pq.emplace(nd, h.to);
            }
        }
    }
    return dist;
}

bool Space::has_point_metric() const {
    if (chart.kind != Chart::Kind::none) return true;
    return !vertices.empty() && !vertices.front().pos.empty();
}

double Space::point_distance(VertexId a, VertexId b) const {
    const auto ia = static_cast<std::size_t>(a);
    const auto ib = static_cast<std::size_t>(b);
    switch (chart.kind) {
        case Chart::Kind::lattice: {
            double s = 0.0;
            const auto& pa = vertices[ia].pos;
            const auto& pb = vertices[ib].pos;
            for (std::size_t k = 0; k < pa.size(); ++k) s += sq(pa[k] - pb[k]);
            return std::sqrt(s);
        }
        case Chart::Kind::radial: {
            return std::abs(vertices[ia].pos[0] - vertices[ib].pos[0]);
        }
        case Chart::Kind::cone: {
            auto ma = chart.multi_of(ia);
            auto mb = chart.multi_of(ib);
            double t = chart.axes[0][ma[0]];
            double s = chart.axes[0][mb[0]];
            double arc_a = chart.axes[1][ma[1]];
            double arc_b = chart.axes[1][mb[1]];
            double dz = chart.wrap_last ? wrap_gap(arc_a, arc_b, chart.wrap_period)
                                        : std::abs(arc_a - arc_b);
            double c = std::cos(std::min(dz, kPi));
            return std::sqrt(std::max(0.0, t * t + s * s - 2.0 * t * s * c));
        }
        case Chart::Kind::cylinder: {
            auto ma = chart.multi_of(ia);
            auto mb = chart.multi_of(ib);
            double dx = chart.axes[0][ma[0]] - chart.axes[0][mb[0]];
            double darc = wrap_gap(chart.axes[1][ma[1]], chart.axes[1][mb[1]], chart.wrap_period);
            return std::sqrt(dx * dx + darc * darc);
        }
        case Chart::Kind::none:
            break;
    }
    if (!vertices[ia].pos.empty() && vertices[ia].pos.size() == vertices[ib].pos.size()) {
        double s = 0.0;
        for (std::size_t k = 0; k < vertices[ia].pos.size(); ++k)
            s += sq(vertices[ia].pos[k] - vertices[ib].pos[k]);
        return std::sqrt(s);
    }
    return geodesic_distance(a, b);
}

VertexId Space::nearest_vertex(std::span<const double> pos) const {
    VertexId best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const auto& p = vertices[i].pos;
        if (p.size() != pos.size()) continue;
        double s = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) s += sq(p[k] - pos[k]);
        if (s < best_d) {
            best_d = s;
            best = static_cast<VertexId>(i);
        }
    }
    return best;
}

double Space::r_min() const {
    if (chart.kind == Chart::Kind::radial || chart.kind == Chart::Kind::cone)
        return chart.axes[0].front();
    throw PreconditionError("r_min: space has no radial axis");
}

double Space::r_max() const {
    if (chart.kind == Chart::Kind::radial || chart.kind == Chart::Kind::cone)
        return chart.axes[0].back();
    throw PreconditionError("r_max: space has no radial axis");
}

// ---- ScalarField -------------------------------------------------------------

ScalarField::ScalarField(const Space& s)
    : space_(&s),
      values_(s.size(), std::numeric_limits<double>::quiet_NaN()),
      mask_(s.size(), 0) {}

ScalarField::ScalarField(const Space& s, double fill)
    : space_(&s), values_(s.size(), fill), mask_(s.size(), 1) {}

std::vector<char> ScalarField::stencil_interior() const {
    std::vector<char> out(space_->size(), 0);
    for (std::size_t i = 0; i < space_->size(); ++i) {
        if (!mask_[i]) continue;
        bool ok = true;
        for (const auto& h : space_->neighbors(static_cast<VertexId>(i))) {
            if (!mask_[static_cast<std::size_t>(h.to)]) {
                ok = false;
                break;
            }
        }
        out[i] = ok ? 1 : 0;
    }
    return out;
}

// ---- builders -----------------------------------------------------------------

Space build_lattice(int n_dim, double extent, double h, std::size_t vertex_budget) {
    if (n_dim < 2) throw PreconditionError("build_lattice: N < 2");
    if (!(h > 0.0) || !(extent > 0.0) || h >= extent)
        throw PreconditionError("build_lattice: require 0 < h < extent");
    const auto per_axis = static_cast<std::size_t>(std::llround(2.0 * extent / h)) + 1;
    double count = 1.0;
    for (int k = 0; k < n_dim; ++k) count *= static_cast<double>(per_axis);
    if (count > static_cast<double>(vertex_budget))
        throw PreconditionError("build_lattice: vertex budget exceeded");

    Space s;
    s.backend = Backend::graph;
    s.dim = n_dim;
    s.label = "lattice";
    s.chart.kind = Chart::Kind::lattice;
    s.chart.axes.resize(static_cast<std::size_t>(n_dim));
    const auto half = static_cast<std::ptrdiff_t>(per_axis / 2);
    for (int k = 0; k < n_dim; ++k) {
        auto& ax = s.chart.axes[static_cast<std::size_t>(k)];
        ax.resize(per_axis);
        for (std::size_t i = 0; i < per_axis; ++i)
            ax[i] = h * (static_cast<double>(static_cast<std::ptrdiff_t>(i)) - static_cast<double>(half));
    }

    const auto n = static_cast<std::size_t>(count);
    const double measure = std::pow(h, n_dim);
    const double weight = std::pow(h, n_dim - 2);
    s.vertices.resize(n);
    std::vector<std::size_t> multi(static_cast<std::size_t>(n_dim), 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& v = s.vertices[i];
        v.measure = measure;
        v.pos.resize(static_cast<std::size_t>(n_dim));
        for (int k = 0; k < n_dim; ++k) v.pos[static_cast<std::size_t>(k)] = s.chart.axes[static_cast<std::size_t>(k)][multi[static_cast<std::size_t>(k)]];
        // shifted edges to +1 neighbors
        for (int k = 0; k < n_dim; ++k) {
            if (multi[static_cast<std::size_t>(k)] + 1 < per_axis) {
                std::size_t stride = 1;
                for (int j = n_dim - 1; j > k; --j) stride *= per_axis;
                s.edges.push_back(Edge{static_cast<VertexId>(i), static_cast<VertexId>(i + stride), weight, h});
            }
        }
        // advance row-major counter (last axis fastest)
        for (std::size_t k = static_cast<std::size_t>(n_dim); k-- > 0;) {
            if (++multi[k] < per_axis) break;
            multi[k] = 0;
        }
    }
    std::vector<char> boundary(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto m = s.chart.multi_of(i);
        for (std::size_t k = 0; k < m.size(); ++k)
            if (m[k] == 0 || m[k] + 1 == per_axis) {
                boundary[i] = 1;
                break;
            }
    }
    s.set_boundary(std::move(boundary));
    s.finalize();
    return s;
}

ConeCrossSection ConeCrossSection::circle(double angle) {
    ConeCrossSection cs;
    cs.kind = Kind::circle;
    cs.circle_angle = angle;
    return cs;
}

ConeCrossSection ConeCrossSection::sphere(double factor) {
    ConeCrossSection cs;
    cs.kind = Kind::sphere;
    cs.sphere_factor = factor;
    return cs;
}

ConeCrossSection ConeCrossSection::custom(const Space& z) {
    ConeCrossSection cs;
    cs.kind = Kind::graph;
    cs.graph = &z;
    return cs;
}

namespace {

double cross_section_diameter(const Space& z) {
    // exact on small graphs; the builders only accept modest cross-sections
    double diam = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        auto d = z.geodesic_from(static_cast<VertexId>(i));
        for (double x : *d)
            if (x < Space::infinite_distance) diam = std::max(diam, x);
    }
    return diam;
}

}  // namespace

Space build_cone(double n_dim, const ConeCrossSection& cs, double r_min, double r_max,
                 int radial_steps, Backend backend, int cross_section_samples) {
    if (!(r_min > 0.0)) throw PreconditionError("build_cone: rMin <= 0");
    if (!(r_min < r_max)) throw PreconditionError("build_cone: rMin >= rMax");
    if (!(n_dim >= 2.0)) throw PreconditionError("build_cone: N < 2");
    if (radial_steps < 2) throw PreconditionError("build_cone: radialSteps < 2");

    double mz = 0.0;
    double diam = 0.0;
    double circle_total = 0.0;
    switch (cs.kind) {
        case ConeCrossSection::Kind::circle:
            if (!(cs.circle_angle > 0.0) || cs.circle_angle > 2.0 * kPi + 1e-12)
                throw PreconditionError("build_cone: circle angle outside (0, 2*pi]");
            circle_total = cs.circle_angle;
            mz = cs.circle_angle;
            diam = std::min(cs.circle_angle / 2.0, kPi);
            break;
        case ConeCrossSection::Kind::sphere:
            if (!(cs.sphere_factor > 0.0) || cs.sphere_factor > 1.0 + 1e-12)
                throw PreconditionError("build_cone: sphere radius factor outside (0, 1]");
            mz = 4.0 * kPi * sq(cs.sphere_factor);
            diam = kPi * cs.sphere_factor;
            break;
        case ConeCrossSection::Kind::graph: {
            if (cs.graph == nullptr) throw PreconditionError("build_cone: missing cross-section graph");
            mz = cs.graph->total_mass();
            diam = cross_section_diameter(*cs.graph);
            break;
        }
    }
    if (diam > kPi + 1e-9) throw PreconditionError("build_cone: cross-section diameter exceeds pi");

    // geometric radial shells
    std::vector<double> radii(static_cast<std::size_t>(radial_steps));
    const double rho = std::pow(r_max / r_min, 1.0 / (radial_steps - 1));
    for (int i = 0; i < radial_steps; ++i) radii[static_cast<std::size_t>(i)] = r_min * std::pow(rho, i);
    radii.back() = r_max;

    Space s;
    s.dim = n_dim;
    s.cross_section_mass = mz;

    if (backend == Backend::radial) {
        s.backend = Backend::radial;
        s.label = "radial-cone";
        s.chart.kind = Chart::Kind::radial;
        s.chart.axes = {radii};
        s.vertices.resize(radii.size());
        for (std::size_t i = 0; i < radii.size(); ++i) {
            double lo = i == 0 ? radii[0] : 0.5 * (radii[i - 1] + radii[i]);
            double hi = i + 1 == radii.size() ? radii.back() : 0.5 * (radii[i] + radii[i + 1]);
            s.vertices[i].pos = {radii[i]};
            s.vertices[i].measure = mz * (std::pow(hi, n_dim) - std::pow(lo, n_dim)) / n_dim;
        }
        for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
            double rf = 0.5 * (radii[i] + radii[i + 1]);
            double dl = radii[i + 1] - radii[i];
            s.edges.push_back(Edge{static_cast<VertexId>(i), static_cast<VertexId>(i + 1),
                                   mz * std::pow(rf, n_dim - 1) / dl, dl});
        }
        std::vector<char> boundary(s.vertices.size(), 0);
        boundary.front() = 1;
        boundary.back() = 1;
        s.set_boundary(std::move(boundary));
        s.finalize();
        return s;
    }

    if (cs.kind == ConeCrossSection::Kind::sphere)
        throw PreconditionError("build_cone: graph backend supports circle or custom graph cross-sections");

    // circle cross-section as an arc-parametrized ring (or open arc)
    const bool full_circle = circle_total > 2.0 * kPi - 1e-9;
    int m = cross_section_samples;
    if (m <= 0) {
        // shell aspect ~ 1: arc spacing comparable to radial spacing mid-mesh
        double r_mid = std::sqrt(r_min * r_max);
        double dr_mid = r_mid * (rho - 1.0);
        m = std::max(8, static_cast<int>(std::lround(circle_total * r_mid / std::max(dr_mid, 1e-12))));
        m = std::min(m, 4096);
    }
    const double darc = circle_total / (full_circle ? m : (m - 1));
    std::vector<double> arcs(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) arcs[static_cast<std::size_t>(j)] = darc * j;

    s.backend = Backend::graph;
    s.label = "cone";
    s.chart.kind = Chart::Kind::cone;
    s.chart.axes = {radii, arcs};
    s.chart.wrap_last = full_circle;
    s.chart.wrap_period = circle_total;

    const auto nr = radii.size();
    const auto nm = arcs.size();
    s.vertices.resize(nr * nm);
    for (std::size_t i = 0; i < nr; ++i) {
        double lo = i == 0 ? radii[0] : 0.5 * (radii[i - 1] + radii[i]);
        double hi = i + 1 == nr ? radii.back() : 0.5 * (radii[i] + radii[i + 1]);
        double shell_measure = (std::pow(hi, n_dim) - std::pow(lo, n_dim)) / n_dim;
        for (std::size_t j = 0; j < nm; ++j) {
            auto& v = s.vertices[i * nm + j];
            double zcell = full_circle ? darc : (j == 0 || j + 1 == nm ? darc / 2.0 : darc);
            v.measure = shell_measure * zcell;
            v.pos.clear();
        }
    }
    for (std::size_t i = 0; i < nr; ++i) {
        double lo = i == 0 ? radii[0] : 0.5 * (radii[i - 1] + radii[i]);
        double hi = i + 1 == nr ? radii.back() : 0.5 * (radii[i] + radii[i + 1]);
        for (std::size_t j = 0; j < nm; ++j) {
            const auto id = static_cast<VertexId>(i * nm + j);
            if (i + 1 < nr) {
                // radial edge: transmissibility m_z-cell * r_face^{N-1} / dr
                double rf = 0.5 * (radii[i] + radii[i + 1]);
                double dl = radii[i + 1] - radii[i];
                double zcell = full_circle ? darc : (j == 0 || j + 1 == nm ? darc / 2.0 : darc);
                s.edges.push_back(Edge{id, static_cast<VertexId>((i + 1) * nm + j),
                                       zcell * std::pow(rf, n_dim - 1) / dl, dl});
            }
            const bool has_next = full_circle ? true : (j + 1 < nm);
            if (has_next && nm > 1) {
                std::size_t jn = (j + 1) % nm;
                // angular edge: metric t^2 dz^2, weight = int r^{N-3} dr / darc
                double radial_cell = n_dim == 2.0 ? std::log(hi / lo)
                                                  : (std::pow(hi, n_dim - 2.0) - std::pow(lo, n_dim - 2.0)) / (n_dim - 2.0);
                double chord = 2.0 * radii[i] * std::sin(std::min(darc, kPi) / 2.0);
                s.edges.push_back(Edge{id, static_cast<VertexId>(i * nm + jn),
                                       radial_cell / darc, std::max(chord, 1e-300)});
            }
        }
    }
    std::vector<char> boundary(s.vertices.size(), 0);
    for (std::size_t j = 0; j < nm; ++j) {
        boundary[j] = 1;
        boundary[(nr - 1) * nm + j] = 1;
        if (!full_circle) {
            for (std::size_t i = 0; i < nr; ++i) {
                boundary[i * nm] = 1;
                boundary[i * nm + (nm - 1)] = 1;
            }
        }
    }
    s.set_boundary(std::move(boundary));
    s.finalize();
    return s;
}

Space build_cylinder(double circumference, double length, double h, std::size_t vertex_budget) {
    if (!(h > 0.0) || h > length || h > circumference)
        throw PreconditionError("build_cylinder: h must not exceed either parameter");
    const auto nx = static_cast<std::size_t>(std::llround(length / h)) + 1;
    const auto ny = std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(circumference / h)));
    if (nx * ny > vertex_budget) throw PreconditionError("build_cylinder: vertex budget exceeded");
    const double darc = circumference / static_cast<double>(ny);

    Space s;
    s.backend = Backend::graph;
    s.dim = 2.0;
    s.label = "cylinder";
    s.chart.kind = Chart::Kind::cylinder;
    s.chart.axes.resize(2);
    s.chart.axes[0].resize(nx);
    for (std::size_t i = 0; i < nx; ++i)
        s.chart.axes[0][i] = h * static_cast<double>(i) - length / 2.0;
    s.chart.axes[1].resize(ny);
    for (std::size_t j = 0; j < ny; ++j) s.chart.axes[1][j] = darc * static_cast<double>(j);
    s.chart.wrap_last = true;
    s.chart.wrap_period = circumference;

    const double radius = circumference / (2.0 * kPi);
    s.vertices.resize(nx * ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            auto& v = s.vertices[i * ny + j];
            v.measure = h * darc;
            double theta = s.chart.axes[1][j] / radius;
            v.pos = {s.chart.axes[0][i], radius * std::cos(theta), radius * std::sin(theta)};
        }
    }
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const auto id = static_cast<VertexId>(i * ny + j);
            if (i + 1 < nx)
                s.edges.push_back(Edge{id, static_cast<VertexId>((i + 1) * ny + j), darc / h, h});
            s.edges.push_back(Edge{id, static_cast<VertexId>(i * ny + (j + 1) % ny), h / darc, darc});
        }
    }
    std::vector<char> boundary(s.vertices.size(), 0);
    for (std::size_t j = 0; j < ny; ++j) {
        boundary[j] = 1;
        boundary[(nx - 1) * ny + j] = 1;
    }
    s.set_boundary(std::move(boundary));
    s.finalize();
    return s;
}

// ---- measure / distance ---------------------------------------------------------

std::vector<char> ball_set(const Space& s, VertexId center, double r) {
    std::vector<char> out(s.size(), 0);
    if (s.has_point_metric()) {
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.point_distance(center, static_cast<VertexId>(i)) <= r) out[i] = 1;
    } else {
        auto d = s.geodesic_from(center);
        for (std::size_t i = 0; i < s.size(); ++i)
            if ((*d)[i] <= r) out[i] = 1;
    }
    return out;
}

double ball_mass(const Space& s, VertexId center, double r) {
    if (r < 0.0) throw PreconditionError("ball_mass: negative radius");
    double m = 0.0;
    if (s.has_point_metric()) {
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.point_distance(center, static_cast<VertexId>(i)) <= r) m += s.vertices[i].measure;
    } else {
        auto d = s.geodesic_from(center);
        for (std::size_t i = 0; i < s.size(); ++i)
            if ((*d)[i] <= r) m += s.vertices[i].measure;
    }
    return m;
}

double safe_extent(const Space& s, VertexId center) {
    double r = Space::infinite_distance;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s.is_boundary(static_cast<VertexId>(i))) continue;
        r = std::min(r, s.point_distance(center, static_cast<VertexId>(i)));
    }
    return r;
}

std::vector<VolumeProfilePoint> bishop_gromov_profile(const Space& s, VertexId center,
                                                      std::span<const double> r_grid) {
    for (std::size_t i = 1; i < r_grid.size(); ++i)
        if (!(r_grid[i] > r_grid[i - 1]))
            throw PreconditionError("bishop_gromov_profile: rGrid must be increasing");
    const double safe = safe_extent(s, center);
    std::vector<VolumeProfilePoint> out;
    out.reserve(r_grid.size());
    for (double r : r_grid) {
        if (!(r > 0.0)) throw PreconditionError("bishop_gromov_profile: radii must be positive");
        out.push_back({r, ball_mass(s, center, r) / std::pow(r, s.dim), r > safe});
    }
    return out;
}

double avr_estimate(const Space& s, VertexId center) {
    if (s.backend == Backend::radial) {
        // exact: m(B_r) about the tip ~ m_Z r^N / N
        return s.cross_section_mass / s.dim;
    }
    const double safe = safe_extent(s, center);
    if (!(safe > 0.0)) throw PreconditionError("avr_estimate: no usable radius");
    return ball_mass(s, center, safe) / std::pow(safe, s.dim);
}

// ---- differential primitives ------------------------------------------------------

ScalarField laplacian(const Space& s, const ScalarField& f) {
    ScalarField out(s);
    if (s.backend == Backend::radial && f.profile && f.profile->second) {
        const auto& p = *f.profile;
        RadialProfile lp;
        double n = s.dim;
        lp.value = [p, n](double r) { return p.second(r) + (n - 1.0) / r * p.deriv(r); };
        out.profile = lp;
        for (std::size_t i = 0; i < s.size(); ++i)
            out.set(static_cast<VertexId>(i), lp.value(s.vertices[i].pos[0]));
        return out;
    }
    auto interior = f.stencil_interior();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!interior[i]) continue;
        double acc = 0.0;
        double fx = f[static_cast<VertexId>(i)];
        for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
            acc += h.weight * (f[h.to] - fx);
        out.set(static_cast<VertexId>(i), acc / s.vertices[i].measure);
    }
    return out;
}

ScalarField gradient_norm(const Space& s, const ScalarField& f) {
    ScalarField out(s);
    if (s.backend == Backend::radial && f.profile) {
        const auto& p = *f.profile;
        RadialProfile gp;
        gp.value = [p](double r) { return std::abs(p.deriv(r)); };
        out.profile = gp;
        for (std::size_t i = 0; i < s.size(); ++i)
            out.set(static_cast<VertexId>(i), gp.value(s.vertices[i].pos[0]));
        return out;
    }
    auto interior = f.stencil_interior();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!interior[i]) continue;
        double acc = 0.0;
        double fx = f[static_cast<VertexId>(i)];
        for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
            acc += h.weight * sq(f[h.to] - fx);
        out.set(static_cast<VertexId>(i), std::sqrt(acc / (2.0 * s.vertices[i].measure)));
    }
    return out;
}

double dirichlet_energy(const Space& s, const ScalarField& f, const std::vector<char>* region) {
    double acc = 0.0;
    for (const auto& e : s.edges) {
        const auto ia = static_cast<std::size_t>(e.a);
        const auto ib = static_cast<std::size_t>(e.b);
        if (region && (!(*region)[ia] || !(*region)[ib])) continue;
        if (!f.defined(e.a) || !f.defined(e.b)) continue;
        acc += e.weight * sq(f[e.a] - f[e.b]);
    }
    return acc;
}

double grad_inner(const Space& s, const ScalarField& u, const ScalarField& g, VertexId x) {
    double acc = 0.0;
    double ux = u[x];
    double gx = g[x];
    for (const auto& h : s.neighbors(x)) {
        if (!u.defined(h.to) || !g.defined(h.to)) continue;
        acc += h.weight * (u[h.to] - ux) * (g[h.to] - gx);
    }
    return acc / (2.0 * s.measure(x));
}

}  // namespace ubeta
