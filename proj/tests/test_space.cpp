#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ubeta/space.hpp"

using namespace ubeta;

namespace {
constexpr double kPi = std::numbers::pi;

Space path_graph(int n) {
    Space s;
    s.dim = 2.0;
    s.label = "path";
    s.vertices.resize(static_cast<std::size_t>(n));
    for (auto& v : s.vertices) v.measure = 1.0;
    for (int i = 0; i + 1 < n; ++i)
        s.edges.push_back(Edge{i, i + 1, 1.0, 1.0});
    s.finalize();
    return s;
}
}  // namespace

TEST_CASE("lattice 3x3x3 counts") {
    auto s = build_lattice(3, 1.0, 1.0);
    CHECK(s.size() == 27);
    CHECK(s.edges.size() == 54);
    for (const auto& v : s.vertices) CHECK(v.measure == doctest::Approx(1.0));
    for (const auto& e : s.edges) {
        CHECK(e.weight == doctest::Approx(1.0));
        CHECK(e.length == doctest::Approx(1.0));
    }
}

TEST_CASE("lattice total measure scales like the volume") {
    auto s = build_lattice(3, 4.0, 0.25);
    const double per_axis = 33.0;
    CHECK(s.total_mass() == doctest::Approx(per_axis * per_axis * per_axis * 0.015625));
    CHECK(std::abs(s.total_mass() - 512.0) / 512.0 < 0.10);
}

TEST_CASE("lattice rejects N < 2 and budget overruns") {
    CHECK_THROWS_AS(build_lattice(1, 1.0, 0.5), PreconditionError);
    CHECK_THROWS_AS(build_lattice(3, 10.0, 0.01), PreconditionError);
}

TEST_CASE("ball mass at radius zero is the center measure") {
    auto s = build_lattice(2, 1.0, 0.5);
    VertexId center = s.nearest_vertex(std::vector<double>{0.0, 0.0});
    CHECK(ball_mass(s, center, 0.0) == doctest::Approx(0.25));
}

TEST_CASE("lattice ball volume ratio matches 4pi/3") {
    auto s = build_lattice(3, 3.0, 0.25);
    VertexId center = s.nearest_vertex(std::vector<double>{0.0, 0.0, 0.0});
    double ratio = ball_mass(s, center, 2.0) / 8.0;
    CHECK(std::abs(ratio - 4.0 * kPi / 3.0) / (4.0 * kPi / 3.0) < 0.10);
}

TEST_CASE("bishop-gromov profile is non-increasing up to slack") {
    auto s = build_lattice(3, 3.0, 0.25);
    VertexId center = s.nearest_vertex(std::vector<double>{0.0, 0.0, 0.0});
    std::vector<double> grid{0.75, 1.0, 1.5, 2.0, 2.5, 3.0};
    auto prof = bishop_gromov_profile(s, center, grid);
    for (std::size_t i = 1; i < prof.size(); ++i)
        CHECK(prof[i].ratio <= prof[i - 1].ratio * 1.10);
    CHECK(avr_estimate(s, center) == doctest::Approx(4.0 * kPi / 3.0).epsilon(0.10));
}

TEST_CASE("coordinate field has unit gradient and zero laplacian inside") {
    auto s = build_lattice(3, 1.5, 0.25);
    ScalarField f(s);
    for (std::size_t i = 0; i < s.size(); ++i)
        f.set(static_cast<VertexId>(i), s.vertices[i].pos[0]);
    auto g = gradient_norm(s, f);
    auto l = laplacian(s, f);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        if (!g.defined(v)) continue;
        CHECK(g[v] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(l[v] == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("quadratics have exact discrete laplacian at interior vertices") {
    auto s = build_lattice(3, 1.5, 0.25);
    ScalarField f(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& p = s.vertices[i].pos;
        f.set(static_cast<VertexId>(i), 0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    }
    auto l = laplacian(s, f);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        if (!l.defined(v)) continue;
        CHECK(l[v] == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("constant fields have zero energy and gradient") {
    auto s = build_lattice(2, 1.0, 0.5);
    ScalarField f(s, 7.5);
    CHECK(dirichlet_energy(s, f) == doctest::Approx(0.0));
    auto g = gradient_norm(s, f);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        if (g.defined(v)) CHECK(g[v] == doctest::Approx(0.0));
    }
}

TEST_CASE("discrete green identity is exact") {
    auto s = build_lattice(2, 1.5, 0.5);
    ScalarField f(s, 0.0), g(s, 0.0);
    // fields vanishing near the boundary
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& p = s.vertices[i].pos;
        if (s.is_boundary(static_cast<VertexId>(i))) continue;
        bool inner = std::abs(p[0]) < 1.0 && std::abs(p[1]) < 1.0;
        if (!inner) continue;
        f[static_cast<VertexId>(i)] = std::sin(p[0]) + p[1];
        g[static_cast<VertexId>(i)] = p[0] * p[1] + 0.3;
    }
    auto lg = laplacian(s, g);
    double lhs = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto v = static_cast<VertexId>(i);
        if (lg.defined(v)) lhs += s.measure(v) * f[v] * lg[v];
    }
    double rhs = 0.0;
    for (const auto& e : s.edges) rhs -= e.weight * (f[e.a] - f[e.b]) * (g[e.a] - g[e.b]);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("geodesic distance is a metric on samples") {
    auto s = build_lattice(2, 1.0, 0.5);
    for (VertexId a = 0; a < 5; ++a)
        for (VertexId b = 0; b < 5; ++b) {
            CHECK(s.geodesic_distance(a, b) == doctest::Approx(s.geodesic_distance(b, a)));
            for (VertexId c = 0; c < 5; ++c)
                CHECK(s.geodesic_distance(a, b) <=
                      s.geodesic_distance(a, c) + s.geodesic_distance(c, b) + 1e-12);
        }
    CHECK(s.geodesic_distance(0, 0) == 0.0);
}

TEST_CASE("cylinder ball mass grows linearly at large radii") {
    auto s = build_cylinder(2.0 * kPi, 60.0, 0.5);
    VertexId center = s.nearest_vertex(std::vector<double>{0.0, 1.0, 0.0});
    double m1 = ball_mass(s, center, 12.0);
    double m2 = ball_mass(s, center, 24.0);
    CHECK(m2 / m1 == doctest::Approx(2.0).epsilon(0.12));
    CHECK_THROWS_AS(build_cylinder(2.0 * kPi, 1.0, 2.0), PreconditionError);
}

TEST_CASE("radial cone over the full sphere models flat space") {
    auto s = build_cone(3.0, ConeCrossSection::sphere(1.0), 0.5, 8.0, 64, Backend::radial);
    CHECK(s.cross_section_mass == doctest::Approx(4.0 * kPi));
    CHECK(s.total_mass() == doctest::Approx(4.0 * kPi * (512.0 - 0.125) / 3.0));
    CHECK(avr_estimate(s, 0) == doctest::Approx(4.0 * kPi / 3.0));
}

TEST_CASE("cone over a circle has the sector measure") {
    const double alpha = 0.6;
    auto s = build_cone(2.0, ConeCrossSection::circle(2.0 * kPi * alpha), 1.0, 3.0, 40, Backend::radial);
    CHECK(s.total_mass() == doctest::Approx(2.0 * kPi * alpha * (9.0 - 1.0) / 2.0));
}

TEST_CASE("cone rejects cross-sections wider than pi") {
    Space z;
    z.dim = 1.0;
    const int n = 12;
    z.vertices.resize(n);
    for (auto& v : z.vertices) v.measure = 0.1;
    for (int i = 0; i + 1 < n; ++i) z.edges.push_back(Edge{i, i + 1, 1.0, 1.1 * kPi / (n - 1)});
    z.finalize();
    CHECK_THROWS_AS(build_cone(3.0, ConeCrossSection::custom(z), 1.0, 2.0, 8), PreconditionError);
    CHECK_THROWS_AS(build_cone(3.0, ConeCrossSection::circle(2.0 * kPi), 0.0, 2.0, 8), PreconditionError);
}

TEST_CASE("built cone mesh carries the measure of the exact annulus") {
    auto s = build_cone(3.0, ConeCrossSection::circle(2.0 * kPi), 1.0, 4.0, 48, Backend::graph);
    double mz = s.cross_section_mass;
    CHECK(mz == doctest::Approx(2.0 * kPi));
    CHECK(s.total_mass() == doctest::Approx(mz * (64.0 - 1.0) / 3.0).epsilon(1e-9));
    // cone metric sanity at mesh scale
    CHECK(s.chart.kind == Chart::Kind::cone);
}

TEST_CASE("path graph boundary detection") {
    auto s = path_graph(3);
    CHECK(s.is_boundary(0));
    CHECK(!s.is_boundary(1));
    CHECK(s.is_boundary(2));
}
