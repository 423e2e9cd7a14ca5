#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ubeta/potential.hpp"
#include "ubeta/solvers.hpp"

using namespace ubeta;

namespace {
constexpr double kPi = std::numbers::pi;

Space path3() {
    Space s;
    s.dim = 2.0;
    s.vertices.resize(3);
    for (auto& v : s.vertices) v.measure = 1.0;
    s.edges.push_back(Edge{0, 1, 1.0, 1.0});
    s.edges.push_back(Edge{1, 2, 1.0, 1.0});
    s.finalize();
    return s;
}

std::vector<char> lattice_ball(const Space& s, double r) {
    std::vector<char> mask(s.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        double d2 = 0.0;
        for (double c : s.vertices[i].pos) d2 += c * c;
        if (std::sqrt(d2) <= r) mask[i] = 1;
    }
    return mask;
}
}  // namespace

TEST_CASE("path graph obstacle capacity is exactly 2") {
    auto s = path3();
    std::vector<char> e{0, 1, 0}, b{1, 1, 1};
    auto res = solve_obstacle(s, e, b, 1e-12);
    CHECK(res.potential[0] == doctest::Approx(0.0));
    CHECK(res.potential[1] == doctest::Approx(1.0));
    CHECK(res.potential[2] == doctest::Approx(0.0));
    CHECK(res.capacity == doctest::Approx(2.0));
}

TEST_CASE("obstacle solver matches the active-set oracle and is init independent") {
    auto s = build_lattice(2, 2.0, 0.25);
    auto e = lattice_ball(s, 0.5);
    auto b = lattice_ball(s, 2.0);
    auto res = solve_obstacle(s, e, b, 1e-11);

    // independent run: cold start, different relaxation
    auto res2 = solve_obstacle(s, e, b, 1e-11, 200000, 1.2, /*warm_start=*/false);
    double sup = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        sup = std::max(sup, std::abs(res.potential[static_cast<VertexId>(i)] -
                                     res2.potential[static_cast<VertexId>(i)]));
    CHECK(sup <= 10.0 * 1e-10 + 1e-8);

    // active-set direct solve as the cross-check oracle
    std::vector<char> free_mask(s.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!b[i]) continue;
        bool dirichlet = s.is_boundary(static_cast<VertexId>(i));
        for (const auto& h : s.neighbors(static_cast<VertexId>(i)))
            if (!b[static_cast<std::size_t>(h.to)]) dirichlet = true;
        free_mask[i] = dirichlet ? 0 : 1;
    }
    std::vector<double> u(s.size(), 0.0);
    active_set_obstacle(s, free_mask, e, u, 1e-12, 100000);
    double sup_oracle = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        sup_oracle = std::max(sup_oracle, std::abs(res.potential[static_cast<VertexId>(i)] - u[i]));
    CHECK(sup_oracle < 1e-7);
}

TEST_CASE("obstacle preconditions") {
    auto s = path3();
    std::vector<char> e{1, 1, 1}, b{1, 1, 1};
    CHECK_THROWS_AS(solve_obstacle(s, e, b), PreconditionError);  // E touches the boundary of B
    std::vector<char> e2{0, 1, 0}, b2{0, 1, 0};
    CHECK_THROWS_AS(solve_obstacle(s, std::vector<char>{0, 0, 0}, b), PreconditionError);
}

TEST_CASE("capacity is monotone in E and antitone in B") {
    auto s = build_lattice(2, 2.0, 0.25);
    auto e1 = lattice_ball(s, 0.4);
    auto e2 = lattice_ball(s, 0.8);
    auto b1 = lattice_ball(s, 1.6);
    auto b2 = lattice_ball(s, 2.0);
    double tol = 1e-9;
    double c_e1_b1 = solve_obstacle(s, e1, b1, tol).capacity;
    double c_e2_b1 = solve_obstacle(s, e2, b1, tol).capacity;
    double c_e1_b2 = solve_obstacle(s, e1, b2, tol).capacity;
    CHECK(c_e1_b1 <= c_e2_b1 + 1e-6);
    CHECK(c_e1_b2 <= c_e1_b1 + 1e-6);
}

TEST_CASE("lattice ball capacity approximates the truncated radial energy") {
    auto s = build_lattice(3, 4.0, 0.25);
    auto e = lattice_ball(s, 1.0);
    auto b = lattice_ball(s, 4.0);
    auto res = solve_obstacle(s, e, b, 1e-8);
    double oracle = 4.0 * kPi * 4.0 / 3.0;  // 4 pi R/(R-1), R = 4
    CHECK(std::abs(res.capacity - oracle) / oracle < 0.10);
}

TEST_CASE("comparison principle against constructed superharmonic fields") {
    auto s = build_lattice(2, 2.0, 0.25);
    auto e = lattice_ball(s, 0.5);
    auto b = lattice_ball(s, 2.0);
    auto res = solve_obstacle(s, e, b, 1e-10);

    SUBCASE("v = u itself") {
        auto chk = comparison_check(s, res, res.potential, 1e-8);
        CHECK(chk.not_superharmonic.empty());
        CHECK(chk.holds);
        CHECK(chk.worst_violation <= 1e-8);
    }
    SUBCASE("v = 1 on all of B") {
        ScalarField v(s, 1.0);
        auto chk = comparison_check(s, res, v, 1e-8);
        CHECK(chk.not_superharmonic.empty());
        CHECK(chk.holds);
    }
    SUBCASE("v = potential of a larger obstacle") {
        auto res_big = solve_obstacle(s, lattice_ball(s, 0.8), b, 1e-10);
        auto chk = comparison_check(s, res, res_big.potential, 1e-6);
        CHECK(chk.not_superharmonic.empty());
        CHECK(chk.holds);
    }
    SUBCASE("v scaled below one on E violates the precondition") {
        ScalarField v(s, 0.0);
        for (std::size_t i = 0; i < s.size(); ++i)
            v[static_cast<VertexId>(i)] = 0.5 * res.potential[static_cast<VertexId>(i)];
        CHECK_THROWS_AS(comparison_check(s, res, v, 1e-8), PreconditionError);
    }
}

TEST_CASE("lift identity: u/m ^ 1 solves the lifted problem") {
    auto s = build_lattice(2, 2.0, 0.25);
    auto e = lattice_ball(s, 0.5);
    auto b = lattice_ball(s, 2.0);
    auto res = solve_obstacle(s, e, b, 1e-11);
    SUBCASE("m = 1 is trivial") {
        auto chk = lift_check(s, res, 1.0, 1e-11);
        CHECK(chk.agrees);
    }
    SUBCASE("m = 0.5") {
        auto chk = lift_check(s, res, 0.5, 1e-11);
        CHECK(chk.agrees);
    }
    SUBCASE("m = 0 is rejected") { CHECK_THROWS_AS(lift_check(s, res, 0.0, 1e-10), PreconditionError); }
}

TEST_CASE("exterior problem preconditions") {
    auto s = build_lattice(2, 1.0, 0.5);
    ExteriorProblemSpec spec;
    spec.space = &s;
    spec.omega_c.assign(s.size(), 1);
    spec.r_out = 1.0;
    CHECK_THROWS_AS(solve_exterior(spec), PreconditionError);  // obstacle covers everything
    spec.omega_c.assign(s.size(), 0);
    CHECK_THROWS_AS(solve_exterior(spec), PreconditionError);  // empty obstacle
}

TEST_CASE("radial exterior solution is the exact truncated profile") {
    auto s = build_cone(3.0, ConeCrossSection::sphere(1.0), 1.0, 8.0, 64, Backend::radial);
    ExteriorProblemSpec spec;
    spec.space = &s;
    spec.omega_c.assign(s.size(), 0);
    spec.omega_c[0] = 1;  // innermost sample is the obstacle boundary r = 1
    spec.r_out = 8.0;
    auto res = solve_exterior(spec);
    REQUIRE(res.u.profile.has_value());
    for (double r : {1.5, 2.0, 3.0, 5.0}) {
        double expect = (1.0 / r - 1.0 / 8.0) / (1.0 - 1.0 / 8.0);
        CHECK(res.u.profile->value(r) == doctest::Approx(expect).epsilon(1e-12));
    }
    // untruncated variant decays like 1/r exactly
    spec.r_out = std::numeric_limits<double>::infinity();
    auto res_inf = solve_exterior(spec);
    CHECK(res_inf.u.profile->value(2.5) == doctest::Approx(1.0 / 2.5).epsilon(1e-12));
}

TEST_CASE("lattice exterior solution tracks the truncated radial oracle") {
    auto s = build_lattice(3, 6.0, 0.5);
    ExteriorProblemSpec spec;
    spec.space = &s;
    spec.omega_c = lattice_ball(s, 1.0);
    spec.r_out = 6.0;
    spec.tol = 1e-10;
    auto res = solve_exterior(spec);
    VertexId probe = s.nearest_vertex(std::vector<double>{1.5, 0.5, 0.0});
    double r = 0.0;
    for (double c : s.vertices[static_cast<std::size_t>(probe)].pos) r += c * c;
    r = std::sqrt(r);
    double expect = (1.0 / r - 1.0 / 6.0) / (1.0 - 1.0 / 6.0);
    CHECK(std::abs(res.u[probe] - expect) < 0.10 * expect);
    // maximum principle
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(res.u[static_cast<VertexId>(i)] >= 0.0);
        CHECK(res.u[static_cast<VertexId>(i)] <= 1.0);
    }
}

TEST_CASE("corkscrew condition") {
    auto s = build_lattice(2, 2.0, 0.25);
    auto ball = lattice_ball(s, 1.0);
    VertexId x = s.nearest_vertex(std::vector<double>{1.0, 0.0});
    std::vector<double> grid{0.5, 0.75, 1.0};
    SUBCASE("balls satisfy the quarter corkscrew") {
        auto res = corkscrew_check(s, ball, x, 0.25, grid);
        for (auto& [r, ok] : res) CHECK(ok);
    }
    SUBCASE("a single vertex fails at large scales") {
        std::vector<char> point(s.size(), 0);
        point[static_cast<std::size_t>(s.nearest_vertex(std::vector<double>{0.0, 0.0}))] = 1;
        auto res = corkscrew_check(s, point, x, 0.25, grid);
        CHECK(!res.back().second);
    }
    SUBCASE("union of two balls keeps the condition at small scales") {
        auto two = lattice_ball(s, 0.9);
        for (std::size_t i = 0; i < s.size(); ++i) {
            double dx = s.vertices[i].pos[0] + 1.0;
            double dy = s.vertices[i].pos[1];
            if (std::sqrt(dx * dx + dy * dy) <= 0.9) two[i] = 1;
        }
        auto res = corkscrew_check(s, two, x, 0.25, std::vector<double>{0.5, 0.8});
        for (auto& [r, ok] : res) CHECK(ok);
    }
}
