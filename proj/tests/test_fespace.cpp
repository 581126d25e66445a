#include <catch2/catch_amalgamated.hpp>

#include "cip/fespace.hpp"
#include "cip/operators.hpp"

using Catch::Approx;
using namespace cip;

TEST_CASE("dof counts", "[fespace]") {
    const Mesh m = generate_square(2);
    CHECK(build_space(m, 1).ndof == 9);
    CHECK(build_space(m, 2).ndof == 9 + 16); // vertices + edges

    const Mesh mp = generate_square(2, true);
    CHECK(build_space(mp, 1).ndof == 4);
    CHECK(build_space(mp, 2).ndof == 4 + 12);

    CHECK_THROWS_AS(build_space(m, 3), std::invalid_argument);
}

TEST_CASE("element dof connectivity is consistent across edges", "[fespace]") {
    const Mesh m = generate_square(3);
    const FeSpace sp = build_space(m, 2);
    // a shared edge contributes the same dof to both adjacent elements
    for (const auto& e : m.interior_edges) {
        const auto& dl = sp.element_dofs[e.tri_left];
        const auto& dr = sp.element_dofs[e.tri_right];
        int shared = 0;
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                shared += dl[i] == dr[j];
            }
        }
        CHECK(shared >= 3); // two vertices + midpoint
    }
}

TEST_CASE("evaluate reproduces polynomials", "[fespace]") {
    const Mesh m = generate_square(2);

    const FeSpace sp1 = build_space(m, 1);
    FeFunction lin;
    lin.space = &sp1;
    lin.coeffs.resize(sp1.ndof);
    for (int i = 0; i < sp1.ndof; ++i) {
        lin.coeffs[i] = sp1.dof_coords[i].x;
    }
    for (int t : {0, 3, 5}) {
        const auto c = m.triangle_coords(t);
        const Vec2 p = (1.0 / 3.0) * (c[0] + c[1] + c[2]);
        const EvalResult r = evaluate(lin, t, p);
        CHECK(r.value == Approx(p.x).margin(1e-14));
        CHECK(r.gradient.x == Approx(1.0).margin(1e-13));
        CHECK(r.gradient.y == Approx(0.0).margin(1e-13));
    }

    const FeSpace sp2 = build_space(m, 2);
    const FeFunction quad = interpolate_nodal([](Vec2 p, double) { return p.x * p.x; }, 0.0, sp2);
    for (int t : {1, 4, 7}) {
        const auto c = m.triangle_coords(t);
        const Vec2 p = 0.3 * c[0] + 0.45 * c[1] + 0.25 * c[2];
        const EvalResult r = evaluate(quad, t, p);
        CHECK(r.value == Approx(p.x * p.x).margin(1e-13));
        CHECK(r.gradient.x == Approx(2.0 * p.x).margin(1e-12));
        CHECK(r.gradient.y == Approx(0.0).margin(1e-12));
    }

    const FeFunction cst = interpolate_nodal([](Vec2, double) { return 4.5; }, 0.0, sp2);
    const EvalResult r = evaluate(cst, 2, m.triangle_coords(2)[0]);
    CHECK(r.value == Approx(4.5).margin(1e-14));
    CHECK(norm(r.gradient) <= 1e-12);

    CHECK_THROWS_AS(evaluate(cst, 0, Vec2{5.0, 5.0}), std::invalid_argument);
}

TEST_CASE("nodal interpolation", "[fespace]") {
    const Mesh m = generate_square(4);
    const FeSpace sp = build_space(m, 1);
    const FeFunction one = interpolate_nodal([](Vec2, double) { return 1.0; }, 0.0, sp);
    CHECK(one.coeffs.minCoeff() == 1.0);
    CHECK(one.coeffs.maxCoeff() == 1.0);

    const FeFunction fx = interpolate_nodal([](Vec2 p, double) { return p.x; }, 0.0, sp);
    for (int i = 0; i < sp.ndof; ++i) {
        CHECK(fx.coeffs[i] == sp.dof_coords[i].x);
    }
}

TEST_CASE("l2 projection satisfies the defining identity", "[fespace]") {
    const Mesh m = generate_square(6);
    const FeSpace sp = build_space(m, 1);
    const SparseMat M = assemble_mass(sp);
    MassSolver mass(M);

    auto f = [](Vec2 p, double) { return std::sin(3.0 * p.x) + p.y; };
    const FeFunction proj = l2_project(f, 0.0, sp, mass, M);
    // (pi_h f, w) = (f, w) for all w: residual of the mass system
    const Vector b = assemble_load(sp, f, 0.0, 2 * sp.degree + 4);
    CHECK((M * proj.coeffs - b).norm() <= 1e-12 * b.norm());

    const FeFunction c = l2_project([](Vec2, double) { return 2.5; }, 0.0, sp, mass, M);
    CHECK(c.coeffs.minCoeff() == Approx(2.5).margin(1e-11));
    CHECK(c.coeffs.maxCoeff() == Approx(2.5).margin(1e-11));
}

TEST_CASE("interpolation error rate for the smooth bump", "[fespace][slow]") {
    auto gauss = [](Vec2 p, double) {
        const double dx = p.x - 0.5, dy = p.y - 0.5;
        return std::exp(-30.0 * (dx * dx + dy * dy));
    };
    for (int k : {1, 2}) {
        double prev = 0.0;
        double rate_min = 1e9;
        for (int nele : {40, 80, 160}) {
            const Mesh m = generate_square(nele);
            const FeSpace sp = build_space(m, k);
            const FeFunction ih = interpolate_nodal(gauss, 0.0, sp);
            double err = 0.0;
            {
                FeFunction tmp = ih;
                err = [&] {
                    const QuadratureRule rule = triangle_quadrature(2 * k + 4);
                    const BasisTable table(k, rule);
                    double acc = 0.0;
                    for (std::size_t e = 0; e < m.triangles.size(); ++e) {
                        const ElementGeometry g = element_geometry(m, static_cast<int>(e));
                        for (std::size_t q = 0; q < rule.points.size(); ++q) {
                            double uh = 0.0;
                            for (int i = 0; i < sp.dofs_per_element(); ++i) {
                                uh += tmp.coeffs[sp.element_dofs[e][i]] * table.vals[q][i];
                            }
                            const double d = uh - gauss(g.point(rule.points[q]), 0.0);
                            acc += rule.weights[q] * g.det * d * d;
                        }
                    }
                    return std::sqrt(acc);
                }();
            }
            if (prev > 0.0) {
                rate_min = std::min(rate_min, std::log(prev / err) / std::log(2.0));
            }
            prev = err;
        }
        CHECK(rate_min >= k + 0.8);
    }
}
