#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cip/operators.hpp"
#include "cip/verify.hpp"

using Catch::Approx;
using namespace cip;

namespace {

const VelocityField kBetaX{[](Vec2, double) { return Vec2{1.0, 0.0}; }, true, 1.0};
const VelocityField kRotation{[](Vec2 x, double) { return Vec2{x.y, -x.x}; }, true, 1.0};

} // namespace

TEST_CASE("P1 mass matrix on the reference triangle", "[operators]") {
    const Mesh ref = build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
    const FeSpace sp = build_space(ref, 1);
    const SparseMat M = assemble_mass(sp);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double expect = (i == j ? 2.0 : 1.0) / 24.0;
            CHECK(M.coeff(i, j) == Approx(expect).margin(1e-14));
        }
    }
}

TEST_CASE("mass matrix area identities", "[operators]") {
    for (int k : {1, 2}) {
        const Mesh m = generate_square(4);
        const FeSpace sp = build_space(m, k);
        const SparseMat M = assemble_mass(sp);
        const Vector ones = Vector::Ones(sp.ndof);
        CHECK(ones.dot(M * ones) == Approx(1.0).margin(1e-12));
        CHECK(is_symmetric(M));
    }
    const Mesh d = generate_disc(16);
    const FeSpace sp = build_space(d, 1);
    const SparseMat M = assemble_mass(sp);
    const Vector ones = Vector::Ones(sp.ndof);
    CHECK(ones.dot(M * ones) == Approx(d.total_area()).margin(1e-12));
}

TEST_CASE("convection operator identities", "[operators]") {
    const Mesh m = generate_square(5);
    const FeSpace sp = build_space(m, 1);
    const SparseMat A = assemble_convection(sp, kBetaX, 0.0);
    // constant function has zero convective derivative
    CHECK((A * Vector::Ones(sp.ndof)).cwiseAbs().maxCoeff() <= 1e-13);

    // periodic: A is exactly skew-symmetric for divergence-free beta
    const Mesh mp = generate_square(5, true);
    const FeSpace spp = build_space(mp, 1);
    const SparseMat Ap = assemble_convection(spp, kBetaX, 0.0);
    CHECK(max_abs(SparseMat(Ap + SparseMat(Ap.transpose()))) <= 1e-13);
    std::mt19937 rng(1u);
    std::normal_distribution<double> dist;
    Vector v(spp.ndof);
    for (int i = 0; i < spp.ndof; ++i) {
        v[i] = dist(rng);
    }
    CHECK(std::abs(v.dot(Ap * v)) <= 1e-12 * v.squaredNorm());

    // non-periodic: 1'(A + A')1 equals the net boundary flux of beta, zero here
    const Vector ones = Vector::Ones(sp.ndof);
    CHECK(ones.dot((A + SparseMat(A.transpose())) * ones) == Approx(0.0).margin(1e-12));
}

TEST_CASE("CIP kernel contains global polynomials", "[operators]") {
    const Mesh m = generate_disc(16);
    for (int k : {1, 2}) {
        const FeSpace sp = build_space(m, k);
        const SparseMat S = assemble_cip(sp, kRotation, 0.0);
        CHECK(is_symmetric(S));
        CHECK(verify::cip_kernel_residual(sp, S) <= 1e-12);
        CHECK(verify::min_rayleigh(S, 100) >= -1e-12);
    }
    // constants and globally linear nodal data on the square
    const Mesh sq = generate_square(3);
    const FeSpace sp = build_space(sq, 1);
    const SparseMat S = assemble_cip(sp, kBetaX, 0.0);
    const FeFunction fx = interpolate_nodal([](Vec2 p, double) { return p.x; }, 0.0, sp);
    CHECK((S * fx.coeffs).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK(fx.coeffs.dot(S * fx.coeffs) == Approx(0.0).margin(1e-13));
    CHECK((S * Vector::Ones(sp.ndof)).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("CIP single-edge symbolic oracle", "[operators]") {
    // two triangles of the unit square, interior edge = the main diagonal of
    // length sqrt(2). With beta = (1,0) and the abs_beta variant,
    //   s(u,u) = h_F^2 * |beta| * jump^2 * |F| = 2 * jump^2 * sqrt(2).
    //
    // Oracle (hand integration): u = hat(1,0) + hat(0,1) is x - y on the lower
    // triangle and -x + y on the upper one; the normal n = (1,-1)/sqrt(2)
    // gives jump = ((1,-1) - (-1,1)) . n = 4/sqrt(2) = 2 sqrt(2), so
    // s(u,u) = 2 * 8 * sqrt(2) = 16 sqrt(2).
    const Mesh m = generate_square(1);
    const FeSpace sp = build_space(m, 1);
    const SparseMat S = assemble_cip(sp, kBetaX, 0.0, CipVariant::abs_beta);

    Vector u = Vector::Zero(4);
    // dofs: vertex classes = lattice order (0,0),(1,0),(0,1),(1,1)
    u[1] = 1.0; // hat at (1,0)
    u[2] = 1.0; // hat at (0,1)
    CHECK(u.dot(S * u) == Approx(16.0 * std::sqrt(2.0)).margin(1e-12));

    // single hat at (1,0): u = x - y on the lower triangle, 0 on the upper;
    // jump = (1,-1).n = sqrt(2), s(u,u) = 2 * 2 * sqrt(2) = 4 sqrt(2)
    Vector hat = Vector::Zero(4);
    hat[1] = 1.0;
    CHECK(hat.dot(S * hat) == Approx(4.0 * std::sqrt(2.0)).margin(1e-12));

    // hat(1,0) - hat(0,1) is globally linear (x - y): kernel
    Vector lin = Vector::Zero(4);
    lin[1] = 1.0;
    lin[2] = -1.0;
    CHECK(lin.dot(S * lin) == Approx(0.0).margin(1e-13));

    // abs_beta_n variant: n = (1,-1)/sqrt(2), |beta.n| = 1/sqrt(2)
    const SparseMat Sn = assemble_cip(sp, kBetaX, 0.0, CipVariant::abs_beta_n);
    CHECK(hat.dot(Sn * hat) == Approx(4.0 * std::sqrt(2.0) / std::sqrt(2.0)).margin(1e-12));
}

TEST_CASE("inflow matrix and rhs", "[operators]") {
    const Mesh m = generate_square(4);
    const FeSpace sp = build_space(m, 1);
    const BoundaryPartition part = classify_boundary(m, kBetaX.eval, 0.0);
    const SparseMat B = assemble_inflow_matrix(sp, part, kBetaX, 0.0);
    const Vector ones = Vector::Ones(sp.ndof);
    CHECK(ones.dot(B * ones) == Approx(1.0).margin(1e-12));
    CHECK(is_symmetric(B));
    CHECK(verify::min_rayleigh(B, 50) >= -1e-12);

    // support only on inflow dofs (x = 0 vertices)
    for (int i = 0; i < sp.ndof; ++i) {
        if (sp.dof_coords[i].x > 1e-9) {
            CHECK((B.row(i).cwiseAbs().sum()) <= 1e-14);
        }
    }

    const Vector b1 = assemble_inflow_rhs(sp, part, kBetaX, [](Vec2, double) { return 1.0; }, 0.0);
    CHECK(ones.dot(b1) == Approx(1.0).margin(1e-12));
    const Vector b0 = assemble_inflow_rhs(sp, part, kBetaX, [](Vec2, double) { return 0.0; }, 0.0);
    CHECK(b0.cwiseAbs().maxCoeff() == 0.0);

    const VelocityField zero{[](Vec2, double) { return Vec2{0.0, 0.0}; }, true, 0.0};
    const BoundaryPartition pz = classify_boundary(m, zero.eval, 0.0);
    const SparseMat Bz = assemble_inflow_matrix(sp, pz, zero, 0.0);
    CHECK(max_abs(Bz) == 0.0);
}

TEST_CASE("source vector", "[operators]") {
    const Mesh m = generate_square(3);
    const FeSpace sp = build_space(m, 2);
    const Vector b0 = assemble_source(sp, [](Vec2, double) { return 0.0; }, 0.0);
    CHECK(b0.cwiseAbs().maxCoeff() == 0.0);
    const Vector b1 = assemble_source(sp, [](Vec2, double) { return 1.0; }, 0.0);
    CHECK(Vector::Ones(sp.ndof).dot(b1) == Approx(1.0).margin(1e-12));
}

TEST_CASE("stabilization inverse inequality constant is stable", "[operators][slow]") {
    double cmin = 1e300, cmax = 0.0;
    for (int nele : {20, 40, 80}) {
        const Mesh m = generate_square(nele);
        const FeSpace sp = build_space(m, 1);
        const SparseMat S = assemble_cip(sp, kBetaX, 0.0);
        const SparseMat M = assemble_mass(sp);
        const double c = verify::inverse_inequality_constant(sp, S, M, m.h, 1.0);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax / cmin <= 2.0);
}

TEST_CASE("build_operators", "[operators]") {
    const Mesh m = generate_square(4);
    const FeSpace sp = build_space(m, 1);
    const BoundaryPartition part = classify_boundary(m, kBetaX.eval, 0.0);
    CHECK_THROWS_AS(build_operators(sp, kBetaX, -0.5, CipVariant::abs_beta, 0.0, &part),
                    std::invalid_argument);
    const SystemOperators ops = build_operators(sp, kBetaX, 0.01, CipVariant::abs_beta, 0.0, &part);
    CHECK(ops.has_inflow);
    CHECK(ops.gamma == 0.01);
    CHECK(ops.M.rows() == sp.ndof);

    const Mesh mp = generate_square(4, true);
    const FeSpace spp = build_space(mp, 1);
    const SystemOperators opp = build_operators(spp, kBetaX, 0.01, CipVariant::abs_beta, 0.0);
    CHECK_FALSE(opp.has_inflow);
    CHECK_THROWS_AS(assemble_inflow_matrix(spp, part, kBetaX, 0.0), std::invalid_argument);
}
