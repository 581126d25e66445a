#include <catch2/catch_amalgamated.hpp>

#include "cip/scenarios.hpp"
#include "cip/timestepper.hpp"

using Catch::Approx;
using namespace cip;

namespace {

const VelocityField kBetaX{[](Vec2, double) { return Vec2{1.0, 0.0}; }, true, 1.0};
const VelocityField kZero{[](Vec2, double) { return Vec2{0.0, 0.0}; }, true, 0.0};

} // namespace

TEST_CASE("select_dt follows the paper's rules", "[timestepper]") {
    const double pi = 3.14159265358979323846;
    // disc P1, nele = 80: dt = pi/nele
    CHECK(select_dt(1, 2 * pi / 80, DomainKind::disc) == Approx(pi / 80).margin(1e-15));
    // disc P2, nele = 80: dt = h^{3/2}/2
    CHECK(select_dt(2, 2 * pi / 80, DomainKind::disc) ==
          Approx(0.5 * std::pow(2 * pi / 80, 1.5)).margin(1e-15));
    CHECK(select_dt(2, 2 * pi / 80) == Approx(0.011014181).margin(1e-8));
    // square P1, nele = 40: dt = 1/80 before rounding
    CHECK(select_dt(1, 1.0 / 40, DomainKind::square) == Approx(1.0 / 80).margin(1e-15));
    CHECK_THROWS_AS(select_dt(3, 0.1), std::invalid_argument);
}

TEST_CASE("theta config rounding never overshoots", "[timestepper]") {
    const double pi = 3.14159265358979323846;
    const ThetaConfig cfg = make_theta_config(0.5, 2 * pi, select_dt(2, 2 * pi / 80));
    CHECK(cfg.nsteps * cfg.dt == Approx(2 * pi).margin(1e-12));
    CHECK(cfg.dt <= select_dt(2, 2 * pi / 80) + 1e-15);

    // exact division stays exact
    const ThetaConfig c2 = make_theta_config(0.5, 1.0, 0.125);
    CHECK(c2.nsteps == 8);
    CHECK(c2.dt == 0.125);

    CHECK_THROWS_AS(make_theta_config(0.4, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_theta_config(1.1, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("build_system algebraic identities", "[timestepper]") {
    const Mesh m = generate_square(4, true);
    const FeSpace sp = build_space(m, 1);

    // theta = ½: LHS + RHS = 2 M / dt
    {
        const SystemOperators ops = build_operators(sp, kBetaX, 0.01, CipVariant::abs_beta, 0.0);
        const ThetaConfig cfg = make_theta_config(0.5, 1.0, 0.1);
        const ThetaSystem sys(ops, cfg);
        const SparseMat sum = sys.lhs() + sys.rhs_op() - SparseMat(ops.M * (2.0 / cfg.dt));
        CHECK(max_abs(sum) <= 1e-10 * max_abs(ops.M) / cfg.dt);
    }
    // theta = 1, beta = 0, gamma = 0: LHS = RHS = M/dt
    {
        const SystemOperators ops = build_operators(sp, kZero, 0.0, CipVariant::abs_beta, 0.0);
        const ThetaConfig cfg = make_theta_config(1.0, 1.0, 0.1);
        const ThetaSystem sys(ops, cfg);
        CHECK(max_abs(SparseMat(sys.lhs() - sys.rhs_op())) <= 1e-14 * max_abs(sys.lhs()));
    }
    // gamma = 0 vs gamma > 0 differ exactly by theta*gamma*S and -(1-theta)*gamma*S
    {
        const SystemOperators o0 = build_operators(sp, kBetaX, 0.0, CipVariant::abs_beta, 0.0);
        const SystemOperators o1 = build_operators(sp, kBetaX, 0.02, CipVariant::abs_beta, 0.0);
        const ThetaConfig cfg = make_theta_config(0.5, 1.0, 0.1);
        const ThetaSystem s0(o0, cfg), s1(o1, cfg);
        const SparseMat dl = SparseMat(s1.lhs() - s0.lhs()) - SparseMat(0.5 * 0.02 * o1.S);
        const SparseMat dr = SparseMat(s1.rhs_op() - s0.rhs_op()) + SparseMat(0.5 * 0.02 * o1.S);
        CHECK(max_abs(dl) <= 1e-12);
        CHECK(max_abs(dr) <= 1e-12);
    }
}

TEST_CASE("trivial steps", "[timestepper]") {
    const Mesh m = generate_square(4, true);
    const FeSpace sp = build_space(m, 1);
    const SystemOperators ops = build_operators(sp, kZero, 0.0, CipVariant::abs_beta, 0.0);
    MassSolver mass(ops.M);
    const ThetaConfig cfg = make_theta_config(1.0, 0.5, 0.1);

    // f = 0, g = 0, beta = 0, gamma = 0: u^n = u^{n-1} exactly
    ProblemData pr;
    pr.initial = [](Vec2 p, double) { return std::sin(2 * 3.14159265358979323846 * p.x); };
    pr.velocity = &kZero;
    const Trajectory traj = run_simulation(sp, ops, mass, cfg, pr);
    CHECK((traj.snapshots.back() - traj.snapshots.front()).cwiseAbs().maxCoeff() <= 1e-13);

    // zero data: trajectory identically zero
    ProblemData pz;
    pz.initial = [](Vec2, double) { return 0.0; };
    pz.velocity = &kZero;
    const Trajectory tz = run_simulation(sp, ops, mass, cfg, pz);
    CHECK(tz.snapshots.back().cwiseAbs().maxCoeff() == 0.0);
    CHECK(tz.energy.back() == 0.0);
}

TEST_CASE("Crank-Nicolson conserves the M-norm on periodic meshes", "[timestepper]") {
    const Scenario sc = make_periodic_cylinder();
    const Mesh m = sc.make_mesh(16);
    const FeSpace sp = build_space(m, 1);
    const SystemOperators ops = build_operators(sp, sc.velocity, 0.0, CipVariant::abs_beta, 0.0);
    MassSolver mass(ops.M);
    const ThetaConfig cfg = make_theta_config(0.5, 1.0, select_dt(1, 1.0 / 16));
    ProblemData pr;
    pr.initial = sc.initial;
    pr.velocity = &sc.velocity;
    const Trajectory traj = run_simulation(sp, ops, mass, cfg, pr);
    for (std::size_t n = 1; n < traj.energy.size(); ++n) {
        CHECK(traj.energy[n] == Approx(traj.energy[0]).epsilon(1e-11));
    }
}

TEST_CASE("CIP dissipates the M-norm monotonically", "[timestepper]") {
    const Scenario sc = make_periodic_cylinder();
    const Mesh m = sc.make_mesh(16);
    const FeSpace sp = build_space(m, 1);
    const SystemOperators ops = build_operators(sp, sc.velocity, 0.05, CipVariant::abs_beta, 0.0);
    MassSolver mass(ops.M);
    const ThetaConfig cfg = make_theta_config(0.5, 1.0, select_dt(1, 1.0 / 16));
    ProblemData pr;
    pr.initial = sc.initial;
    pr.velocity = &sc.velocity;
    const Trajectory traj = run_simulation(sp, ops, mass, cfg, pr);
    for (std::size_t n = 1; n < traj.energy.size(); ++n) {
        CHECK(traj.energy[n] <= traj.energy[n - 1] * (1.0 + 1e-12));
    }
    CHECK(traj.energy.back() < traj.energy.front());
}

TEST_CASE("trajectory snapshots and diagnostics shape", "[timestepper]") {
    const Scenario sc = make_periodic_cylinder();
    const Mesh m = sc.make_mesh(8);
    const FeSpace sp = build_space(m, 1);
    const SystemOperators ops = build_operators(sp, sc.velocity, 0.01, CipVariant::abs_beta, 0.0);
    MassSolver mass(ops.M);
    const ThetaConfig cfg = make_theta_config(0.5, 1.0, 0.125);
    ProblemData pr;
    pr.initial = sc.initial;
    pr.velocity = &sc.velocity;

    RunOptions opt;
    opt.stride = 2;
    const Trajectory traj = run_simulation(sp, ops, mass, cfg, pr, opt);
    CHECK(traj.energy.size() == static_cast<std::size_t>(cfg.nsteps + 1));
    CHECK(traj.residual[0] == 0.0);
    REQUIRE(traj.snapshot_times.size() == 5); // t=0, 0.25, 0.5, 0.75, 1.0
    CHECK(traj.snapshot_times.front() == 0.0);
    CHECK(traj.snapshot_times.back() == Approx(1.0).margin(1e-15));
    for (std::size_t s = 1; s < traj.snapshot_times.size(); ++s) {
        CHECK(traj.snapshot_times[s] > traj.snapshot_times[s - 1]);
    }
    for (double r : traj.residual) {
        CHECK(r <= 1e-10);
    }
}

TEST_CASE("weak inflow transports the datum into the domain", "[timestepper]") {
    // square transport of the Gaussian alone at P1/nele=40 to T=0.5: the bump
    // should be centered near (0.5, 0.5)
    const Scenario sc = make_square_transport(1.0);
    const Mesh m = sc.make_mesh(40);
    const FeSpace sp = build_space(m, 1);
    const BoundaryPartition part = classify_boundary(m, sc.velocity.eval, 0.0);
    const SystemOperators ops =
        build_operators(sp, sc.velocity, 0.01, CipVariant::abs_beta, 0.0, &part);
    MassSolver mass(ops.M);
    const ThetaConfig cfg = make_theta_config(0.5, 0.5, select_dt(1, 1.0 / 40));
    ProblemData pr;
    pr.initial = [](Vec2 p, double) {
        const double dx = p.x, dy = p.y - 0.5;
        return std::exp(-30.0 * (dx * dx + dy * dy));
    };
    pr.inflow = [&pr](Vec2 p, double t) { return pr.initial({p.x - t, p.y}, 0.0); };
    pr.velocity = &sc.velocity;
    pr.partition = &part;
    const Trajectory traj = run_simulation(sp, ops, mass, cfg, pr);

    int imax = 0;
    traj.snapshots.back().maxCoeff(&imax);
    CHECK(norm(sp.dof_coords[imax] - Vec2{0.5, 0.5}) <= 2.0 / 40);
}
