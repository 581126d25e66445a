#pragma once

#include <cstdlib>
#include <future>
#include <memory>
#include <semaphore>
#include <thread>

#include "cip/scenarios.hpp"

namespace cip {

struct ErrorSelection {
    bool global_l2 = true;
    bool local_l2 = false;
    bool matderiv = false;
    bool stab_seminorm = false;
    bool weighted_l2 = false;
    bool dual_norm = false;
    bool estimator = false;
};

struct RunParams {
    int degree = 1;
    double gamma = 0.01;
    double theta = 0.5;
    CipVariant variant = CipVariant::abs_beta;
    ErrorSelection errors;
    double weight_K = 2.0;
    double weight_r0 = 0.2;
    Vec2 weight_center{0.0, 0.0};
    bool weight_center_set = false;
    long snapshot_stride = 0;
    bool collect_error_trace = false;
};

struct SingleRunResult {
    int nele = 0;
    double h = 0.0;     // nominal
    double dt = 0.0;
    long nsteps = 0;
    Trajectory trajectory;
    FeFunction final_state;
    std::shared_ptr<Mesh> mesh;
    std::shared_ptr<FeSpace> space;
    std::map<std::string, double> errors;
    std::vector<double> error_trace; // global L2 error after each step (with t=0 first)
};

// One simulation of a scenario at a given resolution, with the selected error
// measures evaluated at the final time.
inline SingleRunResult run_single(const Scenario& scenario, const RunParams& params, int nele) {
    SingleRunResult out;
    out.nele = nele;
    out.h = scenario.nominal_h(nele);

    out.mesh = std::make_shared<Mesh>(scenario.make_mesh(nele));
    out.space = std::make_shared<FeSpace>(build_space(*out.mesh, params.degree));
    const FeSpace& space = *out.space;

    BoundaryPartition part;
    const BoundaryPartition* part_ptr = nullptr;
    if (!scenario.periodic()) {
        part = classify_boundary(*out.mesh, scenario.velocity.eval, 0.0);
        part_ptr = &part;
    }
    SystemOperators ops =
        build_operators(space, scenario.velocity, params.gamma, params.variant, 0.0, part_ptr);
    MassSolver mass(ops.M);
    if (mass.info() != Eigen::Success) {
        throw std::runtime_error("run_single: mass factorization failed");
    }

    const DomainKind dk = scenario.domain;
    const ThetaConfig cfg =
        make_theta_config(params.theta, scenario.final_time, select_dt(params.degree, out.h, dk));
    out.dt = cfg.dt;
    out.nsteps = cfg.nsteps;

    ProblemData problem;
    problem.initial = scenario.initial;
    problem.source = scenario.source;
    problem.inflow = scenario.inflow;
    problem.velocity = &scenario.velocity;
    problem.partition = part_ptr;

    std::unique_ptr<MaterialDerivAccumulator> matderiv;
    if (params.errors.matderiv) {
        matderiv = std::make_unique<MaterialDerivAccumulator>(space, scenario.velocity,
                                                              scenario.source, cfg.theta, cfg.dt);
    }
    std::unique_ptr<EstimatorAccumulator> estimator;
    if (params.errors.estimator) {
        estimator = std::make_unique<EstimatorAccumulator>(space, scenario.velocity, scenario.source,
                                                           params.gamma, ops.S, mass, out.h,
                                                           cfg.theta, cfg.dt);
    }

    RunOptions options;
    options.stride = params.snapshot_stride;
    FeFunction stepview;
    stepview.space = &space;
    auto exact = [&scenario](Vec2 x, double t) { return scenario.exact(x, t); };
    options.on_step = [&](long n, double t_prev, const Vector& u_prev, const Vector& u_next) {
        if (matderiv) {
            matderiv->add_step(n, t_prev, u_prev, u_next);
        }
        if (estimator) {
            estimator->add_step(n, t_prev, u_prev, u_next);
        }
        if (params.collect_error_trace) {
            stepview.coeffs = u_next;
            out.error_trace.push_back(l2_error(stepview, exact, t_prev + cfg.dt));
        }
    };

    out.trajectory = run_simulation(space, ops, mass, cfg, problem, options);

    out.final_state.space = out.space.get();
    out.final_state.coeffs = out.trajectory.snapshots.back();
    if (estimator) {
        FeFunction u0h;
        u0h.space = &space;
        u0h.coeffs = out.trajectory.snapshots.front();
        estimator->set_initial(scenario.initial, u0h);
    }
    if (params.collect_error_trace) {
        stepview.coeffs = out.trajectory.snapshots.front();
        out.error_trace.insert(out.error_trace.begin(), l2_error(stepview, exact, 0.0));
    }

    const double T = scenario.final_time;
    if (params.errors.global_l2) {
        out.errors["err_global_L2"] = l2_error(out.final_state, exact, T);
    }
    if (params.errors.local_l2) {
        out.errors["err_local_L2"] = l2_error(out.final_state, exact, T, Region::halfplane_x_pos());
    }
    if (matderiv) {
        out.errors["err_matderiv"] = matderiv->value();
    }
    if (params.errors.stab_seminorm) {
        double acc = 0.0;
        for (std::size_t n = 1; n < out.trajectory.cip_seminorm.size(); ++n) {
            acc += cfg.dt * out.trajectory.cip_seminorm[n] * out.trajectory.cip_seminorm[n];
        }
        out.errors["stab_seminorm_int"] = std::sqrt(acc);
    }
    if (params.errors.weighted_l2) {
        const Vec2 center = params.weight_center_set ? params.weight_center : scenario.weight_center;
        const WeightFunction w =
            make_weight(center, params.weight_r0, params.weight_K, out.h, scenario.backward_flow);
        out.errors["weighted_L2"] = weighted_l2_error(out.final_state, exact, T, w);
    }
    if (params.errors.dual_norm) {
        if (!scenario.periodic()) {
            throw std::invalid_argument("dual_norm error requires the periodic scenario");
        }
        FeFunction proj = l2_project([&exact, T](Vec2 x, double) { return exact(x, T); }, 0.0, space,
                                     mass, ops.M);
        FeFunction e;
        e.space = &space;
        e.coeffs = proj.coeffs - out.final_state.coeffs;
        const Mesh fine_mesh = generate_square(2 * nele, true);
        const FeSpace fine_space = build_space(fine_mesh, params.degree);
        out.errors["dual_norm"] = dual_norm(e, fine_space, nele);
    }
    if (estimator) {
        out.errors["estimator"] = estimator->value();
    }
    return out;
}

inline int study_worker_cap(int levels) {
    int cap = std::min(levels, static_cast<int>(std::thread::hardware_concurrency()));
    cap = std::max(cap, 1);
    if (const char* env = std::getenv("SOLVER_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) {
            cap = std::min(cap, v);
        }
    }
    return cap;
}

// Mesh-refinement sweep. Levels run concurrently (capped by SOLVER_THREADS);
// per-level failures are recorded and the study continues.
inline ErrorReport run_convergence_study(const Scenario& scenario, const RunParams& params,
                                         const std::vector<int>& neles) {
    if (neles.empty()) {
        throw std::invalid_argument("run_convergence_study: empty nele list");
    }
    for (std::size_t i = 1; i < neles.size(); ++i) {
        if (neles[i] <= neles[i - 1]) {
            throw std::invalid_argument("run_convergence_study: nele list must be ascending");
        }
    }

    const int cap = study_worker_cap(static_cast<int>(neles.size()));
    std::counting_semaphore<64> slots(cap);

    auto level_task = [&](int nele) {
        slots.acquire();
        LevelRecord rec;
        rec.nele = nele;
        rec.h = scenario.nominal_h(nele);
        try {
            SingleRunResult r = run_single(scenario, params, nele);
            rec.dt = r.dt;
            rec.errors = std::move(r.errors);
        } catch (const std::exception& ex) {
            rec.failed = true;
            rec.message = ex.what();
        }
        slots.release();
        return rec;
    };

    std::vector<std::future<LevelRecord>> futures;
    futures.reserve(neles.size());
    for (int nele : neles) {
        futures.push_back(std::async(std::launch::async, level_task, nele));
    }
    ErrorReport report;
    for (auto& f : futures) {
        report.levels.push_back(f.get());
    }
    return report;
}

} // namespace cip
