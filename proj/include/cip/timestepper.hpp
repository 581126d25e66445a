#pragma once

#include <Eigen/SparseLU>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cip/operators.hpp"

namespace cip {

enum class DomainKind { disc, square, periodic_square };

struct ThetaConfig {
    double theta = 0.5;
    double dt = 0.0;
    long nsteps = 0;
    double final_time = 0.0;
};

// dt = h/2 for P1, h^{3/2}/2 for P2. The square experiments reuse the disc
// rule; h is the nominal mesh size of the domain (2*pi/nele or 1/nele).
inline double select_dt(int degree, double h, DomainKind /*domain*/ = DomainKind::disc) {
    if (degree == 1) {
        return 0.5 * h;
    }
    if (degree == 2) {
        return 0.5 * std::pow(h, 1.5);
    }
    throw std::invalid_argument("select_dt: unsupported degree");
}

// Shrink dt so that nsteps * dt == final_time exactly; never overshoot.
inline ThetaConfig make_theta_config(double theta, double final_time, double dt_raw) {
    if (theta < 0.5 || theta > 1.0) {
        throw std::invalid_argument("make_theta_config: theta must be in [1/2, 1]");
    }
    if (dt_raw <= 0.0 || final_time <= 0.0) {
        throw std::invalid_argument("make_theta_config: dt and final time must be positive");
    }
    ThetaConfig cfg;
    cfg.theta = theta;
    cfg.final_time = final_time;
    cfg.nsteps = static_cast<long>(std::ceil(final_time / dt_raw - 1e-12));
    cfg.dt = final_time / static_cast<double>(cfg.nsteps);
    return cfg;
}

// One-step system of the theta scheme:
//   LHS = M/dt + theta (A + B + gamma S)
//   RHS = M/dt - (1-theta) (A + B + gamma S)
// The LHS is factorized once (beta steady) and reused for all steps.
class ThetaSystem {
public:
    ThetaSystem(const SystemOperators& ops, const ThetaConfig& cfg) : ops_(&ops), cfg_(cfg) {
        SparseMat op = ops.A + ops.gamma * ops.S;
        if (ops.has_inflow) {
            op += ops.B;
        }
        const SparseMat m_dt = ops.M * (1.0 / cfg.dt);
        lhs_ = m_dt + cfg.theta * op;
        rhs_op_ = m_dt - (1.0 - cfg.theta) * op;
        lu_.compute(lhs_);
        if (lu_.info() != Eigen::Success) {
            throw std::runtime_error("ThetaSystem: LHS factorization failed (singular system?)");
        }
    }

    const SparseMat& lhs() const { return lhs_; }
    const SparseMat& rhs_op() const { return rhs_op_; }
    const ThetaConfig& config() const { return cfg_; }
    const SystemOperators& operators() const { return *ops_; }

    // Advance one step: solve LHS u_next = RHS u_prev + extra, where extra
    // collects source and inflow data evaluated at t_prev + theta dt.
    Vector step(const Vector& u_prev, const Vector& extra, double* residual_out = nullptr) const {
        Vector rhs = rhs_op_ * u_prev;
        if (extra.size() > 0) {
            rhs += extra;
        }
        Vector u = lu_.solve(rhs);
        const double rn = rhs.norm();
        const double res = (lhs_ * u - rhs).norm() / (rn > 0.0 ? rn : 1.0);
        if (residual_out != nullptr) {
            *residual_out = res;
        }
        if (res > 1e-10) {
            throw std::runtime_error("ThetaSystem::step: solve residual " + std::to_string(res));
        }
        return u;
    }

private:
    const SystemOperators* ops_;
    ThetaConfig cfg_;
    SparseMat lhs_, rhs_op_;
    Eigen::SparseLU<SparseMat> lu_;
};

struct Trajectory {
    std::vector<double> snapshot_times;
    std::vector<Vector> snapshots;
    // Per-step diagnostics, length nsteps+1 (index 0 is the initial state).
    std::vector<double> energy;        // ||u^n||_M
    std::vector<double> cip_seminorm;  // |u^n|_s = sqrt(u' S u)
    std::vector<double> residual;      // relative solve residual, 0 at n=0
};

struct ProblemData {
    std::function<double(Vec2, double)> initial;  // u0(x); the time argument is 0
    std::function<double(Vec2, double)> source;   // f(x,t); empty means zero
    std::function<double(Vec2, double)> inflow;   // g(x,t); empty means zero
    const VelocityField* velocity = nullptr;
    const BoundaryPartition* partition = nullptr; // null for periodic meshes
};

struct RunOptions {
    // Snapshot every `stride` steps (plus t=0 and t=T); 0 keeps only those two.
    long stride = 0;
    // Called after each accepted step with (n, t_prev, u_prev, u_next).
    std::function<void(long, double, const Vector&, const Vector&)> on_step;
};

inline double m_norm(const SparseMat& M, const Vector& u) {
    return std::sqrt(std::max(0.0, u.dot(M * u)));
}

inline double stab_seminorm_vec(const SparseMat& S, const Vector& u) {
    return std::sqrt(std::max(0.0, u.dot(S * u)));
}

// Run the theta scheme from u_h(0) = pi_h(u0). Diagnostics are recorded every
// step; snapshots per RunOptions.
inline Trajectory run_simulation(const FeSpace& space, const SystemOperators& ops,
                                 const MassSolver& mass, const ThetaConfig& cfg,
                                 const ProblemData& problem, const RunOptions& options = {}) {
    const ThetaSystem system(ops, cfg);
    Trajectory traj;
    traj.energy.reserve(cfg.nsteps + 1);

    FeFunction u0 = l2_project(problem.initial, 0.0, space, mass, ops.M);
    Vector u = u0.coeffs;

    auto record_diag = [&](const Vector& v, double res) {
        traj.energy.push_back(m_norm(ops.M, v));
        traj.cip_seminorm.push_back(stab_seminorm_vec(ops.S, v));
        traj.residual.push_back(res);
    };
    auto snapshot = [&](double t, const Vector& v) {
        traj.snapshot_times.push_back(t);
        traj.snapshots.push_back(v);
    };

    record_diag(u, 0.0);
    snapshot(0.0, u);

    const bool has_source = static_cast<bool>(problem.source);
    const bool has_inflow =
        static_cast<bool>(problem.inflow) && ops.has_inflow && problem.partition != nullptr;
    Vector extra;
    for (long n = 1; n <= cfg.nsteps; ++n) {
        const double t_prev = (n - 1) * cfg.dt;
        const double t_eval = t_prev + cfg.theta * cfg.dt;
        extra.resize(0);
        if (has_source) {
            extra = assemble_source(space, problem.source, t_eval);
        }
        if (has_inflow) {
            Vector g = assemble_inflow_rhs(space, *problem.partition, *problem.velocity,
                                           problem.inflow, t_eval);
            extra = extra.size() > 0 ? Vector(extra + g) : std::move(g);
        }
        double res = 0.0;
        Vector u_next = system.step(u, extra, &res);
        record_diag(u_next, res);
        if (options.on_step) {
            options.on_step(n, t_prev, u, u_next);
        }
        if (n == cfg.nsteps || (options.stride > 0 && n % options.stride == 0)) {
            snapshot(n * cfg.dt, u_next);
        }
        u.swap(u_next);
    }
    return traj;
}

} // namespace cip
