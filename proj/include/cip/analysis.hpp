#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cip/operators.hpp"
#include "cip/timestepper.hpp"

namespace cip {

// Sub-region for restricted norms; membership of an element is decided by its
// barycenter (O(h) fuzz at the region boundary).
struct Region {
    enum class Kind { global, halfplane_x_pos, ball };
    Kind kind = Kind::global;
    Vec2 center{0.0, 0.0};
    double radius = 0.0;

    static Region global() { return {}; }
    static Region halfplane_x_pos() { return {Kind::halfplane_x_pos, {}, 0.0}; }
    static Region ball(Vec2 c, double r) { return {Kind::ball, c, r}; }

    bool contains(Vec2 p) const {
        switch (kind) {
            case Kind::global: return true;
            case Kind::halfplane_x_pos: return p.x > 0.0;
            case Kind::ball: return norm(p - center) < radius;
        }
        return true;
    }
};

// || u_h - u(.,t) ||_{L2(region)} with data quadrature degree 2k+4.
template <typename Exact>
inline double l2_error(const FeFunction& fn, const Exact& exact, double t,
                       const Region& region = Region::global()) {
    const FeSpace& sp = *fn.space;
    const Mesh& mesh = *sp.mesh;
    const QuadratureRule rule = triangle_quadrature(2 * sp.degree + 4);
    const BasisTable table(sp.degree, rule);
    const int nd = sp.dofs_per_element();
    double acc = 0.0;
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const auto c = mesh.triangle_coords(static_cast<int>(e));
        const Vec2 bary = (1.0 / 3.0) * (c[0] + c[1] + c[2]);
        if (!region.contains(bary)) {
            continue;
        }
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            double uh = 0.0;
            for (int i = 0; i < nd; ++i) {
                uh += fn.coeffs[sp.element_dofs[e][i]] * table.vals[q][i];
            }
            const double d = uh - exact(g.point(rule.points[q]), t);
            acc += rule.weights[q] * g.det * d * d;
        }
    }
    return std::sqrt(acc);
}

inline double stab_seminorm(const FeFunction& fn, const SparseMat& S) {
    return stab_seminorm_vec(S, fn.coeffs);
}

// Characteristic-aligned weight: w(x,t) = phi(|X(x,t) - x0|) where X is the
// backward flow and phi(r) = exp(-q((r-r0)/sigma)) past r0 with
// q(s) = s^2/(1+s), phi = 1 inside. sigma = K sqrt(h). q'(0) = 0 makes phi
// C^1 at r0 and q(s) ~ s gives the exp(-(r-r0)/sigma) tail.
struct WeightFunction {
    Vec2 center{0.0, 0.0};
    double r0 = 0.0;
    double K = 2.0;
    double sigma = 0.0;
    std::function<Vec2(Vec2, double)> backward_flow;

    double profile(double r) const {
        if (r <= r0) {
            return 1.0;
        }
        const double s = (r - r0) / sigma;
        return std::exp(-s * s / (1.0 + s));
    }
    double operator()(Vec2 x, double t) const {
        const Vec2 x0 = backward_flow ? backward_flow(x, t) : x;
        return profile(norm(x0 - center));
    }
};

inline WeightFunction make_weight(Vec2 center, double r0, double K, double h,
                                  std::function<Vec2(Vec2, double)> backward_flow) {
    if (r0 <= 0.0 || K <= 1.0 || h <= 0.0) {
        throw std::invalid_argument("make_weight: need r0 > 0, K > 1, h > 0");
    }
    WeightFunction w;
    w.center = center;
    w.r0 = r0;
    w.K = K;
    w.sigma = K * std::sqrt(h);
    w.backward_flow = std::move(backward_flow);
    return w;
}

// || w(.,t) (u_h - u(.,t)) ||_{L2}
template <typename Exact>
inline double weighted_l2_error(const FeFunction& fn, const Exact& exact, double t,
                                const WeightFunction& weight) {
    const FeSpace& sp = *fn.space;
    const Mesh& mesh = *sp.mesh;
    const QuadratureRule rule = triangle_quadrature(2 * sp.degree + 4);
    const BasisTable table(sp.degree, rule);
    const int nd = sp.dofs_per_element();
    double acc = 0.0;
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec2 x = g.point(rule.points[q]);
            double uh = 0.0;
            for (int i = 0; i < nd; ++i) {
                uh += fn.coeffs[sp.element_dofs[e][i]] * table.vals[q][i];
            }
            const double wv = weight(x, t);
            const double d = wv * (uh - exact(x, t));
            acc += rule.weights[q] * g.det * d * d;
        }
    }
    return std::sqrt(acc);
}

// Accumulates the discrete material-derivative error
//   sum_n dt || f^{n_theta} - [ (u^n - u^{n-1})/dt + beta . grad u_h^{n_theta} ] ||^2
// online from consecutive states.
class MaterialDerivAccumulator {
public:
    MaterialDerivAccumulator(const FeSpace& space, const VelocityField& velocity,
                             std::function<double(Vec2, double)> source, double theta, double dt)
        : space_(&space),
          velocity_(&velocity),
          source_(std::move(source)),
          theta_(theta),
          dt_(dt),
          rule_(triangle_quadrature(2 * space.degree + 4)),
          table_(space.degree, rule_) {}

    void add_step(long /*n*/, double t_prev, const Vector& u_prev, const Vector& u_next) {
        const FeSpace& sp = *space_;
        const Mesh& mesh = *sp.mesh;
        const double t_eval = t_prev + theta_ * dt_;
        const int nd = sp.dofs_per_element();
        double acc = 0.0;
        for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
            const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
            const auto& ed = sp.element_dofs[e];
            for (std::size_t q = 0; q < rule_.points.size(); ++q) {
                double du = 0.0;
                Vec2 grad{0.0, 0.0};
                for (int i = 0; i < nd; ++i) {
                    const double cp = u_prev[ed[i]], cn = u_next[ed[i]];
                    du += (cn - cp) * table_.vals[q][i];
                    grad = grad + (theta_ * cn + (1.0 - theta_) * cp) * g.map_grad(table_.grads[q][i]);
                }
                const Vec2 x = g.point(rule_.points[q]);
                const double f = source_ ? source_(x, t_eval) : 0.0;
                const double r = f - (du / dt_ + dot((*velocity_)(x, t_eval), grad));
                acc += rule_.weights[q] * g.det * r * r;
            }
        }
        sum_sq_ += dt_ * acc;
    }

    double value() const { return std::sqrt(sum_sq_); }

private:
    const FeSpace* space_;
    const VelocityField* velocity_;
    std::function<double(Vec2, double)> source_;
    double theta_, dt_;
    QuadratureRule rule_;
    BasisTable table_;
    double sum_sq_ = 0.0;
};

// Same quantity recomputed from a fully retained trajectory (stride 1).
inline double material_derivative_error(const Trajectory& traj, const FeSpace& space,
                                        const VelocityField& velocity,
                                        std::function<double(Vec2, double)> source, double theta) {
    if (traj.snapshots.size() < 2) {
        return 0.0;
    }
    const double dt = traj.snapshot_times[1] - traj.snapshot_times[0];
    MaterialDerivAccumulator acc(space, velocity, std::move(source), theta, dt);
    for (std::size_t n = 1; n < traj.snapshots.size(); ++n) {
        const double step_dt = traj.snapshot_times[n] - traj.snapshot_times[n - 1];
        if (std::abs(step_dt - dt) > 1e-12) {
            throw std::invalid_argument("material_derivative_error: trajectory must hold every step");
        }
        acc.add_step(static_cast<long>(n), traj.snapshot_times[n - 1], traj.snapshots[n - 1],
                     traj.snapshots[n]);
    }
    return acc.value();
}

// A-posteriori estimator of the dual-norm error:
//   h ||u0 - pi_h u0|| + sum_n dt ( h ||(I - pi_h)(f - beta . grad u_h)|| +
//                                   gamma h^{1/2} |u_h|_s )
// evaluated at the theta states. The infimum over V_h is attained by the
// L2-projection, and ||(I-pi_h) w||^2 = ||w||^2 - c' b with M c = b, b = (w, phi).
class EstimatorAccumulator {
public:
    EstimatorAccumulator(const FeSpace& space, const VelocityField& velocity,
                         std::function<double(Vec2, double)> source, double gamma,
                         const SparseMat& S, const MassSolver& mass, double h, double theta,
                         double dt)
        : space_(&space),
          velocity_(&velocity),
          source_(std::move(source)),
          gamma_(gamma),
          S_(&S),
          mass_(&mass),
          h_(h),
          theta_(theta),
          dt_(dt),
          rule_(triangle_quadrature(2 * space.degree + 4)),
          table_(space.degree, rule_) {}

    // h || u0 - pi_h u0 ||, from the exact datum and its projection.
    template <typename U0>
    void set_initial(const U0& u0, const FeFunction& u0h) {
        initial_term_ = h_ * l2_error(u0h, [&u0](Vec2 x, double) { return u0(x, 0.0); }, 0.0);
    }

    void add_step(long /*n*/, double t_prev, const Vector& u_prev, const Vector& u_next) {
        const FeSpace& sp = *space_;
        const Mesh& mesh = *sp.mesh;
        const double t_eval = t_prev + theta_ * dt_;
        const int nd = sp.dofs_per_element();
        const Vector u_theta = theta_ * u_next + (1.0 - theta_) * u_prev;

        Vector b = Vector::Zero(sp.ndof);
        double w_sq = 0.0;
        for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
            const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
            const auto& ed = sp.element_dofs[e];
            for (std::size_t q = 0; q < rule_.points.size(); ++q) {
                Vec2 grad{0.0, 0.0};
                for (int i = 0; i < nd; ++i) {
                    grad = grad + u_theta[ed[i]] * g.map_grad(table_.grads[q][i]);
                }
                const Vec2 x = g.point(rule_.points[q]);
                const double f = source_ ? source_(x, t_eval) : 0.0;
                const double w = f - dot((*velocity_)(x, t_eval), grad);
                const double wq = rule_.weights[q] * g.det;
                w_sq += wq * w * w;
                for (int i = 0; i < nd; ++i) {
                    b[ed[i]] += wq * w * table_.vals[q][i];
                }
            }
        }
        const Vector c = mass_->solve(b);
        const double ortho_sq = std::max(0.0, w_sq - c.dot(b));
        const double term =
            h_ * std::sqrt(ortho_sq) + gamma_ * std::sqrt(h_) * stab_seminorm_vec(*S_, u_theta);
        integral_ += dt_ * term;
    }

    double value() const { return initial_term_ + integral_; }

private:
    const FeSpace* space_;
    const VelocityField* velocity_;
    std::function<double(Vec2, double)> source_;
    double gamma_;
    const SparseMat* S_;
    const MassSolver* mass_;
    double h_, theta_, dt_;
    QuadratureRule rule_;
    BasisTable table_;
    double initial_term_ = 0.0;
    double integral_ = 0.0;
};

inline double apost_estimator(const Trajectory& traj, const FeSpace& space,
                              const VelocityField& velocity,
                              std::function<double(Vec2, double)> source,
                              std::function<double(Vec2, double)> u0, double gamma,
                              const SparseMat& S, const MassSolver& mass, double h, double theta) {
    if (traj.snapshots.size() < 2) {
        return 0.0;
    }
    const double dt = traj.snapshot_times[1] - traj.snapshot_times[0];
    EstimatorAccumulator acc(space, velocity, std::move(source), gamma, S, mass, h, theta, dt);
    FeFunction u0h;
    u0h.space = &space;
    u0h.coeffs = traj.snapshots[0];
    acc.set_initial(u0, u0h);
    for (std::size_t n = 1; n < traj.snapshots.size(); ++n) {
        acc.add_step(static_cast<long>(n), traj.snapshot_times[n - 1], traj.snapshots[n - 1],
                     traj.snapshots[n]);
    }
    return acc.value();
}

// Nodal prolongation of a coarse function on the structured (optionally
// periodic) square onto the mesh with doubled resolution; exact since the
// refined triangulation is nested.
inline FeFunction prolongate_structured_square(const FeFunction& coarse, const FeSpace& fine,
                                               int nele_coarse) {
    const FeSpace& csp = *coarse.space;
    const int n = nele_coarse;
    FeFunction out;
    out.space = &fine;
    out.coeffs.resize(fine.ndof);
    for (int d = 0; d < fine.ndof; ++d) {
        const Vec2 p = fine.dof_coords[d];
        int i = std::min(static_cast<int>(p.x * n), n - 1);
        int j = std::min(static_cast<int>(p.y * n), n - 1);
        const double fx = p.x * n - i, fy = p.y * n - j;
        const int cell = j * n + i;
        const int tri = 2 * cell + (fx >= fy ? 0 : 1);
        out.coeffs[d] = evaluate(coarse, tri, p).value;
    }
    return out;
}

// Discrete dual norm ||e||_{V'} with V = H^1_per: solve the Riesz problem
// (z,w) + (grad z, grad w) = (e,w) on the finer space and return sqrt((z,e)).
inline double dual_norm(const FeFunction& e_coarse, const FeSpace& fine, int nele_coarse) {
    const FeFunction e_fine = prolongate_structured_square(e_coarse, fine, nele_coarse);
    const SparseMat M = assemble_mass(fine);
    const SparseMat K = assemble_stiffness(fine);
    const SparseMat R = M + K;
    Eigen::SimplicialLDLT<SparseMat> solver(R);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("dual_norm: Riesz factorization failed");
    }
    const Vector rhs = M * e_fine.coeffs;
    const Vector z = solver.solve(rhs);
    const double rn = rhs.norm();
    if (rn > 0.0 && (R * z - rhs).norm() / rn > 1e-12) {
        throw std::runtime_error("dual_norm: Riesz solve residual too large");
    }
    return std::sqrt(std::max(0.0, z.dot(rhs)));
}

// ------- convergence reporting -------

inline const std::vector<std::string>& error_column_names() {
    static const std::vector<std::string> names = {
        "err_global_L2", "err_local_L2",  "err_matderiv", "stab_seminorm_int",
        "weighted_L2",   "dual_norm",     "estimator"};
    return names;
}

struct LevelRecord {
    int nele = 0;
    double h = 0.0;
    double dt = 0.0;
    std::map<std::string, double> errors;
    bool failed = false;
    std::string message;
};

struct ErrorReport {
    std::vector<LevelRecord> levels; // sorted by h descending
};

// rate = log(e_coarse/e_fine) / log(h_coarse/h_fine); NaN when undefined.
inline double pair_rate(double e_coarse, double e_fine, double h_coarse, double h_fine) {
    if (e_coarse <= 0.0 || e_fine <= 0.0 || h_coarse <= h_fine) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

// Least-squares slope of log(e) against log(h) over all levels carrying the
// given error; NaN if fewer than two usable levels.
inline double ls_rate(const ErrorReport& report, const std::string& name) {
    std::vector<double> lh, le;
    for (const auto& lvl : report.levels) {
        auto it = lvl.errors.find(name);
        if (lvl.failed || it == lvl.errors.end() || it->second <= 0.0) {
            continue;
        }
        lh.push_back(std::log(lvl.h));
        le.push_back(std::log(it->second));
    }
    const std::size_t n = lh.size();
    if (n < 2) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double mh = 0.0, me = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mh += lh[i];
        me += le[i];
    }
    mh /= n;
    me /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (lh[i] - mh) * (le[i] - me);
        den += (lh[i] - mh) * (lh[i] - mh);
    }
    return num / den;
}

inline void write_report_csv(const ErrorReport& report, std::ostream& out) {
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "nele,h,dt";
    for (const auto& name : error_column_names()) {
        out << ',' << name;
    }
    out << '\n';
    for (const auto& lvl : report.levels) {
        out << lvl.nele << ',' << fmt(lvl.h) << ',' << fmt(lvl.dt);
        for (const auto& name : error_column_names()) {
            out << ',';
            auto it = lvl.errors.find(name);
            if (it != lvl.errors.end()) {
                out << fmt(it->second);
            }
        }
        out << '\n';
    }
    out << "# rates (consecutive levels, then least-squares slope)\n";
    for (std::size_t i = 1; i < report.levels.size(); ++i) {
        const auto& a = report.levels[i - 1];
        const auto& b = report.levels[i];
        out << "rate_" << a.nele << '_' << b.nele << ",,";
        for (const auto& name : error_column_names()) {
            out << ',';
            auto ia = a.errors.find(name);
            auto ib = b.errors.find(name);
            if (ia != a.errors.end() && ib != b.errors.end()) {
                const double r = pair_rate(ia->second, ib->second, a.h, b.h);
                if (std::isfinite(r)) {
                    out << fmt(r);
                }
            }
        }
        out << '\n';
    }
    out << "rate_ls,,";
    for (const auto& name : error_column_names()) {
        out << ',';
        const double r = ls_rate(report, name);
        if (std::isfinite(r)) {
            out << fmt(r);
        }
    }
    out << '\n';
}

} // namespace cip
