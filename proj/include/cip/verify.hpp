#pragma once

#include <iomanip>
#include <random>
#include <sstream>

#include "cip/config.hpp"
#include "cip/mesh_io.hpp"
#include "cip/study.hpp"

namespace cip::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) {
        f *= i;
    }
    return f;
}

// exact integral of x^a y^b over the reference triangle
inline double monomial_integral(int a, int b) {
    return factorial(a) * factorial(b) / factorial(a + b + 2);
}

inline Vector random_vector(int n, std::mt19937& rng) {
    std::normal_distribution<double> dist;
    Vector v(n);
    for (int i = 0; i < n; ++i) {
        v[i] = dist(rng);
    }
    return v;
}

inline std::string num(double v) {
    std::ostringstream ss;
    ss << std::setprecision(4) << v;
    return ss.str();
}

} // namespace detail

// max relative quadrature error over all monomials of total degree <= d
inline double quadrature_triangle_max_error(int max_degree = 10) {
    double worst = 0.0;
    for (int d = 0; d <= max_degree; ++d) {
        const QuadratureRule rule = triangle_quadrature(d);
        for (int a = 0; a + 0 <= d; ++a) {
            for (int b = 0; a + b <= d; ++b) {
                double acc = 0.0;
                for (std::size_t q = 0; q < rule.points.size(); ++q) {
                    const double x = rule.points[q][1], y = rule.points[q][2];
                    acc += rule.weights[q] * std::pow(x, a) * std::pow(y, b);
                }
                const double exact = detail::monomial_integral(a, b);
                worst = std::max(worst, std::abs(acc - exact) / exact);
            }
        }
    }
    return worst;
}

inline double quadrature_edge_max_error(int max_degree = 10) {
    double worst = 0.0;
    for (int d = 0; d <= max_degree; ++d) {
        const EdgeQuadratureRule rule = edge_quadrature(d);
        for (int a = 0; a <= d; ++a) {
            double acc = 0.0;
            for (std::size_t q = 0; q < rule.points.size(); ++q) {
                acc += rule.weights[q] * std::pow(rule.points[q], a);
            }
            const double exact = 1.0 / (a + 1);
            worst = std::max(worst, std::abs(acc - exact) / exact);
        }
    }
    return worst;
}

inline double partition_unity_max_error(const FeSpace& space) {
    const QuadratureRule rule = triangle_quadrature(2 * space.degree + 2);
    const BasisTable table(space.degree, rule);
    double worst = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        double s = 0.0;
        for (int i = 0; i < space.dofs_per_element(); ++i) {
            s += table.vals[q][i];
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

// || S v ||_inf over nodal interpolants of global polynomials (degree <= k),
// which are globally C^1 and must lie in the CIP kernel.
inline double cip_kernel_residual(const FeSpace& space, const SparseMat& S) {
    std::vector<std::function<double(Vec2, double)>> polys = {
        [](Vec2, double) { return 1.0; },
        [](Vec2 p, double) { return p.x; },
        [](Vec2 p, double) { return p.y; },
    };
    if (space.degree == 2) {
        polys.push_back([](Vec2 p, double) { return p.x * p.x; });
        polys.push_back([](Vec2 p, double) { return p.x * p.y; });
        polys.push_back([](Vec2 p, double) { return p.y * p.y; });
    }
    double worst = 0.0;
    for (const auto& f : polys) {
        const FeFunction v = interpolate_nodal(f, 0.0, space);
        const Vector r = S * v.coeffs;
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
        worst = std::max(worst, std::abs(v.coeffs.dot(r)));
    }
    return worst;
}

inline double min_rayleigh(const SparseMat& S, int samples, unsigned seed = 7u) {
    std::mt19937 rng(seed);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Vector v = detail::random_vector(static_cast<int>(S.rows()), rng);
        worst = std::min(worst, v.dot(S * v) / v.squaredNorm());
    }
    return worst;
}

// smallest eigenvalue of M by inverse power iteration
inline double mass_min_eigenvalue(const SparseMat& M) {
    MassSolver solver(M);
    if (solver.info() != Eigen::Success) {
        return -1.0;
    }
    std::mt19937 rng(3u);
    Vector x = detail::random_vector(static_cast<int>(M.rows()), rng);
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 60; ++it) {
        Vector y = solver.solve(x);
        y.normalize();
        lambda = y.dot(M * y);
        x.swap(y);
    }
    return lambda;
}

// fitted constant in |w|_s <= C h^{-1/2} beta_inf^{1/2} ||w|| over random vectors
inline double inverse_inequality_constant(const FeSpace& space, const SparseMat& S,
                                          const SparseMat& M, double h, double beta_inf,
                                          int samples = 200, unsigned seed = 11u) {
    std::mt19937 rng(seed);
    double cmax = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Vector v = detail::random_vector(space.ndof, rng);
        const double s = stab_seminorm_vec(S, v);
        const double m = m_norm(M, v);
        cmax = std::max(cmax, s / (std::sqrt(beta_inf / h) * m));
    }
    return cmax;
}

// fitted constant in |d^l phi/dr^l| <= C sigma^{-l} phi for l = 1, 2
inline double weight_derivative_constant(const WeightFunction& w, int l, int samples = 200) {
    const double delta = 1e-6 * w.sigma;
    double cmax = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = w.r0 + (10.0 * w.sigma) * (i + 0.5) / samples;
        if (std::abs(r - w.r0) < 4.0 * delta) {
            continue;
        }
        const double fm = w.profile(r - delta), f0 = w.profile(r), fp = w.profile(r + delta);
        const double d = l == 1 ? (fp - fm) / (2.0 * delta) : (fp - 2.0 * f0 + fm) / (delta * delta);
        cmax = std::max(cmax, std::abs(d) * std::pow(w.sigma, l) / f0);
    }
    return cmax;
}

inline bool weight_decay_window(const WeightFunction& w) {
    for (int m = 3; m <= 10; ++m) {
        const double ratio = w.profile(w.r0 + m * w.sigma) / w.profile(w.r0 + (m + 1) * w.sigma);
        if (ratio < std::exp(0.5) || ratio > std::exp(1.5)) {
            return false;
        }
    }
    return true;
}

// finite-difference check of L(w) = dw/dt + beta . grad w = 0 along the flow
inline double weight_transport_residual(const WeightFunction& w, const VelocityField& beta,
                                        double tmax, Vec2 lo, Vec2 hi, unsigned seed = 5u) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y), ut(0.05, tmax);
    const double eps = 1e-5;
    double worst = 0.0;
    int used = 0;
    for (int i = 0; i < 400 && used < 100; ++i) {
        const Vec2 x{ux(rng), uy(rng)};
        const double t = ut(rng);
        const double r = norm(w.backward_flow(x, t) - w.center);
        if (std::abs(r - w.r0) < 20.0 * eps) {
            continue; // profile is only C^1 at r0
        }
        ++used;
        const double dt = (w(x, t + eps) - w(x, t - eps)) / (2 * eps);
        const double dx = (w({x.x + eps, x.y}, t) - w({x.x - eps, x.y}, t)) / (2 * eps);
        const double dy = (w({x.x, x.y + eps}, t) - w({x.x, x.y - eps}, t)) / (2 * eps);
        const Vec2 b = beta(x, t);
        worst = std::max(worst, std::abs(dt + b.x * dx + b.y * dy));
    }
    return worst;
}

// load vector of an FE function, used for the projection idempotence check
inline Vector load_of_fe_function(const FeFunction& fn, int qdegree) {
    const FeSpace& sp = *fn.space;
    const Mesh& mesh = *sp.mesh;
    const QuadratureRule rule = triangle_quadrature(qdegree);
    const BasisTable table(sp.degree, rule);
    const int nd = sp.dofs_per_element();
    Vector b = Vector::Zero(sp.ndof);
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            double v = 0.0;
            for (int i = 0; i < nd; ++i) {
                v += fn.coeffs[sp.element_dofs[e][i]] * table.vals[q][i];
            }
            const double w = rule.weights[q] * g.det * v;
            for (int i = 0; i < nd; ++i) {
                b[sp.element_dofs[e][i]] += w * table.vals[q][i];
            }
        }
    }
    return b;
}

inline std::vector<CheckResult> run_checks(bool full) {
    std::vector<CheckResult> out;
    auto add = [&out](const std::string& name, bool pass, const std::string& detail) {
        out.push_back({name, pass, detail});
    };

    {
        const double e1 = quadrature_triangle_max_error();
        const double e2 = quadrature_edge_max_error();
        add("quadrature_triangle_exactness", e1 <= 1e-13, "max rel err " + detail::num(e1));
        add("quadrature_edge_exactness", e2 <= 1e-13, "max rel err " + detail::num(e2));
        bool pos = true;
        double wsum = 0.0;
        const QuadratureRule r = triangle_quadrature(6);
        for (double w : r.weights) {
            pos = pos && w > 0.0;
            wsum += w;
        }
        add("quadrature_positive_weights", pos && std::abs(wsum - 0.5) <= 1e-14,
            "sum " + detail::num(wsum));
    }

    {
        const Mesh m1 = generate_square(1);
        const Mesh m2 = generate_square(2);
        const Mesh m2p = generate_square(2, true);
        const bool counts = m1.vertices.size() == 4 && m1.triangles.size() == 2 &&
                            m1.interior_edges.size() == 1 && m1.boundary_edges.size() == 4 &&
                            m2.vertices.size() == 9 && m2.triangles.size() == 8 &&
                            m2p.num_classes == 4 && m2p.boundary_edges.empty();
        add("mesh_square_counts", counts, "nele 1/2 and periodic identification");
        const int euler = static_cast<int>(m2.vertices.size()) - m2.num_edges() +
                          static_cast<int>(m2.triangles.size());
        add("mesh_euler_relation", euler == 1, "V-E+F = " + std::to_string(euler));
        add("mesh_square_area", std::abs(m2.total_area() - 1.0) <= 1e-12,
            "area " + detail::num(m2.total_area()));
    }

    {
        const Mesh d8 = generate_disc(8);
        bool on_circle = true;
        for (const auto& e : d8.boundary_edges) {
            for (int v : e.verts) {
                on_circle = on_circle && std::abs(norm(d8.vertices[v]) - 1.0) <= 1e-12;
            }
        }
        add("mesh_disc_boundary", d8.boundary_edges.size() == 8 && on_circle,
            std::to_string(d8.boundary_edges.size()) + " boundary edges on unit circle");
        const Mesh d80 = generate_disc(80);
        const double pi = 3.14159265358979323846;
        add("mesh_disc_h_bounds", d80.h >= pi / 80 && d80.h <= 4 * pi / 80,
            "h " + detail::num(d80.h));
        add("mesh_disc_shape_regularity",
            d8.shape_regularity < 10.0 && d80.shape_regularity < 10.0,
            "max ratio " + detail::num(std::max(d8.shape_regularity, d80.shape_regularity)));
    }

    {
        const Mesh m = generate_square(3);
        double worst_unit = 0.0, worst_orth = 0.0;
        for (const auto& e : m.interior_edges) {
            worst_unit = std::max(worst_unit, std::abs(norm(e.normal) - 1.0));
            const Vec2 ev = m.vertices[e.verts_left[1]] - m.vertices[e.verts_left[0]];
            worst_orth = std::max(worst_orth, std::abs(dot(e.normal, ev)) / norm(ev));
        }
        for (const auto& e : m.boundary_edges) {
            worst_unit = std::max(worst_unit, std::abs(norm(e.normal) - 1.0));
        }
        add("mesh_normals", worst_unit <= 1e-12 && worst_orth <= 1e-12,
            "unit " + detail::num(worst_unit) + ", orth " + detail::num(worst_orth));
    }

    {
        const Mesh m = generate_square(4);
        VelocityField bx{[](Vec2, double) { return Vec2{1.0, 0.0}; }, true, 1.0};
        const BoundaryPartition p = classify_boundary(m, bx.eval, 0.0);
        bool ok = p.inflow_edges.size() == 4;
        for (int b : p.inflow_edges) {
            ok = ok && m.boundary_edges[b].marker == 4; // left side
        }
        const Mesh d = generate_disc(16);
        VelocityField rot{[](Vec2 x, double) { return Vec2{x.y, -x.x}; }, true, 1.0};
        const BoundaryPartition pd = classify_boundary(d, rot.eval, 0.0);
        ok = ok && pd.inflow_edges.empty();
        add("boundary_classification", ok, "square inflow = left side; disc all outflow");
    }

    {
        // reference triangle P1 mass matrix: (1/24) [[2,1,1],[1,2,1],[1,1,2]]
        const Mesh ref = build_mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
        const FeSpace sp = build_space(ref, 1);
        const SparseMat M = assemble_mass(sp);
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double expect = (i == j ? 2.0 : 1.0) / 24.0;
                worst = std::max(worst, std::abs(M.coeff(i, j) - expect));
            }
        }
        add("p1_reference_mass", worst <= 1e-14, "max dev " + detail::num(worst));
    }

    {
        const Mesh m = generate_square(4);
        const FeSpace sp1 = build_space(m, 1);
        const FeSpace sp2 = build_space(m, 2);
        add("partition_of_unity",
            partition_unity_max_error(sp1) <= 1e-13 && partition_unity_max_error(sp2) <= 1e-13, "");
        const SparseMat m1 = assemble_mass(sp1);
        const SparseMat m2 = assemble_mass(sp2);
        const double a1 = Vector::Ones(sp1.ndof).dot(m1 * Vector::Ones(sp1.ndof));
        const double a2 = Vector::Ones(sp2.ndof).dot(m2 * Vector::Ones(sp2.ndof));
        add("mass_area_identity", std::abs(a1 - 1.0) <= 1e-12 && std::abs(a2 - 1.0) <= 1e-12,
            "1'M1 = " + detail::num(a1) + ", " + detail::num(a2));
        const double lmin = mass_min_eigenvalue(m2);
        add("mass_spd", lmin > 0.0, "min eig " + detail::num(lmin));
    }

    {
        VelocityField rot{[](Vec2 x, double) { return Vec2{x.y, -x.x}; }, true, 1.0};
        add("velocity_divergence_free", check_divergence_free(rot, {-1, -1}, {1, 1}), "");

        const Mesh d = generate_disc(16);
        for (int k : {1, 2}) {
            const FeSpace sp = build_space(d, k);
            const SparseMat S = assemble_cip(sp, rot, 0.0);
            const double res = cip_kernel_residual(sp, S);
            add("cip_kernel_p" + std::to_string(k), res <= 1e-12, "residual " + detail::num(res));
            const double rayleigh = min_rayleigh(S, 50);
            add("cip_spsd_p" + std::to_string(k), is_symmetric(S) && rayleigh >= -1e-12,
                "min rayleigh " + detail::num(rayleigh));
        }
    }

    {
        VelocityField bx{[](Vec2, double) { return Vec2{1.0, 0.0}; }, true, 1.0};
        const Mesh mp = generate_square(6, true);
        const FeSpace spp = build_space(mp, 1);
        const SparseMat Ap = assemble_convection(spp, bx, 0.0);
        const double skew = max_abs(SparseMat(Ap + SparseMat(Ap.transpose())));
        add("convection_skew_periodic", skew <= 1e-12, "max |A + A'| " + detail::num(skew));

        const Mesh m = generate_square(6);
        const FeSpace sp = build_space(m, 1);
        const SparseMat A = assemble_convection(sp, bx, 0.0);
        const Vector ones = Vector::Ones(sp.ndof);
        const double flux = ones.dot((A + SparseMat(A.transpose())) * ones);
        add("convection_flux_identity", std::abs(flux) <= 1e-12, "boundary flux " + detail::num(flux));

        const BoundaryPartition part = classify_boundary(m, bx.eval, 0.0);
        const SparseMat B = assemble_inflow_matrix(sp, part, bx, 0.0);
        const double rowsum = ones.dot(B * ones);
        const Vector b = assemble_inflow_rhs(sp, part, bx, [](Vec2, double) { return 1.0; }, 0.0);
        add("inflow_identities", std::abs(rowsum - 1.0) <= 1e-12 && std::abs(ones.dot(b) - 1.0) <= 1e-12,
            "1'B1 = " + detail::num(rowsum));

        VelocityField rot{[](Vec2 x, double) { return Vec2{x.y, -x.x}; }, true, 1.0};
        const Mesh d = generate_disc(16);
        const FeSpace spd = build_space(d, 1);
        const BoundaryPartition pd = classify_boundary(d, rot.eval, 0.0);
        const SparseMat Bd = assemble_inflow_matrix(spd, pd, rot, 0.0);
        add("inflow_disc_vanishes", max_abs(Bd) <= 1e-12, "disc |B|_max " + detail::num(max_abs(Bd)));
    }

    {
        const Mesh m = generate_square(8);
        const FeSpace sp = build_space(m, 1);
        const SparseMat M = assemble_mass(sp);
        MassSolver mass(M);
        auto fx = [](Vec2 p, double) { return p.x; };
        const FeFunction proj = l2_project(fx, 0.0, sp, mass, M);
        const FeFunction interp = interpolate_nodal(fx, 0.0, sp);
        const double dev = (proj.coeffs - interp.coeffs).cwiseAbs().maxCoeff();
        add("l2_projection_reproduces_vh", dev <= 1e-11, "max dev " + detail::num(dev));

        // idempotence: projecting the projection returns the same coefficients
        const Vector b2 = load_of_fe_function(proj, 2 * sp.degree + 2);
        const Vector again = mass.solve(b2);
        const double idev = (again - proj.coeffs).cwiseAbs().maxCoeff();
        add("l2_projection_idempotent", idev <= 1e-11, "max dev " + detail::num(idev));

        // stability on a mixed batch of smooth and rough data
        bool stable = true;
        std::vector<std::function<double(Vec2, double)>> fs = {
            [](Vec2 p, double) { return std::exp(-30.0 * (p.x * p.x + p.y * p.y)); },
            [](Vec2 p, double) { return std::sin(7.0 * p.x) * std::cos(3.0 * p.y); },
            [](Vec2 p, double) { return p.x > 0.5 ? 1.0 : 0.0; },
        };
        for (const auto& f : fs) {
            const FeFunction pf = l2_project(f, 0.0, sp, mass, M);
            const double pn = m_norm(M, pf.coeffs);
            double fn2 = 0.0;
            const QuadratureRule rule = triangle_quadrature(2 * sp.degree + 4);
            for (std::size_t e = 0; e < m.triangles.size(); ++e) {
                const ElementGeometry g = element_geometry(m, static_cast<int>(e));
                for (std::size_t q = 0; q < rule.points.size(); ++q) {
                    const double v = f(g.point(rule.points[q]), 0.0);
                    fn2 += rule.weights[q] * g.det * v * v;
                }
            }
            stable = stable && pn <= std::sqrt(fn2) + 1e-10;
        }
        add("l2_projection_stability", stable, "||pi_h f|| <= ||f||");
    }

    {
        // discrete energy law on the periodic cylinder
        const Scenario sc = make_periodic_cylinder();
        RunParams p;
        p.degree = 1;
        p.gamma = 0.0;
        auto run = [&sc](RunParams pp, int nele) { return run_single(sc, pp, nele); };
        const SingleRunResult cons = run(p, 16);
        const double drift =
            std::abs(cons.trajectory.energy.back() / cons.trajectory.energy.front() - 1.0);
        add("energy_conservation_cn_gamma0", drift <= 1e-10, "|E_N/E_0 - 1| = " + detail::num(drift));

        p.gamma = 0.01;
        const SingleRunResult diss = run(p, 16);
        bool monotone = true;
        for (std::size_t n = 1; n < diss.trajectory.energy.size(); ++n) {
            monotone = monotone &&
                       diss.trajectory.energy[n] <= diss.trajectory.energy[n - 1] * (1.0 + 1e-12);
        }
        add("energy_dissipation_cip", monotone, "per-step non-increase, gamma = 0.01");

        p.gamma = 0.0;
        p.theta = 1.0;
        const SingleRunResult be = run(p, 16);
        bool be_monotone = true;
        for (std::size_t n = 1; n < be.trajectory.energy.size(); ++n) {
            be_monotone = be_monotone &&
                          be.trajectory.energy[n] <= be.trajectory.energy[n - 1] * (1.0 + 1e-12);
        }
        add("energy_dissipation_backward_euler", be_monotone, "theta = 1, gamma = 0");
    }

    {
        // weight function bounds, decay window and characteristic transport
        bool bounds = true;
        double cworst = 0.0;
        for (int nele : {40, 80, 160, 320}) {
            for (double K : {1.5, 2.0, 4.0}) {
                for (double h : {2.0 * 3.14159265358979323846 / nele, 1.0 / nele}) {
                    const WeightFunction w = make_weight({0.5, 0.0}, 0.2, K, h, {});
                    for (int l : {1, 2}) {
                        const double c = weight_derivative_constant(w, l);
                        cworst = std::max(cworst, c);
                        bounds = bounds && c <= 3.0;
                    }
                    bounds = bounds && weight_decay_window(w);
                }
            }
        }
        add("weight_derivative_bounds", bounds, "fitted C " + detail::num(cworst) + " <= 3");

        const Scenario disc = make_rotating_disc(DiscData::smooth);
        const WeightFunction wr = make_weight({0.5, 0.0}, 0.2, 2.0, 2.0 * 3.14159265358979323846 / 80,
                                              disc.backward_flow);
        const double res_rot =
            weight_transport_residual(wr, disc.velocity, disc.final_time, {-0.7, -0.7}, {0.7, 0.7});
        const Scenario sq = make_square_transport(1.0);
        const WeightFunction wt = make_weight({0.5, 0.5}, 0.2, 2.0, 1.0 / 80, sq.backward_flow);
        const double res_tr =
            weight_transport_residual(wt, sq.velocity, sq.final_time, {0.1, 0.1}, {0.9, 0.9});
        add("weight_characteristic_transport", res_rot <= 1e-6 && res_tr <= 1e-6,
            "max |L w| " + detail::num(std::max(res_rot, res_tr)));
    }

    {
        // scenario exact-solution consistency
        bool ok = true;
        std::mt19937 rng(17u);
        std::uniform_real_distribution<double> u01(-0.69, 0.69);
        for (const char* name : {"rotating_disc_combined", "square_transport", "periodic_cylinder"}) {
            const Scenario sc = make_scenario(name);
            for (int i = 0; i < 100; ++i) {
                Vec2 x{u01(rng), u01(rng)};
                if (sc.domain != DomainKind::disc) {
                    x = {0.5 * (x.x + 0.7) / 0.7 + 0.1, 0.5 * (x.y + 0.7) / 0.7 + 0.1};
                }
                ok = ok && std::abs(sc.exact(x, 0.0) - sc.initial(x, 0.0)) <= 1e-12;
            }
            // finite-difference material derivative at smooth points
            const double eps = 1e-5;
            for (int i = 0; i < 60; ++i) {
                Vec2 x{u01(rng), u01(rng)};
                if (sc.domain != DomainKind::disc) {
                    x = {0.4 * (x.x + 0.7) / 0.7 + 0.2, 0.4 * (x.y + 0.7) / 0.7 + 0.2};
                }
                const double t = 0.1 + 0.2 * std::abs(u01(rng));
                const Vec2 x0 = sc.backward_flow(x, t);
                if (std::abs(norm(x0 - Vec2{-0.5, 0.0}) - 0.2) < 1e-3 ||
                    std::abs(norm(x0 - Vec2{0.5, 0.5}) - 0.2) < 1e-3) {
                    continue; // skip the discontinuity neighbourhood
                }
                const double dt =
                    (sc.exact(x, t + eps) - sc.exact(x, t - eps)) / (2 * eps);
                const double dx =
                    (sc.exact({x.x + eps, x.y}, t) - sc.exact({x.x - eps, x.y}, t)) / (2 * eps);
                const double dy =
                    (sc.exact({x.x, x.y + eps}, t) - sc.exact({x.x, x.y - eps}, t)) / (2 * eps);
                const Vec2 b = sc.velocity(x, t);
                ok = ok && std::abs(dt + b.x * dx + b.y * dy) <= 1e-4;
            }
        }
        add("scenario_exact_consistency", ok, "u(.,0) = u0 and L u = 0 by finite differences");
    }

    {
        // config validation rejects bad input before any run
        bool ok = true;
        auto rejects = [](const std::string& text) {
            std::istringstream ss(text);
            try {
                parse_config_stream(ss);
                return false;
            } catch (const std::exception&) {
                return true;
            }
        };
        ok = ok && rejects("scenario = periodic_cylinder\ndegree = 1\nnele = 8\ngamma = -1\n");
        ok = ok && rejects("scenario = periodic_cylinder\ndegree = 1\nnele = 8\nthetta = 1\n");
        ok = ok && rejects("degree = 1\nnele = 8\n");
        std::istringstream good("scenario = periodic_cylinder\ndegree = 1\nnele = 8\n");
        try {
            const RunConfig c = parse_config_stream(good);
            ok = ok && c.gamma == 0.01 && c.theta == 0.5;
        } catch (const std::exception&) {
            ok = false;
        }
        add("config_validation", ok, "gamma >= 0, unknown keys, mandatory keys");
    }

    {
        // dual norm of a constant on the periodic square is |c| sqrt(|Omega|)
        const Mesh m = generate_square(8, true);
        const FeSpace sp = build_space(m, 1);
        FeFunction c;
        c.space = &sp;
        c.coeffs = Vector::Constant(sp.ndof, 0.75);
        const Mesh fm = generate_square(16, true);
        const FeSpace fsp = build_space(fm, 1);
        const double dn = dual_norm(c, fsp, 8);
        add("dual_norm_constant", std::abs(dn - 0.75) <= 1e-10, "got " + detail::num(dn));

        std::mt19937 rng(23u);
        bool bounded = true;
        const SparseMat M = assemble_mass(sp);
        for (int i = 0; i < 5; ++i) {
            FeFunction e;
            e.space = &sp;
            e.coeffs = detail::random_vector(sp.ndof, rng);
            bounded = bounded && dual_norm(e, fsp, 8) <= m_norm(M, e.coeffs) + 1e-10;
        }
        add("dual_norm_bounded_by_l2", bounded, "||e||_V' <= ||e||");
    }

    if (full) {
        {
            // inverse-inequality constant stays bounded under refinement
            VelocityField bx{[](Vec2, double) { return Vec2{1.0, 0.0}; }, true, 1.0};
            for (int k : {1, 2}) {
                double cmin = 1e300, cmax = 0.0;
                for (int nele : {20, 40, 80}) {
                    const Mesh m = generate_square(nele);
                    const FeSpace sp = build_space(m, k);
                    const SparseMat S = assemble_cip(sp, bx, 0.0);
                    const SparseMat M = assemble_mass(sp);
                    const double c = inverse_inequality_constant(sp, S, M, m.h, 1.0);
                    cmin = std::min(cmin, c);
                    cmax = std::max(cmax, c);
                }
                add("inverse_inequality_stability_p" + std::to_string(k), cmax / cmin <= 2.0,
                    "fitted C within factor " + detail::num(cmax / cmin));
            }
        }
        {
            // interpolation and projection rates for the smooth Gaussian
            auto gauss = [](Vec2 p, double) {
                const double dx = p.x - 0.5, dy = p.y - 0.5;
                return std::exp(-30.0 * (dx * dx + dy * dy));
            };
            auto gauss_grad = [](Vec2 p) {
                const double dx = p.x - 0.5, dy = p.y - 0.5;
                const double v = std::exp(-30.0 * (dx * dx + dy * dy));
                return Vec2{-60.0 * dx * v, -60.0 * dy * v};
            };
            for (int k : {1, 2}) {
                std::vector<double> ierr, perr, gerr, hs;
                for (int nele : {40, 80, 160}) {
                    const Mesh m = generate_square(nele);
                    const FeSpace sp = build_space(m, k);
                    const SparseMat M = assemble_mass(sp);
                    MassSolver mass(M);
                    const FeFunction ih = interpolate_nodal(gauss, 0.0, sp);
                    const FeFunction ph = l2_project(gauss, 0.0, sp, mass, M);
                    ierr.push_back(l2_error(ih, gauss, 0.0));
                    perr.push_back(l2_error(ph, gauss, 0.0));
                    // gradient error of the projection
                    const QuadratureRule rule = triangle_quadrature(2 * k + 4);
                    const BasisTable table(k, rule);
                    double acc = 0.0;
                    for (std::size_t e = 0; e < m.triangles.size(); ++e) {
                        const ElementGeometry g = element_geometry(m, static_cast<int>(e));
                        for (std::size_t q = 0; q < rule.points.size(); ++q) {
                            Vec2 gh{0.0, 0.0};
                            for (int i = 0; i < sp.dofs_per_element(); ++i) {
                                gh = gh + ph.coeffs[sp.element_dofs[e][i]] * g.map_grad(table.grads[q][i]);
                            }
                            const Vec2 d = gh - gauss_grad(g.point(rule.points[q]));
                            acc += rule.weights[q] * g.det * dot(d, d);
                        }
                    }
                    gerr.push_back(std::sqrt(acc));
                    hs.push_back(m.h);
                }
                auto rate2 = [&hs](const std::vector<double>& e) {
                    return std::log(e.front() / e.back()) / std::log(hs.front() / hs.back());
                };
                add("interpolation_rate_p" + std::to_string(k), rate2(ierr) >= k + 0.8,
                    "rate " + detail::num(rate2(ierr)));
                add("projection_rate_p" + std::to_string(k), std::abs(rate2(perr) - (k + 1)) <= 0.2,
                    "rate " + detail::num(rate2(perr)));
                add("projection_gradient_rate_p" + std::to_string(k),
                    rate2(gerr) >= k - 0.2, "rate " + detail::num(rate2(gerr)));
            }
        }
        {
            // disc area deficit decreases ~4x per nele doubling
            const double pi = 3.14159265358979323846;
            const double d1 = pi - generate_disc(40).total_area();
            const double d2 = pi - generate_disc(80).total_area();
            const double d3 = pi - generate_disc(160).total_area();
            const bool ok = d1 > 0 && d2 > 0 && d3 > 0 && d1 / d2 >= 2.5 && d2 / d3 >= 2.5;
            add("disc_area_convergence", ok,
                "deficit ratios " + detail::num(d1 / d2) + ", " + detail::num(d2 / d3));
        }
        {
            // inflow rhs is consistent with B * (nodal interpolant of g)
            const Scenario sc = make_square_transport(1.0);
            std::vector<double> devs;
            for (int nele : {20, 40}) {
                const Mesh m = generate_square(nele);
                const FeSpace sp = build_space(m, 1);
                const BoundaryPartition part = classify_boundary(m, sc.velocity.eval, 0.0);
                const SparseMat B = assemble_inflow_matrix(sp, part, sc.velocity, 0.0);
                const double t = 0.37;
                const Vector b = assemble_inflow_rhs(sp, part, sc.velocity, sc.inflow, t);
                const FeFunction gi = interpolate_nodal(
                    [&sc](Vec2 x, double tt) { return sc.exact(x, tt); }, t, sp);
                devs.push_back((b - B * gi.coeffs).norm());
            }
            add("inflow_rhs_consistency", devs[1] <= devs[0] / 2.5,
                "deviation drop factor " + detail::num(devs[0] / devs[1]));
        }
        {
            // linearity of the trajectory in the initial data
            const Mesh m = generate_square(12, true);
            const FeSpace sp = build_space(m, 1);
            VelocityField bx{[](Vec2, double) { return Vec2{1.0, 0.0}; }, true, 1.0};
            const SystemOperators ops = build_operators(sp, bx, 0.01, CipVariant::abs_beta, 0.0);
            MassSolver mass(ops.M);
            const ThetaConfig cfg = make_theta_config(0.5, 0.25, select_dt(1, 1.0 / 12));
            auto run_from = [&](std::function<double(Vec2, double)> u0) {
                ProblemData pr;
                pr.initial = std::move(u0);
                pr.velocity = &bx;
                return run_simulation(sp, ops, mass, cfg, pr).snapshots.back();
            };
            auto f1 = [](Vec2 p, double) { return std::sin(2 * 3.14159265358979323846 * p.x); };
            auto f2 = [](Vec2 p, double) { return norm(p - Vec2{0.5, 0.5}) < 0.2 ? 1.0 : 0.0; };
            const Vector a = run_from(f1);
            const Vector b = run_from(f2);
            const Vector c = run_from([f1, f2](Vec2 p, double t) { return 2.0 * f1(p, t) - 3.0 * f2(p, t); });
            const double dev = (c - (2.0 * a - 3.0 * b)).cwiseAbs().maxCoeff();
            add("trajectory_linearity", dev <= 1e-10, "max dev " + detail::num(dev));
        }
        {
            // bit-identical reports for identical configs
            const Scenario sc = make_periodic_cylinder();
            RunParams p;
            p.degree = 1;
            p.errors.stab_seminorm = true;
            const ErrorReport r1 = run_convergence_study(sc, p, {8, 16});
            const ErrorReport r2 = run_convergence_study(sc, p, {8, 16});
            std::ostringstream s1, s2;
            write_report_csv(r1, s1);
            write_report_csv(r2, s2);
            add("report_determinism", s1.str() == s2.str(), "identical CSV bytes");
        }
    }

    return out;
}

inline bool run_verify(bool full, std::ostream& out) {
    const std::vector<CheckResult> results = run_checks(full);
    bool all = true;
    for (const auto& r : results) {
        out << (r.pass ? "PASS " : "FAIL ") << r.name;
        if (!r.detail.empty()) {
            out << " (" << r.detail << ")";
        }
        out << '\n';
        all = all && r.pass;
    }
    out << (all ? "verify: all " : "verify: FAILURES among ") << results.size() << " checks\n";
    return all;
}

} // namespace cip::verify
