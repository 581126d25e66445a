#pragma once

#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "cip/fespace.hpp"

namespace cip {

struct VelocityField {
    std::function<Vec2(Vec2, double)> eval;
    bool divergence_free = false;
    double beta_inf = 0.0; // sup-norm bound over the domain

    Vec2 operator()(Vec2 x, double t) const { return eval(x, t); }
};

// Central finite-difference check of div(beta) at 100 fixed pseudo-random
// points inside [lo,hi]^2.
inline bool check_divergence_free(const VelocityField& vf, Vec2 lo, Vec2 hi, double t = 0.0,
                                  double tol = 1e-6) {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> ux(lo.x, hi.x), uy(lo.y, hi.y);
    const double eps = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const Vec2 p{ux(rng), uy(rng)};
        const double dxu = (vf({p.x + eps, p.y}, t).x - vf({p.x - eps, p.y}, t).x) / (2 * eps);
        const double dyv = (vf({p.x, p.y + eps}, t).y - vf({p.x, p.y - eps}, t).y) / (2 * eps);
        if (std::abs(dxu + dyv) > tol) {
            return false;
        }
    }
    return true;
}

enum class CipVariant { abs_beta, abs_beta_n };

namespace detail {

inline SparseMat from_triplets(int n, const std::vector<Eigen::Triplet<double>>& trip) {
    SparseMat m(n, n);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

} // namespace detail

// M_ij = (phi_j, phi_i)
inline SparseMat assemble_mass(const FeSpace& space) {
    const Mesh& mesh = *space.mesh;
    const QuadratureRule rule = triangle_quadrature(2 * space.degree + 2);
    const BasisTable table(space.degree, rule);
    const int nd = space.dofs_per_element();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.triangles.size() * nd * nd);
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
        double local[36] = {};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q] * g.det;
            for (int i = 0; i < nd; ++i) {
                for (int j = 0; j < nd; ++j) {
                    local[i * nd + j] += w * table.vals[q][i] * table.vals[q][j];
                }
            }
        }
        const auto& ed = space.element_dofs[e];
        for (int i = 0; i < nd; ++i) {
            for (int j = 0; j < nd; ++j) {
                trip.emplace_back(ed[i], ed[j], local[i * nd + j]);
            }
        }
    }
    return detail::from_triplets(space.ndof, trip);
}

// A_ij = (beta . grad phi_j, phi_i)
inline SparseMat assemble_convection(const FeSpace& space, const VelocityField& beta, double t) {
    const Mesh& mesh = *space.mesh;
    const QuadratureRule rule = triangle_quadrature(2 * space.degree + 2);
    const BasisTable table(space.degree, rule);
    const int nd = space.dofs_per_element();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.triangles.size() * nd * nd);
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
        double local[36] = {};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec2 b = beta(g.point(rule.points[q]), t);
            const double w = rule.weights[q] * g.det;
            for (int j = 0; j < nd; ++j) {
                const double bgrad = dot(b, g.map_grad(table.grads[q][j]));
                for (int i = 0; i < nd; ++i) {
                    local[i * nd + j] += w * bgrad * table.vals[q][i];
                }
            }
        }
        const auto& ed = space.element_dofs[e];
        for (int i = 0; i < nd; ++i) {
            for (int j = 0; j < nd; ++j) {
                trip.emplace_back(ed[i], ed[j], local[i * nd + j]);
            }
        }
    }
    return detail::from_triplets(space.ndof, trip);
}

// K_ij = (grad phi_j, grad phi_i)
inline SparseMat assemble_stiffness(const FeSpace& space) {
    const Mesh& mesh = *space.mesh;
    const QuadratureRule rule = triangle_quadrature(2 * space.degree + 2);
    const BasisTable table(space.degree, rule);
    const int nd = space.dofs_per_element();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.triangles.size() * nd * nd);
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, static_cast<int>(e));
        Vec2 pg[6];
        double local[36] = {};
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double w = rule.weights[q] * g.det;
            for (int i = 0; i < nd; ++i) {
                pg[i] = g.map_grad(table.grads[q][i]);
            }
            for (int i = 0; i < nd; ++i) {
                for (int j = 0; j < nd; ++j) {
                    local[i * nd + j] += w * dot(pg[i], pg[j]);
                }
            }
        }
        const auto& ed = space.element_dofs[e];
        for (int i = 0; i < nd; ++i) {
            for (int j = 0; j < nd; ++j) {
                trip.emplace_back(ed[i], ed[j], local[i * nd + j]);
            }
        }
    }
    return detail::from_triplets(space.ndof, trip);
}

// CIP operator: S_ij = sum_F h_F^2 int_F w [[grad phi_j]] [[grad phi_i]] ds
// with w = |beta| or |beta . n_F| and the scalar normal-derivative jump
// [[grad v]] = (grad v|_L - grad v|_R) . n_F. Only interior edges contribute.
inline SparseMat assemble_cip(const FeSpace& space, const VelocityField& beta, double t,
                              CipVariant variant = CipVariant::abs_beta) {
    const Mesh& mesh = *space.mesh;
    const EdgeQuadratureRule rule = edge_quadrature(2 * space.degree + 2);
    const int nd = space.dofs_per_element();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.interior_edges.size() * 4 * nd * nd);

    std::vector<int> dofs;
    std::vector<double> jump;
    for (const auto& edge : mesh.interior_edges) {
        const ElementGeometry gl = element_geometry(mesh, edge.tri_left);
        const ElementGeometry gr = element_geometry(mesh, edge.tri_right);
        const Vec2 al = mesh.vertices[edge.verts_left[0]], bl = mesh.vertices[edge.verts_left[1]];
        const Vec2 ar = mesh.vertices[edge.verts_right[0]], br = mesh.vertices[edge.verts_right[1]];

        dofs.clear();
        auto dof_slot = [&dofs](int d) {
            for (std::size_t k = 0; k < dofs.size(); ++k) {
                if (dofs[k] == d) {
                    return static_cast<int>(k);
                }
            }
            dofs.push_back(d);
            return static_cast<int>(dofs.size() - 1);
        };
        int slot_l[6], slot_r[6];
        for (int i = 0; i < nd; ++i) {
            slot_l[i] = dof_slot(space.element_dofs[edge.tri_left][i]);
        }
        for (int i = 0; i < nd; ++i) {
            slot_r[i] = dof_slot(space.element_dofs[edge.tri_right][i]);
        }
        const int nu = static_cast<int>(dofs.size());
        std::vector<double> local(nu * nu, 0.0);

        Vec2 grads[6];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const double s = rule.points[q];
            const Vec2 xl = (1.0 - s) * al + s * bl;
            const Vec2 xr = (1.0 - s) * ar + s * br;

            jump.assign(nu, 0.0);
            const auto ll = gl.barycentric(xl);
            reference_basis_grad(space.degree, ll, grads);
            for (int i = 0; i < nd; ++i) {
                jump[slot_l[i]] += dot(gl.map_grad(grads[i]), edge.normal);
            }
            const auto lr = gr.barycentric(xr);
            reference_basis_grad(space.degree, lr, grads);
            for (int i = 0; i < nd; ++i) {
                jump[slot_r[i]] -= dot(gr.map_grad(grads[i]), edge.normal);
            }

            const Vec2 bv = beta(xl, t);
            const double wgt = variant == CipVariant::abs_beta ? norm(bv)
                                                               : std::abs(dot(bv, edge.normal));
            const double w = rule.weights[q] * edge.length * edge.length * edge.length * wgt;
            for (int i = 0; i < nu; ++i) {
                for (int j = 0; j < nu; ++j) {
                    local[i * nu + j] += w * jump[i] * jump[j];
                }
            }
        }
        for (int i = 0; i < nu; ++i) {
            for (int j = 0; j < nu; ++j) {
                trip.emplace_back(dofs[i], dofs[j], local[i * nu + j]);
            }
        }
    }
    return detail::from_triplets(space.ndof, trip);
}

// B_ij = sum_{F in inflow} int_F |beta . n| phi_j phi_i ds
inline SparseMat assemble_inflow_matrix(const FeSpace& space, const BoundaryPartition& part,
                                        const VelocityField& beta, double t) {
    const Mesh& mesh = *space.mesh;
    if (mesh.periodic) {
        throw std::invalid_argument("assemble_inflow_matrix: periodic mesh has no boundary");
    }
    const EdgeQuadratureRule rule = edge_quadrature(2 * space.degree + 2);
    const int nd = space.dofs_per_element();
    std::vector<Eigen::Triplet<double>> trip;
    double vals[6];
    for (int bidx : part.inflow_edges) {
        const auto& e = mesh.boundary_edges[bidx];
        const ElementGeometry g = element_geometry(mesh, e.tri);
        const Vec2 a = mesh.vertices[e.verts[0]], b = mesh.vertices[e.verts[1]];
        const auto& ed = space.element_dofs[e.tri];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec2 x = (1.0 - rule.points[q]) * a + rule.points[q] * b;
            const double bn = std::abs(dot(beta(x, t), e.normal));
            const double w = rule.weights[q] * e.length * bn;
            reference_basis(space.degree, g.barycentric(x), vals);
            for (int i = 0; i < nd; ++i) {
                for (int j = 0; j < nd; ++j) {
                    trip.emplace_back(ed[i], ed[j], w * vals[i] * vals[j]);
                }
            }
        }
    }
    return detail::from_triplets(space.ndof, trip);
}

// b_i = sum_{F in inflow} int_F |beta . n| g phi_i ds
template <typename G>
inline Vector assemble_inflow_rhs(const FeSpace& space, const BoundaryPartition& part,
                                  const VelocityField& beta, const G& g, double t) {
    const Mesh& mesh = *space.mesh;
    const EdgeQuadratureRule rule = edge_quadrature(2 * space.degree + 4);
    const int nd = space.dofs_per_element();
    Vector rhs = Vector::Zero(space.ndof);
    double vals[6];
    for (int bidx : part.inflow_edges) {
        const auto& e = mesh.boundary_edges[bidx];
        const ElementGeometry geom = element_geometry(mesh, e.tri);
        const Vec2 a = mesh.vertices[e.verts[0]], b = mesh.vertices[e.verts[1]];
        const auto& ed = space.element_dofs[e.tri];
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec2 x = (1.0 - rule.points[q]) * a + rule.points[q] * b;
            const double bn = std::abs(dot(beta(x, t), e.normal));
            const double w = rule.weights[q] * e.length * bn * g(x, t);
            reference_basis(space.degree, geom.barycentric(x), vals);
            for (int i = 0; i < nd; ++i) {
                rhs[ed[i]] += w * vals[i];
            }
        }
    }
    return rhs;
}

template <typename F>
inline Vector assemble_source(const FeSpace& space, const F& f, double t) {
    return assemble_load(space, f, t, 2 * space.degree + 4);
}

struct SystemOperators {
    SparseMat M, A, S, B;
    bool has_inflow = false;
    CipVariant variant = CipVariant::abs_beta;
    double gamma = 0.0;
    double beta_time = 0.0; // assembly time of the velocity-dependent forms
};

inline SystemOperators build_operators(const FeSpace& space, const VelocityField& beta, double gamma,
                                       CipVariant variant, double t,
                                       const BoundaryPartition* part = nullptr) {
    if (gamma < 0.0) {
        throw std::invalid_argument("build_operators: gamma must be >= 0");
    }
    SystemOperators ops;
    ops.variant = variant;
    ops.gamma = gamma;
    ops.beta_time = t;
    ops.M = assemble_mass(space);
    ops.A = assemble_convection(space, beta, t);
    ops.S = assemble_cip(space, beta, t, variant);
    if (part != nullptr) {
        ops.B = assemble_inflow_matrix(space, *part, beta, t);
        ops.has_inflow = true;
    }
    return ops;
}

inline double max_abs(const SparseMat& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(m, k); it; ++it) {
            v = std::max(v, std::abs(it.value()));
        }
    }
    return v;
}

inline bool is_symmetric(const SparseMat& m, double rel_tol = 1e-12) {
    const SparseMat d = SparseMat(m.transpose()) - m;
    const double scale = max_abs(m);
    return max_abs(d) <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

// Coordinate-format ASCII dump (row col value), for debugging.
inline void dump_matrix(const SparseMat& m, std::ostream& out) {
    char buf[64];
    for (int k = 0; k < m.outerSize(); ++k) {
        for (SparseMat::InnerIterator it(m, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%d %d %.17g", static_cast<int>(it.row()),
                          static_cast<int>(it.col()), it.value());
            out << buf << '\n';
        }
    }
}

} // namespace cip
